// Copyright 2026-present the blockann authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "blockann/types.h"

// Little-endian POD helpers shared by the file formats. The build targets
// little-endian hosts only.
namespace blockann::detail {

static_assert(std::endian::native == std::endian::little,
              "blockann file formats assume a little-endian host");

template <typename T>
void write_pod(std::ostream &out, const T &v) {
  static_assert(std::is_trivially_copyable_v<T>);
  out.write(reinterpret_cast<const char *>(&v), sizeof(T));
}

template <typename T>
void write_array(std::ostream &out, std::span<const T> v) {
  out.write(reinterpret_cast<const char *>(v.data()),
            static_cast<std::streamsize>(v.size_bytes()));
}

template <typename T>
T read_pod(std::istream &in, const char *what) {
  T v{};
  in.read(reinterpret_cast<char *>(&v), sizeof(T));
  if (!in) throw Error(std::string("short read while reading ") + what);
  return v;
}

template <typename T>
void read_array(std::istream &in, std::span<T> v, const char *what) {
  in.read(reinterpret_cast<char *>(v.data()),
          static_cast<std::streamsize>(v.size_bytes()));
  if (!in) throw Error(std::string("short read while reading ") + what);
}

template <typename T>
T load_le(const std::byte *p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

template <typename T>
void store_le(std::byte *p, T v) {
  std::memcpy(p, &v, sizeof(T));
}

std::ifstream open_input(const std::string &path);
std::ofstream open_output(const std::string &path);

}  // namespace blockann::detail
