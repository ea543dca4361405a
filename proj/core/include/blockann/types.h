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

#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace blockann {

using node_id = std::uint32_t;

inline constexpr node_id kInvalidNode = std::numeric_limits<node_id>::max();

enum class Metric : std::uint8_t { kL2 = 0, kIP = 1, kCosine = 2 };

enum class ScalarType : std::uint8_t { kU8 = 0, kF32 = 1 };

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Block IO failure; carries the byte offset of the failing block.
class IoError : public Error {
 public:
  IoError(const std::string &what, std::uint64_t offset)
      : Error(what + " (block offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

// Distances are "smaller is closer" for every metric: squared L2 for kL2 and
// negated inner product for kIP / kCosine.
struct Neighbor {
  node_id id = kInvalidNode;
  float distance = 0.0f;

  friend bool operator==(const Neighbor &, const Neighbor &) = default;
};

// Total order used by every queue: distance ascending, ties to smaller id.
inline bool closer(const Neighbor &a, const Neighbor &b) {
  if (a.distance != b.distance) return a.distance < b.distance;
  return a.id < b.id;
}

inline std::size_t scalar_size(ScalarType t) {
  return t == ScalarType::kU8 ? 1 : 4;
}

std::string_view to_string(Metric m);
std::string_view to_string(ScalarType t);
Metric parse_metric(std::string_view s);
ScalarType parse_scalar(std::string_view s);

}  // namespace blockann
