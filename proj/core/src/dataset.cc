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

#include "blockann/dataset.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "binary_io.h"

namespace blockann {

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::kL2:
      return "l2";
    case Metric::kIP:
      return "ip";
    case Metric::kCosine:
      return "cosine";
  }
  return "unknown";
}

std::string_view to_string(ScalarType t) {
  return t == ScalarType::kU8 ? "u8" : "f32";
}

Metric parse_metric(std::string_view s) {
  if (s == "l2" || s == "L2") return Metric::kL2;
  if (s == "ip" || s == "IP") return Metric::kIP;
  if (s == "cosine" || s == "Cosine") return Metric::kCosine;
  throw Error("unknown metric: " + std::string(s));
}

ScalarType parse_scalar(std::string_view s) {
  if (s == "u8") return ScalarType::kU8;
  if (s == "f32") return ScalarType::kF32;
  throw Error("unknown scalar type: " + std::string(s));
}

std::string_view to_string(FileFormat f) {
  switch (f) {
    case FileFormat::kFvecs:
      return "fvecs";
    case FileFormat::kBvecs:
      return "bvecs";
    case FileFormat::kRawBin:
      return "raw_bin";
  }
  return "unknown";
}

FileFormat parse_file_format(std::string_view s) {
  if (s == "fvecs") return FileFormat::kFvecs;
  if (s == "bvecs") return FileFormat::kBvecs;
  if (s == "bin" || s == "raw_bin") return FileFormat::kRawBin;
  throw Error("unknown dataset format: " + std::string(s));
}

namespace detail {

std::ifstream open_input(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path + " for reading");
  return in;
}

std::ofstream open_output(const std::string &path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path + " for writing");
  return out;
}

}  // namespace detail

void normalize(std::span<float> v) {
  double norm = 0.0;
  for (float x : v) norm += static_cast<double>(x) * x;
  if (norm == 0.0) return;
  const double inv = 1.0 / std::sqrt(norm);
  for (float &x : v) x = static_cast<float>(x * inv);
}

VectorDataset::VectorDataset(std::size_t count, std::size_t dims,
                             ScalarType scalar, Metric metric,
                             std::vector<float> values)
    : count_(count),
      dims_(dims),
      scalar_(scalar),
      metric_(metric),
      values_(std::move(values)) {
  if (count_ == 0) throw Error("dataset must contain at least one vector");
  if (dims_ == 0) throw Error("dataset dimension must be positive");
  if (values_.size() != count_ * dims_) {
    throw Error("dataset storage holds " + std::to_string(values_.size()) +
                " values, expected " + std::to_string(count_ * dims_));
  }
  if (metric_ == Metric::kCosine) {
    // Normalised values are no longer integral.
    scalar_ = ScalarType::kF32;
    for (std::size_t i = 0; i < count_; ++i) {
      normalize({values_.data() + i * dims_, dims_});
    }
  }
}

namespace {

template <typename Scalar>
VectorDataset load_vecs(const std::string &path, Metric metric,
                        ScalarType scalar) {
  auto in = detail::open_input(path);
  in.seekg(0, std::ios::end);
  const auto file_size = static_cast<std::uint64_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  if (file_size == 0) throw Error(path + ": empty file");
  if (file_size < sizeof(std::int32_t)) throw Error(path + ": malformed header");

  const auto dims = detail::read_pod<std::int32_t>(in, "vecs dimension");
  if (dims <= 0) {
    throw Error(path + ": malformed header, dimension " + std::to_string(dims));
  }
  const std::uint64_t record =
      sizeof(std::int32_t) + static_cast<std::uint64_t>(dims) * sizeof(Scalar);
  if (file_size % record != 0) {
    throw Error(path + ": file size " + std::to_string(file_size) +
                " is not a multiple of the record size " +
                std::to_string(record) + " for dimension " +
                std::to_string(dims));
  }
  const std::uint64_t count = file_size / record;
  std::vector<float> values(count * static_cast<std::uint64_t>(dims));
  std::vector<Scalar> buf(static_cast<std::size_t>(dims));
  in.seekg(0, std::ios::beg);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto d = detail::read_pod<std::int32_t>(in, "vecs dimension");
    if (d != dims) {
      throw Error(path + ": dimension mismatch at record " + std::to_string(i) +
                  " (" + std::to_string(d) + " vs " + std::to_string(dims) +
                  ")");
    }
    detail::read_array<Scalar>(in, buf, "vecs payload");
    std::copy(buf.begin(), buf.end(), values.begin() + i * dims);
  }
  return VectorDataset(count, static_cast<std::size_t>(dims), scalar, metric,
                       std::move(values));
}

VectorDataset load_raw_bin(const std::string &path, Metric metric) {
  auto in = detail::open_input(path);
  in.seekg(0, std::ios::end);
  const auto file_size = static_cast<std::uint64_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  if (file_size == 0) throw Error(path + ": empty file");
  constexpr std::uint64_t kHeader = 8 + 4 + 1;
  if (file_size < kHeader) throw Error(path + ": malformed header");
  const auto count = detail::read_pod<std::uint64_t>(in, "bin count");
  const auto dims = detail::read_pod<std::uint32_t>(in, "bin dims");
  const auto raw_scalar = detail::read_pod<std::uint8_t>(in, "bin scalar");
  if (raw_scalar > 1) {
    throw Error(path + ": malformed header, scalar code " +
                std::to_string(raw_scalar));
  }
  const auto scalar = static_cast<ScalarType>(raw_scalar);
  if (count == 0 || dims == 0) throw Error(path + ": malformed header");
  const std::uint64_t payload = count * dims * scalar_size(scalar);
  if (file_size != kHeader + payload) {
    throw Error(path + ": dimension mismatch, header promises " +
                std::to_string(payload) + " payload bytes but file has " +
                std::to_string(file_size - kHeader));
  }
  std::vector<float> values(count * dims);
  if (scalar == ScalarType::kF32) {
    detail::read_array<float>(in, values, "bin payload");
  } else {
    std::vector<std::uint8_t> bytes(count * dims);
    detail::read_array<std::uint8_t>(in, bytes, "bin payload");
    std::copy(bytes.begin(), bytes.end(), values.begin());
  }
  return VectorDataset(count, dims, scalar, metric, std::move(values));
}

}  // namespace

VectorDataset load_dataset(const std::filesystem::path &path,
                           FileFormat format, Metric metric) {
  switch (format) {
    case FileFormat::kFvecs:
      return load_vecs<float>(path.string(), metric, ScalarType::kF32);
    case FileFormat::kBvecs:
      return load_vecs<std::uint8_t>(path.string(), metric, ScalarType::kU8);
    case FileFormat::kRawBin:
      return load_raw_bin(path.string(), metric);
  }
  throw Error("unsupported dataset format");
}

void save_dataset(const VectorDataset &ds, const std::filesystem::path &path,
                  FileFormat format) {
  auto out = detail::open_output(path.string());
  const auto dims = static_cast<std::int32_t>(ds.dims());
  const bool as_u8 = format == FileFormat::kBvecs ||
                     (format == FileFormat::kRawBin &&
                      ds.scalar() == ScalarType::kU8);
  if (format == FileFormat::kRawBin) {
    detail::write_pod<std::uint64_t>(out, ds.count());
    detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(dims));
    detail::write_pod<std::uint8_t>(
        out, static_cast<std::uint8_t>(as_u8 ? ScalarType::kU8
                                             : ScalarType::kF32));
  }
  std::vector<std::uint8_t> bytes(ds.dims());
  for (std::size_t i = 0; i < ds.count(); ++i) {
    if (format != FileFormat::kRawBin) detail::write_pod(out, dims);
    const auto row = ds.row(i);
    if (as_u8) {
      for (std::size_t j = 0; j < row.size(); ++j) {
        bytes[j] = static_cast<std::uint8_t>(
            std::clamp(std::lround(row[j]), 0L, 255L));
      }
      detail::write_array<std::uint8_t>(out, bytes);
    } else {
      detail::write_array<float>(out, row);
    }
  }
  if (!out) throw Error("write failed for " + path.string());
}

SampledDataset sample_dataset(const VectorDataset &ds, double fraction,
                              std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw Error("sample fraction must be in (0, 1], got " +
                std::to_string(fraction));
  }
  // The epsilon absorbs representation error such as 0.005 * 100000.
  const auto n = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(ds.count()) + 1e-9));
  if (n < 1) throw Error("sample fraction selects no vectors");

  std::vector<node_id> ids(ds.count());
  std::iota(ids.begin(), ids.end(), node_id{0});
  if (n < ds.count()) {
    // Partial Fisher-Yates: the first n slots become the sample.
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, ds.count() - 1);
      std::swap(ids[i], ids[pick(rng)]);
    }
    ids.resize(n);
    std::sort(ids.begin(), ids.end());
  }
  SampledDataset out{select_rows(ds, ids), std::move(ids)};
  return out;
}

VectorDataset select_rows(const VectorDataset &ds,
                          std::span<const node_id> ids) {
  std::vector<float> values;
  values.reserve(ids.size() * ds.dims());
  for (node_id id : ids) {
    if (id >= ds.count()) throw Error("row id out of range");
    const auto r = ds.row(id);
    values.insert(values.end(), r.begin(), r.end());
  }
  // Rows are already normalised when the source is Cosine.
  return VectorDataset(ids.size(), ds.dims(), ds.scalar(), ds.metric(),
                       std::move(values));
}

}  // namespace blockann
