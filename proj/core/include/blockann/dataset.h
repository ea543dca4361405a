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
#include <filesystem>
#include <span>
#include <vector>

#include "blockann/types.h"

namespace blockann {

enum class FileFormat { kFvecs, kBvecs, kRawBin };

std::string_view to_string(FileFormat f);
FileFormat parse_file_format(std::string_view s);

// Dense fixed-dimension vectors. Values are held as f32 in memory regardless
// of the on-disk scalar type (u8 values convert exactly); scalar() decides the
// serialized vector size. Cosine data is L2-normalised on construction, after
// which Cosine distance is the negated inner product.
class VectorDataset {
 public:
  VectorDataset() = default;
  VectorDataset(std::size_t count, std::size_t dims, ScalarType scalar,
                Metric metric, std::vector<float> values);

  std::size_t count() const { return count_; }
  std::size_t dims() const { return dims_; }
  ScalarType scalar() const { return scalar_; }
  Metric metric() const { return metric_; }

  // Serialized size of one vector (dims x scalar size).
  std::size_t vector_bytes() const { return dims_ * scalar_size(scalar_); }

  std::span<const float> row(std::size_t i) const {
    return {values_.data() + i * dims_, dims_};
  }
  std::span<const float> values() const { return values_; }

 private:
  std::size_t count_ = 0;
  std::size_t dims_ = 0;
  ScalarType scalar_ = ScalarType::kF32;
  Metric metric_ = Metric::kL2;
  std::vector<float> values_;
};

// Scales v to unit L2 norm in place; zero vectors are left untouched.
void normalize(std::span<float> v);

VectorDataset load_dataset(const std::filesystem::path &path,
                           FileFormat format, Metric metric);

void save_dataset(const VectorDataset &ds, const std::filesystem::path &path,
                  FileFormat format);

struct SampledDataset {
  VectorDataset data;
  std::vector<node_id> id_map;  // sampled row -> original id, ascending
};

// Uniform sample without replacement of floor(fraction * count) rows.
SampledDataset sample_dataset(const VectorDataset &ds, double fraction,
                              std::uint64_t seed);

// Rows of ds at ids, in the given order.
VectorDataset select_rows(const VectorDataset &ds, std::span<const node_id> ids);

}  // namespace blockann
