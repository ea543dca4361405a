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

#include "blockann/dataset.h"
#include "blockann/types.h"

namespace blockann {

// Product-quantization codebook. Subspace m covers dimensions
// [m * (dims / M), ...) with the last subspace absorbing the remainder.
// Centroids of subspace m are stored contiguously, K rows of sub_dims(m).
struct PQCodebook {
  std::uint32_t num_subspaces = 0;  // M
  std::uint32_t num_centroids = 0;  // K
  std::uint32_t dims = 0;
  Metric metric = Metric::kL2;
  std::vector<float> centroids;

  std::size_t sub_begin(std::size_t m) const {
    return m * (dims / num_subspaces);
  }
  std::size_t sub_dims(std::size_t m) const {
    const std::size_t base = dims / num_subspaces;
    return m + 1 == num_subspaces ? dims - base * m : base;
  }
  const float *centroid(std::size_t m, std::size_t j) const {
    return centroids.data() + num_centroids * sub_begin(m) + j * sub_dims(m);
  }
  float *centroid(std::size_t m, std::size_t j) {
    return centroids.data() + num_centroids * sub_begin(m) + j * sub_dims(m);
  }

  // Writes the reconstruction of code into out (length dims).
  void decode(std::span<const std::uint8_t> code, std::span<float> out) const;
};

class PQCodes {
 public:
  PQCodes() = default;
  PQCodes(std::uint32_t num_subspaces, std::vector<std::uint8_t> codes);

  std::uint32_t num_subspaces() const { return num_subspaces_; }
  std::size_t count() const {
    return num_subspaces_ == 0 ? 0 : codes_.size() / num_subspaces_;
  }
  std::span<const std::uint8_t> code(std::size_t i) const {
    return {codes_.data() + i * num_subspaces_, num_subspaces_};
  }
  std::span<const std::uint8_t> raw() const { return codes_; }

 private:
  std::uint32_t num_subspaces_ = 0;
  std::vector<std::uint8_t> codes_;
};

// Per-query M x K table of partial distances between the query subvectors
// and every centroid; summing one entry per subspace gives the distance to
// the decoded vector.
class QueryLut {
 public:
  QueryLut() = default;
  QueryLut(const PQCodebook &cb, std::span<const float> query) {
    build(cb, query);
  }

  void build(const PQCodebook &cb, std::span<const float> query);

  float distance(std::span<const std::uint8_t> code) const {
    float sum = 0.0f;
    const float *row = table_.data();
    for (std::size_t m = 0; m < code.size(); ++m, row += num_centroids_) {
      sum += row[code[m]];
    }
    return sum;
  }

  std::uint32_t num_subspaces() const { return num_subspaces_; }

 private:
  std::uint32_t num_subspaces_ = 0;
  std::uint32_t num_centroids_ = 0;
  std::vector<float> table_;
};

struct PQTrainParams {
  std::uint32_t num_subspaces = 32;
  std::uint32_t num_centroids = 256;
  std::uint32_t iterations = 10;
  std::uint64_t seed = 7;
};

// Per-subspace k-means: k-means++ seeding then `iterations` Lloyd rounds.
PQCodebook train_pq(const VectorDataset &sample, const PQTrainParams &params);

std::vector<std::uint8_t> encode_vector(const PQCodebook &cb,
                                        std::span<const float> v);

PQCodes encode(const PQCodebook &cb, const VectorDataset &ds,
               std::size_t threads = 1);

float approx_dist(const PQCodes &codes, const QueryLut &lut, node_id id);

// Mean squared reconstruction error over ds.
double reconstruction_mse(const PQCodebook &cb, const VectorDataset &ds);

// Codebook file: M, K, dims (u32), metric (u8), then centroids (f32).
void save_codebook(const PQCodebook &cb, const std::filesystem::path &path);
PQCodebook load_codebook(const std::filesystem::path &path);

// Codes file: raw N x M bytes.
void save_codes(const PQCodes &codes, const std::filesystem::path &path);
PQCodes load_codes(const std::filesystem::path &path,
                   std::uint32_t num_subspaces);

}  // namespace blockann
