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

#include "blockann/synthetic.h"

#include <cmath>
#include <random>
#include <vector>

namespace blockann {

namespace {

std::vector<float> draw_points(std::size_t n, const SyntheticSpec &spec,
                               const std::vector<float> &centers,
                               const std::vector<float> &projection,
                               std::mt19937_64 &rng) {
  std::normal_distribution<float> gauss(0.0f, 1.0f);
  std::uniform_int_distribution<std::size_t> pick(0, spec.clusters - 1);
  std::vector<float> out(n * spec.dims);
  std::vector<float> latent(spec.latent_dims);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = pick(rng);
    for (std::size_t j = 0; j < spec.latent_dims; ++j) {
      latent[j] = centers[c * spec.latent_dims + j] +
                  spec.cluster_spread * gauss(rng);
    }
    float *row = out.data() + i * spec.dims;
    for (std::size_t d = 0; d < spec.dims; ++d) {
      float v = 0.0f;
      const float *p = projection.data() + d * spec.latent_dims;
      for (std::size_t j = 0; j < spec.latent_dims; ++j) v += p[j] * latent[j];
      row[d] = v + spec.noise * gauss(rng);
    }
  }
  return out;
}

}  // namespace

SyntheticCorpus make_clustered(const SyntheticSpec &spec) {
  if (spec.count == 0 || spec.dims == 0 || spec.clusters == 0 ||
      spec.latent_dims == 0) {
    throw Error("synthetic corpus sizes must be positive");
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<float> gauss(0.0f, 1.0f);
  std::vector<float> centers(spec.clusters * spec.latent_dims);
  for (auto &c : centers) c = gauss(rng);
  std::vector<float> projection(spec.dims * spec.latent_dims);
  const float scale = 1.0f / std::sqrt(static_cast<float>(spec.latent_dims));
  for (auto &p : projection) p = scale * gauss(rng);

  std::mt19937_64 base_rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  std::mt19937_64 query_rng(spec.seed ^ 0xc2b2ae3d27d4eb4fULL);
  auto base = draw_points(spec.count, spec, centers, projection, base_rng);
  auto queries =
      draw_points(spec.query_count, spec, centers, projection, query_rng);
  return {VectorDataset(spec.count, spec.dims, ScalarType::kF32, spec.metric,
                        std::move(base)),
          VectorDataset(spec.query_count, spec.dims, ScalarType::kF32,
                        spec.metric, std::move(queries))};
}

}  // namespace blockann
