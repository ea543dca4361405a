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

#include "blockann/dataset.h"

namespace blockann {

// Gaussian clusters in a low-dimensional latent space, linearly embedded into
// `dims` dimensions with a little isotropic noise. The low intrinsic
// dimension gives graph indexes and PQ the behaviour they show on real
// embedding corpora, unlike uniform high-dimensional noise.
struct SyntheticSpec {
  std::size_t count = 100000;
  std::size_t query_count = 1000;
  std::size_t dims = 128;
  std::size_t clusters = 64;
  std::size_t latent_dims = 16;
  float cluster_spread = 0.5f;
  float noise = 0.05f;
  Metric metric = Metric::kL2;
  std::uint64_t seed = 42;
};

struct SyntheticCorpus {
  VectorDataset base;
  VectorDataset queries;
};

SyntheticCorpus make_clustered(const SyntheticSpec &spec);

}  // namespace blockann
