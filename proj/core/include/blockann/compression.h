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
#include <span>
#include <vector>

#include "blockann/dataset.h"
#include "blockann/engine.h"
#include "blockann/graph.h"
#include "blockann/ground_truth.h"
#include "blockann/layout.h"
#include "blockann/pq.h"

namespace blockann {

// The planner's machine-independent cost measure: disk reads per query at
// the smallest queue size on the ladder that reaches the recall target.
struct ProxyConfig {
  std::uint32_t k = 10;
  double recall_target = 0.9;
  float sigma = 0.5f;
  std::vector<std::uint32_t> queue_ladder{10,  15,  20,  30,  40,  60,
                                          80,  120, 160, 240, 320, 480};
};

struct ProxyMeasurement {
  bool reached = false;
  std::uint32_t queue_size = 0;  // first ladder rung meeting the target
  double recall = 0.0;           // at that rung (or the last one tried)
  double reads_per_query = std::numeric_limits<double>::infinity();
};

// Runs the two-stage search (W=1, sync) over queries for each rung until
// the mean recall@k reaches the target.
ProxyMeasurement measure_read_proxy(const SearchIndex &index,
                                    const VectorDataset &queries,
                                    const GroundTruth &gt,
                                    const ProxyConfig &config, bool use_nav);

// Candidate code widths {d/32, d/16, d/8, d/4}, each lowered to the nearest
// divisor of d, deduplicated and ascending.
std::vector<std::uint32_t> default_compression_candidates(std::uint32_t dims);

struct CompressionProbe {
  std::uint32_t num_subspaces = 0;
  std::uint64_t code_bytes = 0;  // corpus_count x M
  bool fits_budget = false;
  ProxyMeasurement proxy;        // only measured when fits_budget
  PQCodebook codebook;           // trained on the sample
};

// Everything pick_compression_ratio needs besides the candidate list; the
// sample graph and ground truth are shared by all candidates.
struct CompressionSample {
  const VectorDataset *sample = nullptr;
  const ProximityGraph *graph = nullptr;  // built over *sample
  const VectorDataset *queries = nullptr;
  const GroundTruth *gt = nullptr;        // queries against *sample
};

// Trains PQ with M subspaces on the sample and measures the read proxy on an
// in-memory replicated layout of the sample graph.
CompressionProbe probe_compression(const CompressionSample &s,
                                   std::uint32_t num_subspaces,
                                   const PQTrainParams &pq,
                                   const BlockSpec &layout,
                                   const ProxyConfig &config);

struct CompressionChoice {
  std::uint32_t num_subspaces = 0;
  std::vector<CompressionProbe> probes;  // one per candidate, ascending M
};

// Among candidates whose codes (corpus_count x M bytes) fit the budget,
// returns the one with the fewest proxy reads; ties go to the smaller M. If
// none reaches the recall target, the best final recall wins instead.
// Throws when no candidate fits.
CompressionChoice pick_compression_ratio(const CompressionSample &s,
                                         std::span<const std::uint32_t> candidates,
                                         std::uint64_t budget_bytes,
                                         std::uint64_t corpus_count,
                                         const PQTrainParams &pq,
                                         const BlockSpec &layout,
                                         const ProxyConfig &config);

}  // namespace blockann
