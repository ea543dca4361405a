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
#include <optional>
#include <span>
#include <vector>

#include "blockann/compression.h"
#include "blockann/dataset.h"
#include "blockann/graph.h"
#include "blockann/layout.h"
#include "blockann/nav_index.h"
#include "blockann/pq.h"

namespace blockann {

// Fraction of search-stage block reads removed by a graph cache with hit
// rate beta when a fraction sigma of the queue is re-ranked: beta (1 - sigma).
double io_reduction(double beta, double sigma);

// Whether caching adjacency lists alone beats caching whole nodes in the
// same memory: S_a < ((1 - sigma) / sigma) S_v. The same inequality decides
// whether packing neighbor lists beats packing more nodes per block.
bool adjacency_cache_wins(double vector_bytes, double adjacency_bytes,
                          double sigma);

// All node ids ordered by exact distance to the nearest navigation node,
// ties to the smaller id. An empty navigation index ranks by distance to the
// graph entry instead.
std::vector<node_id> rank_by_nav_distance(const VectorDataset &ds,
                                          const NavIndex &nav,
                                          node_id fallback_entry,
                                          std::size_t threads = 1);

// Longest prefix of ranking whose adjacency lists fit budget_bytes.
std::vector<node_id> select_graph_cache(const ProximityGraph &g,
                                        std::span<const node_id> ranking,
                                        std::uint64_t budget_bytes);

std::vector<node_id> select_graph_cache(const ProximityGraph &g,
                                        const VectorDataset &ds,
                                        const NavIndex &nav,
                                        std::uint64_t budget_bytes);

// Longest prefix of ranking whose vectors fit budget_bytes.
std::vector<node_id> select_node_cache(std::span<const node_id> ranking,
                                       std::size_t vector_bytes,
                                       std::uint64_t budget_bytes);

struct MemoryPlan {
  std::uint64_t budget_bytes = 0;
  std::uint32_t num_subspaces = 0;  // chosen M
  bool nav_enabled = false;
  NavParams nav;
  float sigma = 0.5f;
  std::vector<node_id> graph_cache_ids;  // ascending
  std::vector<node_id> node_cache_ids;   // ascending

  std::uint64_t code_bytes = 0;
  std::uint64_t nav_bytes = 0;  // zero when the navigation index is off
  std::uint64_t graph_cache_bytes = 0;
  std::uint64_t node_cache_bytes = 0;

  std::uint64_t used_bytes() const {
    return code_bytes + nav_bytes + graph_cache_bytes + node_cache_bytes;
  }

  friend bool operator==(const MemoryPlan &, const MemoryPlan &) = default;
};

struct PlannerConfig {
  double pq_sample_fraction = 0.01;
  std::uint32_t pq_min_sample = 1024;  // floor when 1% is too small for K
  std::uint64_t sample_seed = 5;
  // Empty means default_compression_candidates(dims).
  std::vector<std::uint32_t> candidates;
  // Skips step one when set.
  std::optional<std::uint32_t> fixed_subspaces;
  PQTrainParams pq;
  BuildParams sample_graph{32, 64, 1.2f, 3};
  ProxyConfig proxy;
  NavParams nav;
  std::size_t threads = 1;
};

struct PlanOutcome {
  MemoryPlan plan;
  PQCodebook codebook;
  PQCodes codes;
  NavIndex nav;  // built even when the plan disables it (it ranks the cache)
  PackedLists packed;
  std::vector<CompressionProbe> probes;
  ProxyMeasurement proxy_without_nav;
  ProxyMeasurement proxy_with_nav;
  std::vector<node_id> ranking;
};

// Step one picks M on a sample, step two keeps a navigation index only if it
// lowers the read proxy, step three spends what is left on adjacency lists
// by nav-distance rank and, once every list is cached, on vectors.
PlanOutcome plan_memory(const VectorDataset &ds,
                        const VectorDataset &sample_queries,
                        std::uint64_t budget_bytes, const ProximityGraph &g,
                        const BlockSpec &layout, const PlannerConfig &config);

// Spends budget on caches for an already chosen M and navigation index.
void fill_caches(MemoryPlan &plan, const ProximityGraph &g,
                 const VectorDataset &ds, std::span<const node_id> ranking);

// Binary plan file: parameters, component sizes and cached ids as ascending
// [begin, end) ranges.
void save_plan(const MemoryPlan &plan, const std::filesystem::path &path);
MemoryPlan load_plan(const std::filesystem::path &path);

}  // namespace blockann
