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
#include <span>
#include <vector>

#include "blockann/dataset.h"
#include "blockann/graph.h"

namespace blockann {

struct NavParams {
  double fraction = 0.005;
  std::uint64_t seed = 11;
  std::uint32_t max_degree = 32;
  std::uint32_t build_queue = 64;
  std::uint32_t search_queue = 16;  // nav traversal list size
  std::uint32_t entry_count = 4;    // corpus entries handed to the main search

  friend bool operator==(const NavParams &, const NavParams &) = default;
};

// Small in-memory graph over a random sample of the corpus; its search
// results seed the traversal of the full graph.
class NavIndex {
 public:
  NavIndex() = default;
  NavIndex(SampledDataset sample, ProximityGraph graph, NavParams params);

  static NavIndex build(const VectorDataset &ds, const NavParams &params);

  bool empty() const { return sample_.id_map.empty(); }
  std::size_t size() const { return sample_.id_map.size(); }
  const NavParams &params() const { return params_; }
  const SampledDataset &sample() const { return sample_; }
  const ProximityGraph &graph() const { return graph_; }

  // Memory footprint: sampled vectors, id map and adjacency.
  std::size_t bytes() const;

  // Corpus ids of the nearest sampled nodes to query (best first). Adds the
  // number of nav nodes expanded to *hops when non-null.
  std::vector<node_id> entry_points(std::span<const float> query,
                                    std::size_t *hops = nullptr) const;

 private:
  SampledDataset sample_;
  ProximityGraph graph_;
  NavParams params_;
};

}  // namespace blockann
