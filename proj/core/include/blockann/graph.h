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
#include "blockann/nearest_list.h"
#include "blockann/types.h"

namespace blockann {

class ProximityGraph {
 public:
  ProximityGraph() = default;
  ProximityGraph(std::size_t count, std::uint32_t max_degree,
                 node_id entry = 0);

  std::size_t size() const { return adjacency_.size(); }
  std::uint32_t max_degree() const { return max_degree_; }
  node_id entry() const { return entry_; }
  void set_entry(node_id entry);

  std::span<const node_id> neighbors(node_id u) const { return adjacency_[u]; }

  // Replaces u's list. Rejects self loops, duplicates, out-of-range ids and
  // lists longer than max_degree.
  void set_neighbors(node_id u, std::vector<node_id> ids);

  // Serialized adjacency size: u16 degree plus u32 per neighbor.
  std::size_t adjacency_bytes(node_id u) const {
    return 2 + 4 * adjacency_[u].size();
  }
  std::size_t max_adjacency_bytes() const { return 2 + 4 * max_degree_; }
  std::size_t total_adjacency_bytes() const;

  // Throws if any structural invariant (including reachability) fails.
  void check_invariants() const;

 private:
  std::uint32_t max_degree_ = 0;
  node_id entry_ = 0;
  std::vector<std::vector<node_id>> adjacency_;
};

// Header (count u64, max degree u32, entry u32) then per node a u16 degree and
// u32 ids, little-endian.
void save_graph(const ProximityGraph &g, const std::filesystem::path &path);
ProximityGraph load_graph(const std::filesystem::path &path);

std::vector<bool> reachable_from_entry(const ProximityGraph &g);

// Vector closest to the coordinate-wise mean; ties to the smaller id.
node_id medoid(const VectorDataset &ds);

// Best-first traversal: repeatedly expands the nearest unvisited entry of a
// list bounded at queue_size until every entry is visited. `neighbors(u)`
// yields u's adjacency and `dist(v)` the distance from the query to v.
// Visited ids are appended to *visited in expansion order when non-null.
template <typename NeighborsFn, typename DistFn>
void best_first_search(std::span<const node_id> entries, std::size_t queue_size,
                       NeighborsFn &&neighbors, DistFn &&dist, SeenSet &seen,
                       NearestList &list, std::vector<node_id> *visited) {
  list.reset(queue_size);
  for (node_id e : entries) {
    if (seen.insert(e)) list.insert(e, dist(e));
  }
  while (auto pos = list.first_unvisited()) {
    list.set_visited(*pos);
    const node_id u = list[*pos].id;
    if (visited != nullptr) visited->push_back(u);
    for (node_id v : neighbors(u)) {
      if (seen.insert(v)) list.insert(v, dist(v));
    }
  }
}

struct GreedyResult {
  NearestList list;
  std::vector<node_id> visited;
};

// Exact-distance reference traversal from the graph entry.
GreedyResult greedy_search(const ProximityGraph &g, const VectorDataset &ds,
                           std::span<const float> query,
                           std::size_t queue_size);

// Alpha pruning: keep the closest remaining candidate p, drop every q with
// alpha * d(p, q) <= d(node, q), until max_degree are kept. Candidates carry
// their distance to node; node itself and duplicate ids are ignored.
std::vector<node_id> robust_prune(const VectorDataset &ds, node_id node,
                                  std::vector<Neighbor> candidates, float alpha,
                                  std::uint32_t max_degree);

struct BuildParams {
  std::uint32_t max_degree = 32;     // R_deg
  std::uint32_t build_queue = 128;   // L_build
  float alpha = 1.2f;
  std::uint64_t seed = 1;
};

// Two insertion passes (alpha 1.0 then params.alpha) in a seeded random
// order, then connectivity patching. Adjacency lists end sorted by id.
ProximityGraph build_graph(const VectorDataset &ds, const BuildParams &params);

// Links every node unreachable from the entry from its nearest reachable node
// that still has spare degree. Returns the number of edges added.
std::size_t patch_connectivity(ProximityGraph &g, const VectorDataset &ds);

}  // namespace blockann
