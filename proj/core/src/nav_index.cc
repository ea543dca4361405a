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

#include "blockann/nav_index.h"

#include <algorithm>

#include "blockann/distance.h"

namespace blockann {

NavIndex::NavIndex(SampledDataset sample, ProximityGraph graph,
                   NavParams params)
    : sample_(std::move(sample)), graph_(std::move(graph)), params_(params) {
  if (graph_.size() != sample_.id_map.size()) {
    throw Error("navigation graph does not match its sample");
  }
}

NavIndex NavIndex::build(const VectorDataset &ds, const NavParams &params) {
  auto sample = sample_dataset(ds, params.fraction, params.seed);
  BuildParams bp;
  bp.max_degree = params.max_degree;
  bp.build_queue = std::max(params.build_queue, params.max_degree);
  bp.seed = params.seed;
  auto graph = build_graph(sample.data, bp);
  return NavIndex(std::move(sample), std::move(graph), params);
}

std::size_t NavIndex::bytes() const {
  if (empty()) return 0;
  return size() * (sample_.data.vector_bytes() + sizeof(node_id)) +
         graph_.total_adjacency_bytes();
}

std::vector<node_id> NavIndex::entry_points(std::span<const float> query,
                                            std::size_t *hops) const {
  if (empty()) return {};
  const auto result = greedy_search(graph_, sample_.data, query,
                                    std::max<std::uint32_t>(1, params_.search_queue));
  if (hops != nullptr) *hops += result.visited.size();
  std::vector<node_id> out;
  const std::size_t n =
      std::min<std::size_t>(params_.entry_count, result.list.size());
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(sample_.id_map[result.list[i].id]);
  }
  return out;
}

}  // namespace blockann
