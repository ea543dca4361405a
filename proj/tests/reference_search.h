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

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "blockann/dataset.h"
#include "blockann/distance.h"
#include "blockann/graph.h"
#include "blockann/layout.h"
#include "blockann/pq.h"

namespace blockann::testing_util {

// Straight-line two-stage search over in-memory artifacts: one candidate per
// step, no caches, no IO layer. Lists are re-sorted and truncated after every
// expansion, as the algorithm is written.
class ReferenceTwoStage {
 public:
  ReferenceTwoStage(const ProximityGraph &g, const VectorDataset &ds,
                    const PQCodebook &cb, const PQCodes &codes,
                    const PackedLists &packed)
      : g_(g), ds_(ds), cb_(cb), codes_(codes), packed_(packed) {}

  std::vector<Neighbor> search(std::span<const float> q, std::size_t k,
                               std::size_t D, double sigma,
                               std::size_t *reads = nullptr) const {
    QueryLut lut(cb_, q);
    struct Cand {
      node_id id;
      float dist;
      bool visited;
    };
    std::vector<Cand> appr;
    std::set<node_id> seen, in_ext;
    std::vector<Neighbor> ext;
    auto by_dist = [](const Cand &a, const Cand &b) {
      return closer({a.id, a.dist}, {b.id, b.dist});
    };
    auto expand = [&](std::span<const node_id> adj) {
      for (node_id v : adj) {
        if (!seen.insert(v).second) continue;
        appr.push_back({v, lut.distance(codes_.code(v)), false});
      }
      std::stable_sort(appr.begin(), appr.end(), by_dist);
      if (appr.size() > D) appr.resize(D);
    };
    const node_id entry = g_.entry();
    seen.insert(entry);
    appr.push_back({entry, lut.distance(codes_.code(entry)), false});
    std::size_t io = 0;
    while (true) {
      auto it = std::find_if(appr.begin(), appr.end(),
                             [](const Cand &c) { return !c.visited; });
      if (it == appr.end()) break;
      it->visited = true;
      const node_id u = it->id;
      ++io;
      ext.push_back({u, distance(ds_.metric(), q, ds_.row(u))});
      in_ext.insert(u);
      expand(g_.neighbors(u));
      for (node_id v : packed_[u]) {
        auto pos = std::find_if(appr.begin(), appr.end(),
                                [v](const Cand &c) { return c.id == v; });
        if (pos == appr.end() || pos->visited) continue;
        pos->visited = true;
        expand(g_.neighbors(v));
      }
    }
    const std::size_t dr = std::min<std::size_t>(
        appr.size(),
        std::max<std::size_t>(1, std::size_t(std::ceil(sigma * D - 1e-9))));
    for (std::size_t i = 0; i < dr; ++i) {
      if (in_ext.count(appr[i].id)) continue;
      ++io;
      ext.push_back({appr[i].id, distance(ds_.metric(), q, ds_.row(appr[i].id))});
    }
    std::sort(ext.begin(), ext.end(), closer);
    if (ext.size() > k) ext.resize(k);
    if (reads != nullptr) *reads = io;
    return ext;
  }

 private:
  const ProximityGraph &g_;
  const VectorDataset &ds_;
  const PQCodebook &cb_;
  const PQCodes &codes_;
  const PackedLists &packed_;
};

}  // namespace blockann::testing_util
