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

#include "blockann/graph.h"

#include <algorithm>
#include <deque>
#include <numeric>
#include <random>

#include "binary_io.h"
#include "blockann/distance.h"

namespace blockann {

ProximityGraph::ProximityGraph(std::size_t count, std::uint32_t max_degree,
                               node_id entry)
    : max_degree_(max_degree), entry_(entry), adjacency_(count) {
  if (count == 0) throw Error("graph must have at least one node");
  if (entry >= count) throw Error("graph entry out of range");
}

void ProximityGraph::set_entry(node_id entry) {
  if (entry >= size()) throw Error("graph entry out of range");
  entry_ = entry;
}

void ProximityGraph::set_neighbors(node_id u, std::vector<node_id> ids) {
  if (u >= size()) throw Error("node id out of range");
  if (ids.size() > max_degree_) {
    throw Error("adjacency of node " + std::to_string(u) + " has " +
                std::to_string(ids.size()) + " entries, cap is " +
                std::to_string(max_degree_));
  }
  std::vector<node_id> sorted = ids;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error("duplicate neighbor in adjacency of node " + std::to_string(u));
  }
  for (node_id v : sorted) {
    if (v == u) throw Error("self loop at node " + std::to_string(u));
    if (v >= size()) throw Error("neighbor id out of range");
  }
  adjacency_[u] = std::move(ids);
}

std::size_t ProximityGraph::total_adjacency_bytes() const {
  std::size_t total = 0;
  for (node_id u = 0; u < size(); ++u) total += adjacency_bytes(u);
  return total;
}

void ProximityGraph::check_invariants() const {
  for (node_id u = 0; u < size(); ++u) {
    const auto &adj = adjacency_[u];
    if (adj.size() > max_degree_) throw Error("degree cap violated");
    std::vector<node_id> sorted(adj.begin(), adj.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw Error("duplicate neighbor");
    }
    for (node_id v : adj) {
      if (v == u) throw Error("self loop");
      if (v >= size()) throw Error("neighbor out of range");
    }
  }
  const auto reach = reachable_from_entry(*this);
  if (std::find(reach.begin(), reach.end(), false) != reach.end()) {
    throw Error("graph has nodes unreachable from the entry");
  }
}

void save_graph(const ProximityGraph &g, const std::filesystem::path &path) {
  auto out = detail::open_output(path.string());
  detail::write_pod<std::uint64_t>(out, g.size());
  detail::write_pod<std::uint32_t>(out, g.max_degree());
  detail::write_pod<std::uint32_t>(out, g.entry());
  for (node_id u = 0; u < g.size(); ++u) {
    const auto adj = g.neighbors(u);
    detail::write_pod<std::uint16_t>(out, static_cast<std::uint16_t>(adj.size()));
    detail::write_array<node_id>(out, adj);
  }
  if (!out) throw Error("write failed for " + path.string());
}

ProximityGraph load_graph(const std::filesystem::path &path) {
  auto in = detail::open_input(path.string());
  const auto count = detail::read_pod<std::uint64_t>(in, "graph count");
  const auto max_degree = detail::read_pod<std::uint32_t>(in, "graph degree");
  const auto entry = detail::read_pod<std::uint32_t>(in, "graph entry");
  if (count == 0 || entry >= count || max_degree > 0xffff) {
    throw Error(path.string() + ": malformed graph header");
  }
  ProximityGraph g(count, max_degree, entry);
  std::vector<node_id> ids;
  for (node_id u = 0; u < count; ++u) {
    const auto degree = detail::read_pod<std::uint16_t>(in, "graph degree");
    ids.resize(degree);
    detail::read_array<node_id>(in, ids, "graph adjacency");
    g.set_neighbors(u, ids);
  }
  return g;
}

std::vector<bool> reachable_from_entry(const ProximityGraph &g) {
  std::vector<bool> seen(g.size(), false);
  std::deque<node_id> frontier{g.entry()};
  seen[g.entry()] = true;
  while (!frontier.empty()) {
    const node_id u = frontier.front();
    frontier.pop_front();
    for (node_id v : g.neighbors(u)) {
      if (!seen[v]) {
        seen[v] = true;
        frontier.push_back(v);
      }
    }
  }
  return seen;
}

node_id medoid(const VectorDataset &ds) {
  std::vector<double> sum(ds.dims(), 0.0);
  for (std::size_t i = 0; i < ds.count(); ++i) {
    const auto r = ds.row(i);
    for (std::size_t d = 0; d < ds.dims(); ++d) sum[d] += r[d];
  }
  std::vector<float> mean(ds.dims());
  for (std::size_t d = 0; d < ds.dims(); ++d) {
    mean[d] = static_cast<float>(sum[d] / static_cast<double>(ds.count()));
  }
  node_id best = 0;
  float best_d = l2_sqr(ds.row(0).data(), mean.data(), ds.dims());
  for (std::size_t i = 1; i < ds.count(); ++i) {
    const float d = l2_sqr(ds.row(i).data(), mean.data(), ds.dims());
    if (d < best_d) {
      best_d = d;
      best = static_cast<node_id>(i);
    }
  }
  return best;
}

GreedyResult greedy_search(const ProximityGraph &g, const VectorDataset &ds,
                           std::span<const float> query,
                           std::size_t queue_size) {
  if (queue_size < 1) throw Error("queue size must be at least 1");
  GreedyResult out;
  SeenSet seen;
  seen.reset(g.size());
  const node_id entry = g.entry();
  best_first_search(
      std::span<const node_id>(&entry, 1), queue_size,
      [&](node_id u) { return g.neighbors(u); },
      [&](node_id v) {
        return distance(ds.metric(), ds.row(v).data(), query.data(),
                        ds.dims());
      },
      seen, out.list, &out.visited);
  return out;
}

std::vector<node_id> robust_prune(const VectorDataset &ds, node_id node,
                                  std::vector<Neighbor> candidates, float alpha,
                                  std::uint32_t max_degree) {
  std::sort(candidates.begin(), candidates.end(), closer);
  // Drop node itself and repeated ids, keeping the first (closest) copy.
  std::vector<Neighbor> pool;
  pool.reserve(candidates.size());
  for (const auto &c : candidates) {
    if (c.id == node) continue;
    bool dup = false;
    for (const auto &p : pool) {
      if (p.id == c.id) {
        dup = true;
        break;
      }
    }
    if (!dup) pool.push_back(c);
  }

  std::vector<node_id> result;
  std::vector<bool> removed(pool.size(), false);
  for (std::size_t i = 0; i < pool.size() && result.size() < max_degree; ++i) {
    if (removed[i]) continue;
    const node_id p = pool[i].id;
    result.push_back(p);
    const float *pv = ds.row(p).data();
    for (std::size_t j = i + 1; j < pool.size(); ++j) {
      if (removed[j]) continue;
      const float d_pq = l2_sqr(pv, ds.row(pool[j].id).data(), ds.dims());
      if (alpha * d_pq <= pool[j].distance) removed[j] = true;
    }
  }
  return result;
}

namespace {

class GraphBuilder {
 public:
  GraphBuilder(const VectorDataset &ds, const BuildParams &params)
      : ds_(ds), params_(params), adjacency_(ds.count()) {
    seen_.reset(ds.count());
  }

  ProximityGraph run() {
    const node_id entry = medoid(ds_);
    std::vector<node_id> order(ds_.count());
    std::iota(order.begin(), order.end(), node_id{0});
    std::mt19937_64 rng(params_.seed);
    std::shuffle(order.begin(), order.end(), rng);

    for (float alpha : {1.0f, params_.alpha}) {
      for (node_id u : order) insert(u, entry, alpha);
    }

    ProximityGraph g(ds_.count(), params_.max_degree, entry);
    for (node_id u = 0; u < ds_.count(); ++u) {
      std::sort(adjacency_[u].begin(), adjacency_[u].end());
      g.set_neighbors(u, std::move(adjacency_[u]));
    }
    patch_connectivity(g, ds_);
    return g;
  }

 private:
  float dist(node_id a, node_id b) const {
    return l2_sqr(ds_.row(a).data(), ds_.row(b).data(), ds_.dims());
  }

  void insert(node_id u, node_id entry, float alpha) {
    visited_.clear();
    seen_.reset(ds_.count());
    best_first_search(
        std::span<const node_id>(&entry, 1), params_.build_queue,
        [&](node_id v) -> const std::vector<node_id> & {
          return adjacency_[v];
        },
        [&](node_id v) { return dist(u, v); }, seen_, list_, &visited_);

    candidates_.clear();
    for (node_id v : visited_) {
      if (v != u) candidates_.push_back({v, dist(u, v)});
    }
    for (node_id v : adjacency_[u]) candidates_.push_back({v, dist(u, v)});
    adjacency_[u] =
        robust_prune(ds_, u, candidates_, alpha, params_.max_degree);

    for (node_id v : adjacency_[u]) {
      auto &back = adjacency_[v];
      if (std::find(back.begin(), back.end(), u) != back.end()) continue;
      if (back.size() < params_.max_degree) {
        back.push_back(u);
        continue;
      }
      candidates_.clear();
      for (node_id w : back) candidates_.push_back({w, dist(v, w)});
      candidates_.push_back({u, dist(v, u)});
      back = robust_prune(ds_, v, candidates_, alpha, params_.max_degree);
    }
  }

  const VectorDataset &ds_;
  BuildParams params_;
  std::vector<std::vector<node_id>> adjacency_;
  SeenSet seen_;
  NearestList list_;
  std::vector<node_id> visited_;
  std::vector<Neighbor> candidates_;
};

}  // namespace

ProximityGraph build_graph(const VectorDataset &ds, const BuildParams &params) {
  if (params.max_degree < 2) throw Error("max degree must be at least 2");
  if (params.build_queue < params.max_degree) {
    throw Error("build queue size must be at least the max degree");
  }
  if (params.alpha < 1.0f) throw Error("alpha must be >= 1");
  if (params.max_degree > 0xffff) throw Error("max degree exceeds u16 range");
  return GraphBuilder(ds, params).run();
}

std::size_t patch_connectivity(ProximityGraph &g, const VectorDataset &ds) {
  std::size_t added = 0;
  auto reach = reachable_from_entry(g);
  auto mark_from = [&](node_id start) {
    std::deque<node_id> frontier{start};
    reach[start] = true;
    while (!frontier.empty()) {
      const node_id u = frontier.front();
      frontier.pop_front();
      for (node_id v : g.neighbors(u)) {
        if (!reach[v]) {
          reach[v] = true;
          frontier.push_back(v);
        }
      }
    }
  };

  // Bounded so that a pathological replacement cycle cannot spin forever.
  for (std::size_t round = 0; round <= g.size(); ++round) {
    bool changed = false;
    for (node_id u = 0; u < g.size(); ++u) {
      if (reach[u]) continue;
      node_id best = kInvalidNode;
      float best_d = 0.0f;
      node_id best_full = kInvalidNode;
      float best_full_d = 0.0f;
      for (node_id r = 0; r < g.size(); ++r) {
        if (!reach[r]) continue;
        const float d = l2_sqr(ds.row(r).data(), ds.row(u).data(), ds.dims());
        if (g.neighbors(r).size() < g.max_degree()) {
          if (best == kInvalidNode || d < best_d) {
            best = r;
            best_d = d;
          }
        } else if (best_full == kInvalidNode || d < best_full_d) {
          best_full = r;
          best_full_d = d;
        }
      }
      std::vector<node_id> adj;
      if (best != kInvalidNode) {
        adj.assign(g.neighbors(best).begin(), g.neighbors(best).end());
        adj.push_back(u);
      } else {
        // Every reachable node is full: swap out the farthest neighbor of
        // the nearest one. The evicted node is re-linked in a later round.
        best = best_full;
        adj.assign(g.neighbors(best).begin(), g.neighbors(best).end());
        auto far = std::max_element(adj.begin(), adj.end(), [&](node_id a, node_id b) {
          return l2_sqr(ds.row(best).data(), ds.row(a).data(), ds.dims()) <
                 l2_sqr(ds.row(best).data(), ds.row(b).data(), ds.dims());
        });
        *far = u;
      }
      std::sort(adj.begin(), adj.end());
      g.set_neighbors(best, std::move(adj));
      ++added;
      changed = true;
      mark_from(u);
    }
    if (!changed) return added;
    reach = reachable_from_entry(g);
    if (std::find(reach.begin(), reach.end(), false) == reach.end()) {
      return added;
    }
  }
  throw Error("could not make every node reachable from the entry");
}

}  // namespace blockann
