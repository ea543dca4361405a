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

#include "blockann/planner.h"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>
#include <thread>

#include "binary_io.h"
#include "blockann/distance.h"
#include "blockann/ground_truth.h"

namespace blockann {

namespace {

constexpr std::uint64_t kPlanMagic = 0x314c504e4e414b42ULL;  // "BKANNPL1"
constexpr std::uint32_t kPlanVersion = 1;

void check_unit(double v, const char *name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw Error(std::string(name) + " must be in [0, 1], got " +
                std::to_string(v));
  }
}

template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn &&fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      const std::size_t end = std::min(n, (t + 1) * chunk);
      for (std::size_t i = t * chunk; i < end; ++i) fn(i);
    });
  }
  for (auto &th : pool) th.join();
}

void write_ranges(std::ostream &out, std::span<const node_id> ids) {
  std::vector<std::pair<node_id, node_id>> ranges;
  for (const node_id id : ids) {
    if (!ranges.empty() && ranges.back().second == id) {
      ++ranges.back().second;
    } else {
      ranges.push_back({id, id + 1});
    }
  }
  detail::write_pod(out, static_cast<std::uint64_t>(ranges.size()));
  for (const auto &[b, e] : ranges) {
    detail::write_pod(out, b);
    detail::write_pod(out, e);
  }
}

std::vector<node_id> read_ranges(std::istream &in) {
  const auto n = detail::read_pod<std::uint64_t>(in, "plan id ranges");
  std::vector<node_id> ids;
  node_id last = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto b = detail::read_pod<node_id>(in, "plan id ranges");
    const auto e = detail::read_pod<node_id>(in, "plan id ranges");
    if (e <= b || (i > 0 && b < last)) throw Error("malformed plan id ranges");
    for (node_id id = b; id < e; ++id) ids.push_back(id);
    last = e;
  }
  return ids;
}

}  // namespace

double io_reduction(double beta, double sigma) {
  check_unit(beta, "graph cache hit rate");
  check_unit(sigma, "refinement ratio");
  return beta * (1.0 - sigma);
}

bool adjacency_cache_wins(double vector_bytes, double adjacency_bytes,
                          double sigma) {
  if (!(vector_bytes > 0.0) || !(adjacency_bytes > 0.0)) {
    throw Error("vector and adjacency sizes must be positive");
  }
  if (!(sigma > 0.0 && sigma < 1.0)) {
    throw Error("refinement ratio must be strictly between 0 and 1");
  }
  return adjacency_bytes < (1.0 - sigma) / sigma * vector_bytes;
}

std::vector<node_id> rank_by_nav_distance(const VectorDataset &ds,
                                          const NavIndex &nav,
                                          node_id fallback_entry,
                                          std::size_t threads) {
  std::vector<node_id> anchors;
  if (nav.empty()) {
    anchors.push_back(fallback_entry);
  } else {
    anchors = nav.sample().id_map;
  }
  std::vector<float> best(ds.count(), std::numeric_limits<float>::infinity());
  parallel_for(ds.count(), threads, [&](std::size_t i) {
    const auto v = ds.row(i);
    float b = std::numeric_limits<float>::infinity();
    for (const node_id a : anchors) {
      b = std::min(b, distance(ds.metric(), v, ds.row(a)));
    }
    best[i] = b;
  });
  std::vector<node_id> order(ds.count());
  std::iota(order.begin(), order.end(), node_id{0});
  std::sort(order.begin(), order.end(), [&](node_id a, node_id b) {
    return closer({a, best[a]}, {b, best[b]});
  });
  return order;
}

std::vector<node_id> select_graph_cache(const ProximityGraph &g,
                                        std::span<const node_id> ranking,
                                        std::uint64_t budget_bytes) {
  std::vector<node_id> out;
  std::uint64_t used = 0;
  for (const node_id id : ranking) {
    const std::uint64_t b = g.adjacency_bytes(id);
    if (used + b > budget_bytes) break;
    used += b;
    out.push_back(id);
  }
  return out;
}

std::vector<node_id> select_graph_cache(const ProximityGraph &g,
                                        const VectorDataset &ds,
                                        const NavIndex &nav,
                                        std::uint64_t budget_bytes) {
  if (budget_bytes == 0) return {};
  const auto ranking = rank_by_nav_distance(ds, nav, g.entry());
  return select_graph_cache(g, ranking, budget_bytes);
}

std::vector<node_id> select_node_cache(std::span<const node_id> ranking,
                                       std::size_t vector_bytes,
                                       std::uint64_t budget_bytes) {
  const std::size_t n = vector_bytes == 0
                            ? ranking.size()
                            : std::min<std::uint64_t>(
                                  ranking.size(), budget_bytes / vector_bytes);
  return {ranking.begin(), ranking.begin() + n};
}

void fill_caches(MemoryPlan &plan, const ProximityGraph &g,
                 const VectorDataset &ds, std::span<const node_id> ranking) {
  const std::uint64_t fixed = plan.code_bytes + plan.nav_bytes;
  if (fixed > plan.budget_bytes) {
    throw Error("budget of " + std::to_string(plan.budget_bytes) +
                " bytes is below codes plus navigation index (" +
                std::to_string(fixed) + ")");
  }
  std::uint64_t left = plan.budget_bytes - fixed;
  plan.graph_cache_ids = select_graph_cache(g, ranking, left);
  plan.graph_cache_bytes = 0;
  for (const node_id id : plan.graph_cache_ids) {
    plan.graph_cache_bytes += g.adjacency_bytes(id);
  }
  left -= plan.graph_cache_bytes;
  plan.node_cache_ids.clear();
  if (plan.graph_cache_ids.size() == g.size()) {
    plan.node_cache_ids = select_node_cache(ranking, ds.vector_bytes(), left);
  }
  plan.node_cache_bytes = plan.node_cache_ids.size() * ds.vector_bytes();
  std::sort(plan.graph_cache_ids.begin(), plan.graph_cache_ids.end());
  std::sort(plan.node_cache_ids.begin(), plan.node_cache_ids.end());
}

PlanOutcome plan_memory(const VectorDataset &ds,
                        const VectorDataset &sample_queries,
                        std::uint64_t budget_bytes, const ProximityGraph &g,
                        const BlockSpec &layout, const PlannerConfig &config) {
  if (g.size() != ds.count()) throw Error("graph does not match the corpus");
  if (sample_queries.dims() != ds.dims()) {
    throw Error("sample queries have the wrong dimension");
  }
  PlanOutcome out;
  MemoryPlan &plan = out.plan;
  plan.budget_bytes = budget_bytes;
  plan.sigma = config.proxy.sigma;
  plan.nav = config.nav;

  // Step 1: compression ratio on a small sample.
  const std::size_t floor_count = std::min<std::size_t>(
      ds.count(), std::max<std::size_t>(config.pq_min_sample,
                                        config.pq.num_centroids));
  const std::size_t sample_count = std::max<std::size_t>(
      static_cast<std::size_t>(config.pq_sample_fraction * ds.count()),
      floor_count);
  const auto sample = sample_dataset(
      ds, static_cast<double>(sample_count) / ds.count(), config.sample_seed);

  if (config.fixed_subspaces) {
    plan.num_subspaces = *config.fixed_subspaces;
    if (std::uint64_t{ds.count()} * plan.num_subspaces > budget_bytes) {
      throw Error("budget cannot hold PQ codes with M=" +
                  std::to_string(plan.num_subspaces));
    }
    PQTrainParams p = config.pq;
    p.num_subspaces = plan.num_subspaces;
    out.codebook = train_pq(sample.data, p);
  } else {
    auto candidates = config.candidates.empty()
                          ? default_compression_candidates(ds.dims())
                          : config.candidates;
    std::sort(candidates.begin(), candidates.end());
    BuildParams bp = config.sample_graph;
    bp.max_degree = g.max_degree();
    bp.build_queue = std::max(bp.build_queue, bp.max_degree);
    const auto sample_graph = build_graph(sample.data, bp);
    const auto sample_gt = compute_ground_truth(
        sample.data, sample_queries,
        std::min<std::size_t>(config.proxy.k, sample.data.count()),
        config.threads);
    ProxyConfig proxy = config.proxy;
    proxy.k = sample_gt.k;
    const CompressionSample cs{&sample.data, &sample_graph, &sample_queries,
                               &sample_gt};
    auto choice = pick_compression_ratio(cs, candidates, budget_bytes,
                                         ds.count(), config.pq, layout, proxy);
    plan.num_subspaces = choice.num_subspaces;
    for (auto &p : choice.probes) {
      if (p.num_subspaces == plan.num_subspaces) out.codebook = p.codebook;
    }
    out.probes = std::move(choice.probes);
  }
  out.codes = encode(out.codebook, ds, config.threads);
  plan.code_bytes = std::uint64_t{ds.count()} * plan.num_subspaces;

  BlockSpec spec = layout;
  spec.pack_count =
      resolve_pack_count(spec, ds.vector_bytes(), g.max_degree());
  out.packed = spec.kind == LayoutKind::kFlat
                   ? PackedLists(g.size())
                   : pack_neighbors(g, ds, *spec.pack_count, spec.block_size);

  // Step 2: navigation index, kept only when it lowers the read proxy.
  if (config.nav.fraction * ds.count() >= 1.0) {
    out.nav = NavIndex::build(ds, config.nav);
  }
  const std::uint64_t nav_bytes = out.nav.bytes();
  if (!out.nav.empty() && plan.code_bytes + nav_bytes <= budget_bytes) {
    const InMemoryLayout mem(g, ds, spec, out.packed);
    SearchIndex index;
    index.layout = &mem;
    index.codebook = &out.codebook;
    index.codes = &out.codes;
    index.entry = g.entry();
    index.nav = &out.nav;
    const auto gt = compute_ground_truth(ds, sample_queries, config.proxy.k,
                                         config.threads);
    out.proxy_without_nav =
        measure_read_proxy(index, sample_queries, gt, config.proxy, false);
    out.proxy_with_nav =
        measure_read_proxy(index, sample_queries, gt, config.proxy, true);
    const auto &off = out.proxy_without_nav;
    const auto &on = out.proxy_with_nav;
    plan.nav_enabled = on.reached && (!off.reached ||
                                      on.reads_per_query < off.reads_per_query);
  }
  plan.nav_bytes = plan.nav_enabled ? nav_bytes : 0;

  // Step 3: caches ranked by distance to the navigation nodes.
  out.ranking = rank_by_nav_distance(ds, out.nav, g.entry(), config.threads);
  fill_caches(plan, g, ds, out.ranking);
  return out;
}

void save_plan(const MemoryPlan &plan, const std::filesystem::path &path) {
  auto out = detail::open_output(path.string());
  detail::write_pod(out, kPlanMagic);
  detail::write_pod(out, kPlanVersion);
  detail::write_pod(out, plan.budget_bytes);
  detail::write_pod(out, plan.num_subspaces);
  detail::write_pod(out, static_cast<std::uint8_t>(plan.nav_enabled));
  detail::write_pod(out, plan.nav.fraction);
  detail::write_pod(out, plan.nav.seed);
  detail::write_pod(out, plan.nav.max_degree);
  detail::write_pod(out, plan.nav.build_queue);
  detail::write_pod(out, plan.nav.search_queue);
  detail::write_pod(out, plan.nav.entry_count);
  detail::write_pod(out, plan.sigma);
  detail::write_pod(out, plan.code_bytes);
  detail::write_pod(out, plan.nav_bytes);
  detail::write_pod(out, plan.graph_cache_bytes);
  detail::write_pod(out, plan.node_cache_bytes);
  write_ranges(out, plan.graph_cache_ids);
  write_ranges(out, plan.node_cache_ids);
  if (!out) throw Error("failed writing plan " + path.string());
}

MemoryPlan load_plan(const std::filesystem::path &path) {
  auto in = detail::open_input(path.string());
  if (detail::read_pod<std::uint64_t>(in, "plan magic") != kPlanMagic) {
    throw Error(path.string() + " is not a memory plan");
  }
  if (detail::read_pod<std::uint32_t>(in, "plan version") != kPlanVersion) {
    throw Error("unsupported plan version in " + path.string());
  }
  MemoryPlan plan;
  plan.budget_bytes = detail::read_pod<std::uint64_t>(in, "plan budget");
  plan.num_subspaces = detail::read_pod<std::uint32_t>(in, "plan M");
  plan.nav_enabled = detail::read_pod<std::uint8_t>(in, "plan nav flag") != 0;
  plan.nav.fraction = detail::read_pod<double>(in, "plan nav fraction");
  plan.nav.seed = detail::read_pod<std::uint64_t>(in, "plan nav seed");
  plan.nav.max_degree = detail::read_pod<std::uint32_t>(in, "plan nav degree");
  plan.nav.build_queue = detail::read_pod<std::uint32_t>(in, "plan nav queue");
  plan.nav.search_queue = detail::read_pod<std::uint32_t>(in, "plan nav queue");
  plan.nav.entry_count = detail::read_pod<std::uint32_t>(in, "plan nav entries");
  plan.sigma = detail::read_pod<float>(in, "plan sigma");
  plan.code_bytes = detail::read_pod<std::uint64_t>(in, "plan sizes");
  plan.nav_bytes = detail::read_pod<std::uint64_t>(in, "plan sizes");
  plan.graph_cache_bytes = detail::read_pod<std::uint64_t>(in, "plan sizes");
  plan.node_cache_bytes = detail::read_pod<std::uint64_t>(in, "plan sizes");
  plan.graph_cache_ids = read_ranges(in);
  plan.node_cache_ids = read_ranges(in);
  if (plan.used_bytes() > plan.budget_bytes) {
    throw Error("plan " + path.string() + " exceeds its own budget");
  }
  return plan;
}

}  // namespace blockann
