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

#include "blockann/bench/runner.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <thread>

#include "blockann/planner.h"

namespace blockann::bench {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Engine e) {
  return e == Engine::kTwoStage ? "two_stage" : "baseline";
}

Engine parse_engine(std::string_view s) {
  if (s == "two_stage") return Engine::kTwoStage;
  if (s == "baseline") return Engine::kBaseline;
  throw Error("unknown engine: " + std::string(s));
}

RunResult run_queries(const SearchIndex &index, const VectorDataset &queries,
                      std::span<const std::uint32_t> query_ids,
                      const GroundTruth *gt, const RunSpec &spec) {
  const std::size_t n = query_ids.size();
  RunResult out;
  out.records.resize(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;

  auto worker = [&] {
    try {
      Searcher searcher(index);
      std::vector<node_id> ids;
      for (std::size_t i = next++; i < n; i = next++) {
        const std::uint32_t q = query_ids[i];
        const auto r = spec.engine == Engine::kTwoStage
                           ? searcher.search_two_stage(queries.row(q),
                                                       spec.params)
                           : searcher.search_baseline(queries.row(q),
                                                      spec.params);
        QueryRecord &rec = out.records[i];
        rec.query_id = q;
        rec.latency_ns = r.latency_ns;
        rec.search_stage_reads = r.stats.search_stage_reads;
        rec.refinement_reads = r.stats.refinement_reads;
        rec.cache_hits = r.stats.cache_hits;
        rec.nav_hops = r.stats.nav_hops;
        rec.visited = r.visited;
        rec.ids.clear();
        for (const auto &nb : r.neighbors) rec.ids.push_back(nb.id);
        if (gt != nullptr) {
          rec.recall = compute_recall(rec.ids, gt->lists.at(q), spec.params.k);
        }
      }
    } catch (...) {
      std::lock_guard lock(error_mu);
      if (!error) error = std::current_exception();
      next = n;
    }
  };

  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t threads = std::max<std::size_t>(1, spec.threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto &t : pool) t.join();
  }
  out.wall_seconds = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
  if (error) std::rethrow_exception(error);
  return out;
}

CacheSet make_caches(LoadedIndex &index, std::optional<double> fraction) {
  CacheSet c;
  if (!fraction) {
    c.graph = GraphCache(index.graph, index.plan.graph_cache_ids);
    c.node = NodeCache(*index.layout, index.plan.node_cache_ids);
    return c;
  }
  if (*fraction < 0.0 || *fraction > 1.0) {
    throw Error("cache fraction must be in [0, 1]");
  }
  c.fraction = *fraction;
  if (*fraction == 0.0) return c;
  const double total = static_cast<double>(index.graph.total_adjacency_bytes());
  const auto budget =
      static_cast<std::uint64_t>(std::floor(*fraction * total + 1e-9));
  const auto ids = select_graph_cache(index.graph, index.ranking(), budget);
  c.graph = GraphCache(index.graph, ids);
  return c;
}

std::vector<BenchRow> cmd_search(const fs::path &index_dir,
                                 const fs::path &queries_path,
                                 FileFormat queries_format,
                                 const fs::path &gt_path,
                                 const SweepSpec &sweep,
                                 const fs::path *jsonl_out,
                                 std::ostream *log) {
  LoadedIndex ix = open_index(index_dir, sweep.direct_io);
  if (sweep.plan_path) {
    auto plan = load_plan(*sweep.plan_path);
    if (plan.num_subspaces != ix.codebook.num_subspaces) {
      throw Error("plan " + sweep.plan_path->string() + " uses M=" +
                  std::to_string(plan.num_subspaces) + ", index has M=" +
                  std::to_string(ix.codebook.num_subspaces));
    }
    ix.plan = std::move(plan);
  }
  const LayoutHeader &h = ix.layout->header();
  const auto queries = load_dataset(queries_path, queries_format, h.metric);
  if (queries.dims() != h.dims) {
    throw Error("queries have " + std::to_string(queries.dims()) +
                " dimensions, index has " + std::to_string(h.dims));
  }
  const auto gt = load_ground_truth(gt_path);
  if (gt.lists.size() != queries.count()) {
    throw Error("ground truth covers " + std::to_string(gt.lists.size()) +
                " queries, query file holds " +
                std::to_string(queries.count()));
  }
  if (gt.k < sweep.k) throw Error("ground truth depth is below k");

  // Held-out evaluation set: tuning queries never take part.
  std::vector<std::uint32_t> eval;
  std::size_t excluded = 0;
  std::vector<bool> tuning(queries.count(), false);
  if (!ix.manifest.query_file_sha256.empty() &&
      sha256_file(queries_path) == ix.manifest.query_file_sha256) {
    for (node_id t : ix.manifest.tuning_query_ids) {
      if (t < tuning.size()) tuning[t] = true;
    }
  }
  for (std::uint32_t q = 0; q < queries.count(); ++q) {
    if (tuning[q]) {
      ++excluded;
      continue;
    }
    eval.push_back(q);
  }
  if (sweep.max_queries > 0 && eval.size() > sweep.max_queries) {
    eval.resize(sweep.max_queries);
  }
  if (eval.empty()) throw Error("no evaluation queries left");

  const bool use_nav = sweep.use_nav.value_or(ix.plan.nav_enabled);
  const NavIndex *nav = use_nav ? &ix.nav() : nullptr;

  std::unique_ptr<IoService> io;
  if (sweep.io_mode != IoMode::kSync) {
    std::size_t want = sweep.io_threads;
    if (want == 0) {
      const auto w = *std::max_element(sweep.beam_widths.begin(),
                                       sweep.beam_widths.end());
      const auto t =
          *std::max_element(sweep.threads.begin(), sweep.threads.end());
      want = std::clamp<std::size_t>(w * t, 4, 64);
    }
    io = std::make_unique<IoService>(want);
  }

  std::ofstream jsonl;
  if (jsonl_out != nullptr) {
    jsonl.open(*jsonl_out, std::ios::app);
    if (!jsonl) throw Error("cannot open " + jsonl_out->string());
  }

  json config = ix.manifest.config;
  config["index_dir"] = index_dir.string();
  config["queries"] = queries_path.string();
  config["ground_truth"] = gt_path.string();

  std::vector<BenchRow> rows;
  std::size_t run = 0;
  for (const auto &fraction : sweep.cache_fractions) {
    const CacheSet caches = make_caches(ix, fraction);
    SearchIndex si;
    si.layout = ix.layout.get();
    si.codebook = &ix.codebook;
    si.codes = &ix.codes;
    si.entry = ix.graph.entry();
    si.graph_cache = caches.graph.size() > 0 ? &caches.graph : nullptr;
    si.node_cache = caches.node.size() > 0 ? &caches.node : nullptr;
    si.nav = nav;
    si.io = io.get();
    for (const Engine engine : sweep.engines) {
      for (const auto d : sweep.queue_sizes) {
        for (const double sigma : sweep.sigmas) {
          for (const auto w : sweep.beam_widths) {
            for (const auto t : sweep.threads) {
              RunSpec spec;
              spec.engine = engine;
              spec.params.k = sweep.k;
              spec.params.queue_size = d;
              spec.params.sigma = static_cast<float>(sigma);
              spec.params.beam_width = w;
              spec.params.use_nav = use_nav;
              spec.params.io_mode = sweep.io_mode;
              spec.threads = t;
              const auto result = run_queries(si, queries, eval, &gt, spec);

              BenchRow row;
              row.engine = std::string(to_string(engine));
              row.layout_kind = std::string(to_string(h.kind));
              row.io_mode = std::string(to_string(sweep.io_mode));
              row.k = sweep.k;
              row.queue_size = d;
              row.sigma = sigma;
              row.beam_width = w;
              row.use_nav = use_nav;
              row.threads = static_cast<std::uint32_t>(t);
              row.cache_fraction = caches.fraction;
              row.graph_cache_nodes = caches.graph.size();
              row.graph_cache_bytes = caches.graph.bytes();
              row.node_cache_nodes = caches.node.size();
              row.node_cache_bytes = caches.node.bytes();
              row.excluded_tuning_queries = excluded;
              row.vector_bytes = h.vector_bytes();
              row.adjacency_bytes = ix.graph.max_adjacency_bytes();
              row.layout_bytes = ix.manifest.layout.bytes;
              row.flat_bytes = ix.manifest.layout.flat_bytes;
              row.avg_packed = ix.manifest.layout.avg_packed;
              row.pack_count = ix.manifest.layout.pack_count;
              row.config = config;
              summarize(result.records, result.wall_seconds, row);
              if (jsonl.is_open()) {
                for (const auto &rec : result.records) {
                  jsonl << to_json(rec, run).dump() << "\n";
                }
                json s = to_json(row);
                s["run"] = run;
                jsonl << s.dump() << "\n";
              }
              if (log != nullptr) print_table(*log, std::span(&row, 1));
              rows.push_back(std::move(row));
              ++run;
            }
          }
        }
      }
    }
  }
  if (jsonl.is_open() && !jsonl) throw Error("failed writing report");
  return rows;
}

void cmd_bench(const fs::path &out_dir, const ExperimentSpec &spec,
               std::ostream &log) {
  const fs::path data = out_dir / "data";
  const fs::path reports = out_dir / "reports";
  fs::create_directories(data);
  fs::create_directories(reports);

  log << "synthesizing " << spec.corpus.count << " x " << spec.corpus.dims
      << " corpus\n";
  const auto corpus = make_clustered(spec.corpus);
  const fs::path base_path = data / "base.fvecs";
  const fs::path query_path = data / "queries.fvecs";
  const fs::path gt_path = data / "gt.bin";
  save_dataset(corpus.base, base_path, FileFormat::kFvecs);
  save_dataset(corpus.queries, query_path, FileFormat::kFvecs);
  save_ground_truth(
      compute_ground_truth(corpus.base, corpus.queries, 10, spec.threads),
      gt_path);

  const CorpusSpec base{base_path, FileFormat::kFvecs, spec.corpus.metric};
  const CorpusSpec qs{query_path, FileFormat::kFvecs, spec.corpus.metric};
  BuildConfig replicated = spec.build;
  replicated.layout.kind = LayoutKind::kGraphReplicated;
  replicated.threads = spec.threads;
  BuildConfig flat = replicated;
  flat.layout.kind = LayoutKind::kFlat;
  log << "building graph-replicated index\n";
  cmd_build(base, qs, out_dir / "index_replicated", replicated);
  log << "building flat index\n";
  cmd_build(base, qs, out_dir / "index_flat", flat);

  auto sweep_into = [&](const char *name, const fs::path &index,
                        SweepSpec s) {
    s.max_queries = spec.max_queries;
    const fs::path out = reports / (std::string(name) + ".jsonl");
    fs::remove(out);
    log << "\n== " << name << " ==\n";
    cmd_search(index, query_path, FileFormat::kFvecs, gt_path, s, &out, &log);
    return out;
  };

  SweepSpec refinement;
  refinement.queue_sizes = {20, 50, 100, 200};
  refinement.sigmas = {0.25, 0.5, 1.0};
  refinement.beam_widths = {1};
  refinement.cache_fractions = {0.0};
  refinement.use_nav = false;
  sweep_into("refinement", out_dir / "index_replicated", refinement);

  SweepSpec cache;
  cache.queue_sizes = {100};
  cache.beam_widths = {1};
  cache.cache_fractions = {0.0, 0.25, 0.5, 0.9, 1.0};
  cache.use_nav = false;
  const auto cache_report = sweep_into("cache", out_dir / "index_flat", cache);

  SweepSpec layout;
  layout.queue_sizes = {10, 15, 20, 30, 40, 60, 80, 100};
  layout.sigmas = {0.5, 1.0};
  layout.beam_widths = {1};
  layout.cache_fractions = {0.0};
  layout.use_nav = false;
  sweep_into("layout_replicated", out_dir / "index_replicated", layout);
  layout.sigmas = {1.0};
  layout.engines = {Engine::kBaseline};
  sweep_into("layout_flat", out_dir / "index_flat", layout);

  SweepSpec beam;
  beam.beam_widths = {1, 2, 4, 8};
  beam.io_mode = IoMode::kAsync;
  sweep_into("beam", out_dir / "index_replicated", beam);

  SweepSpec threads;
  threads.threads = {1, 2, 4, 8};
  threads.io_mode = IoMode::kAsync;
  sweep_into("threads", out_dir / "index_replicated", threads);

  log << "\n== cache model ==\n";
  const std::vector<fs::path> files{cache_report};
  print_analysis(log, cmd_analyze(files));
}

}  // namespace blockann::bench
