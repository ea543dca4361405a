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

// blockann command-line harness.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "blockann/bench/artifacts.h"
#include "blockann/bench/report.h"
#include "blockann/bench/runner.h"
#include "blockann/io.h"
#include "blockann/planner.h"
#include "blockann/synthetic.h"

namespace fs = std::filesystem;
using namespace blockann;
using namespace blockann::bench;

namespace {

struct CorpusArgs {
  std::string path;
  std::string format = "fvecs";
  std::string metric = "l2";

  CorpusSpec spec() const {
    return {path, parse_file_format(format), parse_metric(metric)};
  }
};

void add_corpus(CLI::App *app, CorpusArgs &a, const std::string &flag,
                const std::string &what, bool required) {
  auto *opt = app->add_option(flag, a.path, what);
  if (required) opt->required();
  app->add_option(flag + "-format", a.format, "fvecs, bvecs or raw_bin")
      ->capture_default_str();
}

IoMode resolve_io_mode(const std::string &flag) {
  if (auto env = io_mode_from_env()) return *env;
  return parse_io_mode(flag);
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"blockann: disk-resident ANN search with graph-replicated "
               "blocks and two-stage search"};
  app.require_subcommand(1);

  // synth
  SyntheticSpec syn;
  std::string syn_metric = "l2", syn_base, syn_queries;
  auto *synth = app.add_subcommand("synth", "Write a seeded clustered corpus");
  synth->add_option("--count", syn.count)->capture_default_str();
  synth->add_option("--queries", syn.query_count)->capture_default_str();
  synth->add_option("--dims", syn.dims)->capture_default_str();
  synth->add_option("--clusters", syn.clusters)->capture_default_str();
  synth->add_option("--latent-dims", syn.latent_dims)->capture_default_str();
  synth->add_option("--seed", syn.seed)->capture_default_str();
  synth->add_option("--metric", syn_metric)->capture_default_str();
  synth->add_option("--out-base", syn_base, "fvecs output")->required();
  synth->add_option("--out-queries", syn_queries, "fvecs output")->required();

  // build
  CorpusArgs b_corpus, b_queries;
  std::string b_out, b_layout = "graph_replicated";
  BuildConfig bc;
  std::optional<std::uint32_t> b_pack, b_subspaces;
  std::optional<std::uint64_t> b_budget;
  std::vector<std::uint32_t> b_candidates;
  auto *build = app.add_subcommand("build", "Build graph, PQ, plan and layout");
  add_corpus(build, b_corpus, "--corpus", "base vectors", true);
  build->add_option("--metric", b_corpus.metric, "l2, ip or cosine")
      ->capture_default_str();
  add_corpus(build, b_queries, "--queries",
             "query file the planner draws tuning queries from", false);
  build->add_option("--out", b_out, "artifact directory")->required();
  build->add_option("--max-degree", bc.graph.max_degree)->capture_default_str();
  build->add_option("--build-queue", bc.graph.build_queue)->capture_default_str();
  build->add_option("--alpha", bc.graph.alpha)->capture_default_str();
  build->add_option("--graph-seed", bc.graph.seed)->capture_default_str();
  build->add_option("--layout", b_layout, "graph_replicated or flat")
      ->capture_default_str();
  build->add_option("--block-size", bc.layout.block_size)->capture_default_str();
  build->add_option("--pack-count", b_pack, "default: fill the block");
  build->add_option("--budget-bytes", b_budget);
  build->add_option("--budget-fraction", bc.budget_fraction,
                    "of corpus bytes, when --budget-bytes is absent")
      ->capture_default_str();
  build->add_option("--candidates", b_candidates, "PQ subspace counts");
  build->add_option("--subspaces", b_subspaces, "fix M, skipping the search");
  build->add_option("--pq-sample-fraction", bc.planner.pq_sample_fraction)
      ->capture_default_str();
  build->add_option("--pq-iterations", bc.planner.pq.iterations)
      ->capture_default_str();
  build->add_option("--pq-seed", bc.planner.pq.seed)->capture_default_str();
  build->add_option("--sample-seed", bc.planner.sample_seed)
      ->capture_default_str();
  build->add_option("--nav-fraction", bc.planner.nav.fraction)
      ->capture_default_str();
  build->add_option("--nav-seed", bc.planner.nav.seed)->capture_default_str();
  build->add_option("--sigma", bc.planner.proxy.sigma)->capture_default_str();
  build->add_option("--recall-target", bc.planner.proxy.recall_target)
      ->capture_default_str();
  build->add_option("--tuning-queries", bc.tuning_queries)
      ->capture_default_str();
  build->add_option("--tuning-seed", bc.tuning_seed)->capture_default_str();
  build->add_option("--threads", bc.threads)->capture_default_str();

  // gt
  CorpusArgs g_corpus, g_queries;
  std::uint32_t g_k = 10;
  std::size_t g_threads = 1;
  std::string g_out;
  auto *gt = app.add_subcommand("gt", "Brute-force ground truth");
  add_corpus(gt, g_corpus, "--corpus", "base vectors", true);
  gt->add_option("--metric", g_corpus.metric)->capture_default_str();
  add_corpus(gt, g_queries, "--queries", "query vectors", true);
  gt->add_option("--k", g_k)->capture_default_str();
  gt->add_option("--threads", g_threads)->capture_default_str();
  gt->add_option("--out", g_out)->required();

  // plan
  std::string p_index, p_out;
  CorpusArgs p_queries;
  std::uint64_t p_budget = 0;
  bool p_search_m = false;
  PlannerConfig pc;
  std::uint32_t p_tuning = 100;
  auto *plan = app.add_subcommand(
      "plan", "Re-plan the memory caches of a built index for a new budget");
  plan->add_option("--index", p_index)->required();
  plan->add_option("--budget-bytes", p_budget)->required();
  add_corpus(plan, p_queries, "--queries", "tuning query source", true);
  plan->add_option("--tuning-queries", p_tuning)->capture_default_str();
  plan->add_flag("--search-m", p_search_m,
                 "rerun the compression search instead of keeping M");
  plan->add_option("--threads", pc.threads)->capture_default_str();
  plan->add_option("--out", p_out, "plan file to write");

  // search
  std::string s_index, s_gt, s_report, s_io = "sync", s_nav = "plan",
                                       s_plan;
  CorpusArgs s_queries;
  SweepSpec sw;
  std::vector<std::string> s_cache{"plan"}, s_engines{"two_stage"};
  std::vector<double> s_sigmas{0.5};
  auto *search = app.add_subcommand("search", "Run a query sweep");
  search->add_option("--index", s_index)->required();
  add_corpus(search, s_queries, "--queries", "query vectors", true);
  search->add_option("--gt", s_gt)->required();
  search->add_option("--k", sw.k)->capture_default_str();
  search->add_option("--queue-sizes", sw.queue_sizes)->capture_default_str();
  search->add_option("--sigmas", s_sigmas)->capture_default_str();
  search->add_option("--beam-widths", sw.beam_widths)->capture_default_str();
  search->add_option("--cache-fractions", s_cache,
                     "fractions of adjacency bytes, or 'plan'")
      ->capture_default_str();
  search->add_option("--threads", sw.threads)->capture_default_str();
  search->add_option("--engines", s_engines, "two_stage, baseline")
      ->capture_default_str();
  search->add_option("--io-mode", s_io,
                     "sync, async or async_deterministic; BLOCKANN_IO_MODE "
                     "overrides")
      ->capture_default_str();
  search->add_option("--nav", s_nav, "on, off or plan")->capture_default_str();
  search->add_option("--max-queries", sw.max_queries)->capture_default_str();
  search->add_option("--io-threads", sw.io_threads)->capture_default_str();
  search->add_flag("--direct-io", sw.direct_io);
  search->add_option("--plan", s_plan, "memory plan overriding the build's");
  search->add_option("--report", s_report, "JSONL output (appended)");

  // bench
  ExperimentSpec ex;
  std::string e_out;
  auto *bench = app.add_subcommand(
      "bench", "Synthesize a corpus and run the desk-scale experiment suite");
  bench->add_option("--out", e_out)->required();
  bench->add_option("--count", ex.corpus.count)->capture_default_str();
  bench->add_option("--queries", ex.corpus.query_count)->capture_default_str();
  bench->add_option("--dims", ex.corpus.dims)->capture_default_str();
  bench->add_option("--seed", ex.corpus.seed)->capture_default_str();
  bench->add_option("--max-queries", ex.max_queries)->capture_default_str();
  bench->add_option("--threads", ex.threads)->capture_default_str();

  // analyze
  std::vector<std::string> a_reports;
  auto *analyze = app.add_subcommand(
      "analyze", "Compare measured IO reduction with the cache model");
  analyze->add_option("reports", a_reports, "JSONL reports")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      syn.metric = parse_metric(syn_metric);
      const auto c = make_clustered(syn);
      save_dataset(c.base, syn_base, FileFormat::kFvecs);
      save_dataset(c.queries, syn_queries, FileFormat::kFvecs);
      std::cout << "wrote " << c.base.count() << " base and "
                << c.queries.count() << " query vectors\n";
    } else if (*build) {
      bc.layout.kind = parse_layout_kind(b_layout);
      bc.layout.pack_count = b_pack;
      bc.budget_bytes = b_budget;
      bc.planner.candidates = b_candidates;
      bc.planner.fixed_subspaces = b_subspaces;
      std::optional<CorpusSpec> qs;
      if (!b_queries.path.empty()) {
        b_queries.metric = b_corpus.metric;
        qs = b_queries.spec();
      }
      const auto m = cmd_build(b_corpus.spec(), qs, b_out, bc);
      std::cout << m.to_json().dump(2) << "\n";
    } else if (*gt) {
      g_queries.metric = g_corpus.metric;
      cmd_gt(g_corpus.spec(), g_queries.spec(), g_k, g_out, g_threads);
      std::cout << "wrote " << g_out << "\n";
    } else if (*plan) {
      LoadedIndex ix = open_index(p_index);
      const auto &h = ix.layout->header();
      p_queries.metric = std::string(to_string(h.metric));
      const auto all = load_dataset(p_queries.path,
                                    parse_file_format(p_queries.format),
                                    h.metric);
      const auto tuning = sample_dataset(
          all, std::min(1.0, double(p_tuning) / all.count()), 17);
      if (!p_search_m) pc.fixed_subspaces = ix.codebook.num_subspaces;
      BlockSpec spec;
      spec.block_size = h.block_size;
      spec.kind = h.kind;
      spec.pack_count = h.pack_count;
      const auto out = plan_memory(ix.corpus(), tuning.data, p_budget,
                                   ix.graph, spec, pc);
      const auto &mp = out.plan;
      std::cout << "M " << mp.num_subspaces << "\nnav "
                << (mp.nav_enabled ? "on" : "off")
                << " (reads without " << out.proxy_without_nav.reads_per_query
                << ", with " << out.proxy_with_nav.reads_per_query << ")\n"
                << "graph cache " << mp.graph_cache_ids.size() << " nodes, "
                << mp.graph_cache_bytes << " bytes\nnode cache "
                << mp.node_cache_ids.size() << " nodes, "
                << mp.node_cache_bytes << " bytes\nused " << mp.used_bytes()
                << " of " << mp.budget_bytes << " bytes\n";
      for (const auto &p : out.probes) {
        std::cout << "probe M=" << p.num_subspaces
                  << (p.fits_budget ? "" : " (over budget)")
                  << " reads/query " << p.proxy.reads_per_query << " at D="
                  << p.proxy.queue_size << "\n";
      }
      if (!p_out.empty()) save_plan(mp, p_out);
    } else if (*search) {
      sw.io_mode = resolve_io_mode(s_io);
      sw.sigmas = s_sigmas;
      sw.cache_fractions.clear();
      for (const auto &c : s_cache) {
        if (c == "plan") {
          sw.cache_fractions.push_back(std::nullopt);
        } else {
          sw.cache_fractions.push_back(std::stod(c));
        }
      }
      sw.engines.clear();
      for (const auto &e : s_engines) sw.engines.push_back(parse_engine(e));
      if (s_nav == "on") {
        sw.use_nav = true;
      } else if (s_nav == "off") {
        sw.use_nav = false;
      } else if (s_nav != "plan") {
        throw Error("--nav must be on, off or plan");
      }
      if (!s_plan.empty()) sw.plan_path = fs::path(s_plan);
      const fs::path report(s_report);
      const auto rows = cmd_search(
          s_index, s_queries.path, parse_file_format(s_queries.format), s_gt,
          sw, s_report.empty() ? nullptr : &report, nullptr);
      print_table(std::cout, rows);
    } else if (*bench) {
      cmd_bench(e_out, ex, std::cout);
    } else if (*analyze) {
      std::vector<fs::path> files(a_reports.begin(), a_reports.end());
      print_analysis(std::cout, cmd_analyze(files));
    }
  } catch (const StageError &e) {
    std::cerr << "build failed: " << e.what() << "\n";
    return 1;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return EXIT_SUCCESS;
}
