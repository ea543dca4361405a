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
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "blockann/bench/artifacts.h"
#include "blockann/bench/report.h"
#include "blockann/engine.h"
#include "blockann/ground_truth.h"
#include "blockann/synthetic.h"

namespace blockann::bench {

enum class Engine { kTwoStage, kBaseline };

std::string_view to_string(Engine e);
Engine parse_engine(std::string_view s);

struct RunSpec {
  Engine engine = Engine::kTwoStage;
  SearchParams params;
  std::size_t threads = 1;
};

struct RunResult {
  std::vector<QueryRecord> records;  // in query order
  double wall_seconds = 0.0;
};

// Runs every query once with `threads` workers, each owning a Searcher.
// Recall is filled in when gt is given.
RunResult run_queries(const SearchIndex &index, const VectorDataset &queries,
                      std::span<const std::uint32_t> query_ids,
                      const GroundTruth *gt, const RunSpec &spec);

struct CacheSet {
  GraphCache graph;
  NodeCache node;
  double fraction = -1.0;  // negative: taken from the plan
};

// Graph cache covering `fraction` of the total adjacency bytes by nav
// ranking (no node cache), or the plan's caches when fraction is unset.
CacheSet make_caches(LoadedIndex &index, std::optional<double> fraction);

struct SweepSpec {
  std::uint32_t k = 10;
  std::vector<std::uint32_t> queue_sizes{100};
  std::vector<double> sigmas{0.5};
  std::vector<std::uint32_t> beam_widths{4};
  std::vector<std::optional<double>> cache_fractions{std::nullopt};
  std::vector<std::size_t> threads{1};
  std::vector<Engine> engines{Engine::kTwoStage};
  IoMode io_mode = IoMode::kSync;
  std::optional<bool> use_nav;  // unset: as planned
  std::size_t max_queries = 0;  // 0: all evaluation queries
  std::size_t io_threads = 0;   // 0: sized from beam width and threads
  bool direct_io = false;
  // Replaces the build's memory plan (same M required).
  std::optional<std::filesystem::path> plan_path;
};

// Runs the cartesian product of the sweep over the held-out queries (the
// build's tuning queries are excluded when the query file matches), appends
// per-query and summary records to jsonl_out when given, and returns one
// row per point.
std::vector<BenchRow> cmd_search(const std::filesystem::path &index_dir,
                                 const std::filesystem::path &queries_path,
                                 FileFormat queries_format,
                                 const std::filesystem::path &gt_path,
                                 const SweepSpec &sweep,
                                 const std::filesystem::path *jsonl_out,
                                 std::ostream *log);

// Desk-scale experiment suite: synthesizes a corpus, builds both layouts and
// writes refinement, cache, beam width and thread sweeps plus the model
// analysis under out_dir.
struct ExperimentSpec {
  SyntheticSpec corpus;
  BuildConfig build;
  std::size_t max_queries = 0;
  std::size_t threads = 1;
};

void cmd_bench(const std::filesystem::path &out_dir,
               const ExperimentSpec &spec, std::ostream &log);

}  // namespace blockann::bench
