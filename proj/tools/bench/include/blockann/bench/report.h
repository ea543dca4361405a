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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "blockann/types.h"

namespace blockann::bench {

// One query of one run; the structured per-query record.
struct QueryRecord {
  std::uint32_t query_id = 0;
  double recall = 0.0;
  std::uint64_t latency_ns = 0;
  std::uint64_t search_stage_reads = 0;
  std::uint64_t refinement_reads = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t nav_hops = 0;
  std::uint64_t visited = 0;
  std::vector<node_id> ids;
};

// Aggregate of one sweep point. Recall and IO columns are machine
// independent; qps and latency are not.
struct BenchRow {
  std::string engine;
  std::string layout_kind;
  std::string io_mode;
  std::uint32_t k = 10;
  std::uint32_t queue_size = 0;
  double sigma = 0.0;
  std::uint32_t beam_width = 1;
  bool use_nav = false;
  std::uint32_t threads = 1;
  double cache_fraction = -1.0;  // negative: caches from the plan
  std::uint64_t graph_cache_nodes = 0;
  std::uint64_t graph_cache_bytes = 0;
  std::uint64_t node_cache_nodes = 0;
  std::uint64_t node_cache_bytes = 0;
  std::uint64_t queries = 0;
  std::uint64_t excluded_tuning_queries = 0;

  double recall = 0.0;
  double ios_mean = 0.0;
  double search_reads_mean = 0.0;
  double refine_reads_mean = 0.0;
  double cache_hits_mean = 0.0;
  double visited_mean = 0.0;
  double nav_hops_mean = 0.0;
  double beta_hat = 0.0;  // cache hits / visited candidates

  double qps = 0.0;
  double latency_mean_us = 0.0;
  double latency_median_us = 0.0;
  double latency_p99_us = 0.0;

  std::uint64_t vector_bytes = 0;
  std::uint64_t adjacency_bytes = 0;  // at max degree
  std::uint64_t layout_bytes = 0;
  std::uint64_t flat_bytes = 0;
  double avg_packed = 0.0;
  std::uint32_t pack_count = 0;

  nlohmann::json config;  // build configuration echo, seeds included
};

nlohmann::json to_json(const BenchRow &row);
nlohmann::json to_json(const QueryRecord &rec, std::size_t run);

// Aggregates records; wall_seconds is the elapsed time of the whole run.
void summarize(std::span<const QueryRecord> records, double wall_seconds,
               BenchRow &row);

void print_table(std::ostream &out, std::span<const BenchRow> rows);

// Cache-model comparison of one report row against the no-cache row with the
// same engine, queue size, refinement ratio and beam width.
struct ModelCheck {
  std::string file;
  std::string engine;
  std::uint32_t queue_size = 0;
  double sigma = 0.0;
  std::uint32_t beam_width = 0;
  double cache_fraction = 0.0;
  double beta_hat = 0.0;
  double predicted = 0.0;  // beta_hat (1 - sigma)
  double measured = 0.0;   // 1 - ios / ios without cache
  double deviation = 0.0;  // relative to predicted; absolute when it is 0
  bool flagged = false;    // deviation above 25%
  bool adjacency_wins = false;
  double blowup_predicted = 0.0;
  double blowup_measured = 0.0;
};

inline constexpr double kModelTolerance = 0.25;

// Reads summary records from JSONL report files. Throws naming the file,
// line and missing fields when a record lacks what the analysis needs.
std::vector<ModelCheck> cmd_analyze(
    std::span<const std::filesystem::path> reports);

void print_analysis(std::ostream &out, std::span<const ModelCheck> checks);

}  // namespace blockann::bench
