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

#include "blockann/bench/report.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <tuple>

#include "blockann/layout.h"
#include "blockann/planner.h"

namespace blockann::bench {

using nlohmann::json;

json to_json(const BenchRow &r) {
  return {{"type", "summary"},
          {"engine", r.engine},
          {"layout_kind", r.layout_kind},
          {"io_mode", r.io_mode},
          {"k", r.k},
          {"queue_size", r.queue_size},
          {"sigma", r.sigma},
          {"beam_width", r.beam_width},
          {"use_nav", r.use_nav},
          {"threads", r.threads},
          {"cache_fraction", r.cache_fraction},
          {"graph_cache_nodes", r.graph_cache_nodes},
          {"graph_cache_bytes", r.graph_cache_bytes},
          {"node_cache_nodes", r.node_cache_nodes},
          {"node_cache_bytes", r.node_cache_bytes},
          {"queries", r.queries},
          {"excluded_tuning_queries", r.excluded_tuning_queries},
          {"recall", r.recall},
          {"ios_mean", r.ios_mean},
          {"search_reads_mean", r.search_reads_mean},
          {"refine_reads_mean", r.refine_reads_mean},
          {"cache_hits_mean", r.cache_hits_mean},
          {"visited_mean", r.visited_mean},
          {"nav_hops_mean", r.nav_hops_mean},
          {"beta_hat", r.beta_hat},
          {"qps", r.qps},
          {"latency_mean_us", r.latency_mean_us},
          {"latency_median_us", r.latency_median_us},
          {"latency_p99_us", r.latency_p99_us},
          {"vector_bytes", r.vector_bytes},
          {"adjacency_bytes", r.adjacency_bytes},
          {"layout_bytes", r.layout_bytes},
          {"flat_bytes", r.flat_bytes},
          {"avg_packed", r.avg_packed},
          {"pack_count", r.pack_count},
          {"config", r.config}};
}

json to_json(const QueryRecord &q, std::size_t run) {
  return {{"type", "query"},
          {"run", run},
          {"query_id", q.query_id},
          {"recall", q.recall},
          {"latency_ns", q.latency_ns},
          {"search_stage_reads", q.search_stage_reads},
          {"refinement_reads", q.refinement_reads},
          {"cache_hits", q.cache_hits},
          {"nav_hops", q.nav_hops},
          {"visited", q.visited},
          {"ids", q.ids}};
}

void summarize(std::span<const QueryRecord> records, double wall_seconds,
               BenchRow &row) {
  row.queries = records.size();
  if (records.empty()) return;
  const double n = static_cast<double>(records.size());
  double recall = 0, search = 0, refine = 0, hits = 0, visited = 0, hops = 0;
  std::vector<double> lat;
  lat.reserve(records.size());
  for (const auto &q : records) {
    recall += q.recall;
    search += static_cast<double>(q.search_stage_reads);
    refine += static_cast<double>(q.refinement_reads);
    hits += static_cast<double>(q.cache_hits);
    visited += static_cast<double>(q.visited);
    hops += static_cast<double>(q.nav_hops);
    lat.push_back(static_cast<double>(q.latency_ns) / 1000.0);
  }
  row.recall = recall / n;
  row.search_reads_mean = search / n;
  row.refine_reads_mean = refine / n;
  row.ios_mean = (search + refine) / n;
  row.cache_hits_mean = hits / n;
  row.visited_mean = visited / n;
  row.nav_hops_mean = hops / n;
  row.beta_hat = visited > 0 ? hits / visited : 0.0;
  row.qps = wall_seconds > 0 ? n / wall_seconds : 0.0;
  std::sort(lat.begin(), lat.end());
  double sum = 0;
  for (double l : lat) sum += l;
  row.latency_mean_us = sum / n;
  row.latency_median_us = lat[lat.size() / 2];
  row.latency_p99_us = lat[std::min(lat.size() - 1,
                                    static_cast<std::size_t>(
                                        std::ceil(0.99 * n)) - 1)];
}

void print_table(std::ostream &out, std::span<const BenchRow> rows) {
  out << std::left << std::setw(10) << "engine" << std::right
      << std::setw(6) << "D" << std::setw(7) << "sigma" << std::setw(4) << "W"
      << std::setw(4) << "T" << std::setw(8) << "cache" << std::setw(9)
      << "recall" << std::setw(9) << "ios" << std::setw(9) << "search"
      << std::setw(9) << "refine" << std::setw(8) << "beta" << std::setw(11)
      << "qps" << std::setw(11) << "mean_us" << std::setw(11) << "p99_us"
      << "\n";
  out << std::fixed;
  for (const auto &r : rows) {
    out << std::left << std::setw(10) << r.engine << std::right
        << std::setw(6) << r.queue_size << std::setw(7) << std::setprecision(2)
        << r.sigma << std::setw(4) << r.beam_width << std::setw(4)
        << r.threads << std::setw(8)
        << (r.cache_fraction < 0 ? std::string("plan")
                                 : std::to_string(r.cache_fraction).substr(0, 4))
        << std::setw(9) << std::setprecision(4) << r.recall << std::setw(9)
        << std::setprecision(2) << r.ios_mean << std::setw(9)
        << r.search_reads_mean << std::setw(9) << r.refine_reads_mean
        << std::setw(8) << std::setprecision(3) << r.beta_hat << std::setw(11)
        << std::setprecision(1) << r.qps << std::setw(11) << r.latency_mean_us
        << std::setw(11) << r.latency_p99_us << "\n";
  }
  out.unsetf(std::ios::fixed);
}

namespace {

const char *const kRequired[] = {
    "engine",          "queue_size",     "sigma",        "beam_width",
    "cache_fraction",  "beta_hat",       "ios_mean",     "graph_cache_nodes",
    "node_cache_nodes", "vector_bytes",  "adjacency_bytes", "layout_bytes",
    "flat_bytes",      "pack_count"};

struct Loaded {
  std::string file;
  json row;
};

}  // namespace

std::vector<ModelCheck> cmd_analyze(
    std::span<const std::filesystem::path> reports) {
  if (reports.empty()) throw Error("no report files given");
  std::vector<Loaded> rows;
  for (const auto &path : reports) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open report " + path.string());
    std::string line;
    std::size_t lineno = 0;
    std::size_t found = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const std::exception &e) {
        throw Error(path.string() + ":" + std::to_string(lineno) +
                    ": not a JSON record (" + e.what() + ")");
      }
      if (j.value("type", "") != "summary") continue;
      std::string missing;
      for (const char *f : kRequired) {
        if (!j.contains(f)) missing += std::string(missing.empty() ? "" : ", ") + f;
      }
      if (!missing.empty()) {
        throw Error(path.string() + ":" + std::to_string(lineno) +
                    ": summary record missing fields: " + missing);
      }
      rows.push_back({path.string(), std::move(j)});
      ++found;
    }
    if (found == 0) {
      throw Error(path.string() + " holds no summary records");
    }
  }

  using Key = std::tuple<std::string, std::string, std::uint32_t, double,
                         std::uint32_t, std::string, bool>;
  auto key_of = [](const Loaded &l) {
    const json &j = l.row;
    return Key{l.file,
               j.at("engine").get<std::string>(),
               j.at("queue_size").get<std::uint32_t>(),
               j.at("sigma").get<double>(),
               j.at("beam_width").get<std::uint32_t>(),
               j.value("layout_kind", ""),
               j.value("use_nav", false)};
  };
  std::map<Key, double> reference;
  for (const auto &l : rows) {
    const json &j = l.row;
    if (j.at("graph_cache_nodes").get<std::uint64_t>() == 0 &&
        j.at("node_cache_nodes").get<std::uint64_t>() == 0) {
      reference.emplace(key_of(l), j.at("ios_mean").get<double>());
    }
  }

  std::vector<ModelCheck> out;
  for (const auto &l : rows) {
    const json &j = l.row;
    const auto ref = reference.find(key_of(l));
    if (ref == reference.end()) continue;
    ModelCheck c;
    c.file = l.file;
    c.engine = j.at("engine").get<std::string>();
    c.queue_size = j.at("queue_size").get<std::uint32_t>();
    c.sigma = j.at("sigma").get<double>();
    c.beam_width = j.at("beam_width").get<std::uint32_t>();
    c.cache_fraction = j.at("cache_fraction").get<double>();
    c.beta_hat = j.at("beta_hat").get<double>();
    c.predicted = io_reduction(c.beta_hat, c.sigma);
    const double ios = j.at("ios_mean").get<double>();
    c.measured = ref->second > 0 ? 1.0 - ios / ref->second : 0.0;
    c.deviation = c.predicted > 0
                      ? std::abs(c.measured - c.predicted) / c.predicted
                      : std::abs(c.measured);
    c.flagged = c.deviation > kModelTolerance;
    const double sv = j.at("vector_bytes").get<double>();
    const double sa = j.at("adjacency_bytes").get<double>();
    if (sv > 0 && sa > 0) {
      if (c.sigma > 0 && c.sigma < 1) {
        c.adjacency_wins = adjacency_cache_wins(sv, sa, c.sigma);
      }
      c.blowup_predicted =
          space_blowup(sv, sa, j.at("pack_count").get<double>());
    }
    const double flat = j.at("flat_bytes").get<double>();
    c.blowup_measured =
        flat > 0 ? j.at("layout_bytes").get<double>() / flat : 0.0;
    out.push_back(c);
  }
  return out;
}

void print_analysis(std::ostream &out, std::span<const ModelCheck> checks) {
  out << std::left << std::setw(10) << "engine" << std::right << std::setw(6)
      << "D" << std::setw(7) << "sigma" << std::setw(4) << "W" << std::setw(8)
      << "cache" << std::setw(8) << "beta" << std::setw(11) << "predicted"
      << std::setw(10) << "measured" << std::setw(8) << "dev" << std::setw(6)
      << "flag" << std::setw(9) << "adj_win" << std::setw(10) << "blowup_m"
      << std::setw(10) << "blowup_f" << "\n";
  out << std::fixed;
  for (const auto &c : checks) {
    out << std::left << std::setw(10) << c.engine << std::right
        << std::setw(6) << c.queue_size << std::setw(7)
        << std::setprecision(2) << c.sigma << std::setw(4) << c.beam_width
        << std::setw(8)
        << (c.cache_fraction < 0 ? std::string("plan")
                                 : std::to_string(c.cache_fraction).substr(0, 4))
        << std::setw(8) << std::setprecision(3) << c.beta_hat << std::setw(11) << c.predicted
        << std::setw(10) << c.measured << std::setw(8) << c.deviation
        << std::setw(6) << (c.flagged ? "!!" : "ok") << std::setw(9)
        << (c.adjacency_wins ? "yes" : "no") << std::setw(10)
        << c.blowup_measured << std::setw(10) << c.blowup_predicted << "\n";
  }
  out.unsetf(std::ios::fixed);
}

}  // namespace blockann::bench
