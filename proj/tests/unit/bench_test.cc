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


#include <fstream>
#include <set>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "blockann/bench/artifacts.h"
#include "blockann/bench/report.h"
#include "blockann/bench/runner.h"
#include "blockann/synthetic.h"
#include "json.hpp"
#include "test_util.h"

using namespace blockann;
using namespace blockann::bench;
using blockann::testing_util::TempDir;

namespace {

struct Workspace {
  Workspace(std::size_t count, std::size_t dims, std::size_t queries = 200) {
    SyntheticSpec s;
    s.count = count;
    s.query_count = queries;
    s.dims = dims;
    s.clusters = 8;
    s.latent_dims = 8;
    s.seed = 9;
    auto c = make_clustered(s);
    save_dataset(c.base, dir / "base.fvecs", FileFormat::kFvecs);
    save_dataset(c.queries, dir / "queries.fvecs", FileFormat::kFvecs);
    base = {dir / "base.fvecs", FileFormat::kFvecs, Metric::kL2};
    query = {dir / "queries.fvecs", FileFormat::kFvecs, Metric::kL2};
  }

  BuildConfig config(std::uint32_t M = 8) const {
    BuildConfig b;
    b.graph = {16, 32, 1.2f, 1};
    b.planner.fixed_subspaces = M;
    b.planner.pq.iterations = 4;
    b.planner.nav.fraction = 0.01;
    b.tuning_queries = 20;
    b.threads = 4;
    return b;
  }

  TempDir dir;
  CorpusSpec base, query;
};

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path &p) {
  std::vector<nlohmann::json> out;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  }
  return out;
}

}  // namespace

TEST(CmdBuild, ToyCorpusManifestAndDeterminism) {
  Workspace w(1000, 16);
  auto m1 = cmd_build(w.base, w.query, w.dir / "a", w.config());
  ASSERT_EQ(m1.artifacts.size(), 5u);
  std::set<std::string> names;
  for (const auto &a : m1.artifacts) {
    names.insert(a.name);
    EXPECT_GT(a.bytes, 0u);
    EXPECT_EQ(a.bytes, std::filesystem::file_size(w.dir / "a" / a.file));
    EXPECT_EQ(a.sha256, sha256_file(w.dir / "a" / a.file));
  }
  EXPECT_EQ(names.size(), 5u);
  EXPECT_EQ(m1.tuning_query_ids.size(), 20u);
  EXPECT_NO_THROW(verify_manifest(w.dir / "a", load_manifest(w.dir / "a")));

  auto m2 = cmd_build(w.base, w.query, w.dir / "b", w.config());
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(m1.artifacts[i].sha256, m2.artifacts[i].sha256) << m1.artifacts[i].name;
  }
  EXPECT_EQ(m1.config, m2.config);
}

TEST(CmdBuild, TamperedArtifactDetected) {
  Workspace w(600, 8);
  cmd_build(w.base, std::nullopt, w.dir / "a", w.config(4));
  {
    std::fstream f(w.dir / "a" / "pq_codes.bin",
                   std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(10);
    f.put('\x7f');
  }
  EXPECT_THROW(verify_manifest(w.dir / "a", load_manifest(w.dir / "a")), Error);
}

TEST(CmdBuild, StageFailureNamesStage) {
  Workspace w(300, 8);
  auto c = w.config(4);
  c.budget_bytes = 10;  // cannot hold the codes
  try {
    cmd_build(w.base, std::nullopt, w.dir / "a", c);
    FAIL() << "expected a stage error";
  } catch (const StageError &e) {
    EXPECT_EQ(e.stage(), "plan");
  }
  CorpusSpec missing{w.dir / "nope.fvecs", FileFormat::kFvecs, Metric::kL2};
  try {
    cmd_build(missing, std::nullopt, w.dir / "b", c);
    FAIL() << "expected a stage error";
  } catch (const StageError &e) {
    EXPECT_EQ(e.stage(), "load");
  }
}

TEST(CmdBuild, HighDimensionalBlowupNearOne) {
  Workspace w(400, 768, 20);
  auto c = w.config(96);
  c.graph = {64, 64, 1.2f, 1};
  c.planner.pq.num_centroids = 64;
  auto m = cmd_build(w.base, std::nullopt, w.dir / "a", c);
  EXPECT_NEAR(m.layout.blowup_vs_flat, 1.0, 0.05);
  EXPECT_GE(m.layout.pack_count, 2u);
}

TEST(CmdGt, IdentityAndStability) {
  Workspace w(500, 8, 10);
  auto gt1 = cmd_gt(w.base, w.base, 1, w.dir / "self.bin", 2);
  for (std::size_t q = 0; q < gt1.lists.size(); ++q) {
    EXPECT_EQ(gt1.lists[q][0].id, q);
  }
  auto a = cmd_gt(w.base, w.query, 10, w.dir / "a.bin", 1);
  auto b = cmd_gt(w.base, w.query, 10, w.dir / "b.bin", 3);
  EXPECT_EQ(a.lists, b.lists);
  EXPECT_EQ(sha256_file(w.dir / "a.bin"), sha256_file(w.dir / "b.bin"));
}

TEST(LoadCorpus, LayoutReproducesVectors) {
  Workspace w(300, 12, 10);
  cmd_build(w.base, std::nullopt, w.dir / "a", w.config(4));
  auto ix = open_index(w.dir / "a");
  auto original = load_dataset(w.base.path, FileFormat::kFvecs, Metric::kL2);
  const auto &back = ix.corpus();
  ASSERT_EQ(back.count(), original.count());
  EXPECT_TRUE(std::equal(original.values().begin(), original.values().end(),
                         back.values().begin()));
}

class CmdSearch : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    w_ = new Workspace(3000, 16, 150);
    auto c = w_->config();
    c.budget_bytes = 3000 * 8 + 40000;
    cmd_build(w_->base, w_->query, w_->dir / "idx", c);
    c.layout.kind = LayoutKind::kFlat;
    cmd_build(w_->base, w_->query, w_->dir / "idx_flat", c);
    cmd_gt(w_->base, w_->query, 10, w_->dir / "gt.bin", 4);
  }
  static void TearDownTestSuite() { delete w_; }
  std::vector<BenchRow> run(const SweepSpec &s,
                            const std::filesystem::path *out = nullptr,
                            const char *index = "idx") const {
    return cmd_search(w_->dir / index, w_->query.path, FileFormat::kFvecs,
                      w_->dir / "gt.bin", s, out, nullptr);
  }
  static Workspace *w_;
};
Workspace *CmdSearch::w_ = nullptr;

TEST_F(CmdSearch, SigmaSweepRecallNonDecreasing) {
  SweepSpec s;
  s.queue_sizes = {100};
  s.sigmas = {0.25, 0.5, 1.0};
  s.cache_fractions = {0.0};
  auto rows = run(s);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_LE(rows[0].recall, rows[1].recall);
  EXPECT_LE(rows[1].recall, rows[2].recall);
}

TEST_F(CmdSearch, CacheSweepSearchReadsStrictlyDecreasing) {
  SweepSpec s;
  s.queue_sizes = {60};
  s.cache_fractions = {0.0, 0.25, 0.5, 1.0};
  auto rows = run(s);
  ASSERT_EQ(rows.size(), 4u);
  for (std::size_t i = 1; i < 4; ++i) {
    EXPECT_LT(rows[i].search_reads_mean, rows[i - 1].search_reads_mean);
    EXPECT_GT(rows[i].beta_hat, rows[i - 1].beta_hat);
  }
  EXPECT_EQ(rows[3].search_reads_mean, 0.0);
}

TEST_F(CmdSearch, TuningQueriesExcluded) {
  SweepSpec s;
  auto rows = run(s);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].excluded_tuning_queries, 20u);
  EXPECT_EQ(rows[0].queries, 130u);
}

TEST_F(CmdSearch, ThreadSweepKeepsMachineIndependentColumns) {
  SweepSpec s;
  s.threads = {1, 2, 4, 8};
  auto rows = run(s);
  ASSERT_EQ(rows.size(), 4u);
  for (const auto &r : rows) {
    EXPECT_EQ(r.recall, rows[0].recall);
    EXPECT_EQ(r.ios_mean, rows[0].ios_mean);
    EXPECT_GT(r.qps, 0.0);
  }
}

TEST_F(CmdSearch, ReportsAreReproducible) {
  TempDir out;
  const auto path = out / "r.jsonl";
  SweepSpec s;
  s.queue_sizes = {40, 80};
  s.cache_fractions = {std::nullopt, 0.3};
  auto a = run(s, &path);
  auto b = run(s, &path);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].recall, b[i].recall);
    EXPECT_EQ(a[i].ios_mean, b[i].ios_mean);
    EXPECT_EQ(a[i].config, b[i].config);
  }
  auto lines = read_jsonl(path);
  std::size_t summaries = 0, queries = 0;
  for (const auto &j : lines) {
    if (j.at("type") == "summary") {
      ++summaries;
      EXPECT_TRUE(j.contains("config"));
    } else {
      ++queries;
      EXPECT_TRUE(j.contains("latency_ns"));
      EXPECT_TRUE(j.contains("search_stage_reads"));
    }
  }
  EXPECT_EQ(summaries, 8u);
  EXPECT_EQ(queries, 8u * 130);
}

TEST_F(CmdSearch, AnalyzeAgainstModel) {
  TempDir out;
  const auto path = out / "cache.jsonl";
  SweepSpec s;
  s.queue_sizes = {100};
  s.cache_fractions = {0.0, 1.0};
  // The model assumes one read per visited candidate, as in the flat layout.
  run(s, &path, "idx_flat");
  const std::vector<std::filesystem::path> files{path};
  auto checks = cmd_analyze(files);
  ASSERT_EQ(checks.size(), 2u);
  // No cache: nothing predicted, nothing measured.
  EXPECT_EQ(checks[0].beta_hat, 0.0);
  EXPECT_EQ(checks[0].predicted, 0.0);
  EXPECT_NEAR(checks[0].measured, 0.0, 1e-12);
  // Full cache: every access hits, so the model predicts 1 - sigma.
  EXPECT_DOUBLE_EQ(checks[1].beta_hat, 1.0);
  EXPECT_DOUBLE_EQ(checks[1].predicted, 0.5);
  EXPECT_LE(std::abs(checks[1].measured - 0.5) / 0.5, kModelTolerance);
  EXPECT_FALSE(checks[1].flagged);
}

TEST(CmdAnalyze, MalformedReportListsMissingFields) {
  TempDir dir;
  {
    std::ofstream out(dir / "bad.jsonl");
    out << R"({"type":"summary","engine":"two_stage","queue_size":100})" << "\n";
  }
  const std::vector<std::filesystem::path> files{dir / "bad.jsonl"};
  try {
    cmd_analyze(files);
    FAIL() << "expected an error";
  } catch (const Error &e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("sigma"), std::string::npos) << msg;
    EXPECT_NE(msg.find("beta_hat"), std::string::npos) << msg;
    EXPECT_NE(msg.find("bad.jsonl"), std::string::npos) << msg;
  }
}

TEST(EngineNames, RoundTrip) {
  EXPECT_EQ(parse_engine("two_stage"), Engine::kTwoStage);
  EXPECT_EQ(parse_engine("baseline"), Engine::kBaseline);
  EXPECT_EQ(to_string(Engine::kBaseline), "baseline");
  EXPECT_THROW(parse_engine("hnsw"), Error);
}
