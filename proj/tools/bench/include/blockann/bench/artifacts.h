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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "blockann/dataset.h"
#include "blockann/graph.h"
#include "blockann/ground_truth.h"
#include "blockann/layout.h"
#include "blockann/nav_index.h"
#include "blockann/planner.h"
#include "blockann/pq.h"

namespace blockann::bench {

// Raised by cmd_build; names the stage that failed.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string &what)
      : Error("stage '" + stage + "' failed: " + what),
        stage_(std::move(stage)) {}
  const std::string &stage() const { return stage_; }

 private:
  std::string stage_;
};

struct CorpusSpec {
  std::filesystem::path path;
  FileFormat format = FileFormat::kFvecs;
  Metric metric = Metric::kL2;
};

struct BuildConfig {
  BuildParams graph;
  BlockSpec layout;
  PlannerConfig planner;
  // Memory budget; when unset, budget_fraction of the corpus bytes.
  std::optional<std::uint64_t> budget_bytes;
  double budget_fraction = 0.2;
  // Planner tuning queries, drawn from the query file when one is given and
  // from perturbed base vectors otherwise.
  std::uint32_t tuning_queries = 100;
  std::uint64_t tuning_seed = 17;
  std::size_t threads = 1;
};

nlohmann::json to_json(const BuildConfig &c);

struct ArtifactEntry {
  std::string name;
  std::string file;
  std::uint64_t bytes = 0;
  std::string sha256;
};

struct Manifest {
  nlohmann::json config;
  std::vector<ArtifactEntry> artifacts;
  LayoutStats layout;
  std::uint64_t count = 0;
  std::uint32_t dims = 0;
  std::string query_file_sha256;         // empty without a query file
  std::vector<node_id> tuning_query_ids;  // into the query file

  nlohmann::json to_json() const;
  static Manifest from_json(const nlohmann::json &j);
};

inline constexpr const char *kManifestFile = "manifest.json";

std::string sha256_file(const std::filesystem::path &path);

// Builds graph, PQ, plan and layout for the corpus into out_dir and writes
// the manifest. Each stage failure surfaces as a StageError.
Manifest cmd_build(const CorpusSpec &corpus,
                   const std::optional<CorpusSpec> &queries,
                   const std::filesystem::path &out_dir,
                   const BuildConfig &config);

Manifest load_manifest(const std::filesystem::path &dir);

// Recomputes every artifact hash; throws listing mismatches.
void verify_manifest(const std::filesystem::path &dir, const Manifest &m);

// Exact top-k for every query, written in the ground-truth format.
GroundTruth cmd_gt(const CorpusSpec &corpus, const CorpusSpec &queries,
                   std::uint32_t k, const std::filesystem::path &out,
                   std::size_t threads = 1);

// Artifacts of one build opened for querying.
struct LoadedIndex {
  std::filesystem::path dir;
  Manifest manifest;
  std::unique_ptr<LayoutFile> layout;
  ProximityGraph graph;
  PQCodebook codebook;
  PQCodes codes;
  MemoryPlan plan;

  // Corpus vectors decoded from the layout, loaded on first use.
  const VectorDataset &corpus();
  // Navigation index rebuilt from the plan parameters, on first use.
  const NavIndex &nav();
  // All nodes by distance to the navigation index, on first use.
  const std::vector<node_id> &ranking();

 private:
  std::optional<VectorDataset> corpus_;
  std::optional<NavIndex> nav_;
  std::optional<std::vector<node_id>> ranking_;
};

LoadedIndex open_index(const std::filesystem::path &dir,
                       bool direct_io = false);

// Every vector stored in the layout, in id order.
VectorDataset load_corpus_from_layout(const BlockSource &layout);

}  // namespace blockann::bench
