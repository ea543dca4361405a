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

#include "blockann/bench/artifacts.h"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "blockann/ground_truth.h"
#include "blockann/io.h"

namespace blockann::bench {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char *kGraphFile = "graph.bin";
constexpr const char *kCodebookFile = "pq_codebook.bin";
constexpr const char *kCodesFile = "pq_codes.bin";
constexpr const char *kLayoutFile = "layout.bin";
constexpr const char *kPlanFile = "plan.bin";

template <typename Fn>
auto run_stage(const char *name, Fn &&fn) {
  try {
    return fn();
  } catch (const StageError &) {
    throw;
  } catch (const std::exception &e) {
    throw StageError(name, e.what());
  }
}

// Planner queries: rows of the query file picked by seed, or base rows with
// Gaussian noise at a tenth of the per-dimension spread.
VectorDataset tuning_set(const VectorDataset &base,
                         const std::optional<VectorDataset> &queries,
                         const BuildConfig &config,
                         std::vector<node_id> *ids_out) {
  const VectorDataset &src = queries ? *queries : base;
  const std::size_t n =
      std::min<std::size_t>(config.tuning_queries, src.count());
  if (n == 0) throw Error("no tuning queries available");
  auto picked = sample_dataset(src, static_cast<double>(n) / src.count(),
                               config.tuning_seed);
  if (queries) {
    *ids_out = picked.id_map;
    return std::move(picked.data);
  }
  const std::size_t d = base.dims();
  std::vector<double> mean(d, 0.0), sq(d, 0.0);
  for (std::size_t i = 0; i < base.count(); ++i) {
    const auto r = base.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      mean[j] += r[j];
      sq[j] += double{r[j]} * r[j];
    }
  }
  double spread = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double m = mean[j] / base.count();
    spread += std::max(0.0, sq[j] / base.count() - m * m);
  }
  const float sd = static_cast<float>(0.1 * std::sqrt(spread / d));
  std::mt19937_64 rng(config.tuning_seed);
  std::normal_distribution<float> noise(0.0f, sd);
  std::vector<float> values(picked.data.values().begin(),
                            picked.data.values().end());
  for (float &v : values) v += noise(rng);
  return VectorDataset(n, d, ScalarType::kF32, base.metric(),
                       std::move(values));
}

ArtifactEntry describe(const fs::path &dir, const std::string &name,
                       const char *file) {
  ArtifactEntry e;
  e.name = name;
  e.file = file;
  e.bytes = fs::file_size(dir / file);
  e.sha256 = sha256_file(dir / file);
  return e;
}

json layout_json(const LayoutStats &s) {
  return {{"bytes", s.bytes},
          {"flat_bytes", s.flat_bytes},
          {"blowup_vs_flat", s.blowup_vs_flat},
          {"avg_packed", s.avg_packed},
          {"nodes_per_block", s.nodes_per_block},
          {"pack_count", s.pack_count}};
}

}  // namespace

std::string sha256_file(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string() + " for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(
      EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 unavailable");
  }
  std::vector<char> buf(1 << 20);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    const auto got = in.gcount();
    if (got > 0) EVP_DigestUpdate(ctx.get(), buf.data(), got);
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  static const char *hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

json to_json(const BuildConfig &c) {
  const auto &p = c.planner;
  json j;
  j["graph"] = {{"max_degree", c.graph.max_degree},
                {"build_queue", c.graph.build_queue},
                {"alpha", c.graph.alpha},
                {"seed", c.graph.seed}};
  j["layout"] = {{"kind", std::string(to_string(c.layout.kind))},
                 {"block_size", c.layout.block_size},
                 {"pack_count", c.layout.pack_count
                                    ? json(*c.layout.pack_count)
                                    : json("fill")}};
  j["planner"] = {
      {"pq_sample_fraction", p.pq_sample_fraction},
      {"pq_min_sample", p.pq_min_sample},
      {"sample_seed", p.sample_seed},
      {"candidates", p.candidates},
      {"fixed_subspaces",
       p.fixed_subspaces ? json(*p.fixed_subspaces) : json(nullptr)},
      {"pq", {{"num_centroids", p.pq.num_centroids},
              {"iterations", p.pq.iterations},
              {"seed", p.pq.seed}}},
      {"sample_graph", {{"max_degree", p.sample_graph.max_degree},
                        {"build_queue", p.sample_graph.build_queue},
                        {"alpha", p.sample_graph.alpha},
                        {"seed", p.sample_graph.seed}}},
      {"proxy", {{"k", p.proxy.k},
                 {"recall_target", p.proxy.recall_target},
                 {"sigma", p.proxy.sigma},
                 {"queue_ladder", p.proxy.queue_ladder}}},
      {"nav", {{"fraction", p.nav.fraction},
               {"seed", p.nav.seed},
               {"max_degree", p.nav.max_degree},
               {"build_queue", p.nav.build_queue},
               {"search_queue", p.nav.search_queue},
               {"entry_count", p.nav.entry_count}}}};
  j["budget_bytes"] = c.budget_bytes ? json(*c.budget_bytes) : json(nullptr);
  j["budget_fraction"] = c.budget_fraction;
  j["tuning_queries"] = c.tuning_queries;
  j["tuning_seed"] = c.tuning_seed;
  return j;
}

json Manifest::to_json() const {
  json arts = json::array();
  for (const auto &a : artifacts) {
    arts.push_back({{"name", a.name},
                    {"file", a.file},
                    {"bytes", a.bytes},
                    {"sha256", a.sha256}});
  }
  return {{"format", "blockann-manifest"},
          {"version", 1},
          {"count", count},
          {"dims", dims},
          {"config", config},
          {"artifacts", arts},
          {"layout", layout_json(layout)},
          {"query_file_sha256", query_file_sha256},
          {"tuning_query_ids", tuning_query_ids}};
}

Manifest Manifest::from_json(const json &j) {
  if (j.value("format", "") != "blockann-manifest") {
    throw Error("not a blockann manifest");
  }
  Manifest m;
  m.config = j.at("config");
  m.count = j.at("count").get<std::uint64_t>();
  m.dims = j.at("dims").get<std::uint32_t>();
  for (const auto &a : j.at("artifacts")) {
    m.artifacts.push_back({a.at("name").get<std::string>(),
                           a.at("file").get<std::string>(),
                           a.at("bytes").get<std::uint64_t>(),
                           a.at("sha256").get<std::string>()});
  }
  const auto &l = j.at("layout");
  m.layout.bytes = l.at("bytes").get<std::uint64_t>();
  m.layout.flat_bytes = l.at("flat_bytes").get<std::uint64_t>();
  m.layout.blowup_vs_flat = l.at("blowup_vs_flat").get<double>();
  m.layout.avg_packed = l.at("avg_packed").get<double>();
  m.layout.nodes_per_block = l.at("nodes_per_block").get<std::uint32_t>();
  m.layout.pack_count = l.at("pack_count").get<std::uint32_t>();
  m.query_file_sha256 = j.value("query_file_sha256", "");
  m.tuning_query_ids =
      j.value("tuning_query_ids", std::vector<node_id>{});
  return m;
}

Manifest cmd_build(const CorpusSpec &corpus,
                   const std::optional<CorpusSpec> &queries,
                   const fs::path &out_dir, const BuildConfig &config) {
  run_stage("prepare", [&] { return fs::create_directories(out_dir); });
  const VectorDataset ds = run_stage("load", [&] {
    return load_dataset(corpus.path, corpus.format, corpus.metric);
  });
  Manifest m;
  m.count = ds.count();
  m.dims = static_cast<std::uint32_t>(ds.dims());
  m.config = to_json(config);
  m.config["corpus"] = {{"path", corpus.path.string()},
                        {"format", std::string(to_string(corpus.format))},
                        {"metric", std::string(to_string(corpus.metric))}};

  const VectorDataset tuning = run_stage("tuning", [&] {
    std::optional<VectorDataset> qs;
    if (queries) {
      qs = load_dataset(queries->path, queries->format, corpus.metric);
      m.query_file_sha256 = sha256_file(queries->path);
    }
    return tuning_set(ds, qs, config, &m.tuning_query_ids);
  });

  const ProximityGraph g =
      run_stage("graph", [&] { return build_graph(ds, config.graph); });

  const std::uint64_t budget =
      config.budget_bytes
          ? *config.budget_bytes
          : static_cast<std::uint64_t>(config.budget_fraction *
                                       static_cast<double>(ds.count()) *
                                       static_cast<double>(ds.vector_bytes()));
  m.config["resolved_budget_bytes"] = budget;
  PlannerConfig pc = config.planner;
  pc.threads = config.threads;
  PlanOutcome plan = run_stage("plan", [&] {
    return plan_memory(ds, tuning, budget, g, config.layout, pc);
  });

  BlockSpec spec = config.layout;
  spec.pack_count = resolve_pack_count(spec, ds.vector_bytes(), g.max_degree());
  m.layout = run_stage("layout", [&] {
    return write_layout(g, ds, spec, plan.packed, out_dir / kLayoutFile);
  });

  run_stage("save", [&] {
    save_graph(g, out_dir / kGraphFile);
    save_codebook(plan.codebook, out_dir / kCodebookFile);
    save_codes(plan.codes, out_dir / kCodesFile);
    save_plan(plan.plan, out_dir / kPlanFile);
    m.artifacts = {describe(out_dir, "graph", kGraphFile),
                   describe(out_dir, "pq_codebook", kCodebookFile),
                   describe(out_dir, "pq_codes", kCodesFile),
                   describe(out_dir, "layout", kLayoutFile),
                   describe(out_dir, "plan", kPlanFile)};
    std::ofstream out(out_dir / kManifestFile);
    out << m.to_json().dump(2) << "\n";
    if (!out) throw Error("cannot write manifest");
    return 0;
  });
  return m;
}

Manifest load_manifest(const fs::path &dir) {
  std::ifstream in(dir / kManifestFile);
  if (!in) throw Error("no manifest in " + dir.string());
  return Manifest::from_json(json::parse(in));
}

void verify_manifest(const fs::path &dir, const Manifest &m) {
  std::string bad;
  for (const auto &a : m.artifacts) {
    const fs::path p = dir / a.file;
    if (!fs::exists(p) || fs::file_size(p) != a.bytes ||
        sha256_file(p) != a.sha256) {
      bad += " " + a.file;
    }
  }
  if (!bad.empty()) throw Error("artifacts do not match manifest:" + bad);
}

GroundTruth cmd_gt(const CorpusSpec &corpus, const CorpusSpec &queries,
                   std::uint32_t k, const fs::path &out, std::size_t threads) {
  const auto base = load_dataset(corpus.path, corpus.format, corpus.metric);
  const auto qs = load_dataset(queries.path, queries.format, corpus.metric);
  auto gt = compute_ground_truth(base, qs, k, threads);
  save_ground_truth(gt, out);
  return gt;
}

VectorDataset load_corpus_from_layout(const BlockSource &layout) {
  const LayoutHeader &h = layout.header();
  std::vector<float> values;
  values.reserve(h.count * h.dims);
  AlignedBuffer buf(h.block_size);
  NodeBlock nb;
  const std::uint32_t per_block = h.nodes_per_block();
  for (std::uint64_t b = 0; b < h.num_blocks(); ++b) {
    layout.read(b, buf.span());
    for (std::uint32_t s = 0; s < per_block; ++s) {
      const std::uint64_t id = b * per_block + s;
      if (id >= h.count) break;
      decode_node(h, buf.span(), static_cast<node_id>(id), nb);
      values.insert(values.end(), nb.vector.begin(), nb.vector.end());
    }
  }
  // Stored cosine vectors are already unit length; renormalising could
  // perturb the last bits, and the negated inner product is the same metric.
  const Metric m = h.metric == Metric::kCosine ? Metric::kIP : h.metric;
  return VectorDataset(h.count, h.dims, h.scalar, m, std::move(values));
}

LoadedIndex open_index(const fs::path &dir, bool direct_io) {
  LoadedIndex ix;
  ix.dir = dir;
  ix.manifest = load_manifest(dir);
  ix.layout = std::make_unique<LayoutFile>(dir / kLayoutFile, direct_io);
  ix.graph = load_graph(dir / kGraphFile);
  ix.codebook = load_codebook(dir / kCodebookFile);
  ix.codes = load_codes(dir / kCodesFile, ix.codebook.num_subspaces);
  ix.plan = load_plan(dir / kPlanFile);
  const auto &h = ix.layout->header();
  if (ix.graph.size() != h.count || ix.codes.count() != h.count ||
      ix.codebook.num_subspaces != ix.plan.num_subspaces) {
    throw Error("artifacts in " + dir.string() + " are inconsistent");
  }
  return ix;
}

const VectorDataset &LoadedIndex::corpus() {
  if (!corpus_) corpus_ = load_corpus_from_layout(*layout);
  return *corpus_;
}

const NavIndex &LoadedIndex::nav() {
  if (!nav_) {
    const auto &ds = corpus();
    nav_ = plan.nav.fraction * static_cast<double>(ds.count()) >= 1.0
               ? NavIndex::build(ds, plan.nav)
               : NavIndex();
  }
  return *nav_;
}

const std::vector<node_id> &LoadedIndex::ranking() {
  if (!ranking_) {
    ranking_ = rank_by_nav_distance(corpus(), nav(), graph.entry());
  }
  return *ranking_;
}

}  // namespace blockann::bench
