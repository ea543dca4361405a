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


#include <algorithm>
#include <memory>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "blockann/engine.h"
#include "blockann/graph.h"
#include "blockann/ground_truth.h"
#include "blockann/layout.h"
#include "blockann/nav_index.h"
#include "blockann/pq.h"
#include "blockann/synthetic.h"
#include "reference_search.h"
#include "test_util.h"

using namespace blockann;
using blockann::testing_util::random_dataset;
using blockann::testing_util::TempDir;

namespace {

std::vector<node_id> ids_of(const std::vector<Neighbor> &v) {
  std::vector<node_id> out;
  for (const auto &n : v) out.push_back(n.id);
  return out;
}

std::set<node_id> id_set(const std::vector<Neighbor> &v) {
  auto ids = ids_of(v);
  return {ids.begin(), ids.end()};
}

struct Artifacts {
  explicit Artifacts(const BlockSpec &spec, std::size_t n = 1000,
                     std::size_t dims = 32, std::uint64_t seed = 3) {
    SyntheticSpec s;
    s.count = n;
    s.query_count = 100;
    s.dims = dims;
    s.clusters = 8;
    s.latent_dims = 8;
    s.seed = seed;
    corpus = make_clustered(s);
    graph = build_graph(corpus.base, {16, 32, 1.2f, 1});
    PQTrainParams p;
    p.num_subspaces = 8;
    codebook = train_pq(corpus.base, p);
    codes = encode(codebook, corpus.base);
    build_layout(graph, corpus.base, spec, dir / "layout.bin", &packed);
    layout = std::make_unique<LayoutFile>(dir / "layout.bin");
    gt = compute_ground_truth(corpus.base, corpus.queries, 10, 4);
  }

  SearchIndex index(const GraphCache *gc = nullptr,
                    const NodeCache *nc = nullptr) const {
    SearchIndex ix;
    ix.layout = layout.get();
    ix.codebook = &codebook;
    ix.codes = &codes;
    ix.entry = graph.entry();
    ix.graph_cache = gc;
    ix.node_cache = nc;
    ix.io = io.get();
    return ix;
  }

  std::vector<node_id> all_ids() const {
    std::vector<node_id> v(corpus.base.count());
    std::iota(v.begin(), v.end(), 0);
    return v;
  }

  TempDir dir;
  SyntheticCorpus corpus;
  ProximityGraph graph;
  PQCodebook codebook;
  PQCodes codes;
  PackedLists packed;
  std::unique_ptr<LayoutFile> layout;
  GroundTruth gt;
  std::unique_ptr<IoService> io = std::make_unique<IoService>(4);
};

SearchParams params(std::uint32_t D, float sigma, std::uint32_t W = 1,
                    IoMode mode = IoMode::kSync) {
  SearchParams p;
  p.k = 10;
  p.queue_size = D;
  p.sigma = sigma;
  p.beam_width = W;
  p.io_mode = mode;
  return p;
}

class EngineTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    replicated_ = new Artifacts(BlockSpec{});
    BlockSpec flat;
    flat.kind = LayoutKind::kFlat;
    flat_ = new Artifacts(flat);
  }
  static void TearDownTestSuite() {
    delete replicated_;
    delete flat_;
  }
  static Artifacts *replicated_;
  static Artifacts *flat_;
};
Artifacts *EngineTest::replicated_ = nullptr;
Artifacts *EngineTest::flat_ = nullptr;

}  // namespace

TEST(SearchParamsTest, RefineCountRoundsUp) {
  EXPECT_EQ(params(100, 0.5f).refine_count(), 50u);
  EXPECT_EQ(params(15, 0.5f).refine_count(), 8u);
  EXPECT_EQ(params(20, 0.25f).refine_count(), 5u);
  EXPECT_EQ(params(10, 1.0f).refine_count(), 10u);
  EXPECT_EQ(params(30, 0.1f).refine_count(), 3u);
}

TEST(SearchParamsTest, Validation) {
  EXPECT_NO_THROW(params(100, 0.5f).validate());
  auto p = params(100, 0.5f);
  p.k = 0;
  EXPECT_THROW(p.validate(), Error);
  EXPECT_THROW(params(5, 0.5f).validate(), Error);  // D < k
  EXPECT_THROW(params(100, 0.0f).validate(), Error);
  EXPECT_THROW(params(100, 1.5f).validate(), Error);
  EXPECT_THROW(params(100, 0.5f, 0).validate(), Error);
  // A refinement set smaller than k is allowed.
  EXPECT_NO_THROW(params(20, 0.25f).validate());
}

TEST(Expand, Examples) {
  auto ds = random_dataset(300, 16, 40);
  PQTrainParams p;
  p.num_subspaces = 4;
  auto cb = train_pq(ds, p);
  auto codes = encode(cb, ds);
  QueryLut lut(cb, ds.row(0));
  SeenSet seen;
  seen.reset(300);
  NearestList list(10);
  for (node_id i = 100; i < 105; ++i) {
    seen.insert(i);
    list.insert(i, lut.distance(codes.code(i)));
  }
  const auto before = std::vector<NearestList::Entry>(list.begin(), list.end());
  expand(lut, codes, {}, seen, list);
  EXPECT_EQ(list.size(), before.size());

  // Node 0 is the query's own code, closer than anything in the list.
  const node_id zero[] = {0};
  expand(lut, codes, zero, seen, list);
  EXPECT_EQ(list[0].id, 0u);

  // 100 ids into a 10-slot list keep the top 10 of the union.
  std::vector<node_id> adj(100);
  std::iota(adj.begin(), adj.end(), 150);
  expand(lut, codes, adj, seen, list);
  std::vector<Neighbor> all;
  for (node_id i : {0u, 100u, 101u, 102u, 103u, 104u}) {
    all.push_back({i, lut.distance(codes.code(i))});
  }
  for (node_id i : adj) all.push_back({i, lut.distance(codes.code(i))});
  std::sort(all.begin(), all.end(), closer);
  ASSERT_EQ(list.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(list[i].id, all[i].id);

  // Seen ids are not inserted twice.
  expand(lut, codes, adj, seen, list);
  EXPECT_EQ(list.size(), 10u);
}

TEST_F(EngineTest, MatchesInMemoryReference) {
  for (const Artifacts *a : {replicated_, flat_}) {
    testing_util::ReferenceTwoStage ref(a->graph, a->corpus.base, a->codebook,
                                        a->codes, a->packed);
    Searcher s(a->index());
    for (float sigma : {1.0f, 0.5f}) {
      for (std::size_t q = 0; q < a->corpus.queries.count(); ++q) {
        const auto query = a->corpus.queries.row(q);
        std::size_t ref_reads = 0;
        auto expect = ref.search(query, 10, 40, sigma, &ref_reads);
        auto got = s.search_two_stage(query, params(40, sigma));
        EXPECT_EQ(id_set(got.neighbors), id_set(expect)) << "query " << q;
        EXPECT_EQ(got.neighbors, expect);
        EXPECT_EQ(got.stats.total_reads(), ref_reads);
      }
    }
  }
}

TEST_F(EngineTest, FullGraphCacheMovesAllReadsToRefinement) {
  const auto *a = replicated_;
  GraphCache gc(a->graph, a->all_ids());
  Searcher s(a->index(&gc));
  for (std::size_t q = 0; q < 20; ++q) {
    auto r = s.search_two_stage(a->corpus.queries.row(q), params(40, 0.5f));
    EXPECT_EQ(r.stats.search_stage_reads, 0u);
    EXPECT_EQ(r.stats.refinement_reads, 20u);
    EXPECT_GT(r.stats.cache_hits, 0u);
  }
}

TEST_F(EngineTest, UnpackedTwoStageAtFullSigmaEqualsBaseline) {
  const auto *a = flat_;
  Searcher s(a->index());
  for (std::size_t q = 0; q < a->corpus.queries.count(); ++q) {
    const auto query = a->corpus.queries.row(q);
    auto two = s.search_two_stage(query, params(30, 1.0f));
    auto base = s.search_baseline(query, params(30, 1.0f));
    EXPECT_EQ(id_set(two.neighbors), id_set(base.neighbors));
  }
}

TEST(EngineBaseline, CompleteGraphFullQueueIsBruteForce) {
  TempDir dir;
  auto ds = random_dataset(60, 8, 41);
  ProximityGraph g(60, 59);
  for (node_id u = 0; u < 60; ++u) {
    std::vector<node_id> adj;
    for (node_id v = 0; v < 60; ++v) {
      if (v != u) adj.push_back(v);
    }
    g.set_neighbors(u, adj);
  }
  PQTrainParams p;
  p.num_subspaces = 2;
  p.num_centroids = 16;
  auto cb = train_pq(ds, p);
  auto codes = encode(cb, ds);
  BlockSpec flat;
  flat.kind = LayoutKind::kFlat;
  build_layout(g, ds, flat, dir / "f.bin");
  LayoutFile f(dir / "f.bin");
  SearchIndex ix{&f, &cb, &codes, 0, nullptr, nullptr, nullptr, nullptr};
  Searcher s(ix);
  auto qs = random_dataset(20, 8, 42);
  for (std::size_t q = 0; q < 20; ++q) {
    auto r = s.search_baseline(qs.row(q), params(60, 1.0f));
    EXPECT_EQ(r.neighbors, brute_force_topk(ds, qs.row(q), 10));
    EXPECT_EQ(r.stats.search_stage_reads, 60u);
  }
}

TEST_F(EngineTest, BaselineFullyCachedDoesNoIo) {
  const auto *a = flat_;
  GraphCache gc(a->graph, a->all_ids());
  NodeCache nc(a->corpus.base, a->all_ids());
  Searcher cached(a->index(&gc, &nc));
  Searcher disk(a->index());
  for (std::size_t q = 0; q < 20; ++q) {
    const auto query = a->corpus.queries.row(q);
    auto r = cached.search_baseline(query, params(40, 1.0f));
    EXPECT_EQ(r.stats.total_reads(), 0u);
    EXPECT_EQ(r.neighbors, disk.search_baseline(query, params(40, 1.0f)).neighbors);
  }
}

TEST_F(EngineTest, RepeatQueryIsDeterministic) {
  const auto *a = replicated_;
  Searcher s(a->index());
  const auto query = a->corpus.queries.row(7);
  for (int engine = 0; engine < 2; ++engine) {
    auto run = [&] {
      return engine == 0 ? s.search_two_stage(query, params(50, 0.5f, 4))
                         : s.search_baseline(query, params(50, 0.5f, 4));
    };
    auto r1 = run();
    auto r2 = run();
    EXPECT_EQ(r1.neighbors, r2.neighbors);
    EXPECT_EQ(r1.stats, r2.stats);
    EXPECT_EQ(r1.visited, r2.visited);
  }
}

TEST_F(EngineTest, DeterministicAsyncMatchesSync) {
  for (const Artifacts *a : {replicated_, flat_}) {
    Searcher s(a->index());
    for (std::uint32_t W : {1u, 4u, 8u}) {
      for (std::size_t q = 0; q < a->corpus.queries.count(); ++q) {
        const auto query = a->corpus.queries.row(q);
        auto sync = s.search_two_stage(query, params(40, 0.5f, W));
        auto det = s.search_two_stage(
            query, params(40, 0.5f, W, IoMode::kAsyncDeterministic));
        EXPECT_EQ(sync.neighbors, det.neighbors);
        EXPECT_EQ(sync.stats, det.stats);
        auto bsync = s.search_baseline(query, params(40, 1.0f, W));
        auto bdet = s.search_baseline(
            query, params(40, 1.0f, W, IoMode::kAsyncDeterministic));
        EXPECT_EQ(bsync.neighbors, bdet.neighbors);
        EXPECT_EQ(bsync.stats, bdet.stats);
      }
    }
  }
}

TEST_F(EngineTest, SingleBeamAsyncReadsLikeSync) {
  const auto *a = replicated_;
  Searcher s(a->index());
  for (std::size_t q = 0; q < 30; ++q) {
    const auto query = a->corpus.queries.row(q);
    auto sync = s.search_two_stage(query, params(40, 0.5f, 1));
    auto async = s.search_two_stage(query, params(40, 0.5f, 1, IoMode::kAsync));
    EXPECT_EQ(sync.stats, async.stats);
    EXPECT_EQ(sync.neighbors, async.neighbors);
  }
}

TEST_F(EngineTest, CompletionOrderRecallCloseToSync) {
  const auto *a = replicated_;
  Searcher s(a->index());
  double sync_recall = 0, async_recall = 0;
  const std::size_t nq = a->corpus.queries.count();
  for (std::size_t q = 0; q < nq; ++q) {
    const auto query = a->corpus.queries.row(q);
    auto sync = s.search_two_stage(query, params(40, 0.5f, 8));
    auto async = s.search_two_stage(query, params(40, 0.5f, 8, IoMode::kAsync));
    sync_recall += compute_recall(ids_of(sync.neighbors), a->gt.lists[q], 10);
    async_recall += compute_recall(ids_of(async.neighbors), a->gt.lists[q], 10);
  }
  EXPECT_NEAR(async_recall / nq, sync_recall / nq, 0.01);
}

TEST_F(EngineTest, RefineBatchExamples) {
  const auto *a = replicated_;
  std::vector<node_id> cached_ids(100);
  std::iota(cached_ids.begin(), cached_ids.end(), 0);
  NodeCache nc(*a->layout, cached_ids);
  Searcher s(a->index(nullptr, &nc));
  const auto query = a->corpus.queries.row(0);
  for (IoMode mode : {IoMode::kSync, IoMode::kAsync, IoMode::kAsyncDeterministic}) {
    IOStats st;
    EXPECT_TRUE(s.refine_batch(query, {}, mode, &st).empty());
    EXPECT_EQ(st.refinement_reads, 0u);

    std::vector<node_id> in_cache{3, 50, 99};
    auto r = s.refine_batch(query, in_cache, mode, &st);
    EXPECT_EQ(st.refinement_reads, 0u);
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_EQ(r[i].distance,
                distance(Metric::kL2, query, a->corpus.base.row(in_cache[i])));
    }

    std::vector<node_id> ids;
    for (node_id i = 0; i < 50; ++i) ids.push_back(200 + 13 * i);
    r = s.refine_batch(query, ids, mode, &st);
    EXPECT_EQ(st.refinement_reads, 50u);
    ASSERT_EQ(r.size(), 50u);
    for (std::size_t i = 0; i < 50; ++i) {
      EXPECT_EQ(r[i].id, ids[i]);
      EXPECT_EQ(r[i].distance,
                distance(Metric::kL2, query, a->corpus.base.row(ids[i])));
    }
  }
}

TEST_F(EngineTest, AccountingInvariants) {
  const auto *a = replicated_;
  std::vector<node_id> half(a->corpus.base.count() / 2);
  std::iota(half.begin(), half.end(), 0);
  GraphCache gc(a->graph, half);
  Searcher s(a->index(&gc));
  for (std::uint32_t D : {20u, 60u, 100u}) {
    for (std::size_t q = 0; q < 30; ++q) {
      auto p = params(D, 0.5f, 4);
      auto r = s.search_two_stage(a->corpus.queries.row(q), p);
      EXPECT_GE(r.visited, D);
      EXPECT_LE(r.stats.search_stage_reads + r.stats.cache_hits, r.visited);
      EXPECT_LE(r.stats.refinement_reads, p.refine_count());
      EXPECT_EQ(r.neighbors.size(), 10u);
      EXPECT_TRUE(std::is_sorted(r.neighbors.begin(), r.neighbors.end(), closer));
    }
  }
}

TEST_F(EngineTest, RefinementMonotoneOnFixedSnapshot) {
  const auto *a = replicated_;
  Searcher s(a->index());
  for (std::size_t q = 0; q < 50; ++q) {
    const auto query = a->corpus.queries.row(q);
    s.search_two_stage(query, params(60, 1.0f));
    std::vector<node_id> snapshot;
    for (const auto &e : s.approximate_list()) snapshot.push_back(e.id);
    double prev = -1.0;
    for (double sigma : {0.25, 0.5, 1.0}) {
      const std::size_t n = std::size_t(std::ceil(sigma * snapshot.size()));
      std::vector<Neighbor> exact;
      for (std::size_t i = 0; i < n; ++i) {
        exact.push_back({snapshot[i],
                         distance(Metric::kL2, query, a->corpus.base.row(snapshot[i]))});
      }
      std::sort(exact.begin(), exact.end(), closer);
      if (exact.size() > 10) exact.resize(10);
      const double rec = compute_recall(ids_of(exact), a->gt.lists[q], 10);
      EXPECT_GE(rec, prev);
      prev = rec;
    }
  }
}

TEST_F(EngineTest, NavigationEntryPoints) {
  const auto *a = replicated_;
  NavParams np;
  np.fraction = 0.02;
  auto nav = NavIndex::build(a->corpus.base, np);
  auto ix = a->index();
  ix.nav = &nav;
  Searcher s(ix);
  double rec = 0;
  for (std::size_t q = 0; q < 50; ++q) {
    auto p = params(40, 0.5f);
    p.use_nav = true;
    auto r = s.search_two_stage(a->corpus.queries.row(q), p);
    EXPECT_GT(r.stats.nav_hops, 0u);
    rec += compute_recall(ids_of(r.neighbors), a->gt.lists[q], 10);
  }
  EXPECT_GT(rec / 50, 0.8);
}

TEST_F(EngineTest, MismatchedArtifactsRejected) {
  const auto *a = replicated_;
  PQCodes short_codes(8, std::vector<std::uint8_t>(8 * 10));
  auto ix = a->index();
  ix.codes = &short_codes;
  EXPECT_THROW(Searcher{ix}, Error);
  Searcher s(a->index());
  std::vector<float> wrong(31, 0.0f);
  EXPECT_THROW(s.search_two_stage(wrong, params(40, 0.5f)), Error);
}

namespace {

class FailingSource final : public BlockSource {
 public:
  explicit FailingSource(const BlockSource &inner) : inner_(inner) {}
  const LayoutHeader &header() const override { return inner_.header(); }
  void read(std::uint64_t block, std::span<std::byte> out) const override {
    if (++reads_ > 3) throw IoError("device error", header().block_offset(block));
    inner_.read(block, out);
  }

 private:
  const BlockSource &inner_;
  mutable std::size_t reads_ = 0;
};

}  // namespace

TEST_F(EngineTest, IoFailureSurfacesWithOffset) {
  const auto *a = replicated_;
  FailingSource bad(*a->layout);
  auto ix = a->index();
  ix.layout = &bad;
  Searcher s(ix);
  try {
    s.search_two_stage(a->corpus.queries.row(0), params(40, 0.5f));
    FAIL() << "expected an IoError";
  } catch (const IoError &e) {
    EXPECT_EQ(e.offset() % 4096, 0u);
    EXPECT_GE(e.offset(), 4096u);
  }
}
