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


// Micro benchmarks of the hot paths: exact distances, PQ lookup tables,
// block decoding and whole queries against an in-memory layout.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "blockann/distance.h"
#include "blockann/engine.h"
#include "blockann/graph.h"
#include "blockann/layout.h"
#include "blockann/pq.h"
#include "blockann/synthetic.h"

namespace blockann {
namespace {

std::vector<float> random_floats(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g;
  std::vector<float> v(n);
  for (auto &x : v) x = g(rng);
  return v;
}

void BM_L2(benchmark::State &state) {
  const auto dims = static_cast<std::size_t>(state.range(0));
  const auto a = random_floats(dims, 1), b = random_floats(dims, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(l2_sqr(a.data(), b.data(), dims));
  }
  state.SetBytesProcessed(std::int64_t(state.iterations()) * dims * 8);
}
BENCHMARK(BM_L2)->Arg(128)->Arg(768);

void BM_InnerProduct(benchmark::State &state) {
  const auto dims = static_cast<std::size_t>(state.range(0));
  const auto a = random_floats(dims, 1), b = random_floats(dims, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(inner_product(a.data(), b.data(), dims));
  }
}
BENCHMARK(BM_InnerProduct)->Arg(128)->Arg(768);

// A small clustered corpus shared by the PQ, layout and search benchmarks.
struct Fixture {
  SyntheticCorpus corpus;
  ProximityGraph graph;
  PQCodebook codebook;
  PQCodes codes;
  PackedLists packed;
  BlockSpec spec;

  Fixture() {
    SyntheticSpec s;
    s.count = 5000;
    s.query_count = 200;
    corpus = make_clustered(s);
    graph = build_graph(corpus.base, BuildParams{32, 64, 1.2f, 1});
    PQTrainParams p;
    p.num_subspaces = 32;
    p.iterations = 4;
    codebook = train_pq(corpus.base, p);
    codes = encode(codebook, corpus.base);
    spec.pack_count = resolve_pack_count(spec, corpus.base.vector_bytes(),
                                         graph.max_degree());
    packed = pack_neighbors(graph, corpus.base, *spec.pack_count,
                            spec.block_size);
  }
};

const Fixture &fixture() {
  static const Fixture f;
  return f;
}

void BM_LutBuild(benchmark::State &state) {
  const auto &f = fixture();
  QueryLut lut;
  std::size_t q = 0;
  for (auto _ : state) {
    lut.build(f.codebook, f.corpus.queries.row(q++ % f.corpus.queries.count()));
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_LutBuild);

void BM_LutDistance(benchmark::State &state) {
  const auto &f = fixture();
  const QueryLut lut(f.codebook, f.corpus.queries.row(0));
  node_id id = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(approx_dist(f.codes, lut, id));
    id = (id + 1) % node_id(f.codes.count());
  }
}
BENCHMARK(BM_LutDistance);

void BM_DecodeReplicatedBlock(benchmark::State &state) {
  const auto &f = fixture();
  const InMemoryLayout layout(f.graph, f.corpus.base, f.spec, f.packed);
  const auto &h = layout.header();
  std::vector<std::byte> block(h.block_size);
  layout.read(h.block_of(17), block);
  NodeBlock out;
  for (auto _ : state) {
    decode_replicated_block(h, block, out);
    benchmark::DoNotOptimize(out.neighbors.data());
  }
}
BENCHMARK(BM_DecodeReplicatedBlock);

void BM_TwoStageSearch(benchmark::State &state) {
  const auto &f = fixture();
  const InMemoryLayout layout(f.graph, f.corpus.base, f.spec, f.packed);
  SearchIndex index;
  index.layout = &layout;
  index.codebook = &f.codebook;
  index.codes = &f.codes;
  index.entry = f.graph.entry();
  Searcher searcher(index);
  SearchParams p;
  p.queue_size = static_cast<std::uint32_t>(state.range(0));
  p.beam_width = 1;
  std::size_t q = 0;
  double reads = 0.0;
  for (auto _ : state) {
    const auto r = searcher.search_two_stage(
        f.corpus.queries.row(q++ % f.corpus.queries.count()), p);
    reads += double(r.stats.total_reads());
  }
  state.counters["reads"] =
      benchmark::Counter(reads, benchmark::Counter::kAvgIterations);
}
BENCHMARK(BM_TwoStageSearch)->Arg(20)->Arg(100);

void BM_BaselineSearch(benchmark::State &state) {
  const auto &f = fixture();
  BlockSpec flat;
  flat.kind = LayoutKind::kFlat;
  const PackedLists none(f.graph.size());
  const InMemoryLayout layout(f.graph, f.corpus.base, flat, none);
  SearchIndex index;
  index.layout = &layout;
  index.codebook = &f.codebook;
  index.codes = &f.codes;
  index.entry = f.graph.entry();
  Searcher searcher(index);
  SearchParams p;
  p.queue_size = static_cast<std::uint32_t>(state.range(0));
  p.beam_width = 1;
  std::size_t q = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(searcher.search_baseline(
        f.corpus.queries.row(q++ % f.corpus.queries.count()), p));
  }
}
BENCHMARK(BM_BaselineSearch)->Arg(20)->Arg(100);

}  // namespace
}  // namespace blockann

BENCHMARK_MAIN();
