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

#include "blockann/compression.h"

#include <algorithm>
#include <string>

namespace blockann {

ProxyMeasurement measure_read_proxy(const SearchIndex &index,
                                    const VectorDataset &queries,
                                    const GroundTruth &gt,
                                    const ProxyConfig &config, bool use_nav) {
  if (queries.count() == 0) throw Error("read proxy needs sample queries");
  if (gt.lists.size() != queries.count() || gt.k < config.k) {
    throw Error("ground truth does not match the sample queries");
  }
  const std::uint64_t count = index.layout->header().count;
  Searcher searcher(index);
  ProxyMeasurement m;
  std::vector<node_id> ids;
  for (const std::uint32_t rung : config.queue_ladder) {
    if (rung < config.k) continue;
    SearchParams params;
    params.k = config.k;
    params.queue_size = static_cast<std::uint32_t>(
        std::min<std::uint64_t>(rung, std::max<std::uint64_t>(count, config.k)));
    params.sigma = config.sigma;
    params.beam_width = 1;
    params.use_nav = use_nav;
    params.io_mode = IoMode::kSync;
    double recall = 0.0;
    double reads = 0.0;
    for (std::size_t q = 0; q < queries.count(); ++q) {
      const auto r = searcher.search_two_stage(queries.row(q), params);
      ids.clear();
      for (const auto &n : r.neighbors) ids.push_back(n.id);
      recall += compute_recall(ids, gt.lists[q], config.k);
      reads += static_cast<double>(r.stats.total_reads());
    }
    m.queue_size = params.queue_size;
    m.recall = recall / static_cast<double>(queries.count());
    if (m.recall >= config.recall_target) {
      m.reached = true;
      m.reads_per_query = reads / static_cast<double>(queries.count());
      return m;
    }
    if (params.queue_size >= count) break;  // larger rungs change nothing
  }
  return m;
}

std::vector<std::uint32_t> default_compression_candidates(std::uint32_t dims) {
  std::vector<std::uint32_t> out;
  for (const std::uint32_t div : {32u, 16u, 8u, 4u}) {
    std::uint32_t m = std::max(1u, dims / div);
    while (dims % m != 0) --m;
    out.push_back(m);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

CompressionProbe probe_compression(const CompressionSample &s,
                                   std::uint32_t num_subspaces,
                                   const PQTrainParams &pq,
                                   const BlockSpec &layout,
                                   const ProxyConfig &config) {
  CompressionProbe probe;
  probe.num_subspaces = num_subspaces;
  probe.fits_budget = true;
  PQTrainParams params = pq;
  params.num_subspaces = num_subspaces;
  probe.codebook = train_pq(*s.sample, params);
  const PQCodes codes = encode(probe.codebook, *s.sample);

  BlockSpec spec = layout;
  const std::uint32_t pack = resolve_pack_count(
      spec, s.sample->vector_bytes(), s.graph->max_degree());
  spec.pack_count = pack;
  const PackedLists packed =
      spec.kind == LayoutKind::kFlat
          ? PackedLists(s.graph->size())
          : pack_neighbors(*s.graph, *s.sample, pack, spec.block_size);
  const InMemoryLayout mem(*s.graph, *s.sample, spec, packed);

  SearchIndex index;
  index.layout = &mem;
  index.codebook = &probe.codebook;
  index.codes = &codes;
  index.entry = s.graph->entry();
  probe.proxy = measure_read_proxy(index, *s.queries, *s.gt, config, false);
  return probe;
}

namespace {

// Strictly better proxy outcome; equal outcomes keep the earlier (smaller M).
bool better(const ProxyMeasurement &a, const ProxyMeasurement &b) {
  if (a.reached != b.reached) return a.reached;
  if (a.reached) return a.reads_per_query < b.reads_per_query;
  return a.recall > b.recall;
}

}  // namespace

CompressionChoice pick_compression_ratio(
    const CompressionSample &s, std::span<const std::uint32_t> candidates,
    std::uint64_t budget_bytes, std::uint64_t corpus_count,
    const PQTrainParams &pq, const BlockSpec &layout,
    const ProxyConfig &config) {
  if (candidates.empty()) throw Error("no compression candidates");
  if (!std::is_sorted(candidates.begin(), candidates.end())) {
    throw Error("compression candidates must ascend");
  }
  CompressionChoice choice;
  const CompressionProbe *best = nullptr;
  for (const std::uint32_t m : candidates) {
    const std::uint64_t bytes = corpus_count * m;
    if (bytes > budget_bytes) {
      CompressionProbe skipped;
      skipped.num_subspaces = m;
      skipped.code_bytes = bytes;
      choice.probes.push_back(std::move(skipped));
      continue;
    }
    auto probe = probe_compression(s, m, pq, layout, config);
    probe.code_bytes = bytes;
    choice.probes.push_back(std::move(probe));
  }
  for (const auto &p : choice.probes) {
    if (!p.fits_budget) continue;
    if (best == nullptr || better(p.proxy, best->proxy)) best = &p;
  }
  if (best == nullptr) {
    throw Error("budget of " + std::to_string(budget_bytes) +
                " bytes cannot hold PQ codes for any candidate (smallest needs " +
                std::to_string(corpus_count * candidates.front()) + ")");
  }
  choice.num_subspaces = best->num_subspaces;
  return choice;
}

}  // namespace blockann
