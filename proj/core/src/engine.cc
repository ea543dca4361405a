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

#include "blockann/engine.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "blockann/distance.h"

namespace blockann {

std::uint32_t SearchParams::refine_count() const {
  // The relative slack absorbs float noise in sigma (0.1f * 30 is 3, not 4).
  const double r =
      std::ceil(static_cast<double>(sigma) * queue_size * (1.0 - 1e-6));
  return static_cast<std::uint32_t>(std::clamp(r, 1.0, double(queue_size)));
}

void SearchParams::validate() const {
  if (k == 0) throw Error("k must be at least 1");
  if (queue_size < k) {
    throw Error("queue size " + std::to_string(queue_size) +
                " is smaller than k " + std::to_string(k));
  }
  if (!(sigma > 0.0f && sigma <= 1.0f)) {
    throw Error("refinement ratio must be in (0, 1]");
  }
  if (beam_width == 0) throw Error("beam width must be at least 1");
}

GraphCache::GraphCache(const ProximityGraph &g, std::span<const node_id> ids)
    : slot_(g.size(), kInvalidNode) {
  offsets_.reserve(ids.size() + 1);
  offsets_.push_back(0);
  for (const node_id id : ids) {
    if (id >= g.size()) throw Error("graph cache id out of range");
    if (slot_[id] != kInvalidNode) continue;
    slot_[id] = static_cast<node_id>(offsets_.size() - 1);
    const auto adj = g.neighbors(id);
    ids_.insert(ids_.end(), adj.begin(), adj.end());
    offsets_.push_back(ids_.size());
    bytes_ += g.adjacency_bytes(id);
  }
}

NodeCache::NodeCache(const VectorDataset &ds, std::span<const node_id> ids)
    : slot_(ds.count(), kInvalidNode),
      dims_(ds.dims()),
      vector_bytes_(ds.vector_bytes()) {
  values_.reserve(ids.size() * dims_);
  node_id next = 0;
  for (const node_id id : ids) {
    if (id >= ds.count()) throw Error("node cache id out of range");
    if (slot_[id] != kInvalidNode) continue;
    slot_[id] = next++;
    const auto v = ds.row(id);
    values_.insert(values_.end(), v.begin(), v.end());
  }
}

NodeCache::NodeCache(const BlockSource &layout, std::span<const node_id> ids) {
  const LayoutHeader &h = layout.header();
  slot_.assign(h.count, kInvalidNode);
  dims_ = h.dims;
  vector_bytes_ = h.vector_bytes();
  values_.reserve(ids.size() * dims_);
  AlignedBuffer buf(h.block_size);
  NodeBlock nb;
  node_id next = 0;
  for (const node_id id : ids) {
    if (id >= h.count) throw Error("node cache id out of range");
    if (slot_[id] != kInvalidNode) continue;
    layout.read(h.block_of(id), buf.span());
    decode_node(h, buf.span(), id, nb);
    slot_[id] = next++;
    values_.insert(values_.end(), nb.vector.begin(), nb.vector.end());
  }
}

void SearchIndex::validate() const {
  if (layout == nullptr || codebook == nullptr || codes == nullptr) {
    throw Error("search index needs a layout, a codebook and codes");
  }
  const LayoutHeader &h = layout->header();
  if (codes->count() != h.count) {
    throw Error("PQ codes cover " + std::to_string(codes->count()) +
                " vectors but the layout holds " + std::to_string(h.count));
  }
  if (codebook->dims != h.dims) throw Error("codebook dimension mismatch");
  if (codes->num_subspaces() != codebook->num_subspaces) {
    throw Error("code width does not match the codebook");
  }
  if (codebook->metric != h.metric) throw Error("codebook metric mismatch");
  if (entry >= h.count) throw Error("entry node out of range");
  if (graph_cache != nullptr && graph_cache->size() > h.count) {
    throw Error("graph cache larger than the corpus");
  }
  if (node_cache != nullptr && node_cache->size() > h.count) {
    throw Error("node cache larger than the corpus");
  }
  if (nav != nullptr && !nav->empty()) {
    if (nav->sample().data.dims() != h.dims) {
      throw Error("navigation index dimension mismatch");
    }
    if (nav->sample().id_map.back() >= h.count) {
      throw Error("navigation index refers past the corpus");
    }
  }
}

void expand(const QueryLut &lut, const PQCodes &codes,
            std::span<const node_id> adj, SeenSet &seen, NearestList &list) {
  for (const node_id v : adj) {
    if (!seen.insert(v)) continue;
    list.insert(v, lut.distance(codes.code(v)));
  }
}

Searcher::Searcher(const SearchIndex &index) : index_(index) {
  index_.validate();
  header_ = index_.layout->header();
}

std::span<std::byte> Searcher::buffer(std::size_t slot) {
  while (buffers_.size() <= slot) buffers_.emplace_back(header_.block_size);
  return buffers_[slot].span();
}

float Searcher::exact(std::span<const float> query,
                      std::span<const float> v) const {
  return distance(header_.metric, query, v);
}

void Searcher::begin(std::span<const float> query, const SearchParams &params,
                     SearchResult &out) {
  params.validate();
  if (query.size() != header_.dims) {
    throw Error("query has " + std::to_string(query.size()) +
                " dimensions, index has " + std::to_string(header_.dims));
  }
  lut_.build(*index_.codebook, query);
  appr_.reset(params.queue_size);
  ext_.clear();
  seen_.reset(header_.count);
  in_ext_.reset(header_.count);
  queues_.reset(index_.layout, index_.io, params.io_mode);
  free_slots_.clear();
  for (std::size_t s = params.beam_width; s-- > 0;) free_slots_.push_back(s);

  std::vector<node_id> entries;
  if (params.use_nav && index_.nav != nullptr && !index_.nav->empty()) {
    std::size_t hops = 0;
    entries = index_.nav->entry_points(query, &hops);
    out.stats.nav_hops += hops;
  }
  if (entries.empty()) entries.push_back(index_.entry);
  for (const node_id e : entries) {
    if (seen_.insert(e)) appr_.insert(e, lut_.distance(index_.codes->code(e)));
  }
}

// Issues reads for the nearest unvisited candidates until W are in flight.
// Two-stage mode expands graph-cache hits on the spot; baseline mode serves
// a candidate from memory only when both caches hold it. Returns false when
// nothing is left to consume.
bool Searcher::fill_beam(const SearchParams &params, bool two_stage,
                         std::span<const float> query, SearchResult &out) {
  const GraphCache *gc = index_.graph_cache;
  const NodeCache *nc = index_.node_cache;
  while (queues_.outstanding() < params.beam_width) {
    const auto pos = appr_.first_unvisited();
    if (!pos) break;
    const node_id u = appr_[*pos].id;
    appr_.set_visited(*pos);
    ++out.visited;
    if (gc != nullptr && gc->contains(u)) {
      if (two_stage) {
        ++out.stats.cache_hits;
        expand(lut_, *index_.codes, gc->neighbors(u), seen_, appr_);
        continue;
      }
      if (nc != nullptr && nc->contains(u)) {
        ++out.stats.cache_hits;
        ext_.push_back({u, exact(query, nc->vector(u))});
        expand(lut_, *index_.codes, gc->neighbors(u), seen_, appr_);
        continue;
      }
    }
    const std::size_t slot = free_slots_.back();
    free_slots_.pop_back();
    queues_.issue(u, header_.block_of(u), buffer(slot), slot);
  }
  return queues_.outstanding() > 0;
}

SearchResult Searcher::search_two_stage(std::span<const float> query,
                                        const SearchParams &params) {
  const auto t0 = std::chrono::steady_clock::now();
  SearchResult out;
  begin(query, params, out);

  while (fill_beam(params, true, query, out)) {
    const auto ready = queues_.next();
    ++out.stats.search_stage_reads;
    decode_node(header_, ready.block, ready.node, block_);
    free_slots_.push_back(ready.slot);

    ext_.push_back({ready.node, exact(query, block_.vector)});
    in_ext_.insert(ready.node);
    expand(lut_, *index_.codes, block_.neighbors, seen_, appr_);
    for (const PackedEntry &p : block_.packed) {
      const auto pos = appr_.find(p.id);
      if (!pos || appr_[*pos].visited) continue;
      appr_.set_visited(*pos);
      ++out.visited;
      expand(lut_, *index_.codes, p.neighbors, seen_, appr_);
    }
  }

  // Refinement over the top D_r approximate candidates.
  const std::size_t dr = std::min<std::size_t>(params.refine_count(),
                                               appr_.size());
  std::vector<node_id> pending;
  for (std::size_t i = 0; i < dr; ++i) {
    if (!in_ext_.contains(appr_[i].id)) pending.push_back(appr_[i].id);
  }
  const auto refined = refine_batch(query, pending, params.io_mode, &out.stats);
  ext_.insert(ext_.end(), refined.begin(), refined.end());

  finish(params, out);
  out.latency_ns = static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(
          std::chrono::steady_clock::now() - t0)
          .count());
  return out;
}

SearchResult Searcher::search_baseline(std::span<const float> query,
                                       const SearchParams &params) {
  const auto t0 = std::chrono::steady_clock::now();
  SearchResult out;
  begin(query, params, out);

  while (fill_beam(params, false, query, out)) {
    const auto ready = queues_.next();
    ++out.stats.search_stage_reads;
    decode_node(header_, ready.block, ready.node, block_);
    free_slots_.push_back(ready.slot);
    ext_.push_back({ready.node, exact(query, block_.vector)});
    expand(lut_, *index_.codes, block_.neighbors, seen_, appr_);
  }

  finish(params, out);
  out.latency_ns = static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(
          std::chrono::steady_clock::now() - t0)
          .count());
  return out;
}

void Searcher::finish(const SearchParams &params, SearchResult &out) {
  const std::size_t k = std::min<std::size_t>(params.k, ext_.size());
  std::partial_sort(ext_.begin(), ext_.begin() + k, ext_.end(), closer);
  out.neighbors.assign(ext_.begin(), ext_.begin() + k);
}

std::vector<Neighbor> Searcher::refine_batch(std::span<const float> query,
                                             std::span<const node_id> ids,
                                             IoMode mode, IOStats *stats) {
  std::vector<Neighbor> out(ids.size());
  std::vector<std::size_t> disk;
  const NodeCache *nc = index_.node_cache;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= header_.count) {
      throw Error("refinement id " + std::to_string(ids[i]) + " out of range");
    }
    out[i].id = ids[i];
    if (nc != nullptr && nc->contains(ids[i])) {
      out[i].distance = exact(query, nc->vector(ids[i]));
    } else {
      disk.push_back(i);
    }
  }
  if (disk.empty()) return out;

  // Every read is submitted before the first completion is awaited; the
  // slot carries the output position so arrival order does not matter.
  queues_.reset(index_.layout, index_.io, mode);
  for (const std::size_t i : disk) {
    queues_.issue(ids[i], header_.block_of(ids[i]), buffer(i), i);
  }
  while (queues_.outstanding() > 0) {
    const auto ready = queues_.next();
    decode_node(header_, ready.block, ready.node, block_);
    out[ready.slot].distance = exact(query, block_.vector);
  }
  if (stats != nullptr) stats->refinement_reads += disk.size();
  return out;
}

}  // namespace blockann
