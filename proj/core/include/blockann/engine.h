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
#include <span>
#include <vector>

#include "blockann/dataset.h"
#include "blockann/graph.h"
#include "blockann/io.h"
#include "blockann/io_stats.h"
#include "blockann/layout.h"
#include "blockann/nav_index.h"
#include "blockann/nearest_list.h"
#include "blockann/pq.h"

namespace blockann {

struct SearchParams {
  std::uint32_t k = 10;
  std::uint32_t queue_size = 100;  // D, capacity of the approximate list
  float sigma = 0.5f;              // refinement ratio
  std::uint32_t beam_width = 4;    // W
  bool use_nav = false;
  IoMode io_mode = IoMode::kSync;

  // D_r = ceil(sigma * D).
  std::uint32_t refine_count() const;
  void validate() const;
};

// Adjacency lists held in memory. Lookups are O(1) through a dense slot map.
class GraphCache {
 public:
  GraphCache() = default;
  GraphCache(const ProximityGraph &g, std::span<const node_id> ids);

  bool contains(node_id id) const {
    return id < slot_.size() && slot_[id] != kInvalidNode;
  }
  std::span<const node_id> neighbors(node_id id) const {
    const auto s = slot_[id];
    return {ids_.data() + offsets_[s], offsets_[s + 1] - offsets_[s]};
  }
  std::size_t size() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t bytes() const { return bytes_; }

 private:
  std::vector<node_id> slot_;
  std::vector<std::size_t> offsets_;
  std::vector<node_id> ids_;
  std::size_t bytes_ = 0;
};

// Exact vectors held in memory.
class NodeCache {
 public:
  NodeCache() = default;
  NodeCache(const VectorDataset &ds, std::span<const node_id> ids);
  // Vectors fetched from a layout (one read per node, not counted as query IO).
  NodeCache(const BlockSource &layout, std::span<const node_id> ids);

  bool contains(node_id id) const {
    return id < slot_.size() && slot_[id] != kInvalidNode;
  }
  std::span<const float> vector(node_id id) const {
    return {values_.data() + std::size_t{slot_[id]} * dims_, dims_};
  }
  std::size_t size() const { return dims_ == 0 ? 0 : values_.size() / dims_; }
  std::size_t bytes() const { return size() * vector_bytes_; }

 private:
  std::vector<node_id> slot_;
  std::vector<float> values_;
  std::size_t dims_ = 0;
  std::size_t vector_bytes_ = 0;
};

// Non-owning bundle of the artifacts one search needs. Everything is
// read-only and shared by all workers.
struct SearchIndex {
  const BlockSource *layout = nullptr;
  const PQCodebook *codebook = nullptr;
  const PQCodes *codes = nullptr;
  node_id entry = 0;
  const GraphCache *graph_cache = nullptr;  // optional
  const NodeCache *node_cache = nullptr;    // optional
  const NavIndex *nav = nullptr;            // optional
  IoService *io = nullptr;                  // required for async modes

  // Throws if the artifacts disagree on corpus size or dimension.
  void validate() const;
};

struct SearchResult {
  std::vector<Neighbor> neighbors;  // top-k by exact distance
  IOStats stats;
  std::size_t visited = 0;  // candidates marked visited in the search stage
  std::uint64_t latency_ns = 0;
};

// Appends every not-yet-seen id of adj with its PQ distance, keeping the list
// at its capacity.
void expand(const QueryLut &lut, const PQCodes &codes,
            std::span<const node_id> adj, SeenSet &seen, NearestList &list);

// Per-worker query executor. Holds reusable scratch; not thread-safe, create
// one per thread.
class Searcher {
 public:
  explicit Searcher(const SearchIndex &index);

  // Search stage over the approximate list with graph-cache bypass and
  // packed-neighbor expansion, then exact re-ranking of the top D_r.
  SearchResult search_two_stage(std::span<const float> query,
                                const SearchParams &params);

  // Single-stage traversal: every visited candidate gets an exact distance;
  // a node is served from memory only when both caches hold it.
  SearchResult search_baseline(std::span<const float> query,
                               const SearchParams &params);

  // Exact distances for ids: cached vectors first, remaining reads submitted
  // together and scored as each completes. Adds to stats->refinement_reads.
  std::vector<Neighbor> refine_batch(std::span<const float> query,
                                     std::span<const node_id> ids,
                                     IoMode mode, IOStats *stats);

  // Final approximate list of the last search, for inspection.
  const NearestList &approximate_list() const { return appr_; }

 private:
  void begin(std::span<const float> query, const SearchParams &params,
             SearchResult &out);
  std::span<std::byte> buffer(std::size_t slot);
  float exact(std::span<const float> query, std::span<const float> v) const;
  bool fill_beam(const SearchParams &params, bool two_stage,
                 std::span<const float> query, SearchResult &out);
  void finish(const SearchParams &params, SearchResult &out);

  SearchIndex index_;
  LayoutHeader header_;
  QueryLut lut_;
  NearestList appr_;
  std::vector<Neighbor> ext_;
  SeenSet seen_;
  SeenSet in_ext_;
  PrefetchQueues queues_;
  std::vector<AlignedBuffer> buffers_;
  std::vector<std::size_t> free_slots_;
  NodeBlock block_;
};

}  // namespace blockann
