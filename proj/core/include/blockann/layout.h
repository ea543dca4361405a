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
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "blockann/dataset.h"
#include "blockann/graph.h"
#include "blockann/io_stats.h"
#include "blockann/types.h"

namespace blockann {

enum class LayoutKind : std::uint8_t { kGraphReplicated = 0, kFlat = 1 };

std::string_view to_string(LayoutKind k);
LayoutKind parse_layout_kind(std::string_view s);

// Graph-replicated block:
//   node id u32 | degree u16 | pack count u16 | vector | degree x u32 ids |
//   pack count x (neighbor id u32 | degree u16 | degree x u32 ids) | zeros
// Flat block: floor(B / (S_v + S_a)) fixed-size records of
//   vector | degree u16 | max_degree x u32 ids (unused slots zero)
// in id order. The file starts with one B-byte header block so every data
// block is B-aligned.
inline constexpr std::size_t kNodeHeaderBytes = 8;
inline constexpr std::size_t kPackedHeaderBytes = 6;
inline constexpr std::uint64_t kLayoutMagic = 0x31544c4e4e414b42ULL;  // "BKANNLT1"
inline constexpr std::uint32_t kLayoutVersion = 1;

struct BlockSpec {
  std::uint32_t block_size = 4096;
  // Neighbor adjacency lists packed per block. Unset means fill-the-block:
  // the largest count for which a node at max degree still fits.
  std::optional<std::uint32_t> pack_count;
  LayoutKind kind = LayoutKind::kGraphReplicated;
};

std::uint32_t fill_block_pack_count(std::size_t vector_bytes,
                                    std::uint32_t max_degree,
                                    std::uint32_t block_size);

std::size_t flat_record_bytes(std::size_t vector_bytes,
                              std::uint32_t max_degree);

struct PackedEntry {
  node_id id = kInvalidNode;
  std::vector<node_id> neighbors;

  friend bool operator==(const PackedEntry &, const PackedEntry &) = default;
};

struct NodeBlock {
  node_id id = kInvalidNode;
  std::vector<float> vector;
  std::vector<node_id> neighbors;
  std::vector<PackedEntry> packed;

  friend bool operator==(const NodeBlock &, const NodeBlock &) = default;
};

// Per node, the ids whose adjacency lists are packed into its block.
using PackedLists = std::vector<std::vector<node_id>>;

// Visits nodes in `order`; each takes up to pack_count neighbors by
// ascending exact distance (ties to smaller id), skipping neighbors already
// packed pack_count + 1 times, and stops once the next list would overflow
// the block.
PackedLists pack_neighbors(const ProximityGraph &g, const VectorDataset &ds,
                           std::span<const node_id> order,
                           std::uint32_t pack_count, std::uint32_t block_size);

// Ascending-id order.
PackedLists pack_neighbors(const ProximityGraph &g, const VectorDataset &ds,
                           std::uint32_t pack_count, std::uint32_t block_size);

// Disk space of the replicated layout relative to the flat one:
// ((1 + R) S_a + S_v) / (S_a + S_v).
double space_blowup(double vector_bytes, double adjacency_bytes,
                    double pack_count);

struct LayoutHeader {
  std::uint64_t count = 0;
  std::uint32_t dims = 0;
  ScalarType scalar = ScalarType::kF32;
  Metric metric = Metric::kL2;
  std::uint32_t block_size = 4096;
  std::uint32_t max_degree = 0;
  std::uint32_t pack_count = 0;
  LayoutKind kind = LayoutKind::kGraphReplicated;

  std::size_t vector_bytes() const { return dims * scalar_size(scalar); }
  std::uint32_t nodes_per_block() const;
  std::uint64_t block_of(node_id id) const { return id / nodes_per_block(); }
  std::uint64_t num_blocks() const;
  std::uint64_t block_offset(std::uint64_t block) const {
    return (block + 1) * std::uint64_t{block_size};
  }
  std::uint64_t file_bytes() const {
    return (num_blocks() + 1) * std::uint64_t{block_size};
  }

  void serialize(std::span<std::byte> out) const;
  static LayoutHeader deserialize(std::span<const std::byte> in);

  friend bool operator==(const LayoutHeader &, const LayoutHeader &) = default;
};

// Source of raw layout blocks. Implementations are safe for concurrent reads.
class BlockSource {
 public:
  virtual ~BlockSource() = default;
  virtual const LayoutHeader &header() const = 0;
  // Fills out (block_size bytes) with block `block`.
  virtual void read(std::uint64_t block, std::span<std::byte> out) const = 0;
};

// A layout file on disk, read with pread (optionally O_DIRECT).
class LayoutFile final : public BlockSource {
 public:
  explicit LayoutFile(const std::filesystem::path &path,
                      bool direct_io = false);
  ~LayoutFile() override;
  LayoutFile(const LayoutFile &) = delete;
  LayoutFile &operator=(const LayoutFile &) = delete;

  const LayoutHeader &header() const override { return header_; }
  void read(std::uint64_t block, std::span<std::byte> out) const override;
  bool direct_io() const { return direct_; }

 private:
  int fd_ = -1;
  bool direct_ = false;
  std::filesystem::path path_;
  LayoutHeader header_;
};

// Serialises blocks on demand from in-memory artifacts; byte-identical to
// the file write_layout would produce. Used for planning without disk IO.
class InMemoryLayout final : public BlockSource {
 public:
  InMemoryLayout(const ProximityGraph &g, const VectorDataset &ds,
                 const BlockSpec &spec, const PackedLists &packed);

  const LayoutHeader &header() const override { return header_; }
  void read(std::uint64_t block, std::span<std::byte> out) const override;

 private:
  const ProximityGraph &graph_;
  const VectorDataset &ds_;
  const PackedLists &packed_;
  LayoutHeader header_;
};

LayoutHeader make_layout_header(const ProximityGraph &g,
                                const VectorDataset &ds, const BlockSpec &spec);

// Encodes block `block` into out (block_size bytes, zero padded).
void encode_block(const LayoutHeader &header, const ProximityGraph &g,
                  const VectorDataset &ds, const PackedLists &packed,
                  std::uint64_t block, std::span<std::byte> out);

// Decoders reuse out's storage. Both validate sizes against the header.
void decode_replicated_block(const LayoutHeader &header,
                             std::span<const std::byte> block, NodeBlock &out);
void decode_flat_record(const LayoutHeader &header,
                        std::span<const std::byte> block, node_id id,
                        NodeBlock &out);
// Decodes id's record from whichever kind of block holds it.
void decode_node(const LayoutHeader &header, std::span<const std::byte> block,
                 node_id id, NodeBlock &out);

// Reads the block holding id (one IO, counted as a search-stage read when
// stats is non-null) and returns id's record.
NodeBlock read_block(const BlockSource &src, node_id id,
                     IOStats *stats = nullptr);

// Flat layouts: every node stored in the block holding id.
std::vector<NodeBlock> read_flat_block(const BlockSource &src, node_id id,
                                       IOStats *stats = nullptr);

struct LayoutStats {
  std::uint64_t bytes = 0;
  std::uint64_t flat_bytes = 0;  // same corpus in the flat layout
  double blowup_vs_flat = 1.0;
  double avg_packed = 0.0;
  std::uint32_t nodes_per_block = 0;
  std::uint32_t pack_count = 0;
};

LayoutStats write_layout(const ProximityGraph &g, const VectorDataset &ds,
                         const BlockSpec &spec, const PackedLists &packed,
                         const std::filesystem::path &path);

// Convenience: resolves the pack count (fill-the-block when unset; zero for
// flat layouts), packs and writes.
LayoutStats build_layout(const ProximityGraph &g, const VectorDataset &ds,
                         const BlockSpec &spec,
                         const std::filesystem::path &path,
                         PackedLists *packed_out = nullptr);

std::uint32_t resolve_pack_count(const BlockSpec &spec,
                                 std::size_t vector_bytes,
                                 std::uint32_t max_degree);

}  // namespace blockann
