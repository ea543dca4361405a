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

#include "blockann/layout.h"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <numeric>

#include "binary_io.h"
#include "blockann/distance.h"

namespace blockann {

using detail::load_le;
using detail::store_le;

std::string_view to_string(LayoutKind k) {
  return k == LayoutKind::kFlat ? "flat" : "graph_replicated";
}

LayoutKind parse_layout_kind(std::string_view s) {
  if (s == "flat") return LayoutKind::kFlat;
  if (s == "graph_replicated" || s == "replicated" || s == "gr") {
    return LayoutKind::kGraphReplicated;
  }
  throw Error("unknown layout kind: " + std::string(s));
}

std::uint32_t fill_block_pack_count(std::size_t vector_bytes,
                                    std::uint32_t max_degree,
                                    std::uint32_t block_size) {
  const std::size_t own = kNodeHeaderBytes + vector_bytes + 4 * max_degree;
  if (own >= block_size) return 0;
  const std::size_t entry = kPackedHeaderBytes + 4 * max_degree;
  return static_cast<std::uint32_t>(
      std::min<std::size_t>((block_size - own) / entry, max_degree));
}

std::size_t flat_record_bytes(std::size_t vector_bytes,
                              std::uint32_t max_degree) {
  return vector_bytes + 2 + 4 * std::size_t{max_degree};
}

std::uint32_t resolve_pack_count(const BlockSpec &spec,
                                 std::size_t vector_bytes,
                                 std::uint32_t max_degree) {
  if (spec.kind == LayoutKind::kFlat) return 0;
  if (spec.pack_count) return *spec.pack_count;
  return fill_block_pack_count(vector_bytes, max_degree, spec.block_size);
}

PackedLists pack_neighbors(const ProximityGraph &g, const VectorDataset &ds,
                           std::span<const node_id> order,
                           std::uint32_t pack_count, std::uint32_t block_size) {
  PackedLists packed(g.size());
  if (pack_count == 0) return packed;
  std::vector<std::uint32_t> copies(g.size(), 0);
  std::vector<Neighbor> by_distance;
  for (node_id u : order) {
    const auto adj = g.neighbors(u);
    const std::size_t own =
        kNodeHeaderBytes + ds.vector_bytes() + 4 * adj.size();
    if (own > block_size) continue;  // write_layout reports this node
    std::size_t room = block_size - own;

    by_distance.clear();
    for (node_id v : adj) {
      by_distance.push_back(
          {v, distance(ds.metric(), ds.row(u).data(), ds.row(v).data(),
                       ds.dims())});
    }
    std::sort(by_distance.begin(), by_distance.end(), closer);

    auto &chosen = packed[u];
    for (const auto &n : by_distance) {
      if (chosen.size() == pack_count) break;
      if (copies[n.id] >= pack_count + 1) continue;
      const std::size_t need = kPackedHeaderBytes + 4 * g.neighbors(n.id).size();
      if (need > room) break;
      chosen.push_back(n.id);
      ++copies[n.id];
      room -= need;
    }
  }
  return packed;
}

PackedLists pack_neighbors(const ProximityGraph &g, const VectorDataset &ds,
                           std::uint32_t pack_count, std::uint32_t block_size) {
  std::vector<node_id> order(g.size());
  std::iota(order.begin(), order.end(), node_id{0});
  return pack_neighbors(g, ds, order, pack_count, block_size);
}

double space_blowup(double vector_bytes, double adjacency_bytes,
                    double pack_count) {
  if (!(vector_bytes > 0.0) || !(adjacency_bytes > 0.0)) {
    throw Error("vector and adjacency sizes must be positive");
  }
  if (pack_count < 0.0) throw Error("pack count must be non-negative");
  return ((1.0 + pack_count) * adjacency_bytes + vector_bytes) /
         (adjacency_bytes + vector_bytes);
}

std::uint32_t LayoutHeader::nodes_per_block() const {
  if (kind == LayoutKind::kGraphReplicated) return 1;
  return static_cast<std::uint32_t>(
      block_size / flat_record_bytes(vector_bytes(), max_degree));
}

std::uint64_t LayoutHeader::num_blocks() const {
  const std::uint64_t per = nodes_per_block();
  return (count + per - 1) / per;
}

namespace {
constexpr std::size_t kHeaderFieldBytes = 40;
}

void LayoutHeader::serialize(std::span<std::byte> out) const {
  if (out.size() < kHeaderFieldBytes) throw Error("header buffer too small");
  std::fill(out.begin(), out.end(), std::byte{0});
  std::byte *p = out.data();
  store_le<std::uint64_t>(p + 0, kLayoutMagic);
  store_le<std::uint32_t>(p + 8, kLayoutVersion);
  store_le<std::uint64_t>(p + 12, count);
  store_le<std::uint32_t>(p + 20, dims);
  store_le<std::uint8_t>(p + 24, static_cast<std::uint8_t>(scalar));
  store_le<std::uint8_t>(p + 25, static_cast<std::uint8_t>(metric));
  store_le<std::uint8_t>(p + 26, static_cast<std::uint8_t>(kind));
  store_le<std::uint32_t>(p + 28, block_size);
  store_le<std::uint32_t>(p + 32, max_degree);
  store_le<std::uint32_t>(p + 36, pack_count);
}

LayoutHeader LayoutHeader::deserialize(std::span<const std::byte> in) {
  if (in.size() < kHeaderFieldBytes) throw Error("truncated layout header");
  const std::byte *p = in.data();
  if (load_le<std::uint64_t>(p) != kLayoutMagic) {
    throw Error("not a blockann layout file (bad magic)");
  }
  if (load_le<std::uint32_t>(p + 8) != kLayoutVersion) {
    throw Error("unsupported layout version");
  }
  LayoutHeader h;
  h.count = load_le<std::uint64_t>(p + 12);
  h.dims = load_le<std::uint32_t>(p + 20);
  const auto scalar = load_le<std::uint8_t>(p + 24);
  const auto metric = load_le<std::uint8_t>(p + 25);
  const auto kind = load_le<std::uint8_t>(p + 26);
  h.block_size = load_le<std::uint32_t>(p + 28);
  h.max_degree = load_le<std::uint32_t>(p + 32);
  h.pack_count = load_le<std::uint32_t>(p + 36);
  if (scalar > 1 || metric > 2 || kind > 1 || h.count == 0 || h.dims == 0 ||
      h.block_size < kHeaderFieldBytes) {
    throw Error("malformed layout header");
  }
  h.scalar = static_cast<ScalarType>(scalar);
  h.metric = static_cast<Metric>(metric);
  h.kind = static_cast<LayoutKind>(kind);
  if (h.nodes_per_block() == 0) throw Error("layout record exceeds block size");
  return h;
}

LayoutHeader make_layout_header(const ProximityGraph &g,
                                const VectorDataset &ds,
                                const BlockSpec &spec) {
  if (g.size() != ds.count()) throw Error("graph and dataset sizes differ");
  LayoutHeader h;
  h.count = ds.count();
  h.dims = static_cast<std::uint32_t>(ds.dims());
  h.scalar = ds.scalar();
  h.metric = ds.metric();
  h.block_size = spec.block_size;
  h.max_degree = g.max_degree();
  h.kind = spec.kind;
  h.pack_count = resolve_pack_count(spec, ds.vector_bytes(), g.max_degree());
  if (spec.block_size < kHeaderFieldBytes) throw Error("block size too small");
  if (h.kind == LayoutKind::kFlat && h.nodes_per_block() == 0) {
    throw Error("flat record of " +
                std::to_string(flat_record_bytes(ds.vector_bytes(),
                                                 g.max_degree())) +
                " bytes exceeds the " + std::to_string(spec.block_size) +
                "-byte block; use a larger block size (e.g. 8192 or 16384)");
  }
  return h;
}

namespace {

void put_vector(const LayoutHeader &h, std::span<const float> v,
                std::byte *p) {
  if (h.scalar == ScalarType::kF32) {
    std::memcpy(p, v.data(), v.size_bytes());
  } else {
    for (std::size_t i = 0; i < v.size(); ++i) {
      p[i] = static_cast<std::byte>(std::clamp(std::lround(v[i]), 0L, 255L));
    }
  }
}

void get_vector(const LayoutHeader &h, const std::byte *p,
                std::vector<float> &out) {
  out.resize(h.dims);
  if (h.scalar == ScalarType::kF32) {
    std::memcpy(out.data(), p, h.dims * sizeof(float));
  } else {
    for (std::size_t i = 0; i < h.dims; ++i) {
      out[i] = static_cast<float>(std::to_integer<std::uint8_t>(p[i]));
    }
  }
}

void put_ids(std::span<const node_id> ids, std::byte *p) {
  std::memcpy(p, ids.data(), ids.size_bytes());
}

void get_ids(const std::byte *p, std::size_t n, std::vector<node_id> &out) {
  out.resize(n);
  std::memcpy(out.data(), p, n * sizeof(node_id));
}

void encode_replicated(const LayoutHeader &h, const ProximityGraph &g,
                       const VectorDataset &ds, const PackedLists &packed,
                       node_id u, std::span<std::byte> out) {
  const auto adj = g.neighbors(u);
  static const std::vector<node_id> kNone;
  const auto &pk = packed.empty() ? kNone : packed[u];
  std::size_t size = kNodeHeaderBytes + h.vector_bytes() + 4 * adj.size();
  if (size > h.block_size) {
    throw Error("node " + std::to_string(u) + " needs " + std::to_string(size) +
                " bytes but the block holds " + std::to_string(h.block_size) +
                "; use a larger block size (e.g. 8192 or 16384)");
  }
  if (pk.size() > h.pack_count) {
    throw Error("node " + std::to_string(u) + " packs more lists than allowed");
  }
  std::byte *p = out.data();
  store_le<std::uint32_t>(p, u);
  store_le<std::uint16_t>(p + 4, static_cast<std::uint16_t>(adj.size()));
  store_le<std::uint16_t>(p + 6, static_cast<std::uint16_t>(pk.size()));
  put_vector(h, ds.row(u), p + kNodeHeaderBytes);
  put_ids(adj, p + kNodeHeaderBytes + h.vector_bytes());
  for (node_id v : pk) {
    if (std::find(adj.begin(), adj.end(), v) == adj.end()) {
      throw Error("packed id " + std::to_string(v) + " is not a neighbor of " +
                  std::to_string(u));
    }
    const auto vadj = g.neighbors(v);
    const std::size_t need = kPackedHeaderBytes + 4 * vadj.size();
    if (size + need > h.block_size) {
      throw Error("packed lists of node " + std::to_string(u) +
                  " overflow the block");
    }
    store_le<std::uint32_t>(p + size, v);
    store_le<std::uint16_t>(p + size + 4, static_cast<std::uint16_t>(vadj.size()));
    put_ids(vadj, p + size + kPackedHeaderBytes);
    size += need;
  }
}

}  // namespace

void encode_block(const LayoutHeader &h, const ProximityGraph &g,
                  const VectorDataset &ds, const PackedLists &packed,
                  std::uint64_t block, std::span<std::byte> out) {
  if (out.size() < h.block_size) throw Error("block buffer too small");
  std::fill(out.begin(), out.begin() + h.block_size, std::byte{0});
  if (h.kind == LayoutKind::kGraphReplicated) {
    encode_replicated(h, g, ds, packed, static_cast<node_id>(block), out);
    return;
  }
  const std::uint32_t per = h.nodes_per_block();
  const std::size_t record = flat_record_bytes(h.vector_bytes(), h.max_degree);
  for (std::uint32_t slot = 0; slot < per; ++slot) {
    const std::uint64_t id = block * per + slot;
    if (id >= h.count) break;
    std::byte *p = out.data() + slot * record;
    const auto adj = g.neighbors(static_cast<node_id>(id));
    put_vector(h, ds.row(id), p);
    store_le<std::uint16_t>(p + h.vector_bytes(),
                            static_cast<std::uint16_t>(adj.size()));
    put_ids(adj, p + h.vector_bytes() + 2);
  }
}

void decode_replicated_block(const LayoutHeader &h,
                             std::span<const std::byte> block, NodeBlock &out) {
  if (block.size() < h.block_size) throw Error("short block buffer");
  const std::byte *p = block.data();
  out.id = load_le<std::uint32_t>(p);
  const std::size_t degree = load_le<std::uint16_t>(p + 4);
  const std::size_t packs = load_le<std::uint16_t>(p + 6);
  if (degree > h.max_degree) throw Error("block degree exceeds max degree");
  if (packs > h.pack_count) {
    throw Error("block claims " + std::to_string(packs) +
                " packed lists, layout allows " + std::to_string(h.pack_count));
  }
  std::size_t off = kNodeHeaderBytes + h.vector_bytes() + 4 * degree;
  if (off > h.block_size) throw Error("block node record overflows");
  get_vector(h, p + kNodeHeaderBytes, out.vector);
  get_ids(p + kNodeHeaderBytes + h.vector_bytes(), degree, out.neighbors);
  out.packed.resize(packs);
  for (auto &entry : out.packed) {
    if (off + kPackedHeaderBytes > h.block_size) {
      throw Error("packed entry header overflows the block");
    }
    entry.id = load_le<std::uint32_t>(p + off);
    const std::size_t d = load_le<std::uint16_t>(p + off + 4);
    if (d > h.max_degree || off + kPackedHeaderBytes + 4 * d > h.block_size) {
      throw Error("packed entry overflows the block");
    }
    get_ids(p + off + kPackedHeaderBytes, d, entry.neighbors);
    off += kPackedHeaderBytes + 4 * d;
  }
}

void decode_flat_record(const LayoutHeader &h, std::span<const std::byte> block,
                        node_id id, NodeBlock &out) {
  if (block.size() < h.block_size) throw Error("short block buffer");
  const std::size_t record = flat_record_bytes(h.vector_bytes(), h.max_degree);
  const std::byte *p = block.data() + (id % h.nodes_per_block()) * record;
  out.id = id;
  get_vector(h, p, out.vector);
  const std::size_t degree = load_le<std::uint16_t>(p + h.vector_bytes());
  if (degree > h.max_degree) throw Error("record degree exceeds max degree");
  get_ids(p + h.vector_bytes() + 2, degree, out.neighbors);
  out.packed.clear();
}

void decode_node(const LayoutHeader &h, std::span<const std::byte> block,
                 node_id id, NodeBlock &out) {
  if (h.kind == LayoutKind::kGraphReplicated) {
    decode_replicated_block(h, block, out);
    if (out.id != id) {
      throw Error("block for node " + std::to_string(id) + " holds node " +
                  std::to_string(out.id));
    }
  } else {
    decode_flat_record(h, block, id, out);
  }
}

namespace {

struct AlignedDeleter {
  void operator()(std::byte *p) const { std::free(p); }
};

std::unique_ptr<std::byte, AlignedDeleter> aligned_block(std::size_t size) {
  void *p = nullptr;
  const std::size_t rounded = (size + 4095) / 4096 * 4096;
  if (posix_memalign(&p, 4096, rounded) != 0) throw std::bad_alloc();
  return std::unique_ptr<std::byte, AlignedDeleter>(static_cast<std::byte *>(p));
}

}  // namespace

NodeBlock read_block(const BlockSource &src, node_id id, IOStats *stats) {
  const auto &h = src.header();
  if (id >= h.count) {
    throw Error("node id " + std::to_string(id) + " out of range (" +
                std::to_string(h.count) + " nodes)");
  }
  auto buf = aligned_block(h.block_size);
  std::span<std::byte> block(buf.get(), h.block_size);
  src.read(h.block_of(id), block);
  if (stats != nullptr) ++stats->search_stage_reads;
  NodeBlock out;
  decode_node(h, block, id, out);
  return out;
}

std::vector<NodeBlock> read_flat_block(const BlockSource &src, node_id id,
                                       IOStats *stats) {
  const auto &h = src.header();
  if (h.kind != LayoutKind::kFlat) throw Error("layout is not flat");
  if (id >= h.count) throw Error("node id out of range");
  auto buf = aligned_block(h.block_size);
  std::span<std::byte> block(buf.get(), h.block_size);
  const std::uint64_t b = h.block_of(id);
  src.read(b, block);
  if (stats != nullptr) ++stats->search_stage_reads;
  std::vector<NodeBlock> out;
  const std::uint64_t first = b * h.nodes_per_block();
  const std::uint64_t last =
      std::min<std::uint64_t>(first + h.nodes_per_block(), h.count);
  for (std::uint64_t n = first; n < last; ++n) {
    decode_flat_record(h, block, static_cast<node_id>(n), out.emplace_back());
  }
  return out;
}

LayoutFile::LayoutFile(const std::filesystem::path &path, bool direct_io)
    : path_(path) {
  fd_ = ::open(path.c_str(), O_RDONLY);
  if (fd_ < 0) {
    throw Error("cannot open layout " + path.string() + ": " +
                std::strerror(errno));
  }
  std::vector<std::byte> head(64);
  const ssize_t got = ::pread(fd_, head.data(), head.size(), 0);
  if (got < 40) {
    ::close(fd_);
    throw Error(path.string() + ": truncated layout header");
  }
  try {
    header_ = LayoutHeader::deserialize(head);
  } catch (...) {
    ::close(fd_);
    throw;
  }
  struct stat st {};
  if (::fstat(fd_, &st) != 0 ||
      static_cast<std::uint64_t>(st.st_size) < header_.file_bytes()) {
    ::close(fd_);
    throw Error(path.string() + ": layout file is shorter than its header claims");
  }
  if (direct_io && header_.block_size % 4096 == 0) {
    const int dfd = ::open(path.c_str(), O_RDONLY | O_DIRECT);
    if (dfd >= 0) {
      ::close(fd_);
      fd_ = dfd;
      direct_ = true;
    }
  }
}

LayoutFile::~LayoutFile() {
  if (fd_ >= 0) ::close(fd_);
}

void LayoutFile::read(std::uint64_t block, std::span<std::byte> out) const {
  const std::uint64_t offset = header_.block_offset(block);
  if (block >= header_.num_blocks()) {
    throw IoError("block index " + std::to_string(block) + " out of range",
                  offset);
  }
  if (out.size() < header_.block_size) {
    throw IoError("read buffer smaller than a block", offset);
  }
  std::size_t done = 0;
  while (done < header_.block_size) {
    const ssize_t n = ::pread(fd_, out.data() + done, header_.block_size - done,
                              static_cast<off_t>(offset + done));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError(std::string("pread failed: ") + std::strerror(errno),
                    offset);
    }
    if (n == 0) throw IoError("short read", offset);
    done += static_cast<std::size_t>(n);
  }
}

InMemoryLayout::InMemoryLayout(const ProximityGraph &g, const VectorDataset &ds,
                               const BlockSpec &spec, const PackedLists &packed)
    : graph_(g), ds_(ds), packed_(packed),
      header_(make_layout_header(g, ds, spec)) {
  if (!packed.empty() && packed.size() != g.size()) {
    throw Error("packed lists do not match the graph");
  }
}

void InMemoryLayout::read(std::uint64_t block, std::span<std::byte> out) const {
  if (block >= header_.num_blocks()) {
    throw IoError("block index out of range", header_.block_offset(block));
  }
  encode_block(header_, graph_, ds_, packed_, block, out);
}

LayoutStats write_layout(const ProximityGraph &g, const VectorDataset &ds,
                         const BlockSpec &spec, const PackedLists &packed,
                         const std::filesystem::path &path) {
  const LayoutHeader h = make_layout_header(g, ds, spec);
  if (h.kind == LayoutKind::kGraphReplicated && !packed.empty() &&
      packed.size() != g.size()) {
    throw Error("packed lists do not match the graph");
  }
  auto out = detail::open_output(path.string());
  std::vector<std::byte> buf(h.block_size);
  h.serialize(buf);
  out.write(reinterpret_cast<const char *>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
  const PackedLists none;
  const PackedLists &pk = h.kind == LayoutKind::kFlat ? none : packed;
  for (std::uint64_t b = 0; b < h.num_blocks(); ++b) {
    encode_block(h, g, ds, pk, b, buf);
    out.write(reinterpret_cast<const char *>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
  }
  out.flush();
  if (!out) throw Error("write failed for " + path.string());

  LayoutStats stats;
  stats.bytes = h.file_bytes();
  stats.nodes_per_block = h.nodes_per_block();
  stats.pack_count = h.pack_count;
  const std::size_t record = flat_record_bytes(ds.vector_bytes(), g.max_degree());
  std::uint64_t flat_blocks = 0;
  if (record <= h.block_size) {
    const std::uint64_t per = h.block_size / record;
    flat_blocks = (h.count + per - 1) / per;
  } else {
    flat_blocks = h.count * ((record + h.block_size - 1) / h.block_size);
  }
  stats.flat_bytes = (flat_blocks + 1) * std::uint64_t{h.block_size};
  stats.blowup_vs_flat =
      static_cast<double>(stats.bytes) / static_cast<double>(stats.flat_bytes);
  if (!pk.empty()) {
    std::size_t total = 0;
    for (const auto &p : pk) total += p.size();
    stats.avg_packed = static_cast<double>(total) / static_cast<double>(h.count);
  }
  return stats;
}

LayoutStats build_layout(const ProximityGraph &g, const VectorDataset &ds,
                         const BlockSpec &spec,
                         const std::filesystem::path &path,
                         PackedLists *packed_out) {
  const std::uint32_t r =
      resolve_pack_count(spec, ds.vector_bytes(), g.max_degree());
  PackedLists packed = pack_neighbors(g, ds, r, spec.block_size);
  BlockSpec resolved = spec;
  resolved.pack_count = r;
  auto stats = write_layout(g, ds, resolved, packed, path);
  if (packed_out != nullptr) *packed_out = std::move(packed);
  return stats;
}

}  // namespace blockann
