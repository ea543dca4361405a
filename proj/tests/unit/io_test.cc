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


#include <chrono>
#include <cstdlib>
#include <cstring>
#include <set>
#include <thread>
#include <vector>

#include <gtest/gtest.h>

#include "blockann/io.h"
#include "blockann/layout.h"

using namespace blockann;

namespace {

// Block b is filled with the byte value b; selected blocks are slow or fail.
class FakeSource final : public BlockSource {
 public:
  FakeSource() {
    header_.count = 1000;
    header_.dims = 4;
    header_.max_degree = 4;
  }
  const LayoutHeader &header() const override { return header_; }
  void read(std::uint64_t block, std::span<std::byte> out) const override {
    if (block == fail_block) throw IoError("injected failure", header_.block_offset(block));
    if (block == slow_block) {
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    std::memset(out.data(), static_cast<int>(block & 0xff), out.size());
  }
  std::uint64_t slow_block = ~0ULL;
  std::uint64_t fail_block = ~0ULL;

 private:
  LayoutHeader header_;
};

struct Harness {
  explicit Harness(std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) buffers.emplace_back(4096);
  }
  std::vector<AlignedBuffer> buffers;
};

}  // namespace

TEST(IoModeNames, ParseAndEnvOverride) {
  EXPECT_EQ(parse_io_mode("sync"), IoMode::kSync);
  EXPECT_EQ(parse_io_mode("async"), IoMode::kAsync);
  EXPECT_EQ(parse_io_mode("async_deterministic"), IoMode::kAsyncDeterministic);
  EXPECT_THROW(parse_io_mode("uring"), Error);
  ::unsetenv("BLOCKANN_IO_MODE");
  EXPECT_FALSE(io_mode_from_env().has_value());
  ::setenv("BLOCKANN_IO_MODE", "async_deterministic", 1);
  EXPECT_EQ(io_mode_from_env(), IoMode::kAsyncDeterministic);
  ::unsetenv("BLOCKANN_IO_MODE");
}

TEST(AlignedBufferTest, BlockAligned) {
  AlignedBuffer b(100);
  EXPECT_EQ(reinterpret_cast<std::uintptr_t>(b.span().data()) % 4096, 0u);
  EXPECT_EQ(b.size(), 100u);
}

TEST(PrefetchQueuesTest, SyncReadsInIssueOrder) {
  FakeSource src;
  Harness h(4);
  PrefetchQueues q;
  q.reset(&src, nullptr, IoMode::kSync);
  for (std::size_t i = 0; i < 4; ++i) q.issue(node_id(i), 10 + i, h.buffers[i].span(), i);
  EXPECT_EQ(q.outstanding(), 4u);
  EXPECT_EQ(q.loading_size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    auto r = q.next();
    EXPECT_EQ(r.node, i);
    EXPECT_EQ(r.slot, i);
    EXPECT_EQ(r.block[17], std::byte(10 + i));
  }
  EXPECT_EQ(q.outstanding(), 0u);
  EXPECT_THROW(q.next(), Error);
}

TEST(PrefetchQueuesTest, AsyncNeedsService) {
  FakeSource src;
  PrefetchQueues q;
  EXPECT_THROW(q.reset(&src, nullptr, IoMode::kAsync), Error);
}

TEST(PrefetchQueuesTest, DeterministicModeKeepsIssueOrderDespiteSlowBlock) {
  FakeSource src;
  src.slow_block = 0;
  IoService io(4);
  Harness h(4);
  PrefetchQueues q;
  q.reset(&src, &io, IoMode::kAsyncDeterministic);
  for (std::size_t i = 0; i < 4; ++i) q.issue(node_id(i), i, h.buffers[i].span(), i);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(q.next().node, i);
}

TEST(PrefetchQueuesTest, CompletionOrderModeServesFastBlocksFirst) {
  FakeSource src;
  src.slow_block = 0;
  IoService io(4);
  Harness h(4);
  PrefetchQueues q;
  q.reset(&src, &io, IoMode::kAsync);
  for (std::size_t i = 0; i < 4; ++i) q.issue(node_id(i), i, h.buffers[i].span(), i);
  std::vector<node_id> order;
  std::set<std::size_t> slots;
  while (q.outstanding() > 0) {
    auto r = q.next();
    order.push_back(r.node);
    slots.insert(r.slot);
    EXPECT_EQ(r.block[0], std::byte(r.node));
  }
  ASSERT_EQ(order.size(), 4u);
  EXPECT_EQ(order.back(), 0u);  // the slow block arrives last
  EXPECT_EQ(slots.size(), 4u);  // each request consumed exactly once
}

TEST(PrefetchQueuesTest, FailureCarriesBlockOffset) {
  for (IoMode mode : {IoMode::kSync, IoMode::kAsync, IoMode::kAsyncDeterministic}) {
    FakeSource src;
    src.fail_block = 7;
    IoService io(2);
    Harness h(2);
    PrefetchQueues q;
    q.reset(&src, &io, mode);
    q.issue(1, 3, h.buffers[0].span(), 0);
    q.issue(2, 7, h.buffers[1].span(), 1);
    bool failed = false;
    try {
      while (q.outstanding() > 0) q.next();
    } catch (const IoError &e) {
      failed = true;
      EXPECT_EQ(e.offset(), 8u * 4096);
      EXPECT_NE(std::string(e.what()).find("node 2"), std::string::npos);
    }
    EXPECT_TRUE(failed) << to_string(mode);
    // The queue is reusable after a failure.
    q.reset(&src, &io, mode);
    q.issue(5, 4, h.buffers[0].span(), 0);
    EXPECT_EQ(q.next().node, 5u);
  }
}

TEST(IoServiceTest, ManyOutstandingRequests) {
  FakeSource src;
  IoService io(8);
  const std::size_t n = 64;
  Harness h(n);
  PrefetchQueues q;
  q.reset(&src, &io, IoMode::kAsync);
  for (std::size_t i = 0; i < n; ++i) q.issue(node_id(i), i, h.buffers[i].span(), i);
  std::set<node_id> seen;
  while (q.outstanding() > 0) seen.insert(q.next().node);
  EXPECT_EQ(seen.size(), n);
}
