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

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <exception>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string_view>
#include <thread>
#include <vector>

#include "blockann/layout.h"
#include "blockann/types.h"

namespace blockann {

// kSync reads each block when it is consumed. kAsync submits reads to the IO
// service and consumes them in completion order; kAsyncDeterministic does the
// same but consumes in issue order, which makes results identical to kSync.
enum class IoMode { kSync, kAsync, kAsyncDeterministic };

std::string_view to_string(IoMode m);
IoMode parse_io_mode(std::string_view s);

// Value of BLOCKANN_IO_MODE, if set.
std::optional<IoMode> io_mode_from_env();

// Block-aligned heap buffer suitable for O_DIRECT reads.
class AlignedBuffer {
 public:
  AlignedBuffer() = default;
  explicit AlignedBuffer(std::size_t size);

  std::span<std::byte> span() { return {data_.get(), size_}; }
  std::span<const std::byte> span() const { return {data_.get(), size_}; }
  std::size_t size() const { return size_; }

 private:
  struct Free {
    void operator()(std::byte *p) const;
  };
  std::unique_ptr<std::byte, Free> data_;
  std::size_t size_ = 0;
};

struct IoCompletion {
  std::uint64_t tag = 0;
  std::exception_ptr error;
};

// Per-query event queue; completions can be taken one at a time.
class CompletionQueue {
 public:
  void push(IoCompletion c);
  IoCompletion wait();
  std::optional<IoCompletion> try_pop();

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<IoCompletion> done_;
};

// Pool of IO threads shared by all query workers. Each submitted read fills
// its buffer and posts a completion to the caller's queue.
class IoService {
 public:
  explicit IoService(std::size_t threads = 8);
  ~IoService();
  IoService(const IoService &) = delete;
  IoService &operator=(const IoService &) = delete;

  void submit(const BlockSource &src, std::uint64_t block,
              std::span<std::byte> buffer, std::uint64_t tag,
              CompletionQueue &cq);

 private:
  struct Job {
    const BlockSource *src;
    std::uint64_t block;
    std::span<std::byte> buffer;
    std::uint64_t tag;
    CompletionQueue *cq;
  };
  void run();

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Job> jobs_;
  bool stop_ = false;
  std::vector<std::thread> threads_;
};

// The loading queue (requests in flight) and ready queue (fetched blocks not
// yet consumed) of one query. Each request lives in exactly one of them until
// next() hands it out, after which it is gone.
class PrefetchQueues {
 public:
  struct Ready {
    node_id node;
    std::size_t slot;  // caller-defined buffer slot
    std::span<const std::byte> block;
  };

  PrefetchQueues() = default;
  ~PrefetchQueues();
  PrefetchQueues(const PrefetchQueues &) = delete;
  PrefetchQueues &operator=(const PrefetchQueues &) = delete;

  // Waits for anything still in flight, then starts a fresh query.
  void reset(const BlockSource *src, IoService *io, IoMode mode);

  void issue(node_id node, std::uint64_t block, std::span<std::byte> buffer,
             std::size_t slot);

  // Blocks until a request is ready and hands it out. Requires outstanding().
  Ready next();

  std::size_t outstanding() const { return loading_ + ready_; }
  std::size_t loading_size() const { return loading_; }
  std::size_t ready_size() const { return ready_; }

 private:
  enum class State : std::uint8_t { kLoading, kReady, kConsumed };
  struct Entry {
    node_id node;
    std::uint64_t block;
    std::span<std::byte> buffer;
    std::size_t slot;
    State state;
    std::exception_ptr error;
  };

  void complete(const IoCompletion &c);
  void drain();
  Ready hand_out(std::uint64_t seq);

  const BlockSource *src_ = nullptr;
  IoService *io_ = nullptr;
  IoMode mode_ = IoMode::kSync;
  CompletionQueue cq_;
  std::vector<Entry> entries_;
  std::deque<std::uint64_t> issue_order_;
  std::deque<std::uint64_t> ready_order_;
  std::size_t loading_ = 0;
  std::size_t ready_ = 0;
};

}  // namespace blockann
