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

#include "blockann/io.h"

#include <algorithm>
#include <cstdlib>
#include <new>
#include <string>

namespace blockann {

std::string_view to_string(IoMode m) {
  switch (m) {
    case IoMode::kSync:
      return "sync";
    case IoMode::kAsync:
      return "async";
    case IoMode::kAsyncDeterministic:
      return "async_deterministic";
  }
  return "unknown";
}

IoMode parse_io_mode(std::string_view s) {
  if (s == "sync") return IoMode::kSync;
  if (s == "async") return IoMode::kAsync;
  if (s == "async_deterministic" || s == "async-deterministic") {
    return IoMode::kAsyncDeterministic;
  }
  throw Error("unknown io mode: " + std::string(s));
}

std::optional<IoMode> io_mode_from_env() {
  const char *v = std::getenv("BLOCKANN_IO_MODE");
  if (v == nullptr || *v == '\0') return std::nullopt;
  return parse_io_mode(v);
}

AlignedBuffer::AlignedBuffer(std::size_t size) : size_(size) {
  void *p = nullptr;
  const std::size_t rounded = std::max<std::size_t>(4096, (size + 4095) / 4096 * 4096);
  if (posix_memalign(&p, 4096, rounded) != 0) throw std::bad_alloc();
  data_.reset(static_cast<std::byte *>(p));
}

void AlignedBuffer::Free::operator()(std::byte *p) const { std::free(p); }

void CompletionQueue::push(IoCompletion c) {
  {
    std::lock_guard lock(mu_);
    done_.push_back(std::move(c));
  }
  cv_.notify_one();
}

IoCompletion CompletionQueue::wait() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return !done_.empty(); });
  IoCompletion c = std::move(done_.front());
  done_.pop_front();
  return c;
}

std::optional<IoCompletion> CompletionQueue::try_pop() {
  std::lock_guard lock(mu_);
  if (done_.empty()) return std::nullopt;
  IoCompletion c = std::move(done_.front());
  done_.pop_front();
  return c;
}

IoService::IoService(std::size_t threads) {
  threads = std::max<std::size_t>(1, threads);
  for (std::size_t i = 0; i < threads; ++i) threads_.emplace_back([this] { run(); });
}

IoService::~IoService() {
  {
    std::lock_guard lock(mu_);
    stop_ = true;
  }
  cv_.notify_all();
  for (auto &t : threads_) t.join();
}

void IoService::submit(const BlockSource &src, std::uint64_t block,
                       std::span<std::byte> buffer, std::uint64_t tag,
                       CompletionQueue &cq) {
  {
    std::lock_guard lock(mu_);
    jobs_.push_back({&src, block, buffer, tag, &cq});
  }
  cv_.notify_one();
}

void IoService::run() {
  for (;;) {
    Job job;
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [&] { return stop_ || !jobs_.empty(); });
      if (jobs_.empty()) return;  // stopping and drained
      job = jobs_.front();
      jobs_.pop_front();
    }
    IoCompletion c{job.tag, nullptr};
    try {
      job.src->read(job.block, job.buffer);
    } catch (...) {
      c.error = std::current_exception();
    }
    job.cq->push(std::move(c));
  }
}

PrefetchQueues::~PrefetchQueues() { drain(); }

void PrefetchQueues::reset(const BlockSource *src, IoService *io, IoMode mode) {
  drain();
  if (mode != IoMode::kSync && io == nullptr) {
    throw Error(std::string("io mode ") + std::string(to_string(mode)) +
                " needs an IoService");
  }
  src_ = src;
  io_ = io;
  mode_ = mode;
  entries_.clear();
  issue_order_.clear();
  ready_order_.clear();
  loading_ = 0;
  ready_ = 0;
}

void PrefetchQueues::drain() {
  if (mode_ == IoMode::kSync) return;
  while (loading_ > 0) complete(cq_.wait());
}

void PrefetchQueues::issue(node_id node, std::uint64_t block,
                           std::span<std::byte> buffer, std::size_t slot) {
  const std::uint64_t seq = entries_.size();
  entries_.push_back({node, block, buffer, slot, State::kLoading, nullptr});
  issue_order_.push_back(seq);
  ++loading_;
  if (mode_ != IoMode::kSync) io_->submit(*src_, block, buffer, seq, cq_);
}

void PrefetchQueues::complete(const IoCompletion &c) {
  Entry &e = entries_[c.tag];
  e.state = State::kReady;
  e.error = c.error;
  --loading_;
  ++ready_;
  ready_order_.push_back(c.tag);
}

PrefetchQueues::Ready PrefetchQueues::hand_out(std::uint64_t seq) {
  Entry &e = entries_[seq];
  e.state = State::kConsumed;
  --ready_;
  if (e.error) {
    drain();
    try {
      std::rethrow_exception(e.error);
    } catch (const IoError &err) {
      throw IoError("reading block of node " + std::to_string(e.node) + ": " +
                        err.what(),
                    src_->header().block_offset(e.block));
    } catch (const std::exception &err) {
      throw IoError("reading block of node " + std::to_string(e.node) + ": " +
                        err.what(),
                    src_->header().block_offset(e.block));
    }
  }
  return {e.node, e.slot, e.buffer};
}

PrefetchQueues::Ready PrefetchQueues::next() {
  if (outstanding() == 0) throw Error("no outstanding block requests");
  switch (mode_) {
    case IoMode::kSync: {
      const std::uint64_t seq = issue_order_.front();
      issue_order_.pop_front();
      Entry &e = entries_[seq];
      --loading_;
      ++ready_;
      try {
        src_->read(e.block, e.buffer);
      } catch (...) {
        e.error = std::current_exception();
      }
      return hand_out(seq);
    }
    case IoMode::kAsyncDeterministic: {
      const std::uint64_t seq = issue_order_.front();
      while (entries_[seq].state != State::kReady) complete(cq_.wait());
      issue_order_.pop_front();
      ready_order_.erase(
          std::find(ready_order_.begin(), ready_order_.end(), seq));
      return hand_out(seq);
    }
    case IoMode::kAsync: {
      while (auto c = cq_.try_pop()) complete(*c);
      if (ready_order_.empty()) complete(cq_.wait());
      const std::uint64_t seq = ready_order_.front();
      ready_order_.pop_front();
      issue_order_.erase(
          std::find(issue_order_.begin(), issue_order_.end(), seq));
      return hand_out(seq);
    }
  }
  throw Error("unreachable io mode");
}

}  // namespace blockann
