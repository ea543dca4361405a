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

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "blockann/types.h"

namespace blockann {

// Bounded candidate list ordered by (distance, id), with a visited flag per
// entry. Duplicate ids are the caller's responsibility (see SeenSet).
class NearestList {
 public:
  struct Entry {
    node_id id;
    float distance;
    bool visited;
  };

  explicit NearestList(std::size_t capacity = 0) : capacity_(capacity) {
    entries_.reserve(capacity + 1);
  }

  // Returns false when the list is full and the candidate ranks last.
  bool insert(node_id id, float distance) {
    const Neighbor n{id, distance};
    if (entries_.size() == capacity_ &&
        (capacity_ == 0 || !closer(n, {entries_.back().id,
                                       entries_.back().distance}))) {
      return false;
    }
    auto pos = std::upper_bound(
        entries_.begin(), entries_.end(), n, [](const Neighbor &a, const Entry &b) {
          return closer(a, {b.id, b.distance});
        });
    entries_.insert(pos, Entry{id, distance, false});
    if (entries_.size() > capacity_) entries_.pop_back();
    return true;
  }

  std::optional<std::size_t> first_unvisited() const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (!entries_[i].visited) return i;
    }
    return std::nullopt;
  }

  // Position of id, or nullopt.
  std::optional<std::size_t> find(node_id id) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].id == id) return i;
    }
    return std::nullopt;
  }

  void set_visited(std::size_t i) { entries_[i].visited = true; }
  void truncate(std::size_t n) {
    if (entries_.size() > n) entries_.resize(n);
  }
  void clear() { entries_.clear(); }
  void reset(std::size_t capacity) {
    capacity_ = capacity;
    entries_.clear();
    entries_.reserve(capacity + 1);
  }

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return entries_.empty(); }
  const Entry &operator[](std::size_t i) const { return entries_[i]; }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

 private:
  std::size_t capacity_;
  std::vector<Entry> entries_;
};

// Generation-stamped membership set over [0, n); reset is O(1).
class SeenSet {
 public:
  void reset(std::size_t n) {
    if (stamps_.size() != n) {
      stamps_.assign(n, 0);
      current_ = 0;
    }
    if (++current_ == 0) {
      std::fill(stamps_.begin(), stamps_.end(), 0);
      current_ = 1;
    }
  }
  // True when id was not yet present.
  bool insert(node_id id) {
    if (stamps_[id] == current_) return false;
    stamps_[id] = current_;
    return true;
  }
  bool contains(node_id id) const { return stamps_[id] == current_; }

 private:
  std::vector<std::uint32_t> stamps_;
  std::uint32_t current_ = 0;
};

}  // namespace blockann
