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

#include <cstdint>

namespace blockann {

// Per-query disk accounting. One read is one block-sized IO.
struct IOStats {
  std::uint64_t search_stage_reads = 0;
  std::uint64_t refinement_reads = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t nav_hops = 0;

  std::uint64_t total_reads() const {
    return search_stage_reads + refinement_reads;
  }

  IOStats &operator+=(const IOStats &o) {
    search_stage_reads += o.search_stage_reads;
    refinement_reads += o.refinement_reads;
    cache_hits += o.cache_hits;
    nav_hops += o.nav_hops;
    return *this;
  }

  friend bool operator==(const IOStats &, const IOStats &) = default;
};

}  // namespace blockann
