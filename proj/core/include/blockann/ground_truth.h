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
#include <span>
#include <vector>

#include "blockann/dataset.h"
#include "blockann/types.h"

namespace blockann {

// Exact top-k of ds for query, ordered by (distance, id).
std::vector<Neighbor> brute_force_topk(const VectorDataset &ds,
                                       std::span<const float> query,
                                       std::size_t k);

struct GroundTruth {
  std::uint32_t k = 0;
  std::vector<std::vector<Neighbor>> lists;  // one per query, length k
};

GroundTruth compute_ground_truth(const VectorDataset &base,
                                 const VectorDataset &queries, std::size_t k,
                                 std::size_t threads = 1);

// Layout: k (u32), then per query k x u32 ids followed by k x f32 distances.
void save_ground_truth(const GroundTruth &gt,
                       const std::filesystem::path &path);
GroundTruth load_ground_truth(const std::filesystem::path &path);

// |first min(|results|, k) ids  intersect  gt top-k| / k.
double compute_recall(std::span<const node_id> results,
                      std::span<const Neighbor> gt, std::size_t k);

}  // namespace blockann
