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

#include "blockann/ground_truth.h"

#include <algorithm>
#include <thread>
#include <unordered_set>

#include "binary_io.h"
#include "blockann/distance.h"

namespace blockann {

std::vector<Neighbor> brute_force_topk(const VectorDataset &ds,
                                       std::span<const float> query,
                                       std::size_t k) {
  if (query.size() != ds.dims()) {
    throw Error("query dimension " + std::to_string(query.size()) +
                " does not match dataset dimension " +
                std::to_string(ds.dims()));
  }
  if (k > ds.count()) {
    throw Error("k=" + std::to_string(k) + " exceeds dataset size " +
                std::to_string(ds.count()));
  }
  std::vector<Neighbor> all(ds.count());
  for (std::size_t i = 0; i < ds.count(); ++i) {
    all[i] = {static_cast<node_id>(i),
              distance(ds.metric(), ds.row(i).data(), query.data(), ds.dims())};
  }
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k),
                    all.end(), closer);
  all.resize(k);
  return all;
}

GroundTruth compute_ground_truth(const VectorDataset &base,
                                 const VectorDataset &queries, std::size_t k,
                                 std::size_t threads) {
  GroundTruth gt;
  gt.k = static_cast<std::uint32_t>(k);
  gt.lists.resize(queries.count());
  threads = std::max<std::size_t>(1, std::min(threads, queries.count()));
  auto work = [&](std::size_t t) {
    for (std::size_t q = t; q < queries.count(); q += threads) {
      gt.lists[q] = brute_force_topk(base, queries.row(q), k);
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work, t);
  }
  return gt;
}

void save_ground_truth(const GroundTruth &gt,
                       const std::filesystem::path &path) {
  auto out = detail::open_output(path.string());
  detail::write_pod<std::uint32_t>(out, gt.k);
  std::vector<std::uint32_t> ids(gt.k);
  std::vector<float> dists(gt.k);
  for (const auto &list : gt.lists) {
    if (list.size() != gt.k) throw Error("ground truth list length != k");
    for (std::size_t i = 0; i < list.size(); ++i) {
      ids[i] = list[i].id;
      dists[i] = list[i].distance;
    }
    detail::write_array<std::uint32_t>(out, ids);
    detail::write_array<float>(out, dists);
  }
  if (!out) throw Error("write failed for " + path.string());
}

GroundTruth load_ground_truth(const std::filesystem::path &path) {
  auto in = detail::open_input(path.string());
  in.seekg(0, std::ios::end);
  const auto file_size = static_cast<std::uint64_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  GroundTruth gt;
  gt.k = detail::read_pod<std::uint32_t>(in, "ground truth k");
  if (gt.k == 0) throw Error(path.string() + ": ground truth k is zero");
  const std::uint64_t record = std::uint64_t{gt.k} * 8;
  if ((file_size - 4) % record != 0) {
    throw Error(path.string() + ": truncated ground truth file");
  }
  gt.lists.resize((file_size - 4) / record);
  std::vector<std::uint32_t> ids(gt.k);
  std::vector<float> dists(gt.k);
  for (auto &list : gt.lists) {
    detail::read_array<std::uint32_t>(in, ids, "ground truth ids");
    detail::read_array<float>(in, dists, "ground truth distances");
    list.resize(gt.k);
    for (std::size_t i = 0; i < gt.k; ++i) list[i] = {ids[i], dists[i]};
  }
  return gt;
}

double compute_recall(std::span<const node_id> results,
                      std::span<const Neighbor> gt, std::size_t k) {
  if (k == 0) return 0.0;
  std::unordered_set<node_id> truth;
  for (std::size_t i = 0; i < std::min(k, gt.size()); ++i) {
    truth.insert(gt[i].id);
  }
  std::unordered_set<node_id> hit;
  for (std::size_t i = 0; i < std::min(k, results.size()); ++i) {
    if (truth.contains(results[i])) hit.insert(results[i]);
  }
  return static_cast<double>(hit.size()) / static_cast<double>(k);
}

}  // namespace blockann
