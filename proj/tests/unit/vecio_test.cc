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


#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "blockann/dataset.h"
#include "blockann/ground_truth.h"
#include "test_util.h"

using namespace blockann;
using blockann::testing_util::random_dataset;
using blockann::testing_util::TempDir;

namespace {

template <typename T>
void write_vecs(const std::filesystem::path &p,
                const std::vector<std::vector<T>> &rows) {
  std::ofstream out(p, std::ios::binary);
  for (const auto &r : rows) {
    const std::int32_t d = static_cast<std::int32_t>(r.size());
    out.write(reinterpret_cast<const char *>(&d), sizeof d);
    out.write(reinterpret_cast<const char *>(r.data()), r.size() * sizeof(T));
  }
}

VectorDataset from_rows(const std::vector<std::vector<float>> &rows,
                        Metric metric = Metric::kL2) {
  std::vector<float> v;
  for (const auto &r : rows) v.insert(v.end(), r.begin(), r.end());
  return VectorDataset(rows.size(), rows[0].size(), ScalarType::kF32, metric,
                       std::move(v));
}

// Second scan, written independently of brute_force_topk: full sort of
// (distance, id) pairs in double precision.
std::vector<node_id> scan_topk(const VectorDataset &ds,
                               std::span<const float> q, std::size_t k) {
  std::vector<std::pair<double, node_id>> all;
  for (std::size_t i = 0; i < ds.count(); ++i) {
    const double d = ds.metric() == Metric::kL2
                         ? testing_util::ref_l2(ds.row(i), q)
                         : -testing_util::ref_ip(ds.row(i), q);
    all.emplace_back(d, static_cast<node_id>(i));
  }
  std::sort(all.begin(), all.end());
  std::vector<node_id> ids;
  for (std::size_t i = 0; i < k; ++i) ids.push_back(all[i].second);
  return ids;
}

}  // namespace

TEST(LoadDataset, FvecsTwoRecords) {
  TempDir dir;
  write_vecs<float>(dir / "a.fvecs", {{1, 2, 3, 4}, {5, 6, 7, 8}});
  auto ds = load_dataset(dir / "a.fvecs", FileFormat::kFvecs, Metric::kL2);
  EXPECT_EQ(ds.count(), 2u);
  EXPECT_EQ(ds.dims(), 4u);
  EXPECT_EQ(ds.scalar(), ScalarType::kF32);
  EXPECT_FLOAT_EQ(ds.row(1)[2], 7.0f);
}

TEST(LoadDataset, BvecsShortPayloadRejected) {
  TempDir dir;
  {
    std::ofstream out(dir / "bad.bvecs", std::ios::binary);
    const std::int32_t d = 128;
    out.write(reinterpret_cast<const char *>(&d), sizeof d);
    std::vector<char> payload(100, 1);
    out.write(payload.data(), payload.size());
  }
  EXPECT_THROW(load_dataset(dir / "bad.bvecs", FileFormat::kBvecs, Metric::kL2),
               Error);
}

TEST(LoadDataset, BvecsDecodesBytes) {
  TempDir dir;
  write_vecs<std::uint8_t>(dir / "b.bvecs", {{0, 7, 255}, {1, 2, 3}});
  auto ds = load_dataset(dir / "b.bvecs", FileFormat::kBvecs, Metric::kL2);
  EXPECT_EQ(ds.scalar(), ScalarType::kU8);
  EXPECT_EQ(ds.vector_bytes(), 3u);
  EXPECT_FLOAT_EQ(ds.row(0)[2], 255.0f);
}

TEST(LoadDataset, MismatchedRecordDimensions) {
  TempDir dir;
  write_vecs<float>(dir / "m.fvecs", {{1, 2, 3, 4}, {5, 6, 7, 8, 9, 10, 11}});
  EXPECT_THROW(load_dataset(dir / "m.fvecs", FileFormat::kFvecs, Metric::kL2),
               Error);
}

TEST(LoadDataset, EmptyFileRejected) {
  TempDir dir;
  { std::ofstream out(dir / "e.fvecs"); }
  EXPECT_THROW(load_dataset(dir / "e.fvecs", FileFormat::kFvecs, Metric::kL2),
               Error);
}

TEST(LoadDataset, CosineNormalizesOnIngest) {
  TempDir dir;
  write_vecs<float>(dir / "c.fvecs", {{3, 4}});
  auto ds = load_dataset(dir / "c.fvecs", FileFormat::kFvecs, Metric::kCosine);
  EXPECT_NEAR(ds.row(0)[0], 0.6f, 1e-6);
  EXPECT_NEAR(ds.row(0)[1], 0.8f, 1e-6);
}

TEST(LoadDataset, RawBinRoundTrip) {
  TempDir dir;
  auto ds = random_dataset(17, 5, 3);
  save_dataset(ds, dir / "x.bin", FileFormat::kRawBin);
  auto back = load_dataset(dir / "x.bin", FileFormat::kRawBin, Metric::kL2);
  ASSERT_EQ(back.count(), 17u);
  EXPECT_TRUE(std::equal(ds.values().begin(), ds.values().end(),
                         back.values().begin()));
  // Header is count u64, dims u32, scalar u8.
  EXPECT_EQ(std::filesystem::file_size(dir / "x.bin"), 8u + 4 + 1 + 17 * 5 * 4);
}

TEST(LoadDataset, RawBinTruncatedRejected) {
  TempDir dir;
  auto ds = random_dataset(4, 3, 3);
  save_dataset(ds, dir / "x.bin", FileFormat::kRawBin);
  std::filesystem::resize_file(dir / "x.bin",
                               std::filesystem::file_size(dir / "x.bin") - 4);
  EXPECT_THROW(load_dataset(dir / "x.bin", FileFormat::kRawBin, Metric::kL2),
               Error);
}

TEST(SampleDataset, FullFractionIsIdentity) {
  auto ds = random_dataset(50, 4, 1);
  auto s = sample_dataset(ds, 1.0, 9);
  ASSERT_EQ(s.data.count(), 50u);
  for (std::size_t i = 0; i < 50; ++i) {
    EXPECT_EQ(s.id_map[i], i);
    EXPECT_TRUE(std::equal(ds.row(i).begin(), ds.row(i).end(),
                           s.data.row(i).begin()));
  }
}

TEST(SampleDataset, HalfPercentOfHundredThousand) {
  // 0.5% of a 100K corpus is 500 vectors.
  auto ds = random_dataset(100000, 2, 1);
  auto s = sample_dataset(ds, 0.005, 4);
  EXPECT_EQ(s.data.count(), 500u);
  std::vector<node_id> ids = s.id_map;
  std::sort(ids.begin(), ids.end());
  EXPECT_EQ(std::adjacent_find(ids.begin(), ids.end()), ids.end());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    EXPECT_TRUE(std::equal(ds.row(s.id_map[i]).begin(),
                           ds.row(s.id_map[i]).end(), s.data.row(i).begin()));
  }
}

TEST(SampleDataset, SeedDeterminism) {
  auto ds = random_dataset(1000, 3, 1);
  auto a = sample_dataset(ds, 0.1, 77);
  auto b = sample_dataset(ds, 0.1, 77);
  auto c = sample_dataset(ds, 0.1, 78);
  EXPECT_EQ(a.id_map, b.id_map);
  EXPECT_NE(a.id_map, c.id_map);
}

TEST(SampleDataset, FractionOutOfRange) {
  auto ds = random_dataset(10, 3, 1);
  EXPECT_THROW(sample_dataset(ds, 0.0, 1), Error);
  EXPECT_THROW(sample_dataset(ds, 1.5, 1), Error);
  EXPECT_THROW(sample_dataset(ds, 0.01, 1), Error);  // selects no vector
}

TEST(BruteForce, IdentityQuery) {
  auto ds = random_dataset(100, 8, 2);
  auto r = brute_force_topk(ds, ds.row(42), 1);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].id, 42u);
  EXPECT_EQ(r[0].distance, 0.0f);
}

TEST(BruteForce, OneDimensionalByHand) {
  // |0.6-0|=0.6, |0.6-1|=0.4, |0.6-5|=4.4 -> ids 1 then 0.
  auto ds = from_rows({{0.0f}, {1.0f}, {5.0f}});
  const float q[] = {0.6f};
  auto r = brute_force_topk(ds, q, 2);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].id, 1u);
  EXPECT_EQ(r[1].id, 0u);
}

TEST(BruteForce, DuplicateTieGoesToSmallerId) {
  std::vector<std::vector<float>> rows;
  for (int i = 0; i < 10; ++i) rows.push_back({float(i) * 10, 1.0f});
  rows[7] = rows[3];
  auto ds = from_rows(rows);
  auto r = brute_force_topk(ds, rows[3], 1);
  EXPECT_EQ(r[0].id, 3u);
}

TEST(BruteForce, KAboveCountRejected) {
  auto ds = random_dataset(5, 2, 2);
  EXPECT_THROW(brute_force_topk(ds, ds.row(0), 6), Error);
}

TEST(BruteForce, AgreesWithIndependentScan) {
  auto ds = random_dataset(2000, 16, 5);
  auto qs = random_dataset(10, 16, 6);
  for (std::size_t q = 0; q < qs.count(); ++q) {
    auto r = brute_force_topk(ds, qs.row(q), 10);
    auto oracle = scan_topk(ds, qs.row(q), 10);
    std::vector<node_id> ids;
    for (const auto &n : r) ids.push_back(n.id);
    EXPECT_EQ(ids, oracle) << "query " << q;
  }
}

TEST(BruteForce, RowPermutationRelabelsIds) {
  auto ds = random_dataset(300, 6, 8);
  std::vector<node_id> perm(300);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(3));
  auto shuffled = select_rows(ds, perm);
  auto qs = random_dataset(5, 6, 9);
  for (std::size_t q = 0; q < 5; ++q) {
    auto a = brute_force_topk(ds, qs.row(q), 5);
    auto b = brute_force_topk(shuffled, qs.row(q), 5);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(a[i].id, perm[b[i].id]);
  }
}

TEST(BruteForce, CosineMatchesIpOnNormalizedData) {
  TempDir dir;
  auto raw = random_dataset(400, 12, 10);
  save_dataset(raw, dir / "raw.fvecs", FileFormat::kFvecs);
  auto cos = load_dataset(dir / "raw.fvecs", FileFormat::kFvecs, Metric::kCosine);
  auto qs = random_dataset(5, 12, 11);
  for (std::size_t q = 0; q < 5; ++q) {
    // Oracle: cosine similarity on the raw vectors.
    std::vector<std::pair<double, node_id>> sims;
    const auto qv = qs.row(q);
    for (std::size_t i = 0; i < raw.count(); ++i) {
      const double c = testing_util::ref_ip(raw.row(i), qv) /
                       std::sqrt(testing_util::ref_ip(raw.row(i), raw.row(i)));
      sims.emplace_back(-c, node_id(i));
    }
    std::sort(sims.begin(), sims.end());
    auto r = brute_force_topk(cos, qv, 5);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(r[i].id, sims[i].second);
  }
}

TEST(GroundTruthFile, RoundTripAndSortedLists) {
  TempDir dir;
  auto ds = random_dataset(500, 8, 12);
  auto qs = random_dataset(20, 8, 13);
  auto gt = compute_ground_truth(ds, qs, 10, 3);
  save_ground_truth(gt, dir / "gt.bin");
  EXPECT_EQ(std::filesystem::file_size(dir / "gt.bin"), 4u + 20 * 10 * 8);
  auto back = load_ground_truth(dir / "gt.bin");
  ASSERT_EQ(back.k, 10u);
  ASSERT_EQ(back.lists.size(), 20u);
  for (std::size_t q = 0; q < 20; ++q) {
    EXPECT_EQ(back.lists[q], gt.lists[q]);
    EXPECT_TRUE(std::is_sorted(gt.lists[q].begin(), gt.lists[q].end(), closer));
  }
  // Threaded computation matches a single-thread run.
  auto single = compute_ground_truth(ds, qs, 10, 1);
  EXPECT_EQ(single.lists, gt.lists);
}

TEST(Recall, Basics) {
  std::vector<Neighbor> gt;
  std::vector<node_id> ids;
  for (node_id i = 0; i < 10; ++i) {
    gt.push_back({i, float(i)});
    ids.push_back(i);
  }
  EXPECT_DOUBLE_EQ(compute_recall(ids, gt, 10), 1.0);
  ids[9] = 99;
  EXPECT_DOUBLE_EQ(compute_recall(ids, gt, 10), 0.9);
  EXPECT_DOUBLE_EQ(compute_recall({}, gt, 10), 0.0);
  // Only the first k results are scored.
  std::vector<node_id> longer{99, 98, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  EXPECT_DOUBLE_EQ(compute_recall(longer, gt, 10), 0.8);
}
