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

#include "blockann/pq.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include "binary_io.h"
#include "blockann/distance.h"

namespace blockann {

void PQCodebook::decode(std::span<const std::uint8_t> code,
                        std::span<float> out) const {
  for (std::size_t m = 0; m < num_subspaces; ++m) {
    const float *c = centroid(m, code[m]);
    std::copy(c, c + sub_dims(m), out.begin() + sub_begin(m));
  }
}

PQCodes::PQCodes(std::uint32_t num_subspaces, std::vector<std::uint8_t> codes)
    : num_subspaces_(num_subspaces), codes_(std::move(codes)) {
  if (num_subspaces_ == 0 || codes_.size() % num_subspaces_ != 0) {
    throw Error("code buffer is not a whole number of codes");
  }
}

void QueryLut::build(const PQCodebook &cb, std::span<const float> query) {
  if (query.size() != cb.dims) throw Error("query dimension mismatch");
  num_subspaces_ = cb.num_subspaces;
  num_centroids_ = cb.num_centroids;
  table_.resize(std::size_t{num_subspaces_} * num_centroids_);
  for (std::size_t m = 0; m < num_subspaces_; ++m) {
    const float *q = query.data() + cb.sub_begin(m);
    const std::size_t sd = cb.sub_dims(m);
    float *row = table_.data() + m * num_centroids_;
    for (std::size_t j = 0; j < num_centroids_; ++j) {
      row[j] = blockann::distance(cb.metric, q, cb.centroid(m, j), sd);
    }
  }
}

namespace {

// Index of the nearest row of `centers` (k x dims) to v; ties to smaller.
std::size_t nearest_center(const float *v, const float *centers, std::size_t k,
                           std::size_t dims) {
  std::size_t best = 0;
  float best_d = std::numeric_limits<float>::infinity();
  for (std::size_t j = 0; j < k; ++j) {
    const float d = l2_sqr(v, centers + j * dims, dims);
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

void kmeans(const std::vector<float> &points, std::size_t n, std::size_t dims,
            std::size_t k, std::uint32_t iterations, std::mt19937_64 &rng,
            float *centers) {
  // k-means++ seeding.
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  std::size_t chosen = first(rng);
  std::copy_n(points.data() + chosen * dims, dims, centers);
  std::vector<double> min_d(n, std::numeric_limits<double>::infinity());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t c = 1; c < k; ++c) {
    const float *last = centers + (c - 1) * dims;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      min_d[i] = std::min<double>(min_d[i],
                                  l2_sqr(points.data() + i * dims, last, dims));
      total += min_d[i];
    }
    if (total <= 0.0) {
      chosen = first(rng);
    } else {
      double target = unit(rng) * total;
      chosen = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        target -= min_d[i];
        if (target < 0.0 && min_d[i] > 0.0) {
          chosen = i;
          break;
        }
      }
    }
    std::copy_n(points.data() + chosen * dims, dims, centers + c * dims);
  }

  std::vector<std::size_t> assign(n, k);
  std::vector<double> sums(k * dims);
  std::vector<std::size_t> sizes(k);
  for (std::uint32_t it = 0; it < iterations; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t a =
          nearest_center(points.data() + i * dims, centers, k, dims);
      if (a != assign[i]) {
        assign[i] = a;
        changed = true;
      }
    }
    // A stable assignment is a fixed point: further rounds change nothing.
    if (!changed) break;
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(sizes.begin(), sizes.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const float *p = points.data() + i * dims;
      double *s = sums.data() + assign[i] * dims;
      for (std::size_t d = 0; d < dims; ++d) s[d] += p[d];
      ++sizes[assign[i]];
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (sizes[j] == 0) continue;  // empty cluster keeps its centroid
      for (std::size_t d = 0; d < dims; ++d) {
        centers[j * dims + d] =
            static_cast<float>(sums[j * dims + d] / static_cast<double>(sizes[j]));
      }
    }
  }
}

}  // namespace

PQCodebook train_pq(const VectorDataset &sample, const PQTrainParams &params) {
  const std::uint32_t M = params.num_subspaces;
  const std::uint32_t K = params.num_centroids;
  if (M == 0 || M > sample.dims()) {
    throw Error("PQ subspace count " + std::to_string(M) +
                " must be in [1, dims=" + std::to_string(sample.dims()) + "]");
  }
  if (K == 0 || K > 256) throw Error("PQ centroid count must be in [1, 256]");
  if (K > sample.count()) {
    throw Error("PQ needs at least K=" + std::to_string(K) +
                " training vectors, got " + std::to_string(sample.count()));
  }
  PQCodebook cb;
  cb.num_subspaces = M;
  cb.num_centroids = K;
  cb.dims = static_cast<std::uint32_t>(sample.dims());
  cb.metric = sample.metric();
  cb.centroids.assign(std::size_t{K} * sample.dims(), 0.0f);

  std::mt19937_64 rng(params.seed);
  const std::size_t n = sample.count();
  std::vector<float> sub;
  for (std::size_t m = 0; m < M; ++m) {
    const std::size_t begin = cb.sub_begin(m);
    const std::size_t sd = cb.sub_dims(m);
    sub.resize(n * sd);
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = sample.row(i);
      std::copy_n(r.data() + begin, sd, sub.data() + i * sd);
    }
    kmeans(sub, n, sd, K, params.iterations, rng, cb.centroid(m, 0));
  }
  return cb;
}

std::vector<std::uint8_t> encode_vector(const PQCodebook &cb,
                                        std::span<const float> v) {
  if (v.size() != cb.dims) {
    throw Error("cannot encode a " + std::to_string(v.size()) +
                "-dim vector with a " + std::to_string(cb.dims) +
                "-dim codebook");
  }
  std::vector<std::uint8_t> code(cb.num_subspaces);
  for (std::size_t m = 0; m < cb.num_subspaces; ++m) {
    code[m] = static_cast<std::uint8_t>(
        nearest_center(v.data() + cb.sub_begin(m), cb.centroid(m, 0),
                       cb.num_centroids, cb.sub_dims(m)));
  }
  return code;
}

PQCodes encode(const PQCodebook &cb, const VectorDataset &ds,
               std::size_t threads) {
  if (ds.dims() != cb.dims) {
    throw Error("dataset dimension " + std::to_string(ds.dims()) +
                " does not match codebook dimension " +
                std::to_string(cb.dims));
  }
  std::vector<std::uint8_t> codes(ds.count() * cb.num_subspaces);
  threads = std::max<std::size_t>(1, std::min(threads, ds.count()));
  auto work = [&](std::size_t t) {
    for (std::size_t i = t; i < ds.count(); i += threads) {
      const auto c = encode_vector(cb, ds.row(i));
      std::copy(c.begin(), c.end(), codes.begin() + i * cb.num_subspaces);
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work, t);
  }
  return PQCodes(cb.num_subspaces, std::move(codes));
}

float approx_dist(const PQCodes &codes, const QueryLut &lut, node_id id) {
  if (id >= codes.count()) {
    throw Error("node id " + std::to_string(id) + " out of range for " +
                std::to_string(codes.count()) + " codes");
  }
  return lut.distance(codes.code(id));
}

double reconstruction_mse(const PQCodebook &cb, const VectorDataset &ds) {
  std::vector<float> rec(cb.dims);
  double total = 0.0;
  for (std::size_t i = 0; i < ds.count(); ++i) {
    const auto code = encode_vector(cb, ds.row(i));
    cb.decode(code, rec);
    total += l2_sqr(ds.row(i).data(), rec.data(), cb.dims);
  }
  return total / static_cast<double>(ds.count());
}

void save_codebook(const PQCodebook &cb, const std::filesystem::path &path) {
  auto out = detail::open_output(path.string());
  detail::write_pod(out, cb.num_subspaces);
  detail::write_pod(out, cb.num_centroids);
  detail::write_pod(out, cb.dims);
  detail::write_pod(out, static_cast<std::uint8_t>(cb.metric));
  detail::write_array<float>(out, cb.centroids);
  if (!out) throw Error("write failed for " + path.string());
}

PQCodebook load_codebook(const std::filesystem::path &path) {
  auto in = detail::open_input(path.string());
  PQCodebook cb;
  cb.num_subspaces = detail::read_pod<std::uint32_t>(in, "codebook M");
  cb.num_centroids = detail::read_pod<std::uint32_t>(in, "codebook K");
  cb.dims = detail::read_pod<std::uint32_t>(in, "codebook dims");
  const auto metric = detail::read_pod<std::uint8_t>(in, "codebook metric");
  if (cb.num_subspaces == 0 || cb.num_subspaces > cb.dims ||
      cb.num_centroids == 0 || cb.num_centroids > 256 || metric > 2) {
    throw Error(path.string() + ": malformed codebook header");
  }
  cb.metric = static_cast<Metric>(metric);
  cb.centroids.resize(std::size_t{cb.num_centroids} * cb.dims);
  detail::read_array<float>(in, cb.centroids, "codebook centroids");
  for (float c : cb.centroids) {
    if (!std::isfinite(c)) throw Error(path.string() + ": non-finite centroid");
  }
  return cb;
}

void save_codes(const PQCodes &codes, const std::filesystem::path &path) {
  auto out = detail::open_output(path.string());
  detail::write_array<std::uint8_t>(out, codes.raw());
  if (!out) throw Error("write failed for " + path.string());
}

PQCodes load_codes(const std::filesystem::path &path,
                   std::uint32_t num_subspaces) {
  auto in = detail::open_input(path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  std::vector<std::uint8_t> codes(size);
  detail::read_array<std::uint8_t>(in, codes, "PQ codes");
  return PQCodes(num_subspaces, std::move(codes));
}

}  // namespace blockann
