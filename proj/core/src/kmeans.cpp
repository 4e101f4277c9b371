// Copyright 2026-present the jpq project
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

#include "jpq/kmeans.hpp"

#include <algorithm>
#include <limits>

namespace jpq {
namespace detail {

namespace {

double sq_dist(const float* a, const float* b, std::uint32_t d) {
    double acc = 0.0;
    for (std::uint32_t i = 0; i < d; ++i) {
        const double diff = static_cast<double>(a[i]) - b[i];
        acc += diff * diff;
    }
    return acc;
}

// Assigns every point to its nearest centroid (ties -> smallest index).
// Returns the mean squared error; fills per-point distances when asked.
double assign_points(std::span<const float> points, std::size_t n, std::uint32_t d,
                     std::span<const float> centroids, std::uint32_t k,
                     std::vector<std::uint32_t>& assign, std::vector<double>* dists) {
    double total = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        const float* x = points.data() + p * d;
        double best = std::numeric_limits<double>::infinity();
        std::uint32_t best_j = 0;
        for (std::uint32_t j = 0; j < k; ++j) {
            const double dd = sq_dist(x, centroids.data() + static_cast<std::size_t>(j) * d, d);
            if (dd < best) {
                best = dd;
                best_j = j;
            }
        }
        assign[p] = best_j;
        if (dists) (*dists)[p] = best;
        total += best;
    }
    return n > 0 ? total / static_cast<double>(n) : 0.0;
}

}  // namespace

void kmeanspp_init(std::span<const float> points, std::size_t n, std::uint32_t sub_dim,
                   std::span<float> centroids, std::uint32_t num_centroids, Rng& rng) {
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    std::uniform_int_distribution<std::size_t> uni(0, n - 1);
    std::size_t first = uni(rng);
    std::copy_n(points.data() + first * sub_dim, sub_dim, centroids.data());

    for (std::uint32_t c = 1; c < num_centroids; ++c) {
        const float* prev = centroids.data() + static_cast<std::size_t>(c - 1) * sub_dim;
        double total = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            d2[p] = std::min(d2[p], sq_dist(points.data() + p * sub_dim, prev, sub_dim));
            total += d2[p];
        }
        std::size_t pick;
        if (total <= 0.0) {
            pick = uni(rng);  // all points covered exactly; any choice works
        } else {
            std::uniform_real_distribution<double> ur(0.0, total);
            double r = ur(rng);
            pick = n - 1;
            for (std::size_t p = 0; p < n; ++p) {
                r -= d2[p];
                if (r <= 0.0) {
                    pick = p;
                    break;
                }
            }
        }
        std::copy_n(points.data() + pick * sub_dim, sub_dim,
                    centroids.data() + static_cast<std::size_t>(c) * sub_dim);
    }
}

double lloyd_iterations(std::span<const float> points, std::size_t n, std::uint32_t sub_dim,
                        std::span<float> centroids, std::uint32_t num_centroids,
                        std::uint32_t iters, std::vector<double>* iter_errors) {
    std::vector<std::uint32_t> assign(n);
    std::vector<double> dists(n);
    double err = assign_points(points, n, sub_dim, centroids, num_centroids, assign, &dists);
    if (iter_errors) iter_errors->push_back(err);

    std::vector<double> sums(static_cast<std::size_t>(num_centroids) * sub_dim);
    std::vector<std::size_t> counts(num_centroids);
    for (std::uint32_t it = 0; it < iters; ++it) {
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t p = 0; p < n; ++p) {
            const float* x = points.data() + p * sub_dim;
            double* s = sums.data() + static_cast<std::size_t>(assign[p]) * sub_dim;
            for (std::uint32_t i = 0; i < sub_dim; ++i) s[i] += x[i];
            ++counts[assign[p]];
        }
        std::vector<bool> taken(n, false);
        for (std::uint32_t j = 0; j < num_centroids; ++j) {
            float* c = centroids.data() + static_cast<std::size_t>(j) * sub_dim;
            if (counts[j] == 0) {
                // Re-seed from the available point with the largest error.
                std::size_t worst = 0;
                double worst_d = -1.0;
                for (std::size_t p = 0; p < n; ++p) {
                    if (!taken[p] && dists[p] > worst_d) {
                        worst_d = dists[p];
                        worst = p;
                    }
                }
                taken[worst] = true;
                std::copy_n(points.data() + worst * sub_dim, sub_dim, c);
            } else {
                const double* s = sums.data() + static_cast<std::size_t>(j) * sub_dim;
                for (std::uint32_t i = 0; i < sub_dim; ++i) {
                    c[i] = static_cast<float>(s[i] / static_cast<double>(counts[j]));
                }
            }
        }
        err = assign_points(points, n, sub_dim, centroids, num_centroids, assign, &dists);
        if (iter_errors) iter_errors->push_back(err);
    }
    return err;
}

}  // namespace detail

Codebook train_kmeans_codebook(std::span<const float> embeddings, std::size_t n,
                               std::uint32_t dim, std::uint32_t num_subspaces,
                               std::uint32_t num_centroids, std::uint32_t iters,
                               std::uint64_t seed, std::vector<double>* iter_errors) {
    if (num_subspaces == 0 || dim % num_subspaces != 0) {
        throw std::invalid_argument("train_kmeans_codebook: dim not divisible by M");
    }
    if (n < num_centroids) {
        throw std::invalid_argument("train_kmeans_codebook: need at least K points");
    }
    if (num_centroids == 0 || num_centroids > 256) {
        throw std::invalid_argument("train_kmeans_codebook: K must be in [1, 256]");
    }
    if (embeddings.size() != n * dim) {
        throw std::invalid_argument("train_kmeans_codebook: data size mismatch");
    }

    Codebook cb;
    cb.num_subspaces = num_subspaces;
    cb.num_centroids = num_centroids;
    cb.sub_dim = dim / num_subspaces;
    cb.centroids.resize(static_cast<std::size_t>(num_subspaces) * num_centroids * cb.sub_dim);

    Rng rng(seed);
    std::vector<float> sub_points(n * cb.sub_dim);
    std::vector<std::vector<double>> per_space_errors(num_subspaces);
    for (std::uint32_t s = 0; s < num_subspaces; ++s) {
        for (std::size_t p = 0; p < n; ++p) {
            std::copy_n(embeddings.data() + p * dim + static_cast<std::size_t>(s) * cb.sub_dim,
                        cb.sub_dim, sub_points.data() + p * cb.sub_dim);
        }
        auto centroids = std::span<float>(cb.centroids)
                             .subspan(static_cast<std::size_t>(s) * num_centroids * cb.sub_dim,
                                      static_cast<std::size_t>(num_centroids) * cb.sub_dim);
        detail::kmeanspp_init(sub_points, n, cb.sub_dim, centroids, num_centroids, rng);
        detail::lloyd_iterations(sub_points, n, cb.sub_dim, centroids, num_centroids, iters,
                                 iter_errors ? &per_space_errors[s] : nullptr);
    }

    if (iter_errors) {
        iter_errors->assign(iters + 1, 0.0);
        for (std::uint32_t s = 0; s < num_subspaces; ++s) {
            for (std::size_t t = 0; t < per_space_errors[s].size(); ++t) {
                (*iter_errors)[t] += per_space_errors[s][t];
            }
        }
    }
    return cb;
}

}  // namespace jpq
