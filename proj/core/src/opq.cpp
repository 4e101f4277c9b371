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

#include "jpq/opq.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "jpq/kmeans.hpp"

namespace jpq {

namespace {

// Nearest centroid per subspace over rotated points; fills the
// reconstruction matrix and returns the mean squared error.
double assign_and_reconstruct(const std::vector<float>& rotated, std::size_t n,
                              const Codebook& cb, std::vector<float>& recon) {
    const std::uint32_t d = cb.dim();
    double total = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        const float* x = rotated.data() + p * d;
        float* y = recon.data() + p * d;
        for (std::uint32_t s = 0; s < cb.num_subspaces; ++s) {
            const float* xs = x + static_cast<std::size_t>(s) * cb.sub_dim;
            double best = std::numeric_limits<double>::infinity();
            std::uint32_t best_j = 0;
            for (std::uint32_t j = 0; j < cb.num_centroids; ++j) {
                const auto c = cb.centroid(s, j);
                double dd = 0.0;
                for (std::uint32_t i = 0; i < cb.sub_dim; ++i) {
                    const double diff = static_cast<double>(xs[i]) - c[i];
                    dd += diff * diff;
                }
                if (dd < best) {
                    best = dd;
                    best_j = j;
                }
            }
            total += best;
            const auto c = cb.centroid(s, best_j);
            std::copy(c.begin(), c.end(), y + static_cast<std::size_t>(s) * cb.sub_dim);
        }
    }
    return total / static_cast<double>(n);
}

}  // namespace

Codebook train_opq_rotation(std::span<const float> embeddings, std::size_t n,
                            std::uint32_t dim, std::uint32_t num_subspaces,
                            std::uint32_t num_centroids, std::uint32_t outer_iters,
                            std::uint64_t seed, std::vector<double>* outer_errors,
                            std::uint32_t kmeans_iters_per_outer) {
    using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    // Initialization: plain k-means with the identity rotation.
    Codebook cb = train_kmeans_codebook(embeddings, n, dim, num_subspaces, num_centroids,
                                        kmeans_iters_per_outer, seed);
    Matrix rot = Matrix::Identity(dim, dim);

    std::vector<float> rotated(embeddings.begin(), embeddings.end());
    std::vector<float> recon(n * static_cast<std::size_t>(dim));
    if (outer_errors) {
        outer_errors->push_back(assign_and_reconstruct(rotated, n, cb, recon));
    }

    const std::uint32_t sub_dim = dim / num_subspaces;
    std::vector<float> sub_points(n * sub_dim);

    Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
        data(embeddings.data(), static_cast<Eigen::Index>(n), dim);

    for (std::uint32_t t = 0; t < outer_iters; ++t) {
        // (a) Rotation fixed: Lloyd iterations on rotated points, warm-started
        // from the current centroids.
        for (std::uint32_t s = 0; s < num_subspaces; ++s) {
            for (std::size_t p = 0; p < n; ++p) {
                std::copy_n(rotated.data() + p * dim + static_cast<std::size_t>(s) * sub_dim,
                            sub_dim, sub_points.data() + p * sub_dim);
            }
            auto centroids = std::span<float>(cb.centroids)
                                 .subspan(static_cast<std::size_t>(s) * num_centroids * sub_dim,
                                          static_cast<std::size_t>(num_centroids) * sub_dim);
            detail::lloyd_iterations(sub_points, n, sub_dim, centroids, num_centroids,
                                     kmeans_iters_per_outer, nullptr);
        }
        assign_and_reconstruct(rotated, n, cb, recon);

        // (b) Codes and centroids fixed: orthonormal Procrustes aligning the
        // original embeddings to their reconstructions. With A = X^T Y and
        // SVD A = U S V^T, the minimizer of ||X R^T - Y|| is R = V U^T.
        Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
            rec(recon.data(), static_cast<Eigen::Index>(n), dim);
        Matrix cross = data.cast<double>().transpose() * rec.cast<double>();
        Eigen::BDCSVD<Matrix> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
        rot = svd.matrixV() * svd.matrixU().transpose();

        // Re-rotate the data and record the error under the new rotation with
        // the codes/centroids from step (a).
        Eigen::Map<Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
            rot_map(rotated.data(), static_cast<Eigen::Index>(n), dim);
        rot_map = (data.cast<double>() * rot.transpose()).cast<float>();

        if (outer_errors) {
            const std::uint32_t d = dim;
            double total = 0.0;
            for (std::size_t p = 0; p < n; ++p) {
                for (std::uint32_t i = 0; i < d; ++i) {
                    const double diff = static_cast<double>(rotated[p * d + i]) - recon[p * d + i];
                    total += diff * diff;
                }
            }
            outer_errors->push_back(total / static_cast<double>(n));
        }
    }

    cb.rotation.resize(static_cast<std::size_t>(dim) * dim);
    for (std::uint32_t r = 0; r < dim; ++r) {
        for (std::uint32_t c = 0; c < dim; ++c) {
            cb.rotation[static_cast<std::size_t>(r) * dim + c] = static_cast<float>(rot(r, c));
        }
    }
    return cb;
}

}  // namespace jpq
