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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "jpq/encoder.hpp"
#include "jpq/encoder_train.hpp"

using namespace jpq;

namespace {

template <typename T>
EncoderLayer<T> linear_layer(std::uint32_t in, std::uint32_t out,
                             std::vector<T> weight, std::vector<T> bias,
                             Activation act = Activation::identity) {
    EncoderLayer<T> l;
    l.in = in;
    l.out = out;
    l.weight = std::move(weight);
    l.bias = std::move(bias);
    l.act = act;
    return l;
}

EmbeddingMatrix random_features(std::size_t n, std::uint32_t dim, const std::string& prefix,
                                std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<float> unit(0.0f, 1.0f);
    EmbeddingMatrix m;
    m.dim = dim;
    m.values.resize(n * dim);
    for (auto& v : m.values) v = unit(rng);
    for (std::size_t i = 0; i < n; ++i) m.ids.push_back(prefix + std::to_string(i));
    return m;
}

}  // namespace

TEST_CASE("encode: identity network passes features through") {
    EncoderParams<float> p;
    p.layers.push_back(linear_layer<float>(3, 3,
                                           {1, 0, 0, 0, 1, 0, 0, 0, 1}, {0, 0, 0}));
    const std::vector<float> x = {0.5f, -2.0f, 7.0f};
    CHECK(encode<float>(p, x) == x);
    CHECK_THROWS_AS(encode<float>(p, std::vector<float>{1, 2}), std::invalid_argument);
}

TEST_CASE("encode: hand-computed two-layer example") {
    // Layer 1: 2 -> 2 tanh, layer 2: 2 -> 1 identity.
    EncoderParams<double> p;
    p.layers.push_back(linear_layer<double>(2, 2, {1.0, 0.5, -0.5, 1.0}, {0.1, -0.2},
                                            Activation::tanh));
    p.layers.push_back(linear_layer<double>(2, 1, {2.0, -1.0}, {0.3}));
    const std::vector<double> x = {0.4, -0.6};
    const double h0 = std::tanh(1.0 * 0.4 + 0.5 * -0.6 + 0.1);
    const double h1 = std::tanh(-0.5 * 0.4 + 1.0 * -0.6 - 0.2);
    const double want = 2.0 * h0 - 1.0 * h1 + 0.3;
    const auto y = encode<double>(p, x);
    REQUIRE(y.size() == 1);
    CHECK(y[0] == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("encode_backward: closed form for a single linear layer") {
    // y = Wx + b, objective <u, y>: dW = u x^T, db = u, dx = W^T u.
    EncoderParams<double> p;
    p.layers.push_back(linear_layer<double>(3, 2, {1, 2, 3, 4, 5, 6}, {0.5, -0.5}));
    const std::vector<double> x = {0.1, -0.2, 0.3};
    const std::vector<double> u = {2.0, -1.0};

    GradientBuffer<double> buf(p);
    std::vector<double> dx;
    encode_backward<double>(p, x, u, buf, &dx);

    for (std::uint32_t r = 0; r < 2; ++r) {
        CHECK(buf.grads[0].bias[r] == doctest::Approx(u[r]));
        for (std::uint32_t c = 0; c < 3; ++c) {
            CHECK(buf.grads[0].weight[r * 3 + c] == doctest::Approx(u[r] * x[c]));
        }
    }
    REQUIRE(dx.size() == 3);
    for (std::uint32_t c = 0; c < 3; ++c) {
        const double want = p.layers[0].weight[c] * u[0] + p.layers[0].weight[3 + c] * u[1];
        CHECK(dx[c] == doctest::Approx(want));
    }
}

TEST_CASE("encode_backward matches central finite differences in double") {
    auto p = make_encoder<double>(5, 7, 4, 123);
    Rng rng(321);
    std::normal_distribution<double> unit(0.0, 1.0);
    std::vector<double> x(5), u(4);
    for (auto& v : x) v = unit(rng);
    for (auto& v : u) v = unit(rng);

    GradientBuffer<double> buf(p);
    std::vector<double> dx;
    encode_backward<double>(p, x, u, buf, &dx);

    const double h = 1e-6;
    auto objective = [&](const EncoderParams<double>& q) {
        const auto y = encode<double>(q, x);
        double s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) s += u[i] * y[i];
        return s;
    };
    for (std::size_t li = 0; li < p.layers.size(); ++li) {
        auto check_param = [&](std::vector<double>& vals, const std::vector<double>& grads,
                               std::size_t idx) {
            const double orig = vals[idx];
            vals[idx] = orig + h;
            const double up = objective(p);
            vals[idx] = orig - h;
            const double down = objective(p);
            vals[idx] = orig;
            const double fd = (up - down) / (2.0 * h);
            CHECK(grads[idx] ==
                  doctest::Approx(fd).epsilon(1e-7).scale(std::abs(fd) + 1e-3));
        };
        for (std::size_t i = 0; i < p.layers[li].weight.size(); ++i) {
            check_param(p.layers[li].weight, buf.grads[li].weight, i);
        }
        for (std::size_t i = 0; i < p.layers[li].bias.size(); ++i) {
            check_param(p.layers[li].bias, buf.grads[li].bias, i);
        }
    }

    // Input gradient against finite differences too.
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + h;
        const auto yu = encode<double>(p, x);
        x[i] = orig - h;
        const auto yd = encode<double>(p, x);
        x[i] = orig;
        double fd = 0.0;
        for (std::size_t j = 0; j < yu.size(); ++j) fd += u[j] * (yu[j] - yd[j]) / (2.0 * h);
        CHECK(dx[i] == doctest::Approx(fd).epsilon(1e-7).scale(std::abs(fd) + 1e-3));
    }
}

TEST_CASE("make_encoder is deterministic and respects init bounds") {
    const auto a = make_encoder<float>(8, 16, 4, 9);
    const auto b = make_encoder<float>(8, 16, 4, 9);
    const auto c = make_encoder<float>(8, 16, 4, 10);
    REQUIRE(a.layers.size() == 2);
    CHECK(a.layers[0].weight == b.layers[0].weight);
    CHECK(a.layers[1].weight == b.layers[1].weight);
    CHECK(a.layers[0].weight != c.layers[0].weight);
    for (std::size_t li = 0; li < 2; ++li) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(a.layers[li].in));
        for (const float w : a.layers[li].weight) {
            CHECK(std::abs(w) <= bound);
        }
        for (const float bv : a.layers[li].bias) CHECK(bv == 0.0f);
    }
}

TEST_CASE("encoder checkpoint round-trip is bit-identical") {
    const auto p = make_encoder<float>(6, 10, 4, 44);
    const std::string path = "test_encoder_ckpt.enc";
    save_encoder(p, path);
    const auto loaded = load_encoder(path);
    REQUIRE(loaded.layers.size() == p.layers.size());
    for (std::size_t li = 0; li < p.layers.size(); ++li) {
        CHECK(loaded.layers[li].in == p.layers[li].in);
        CHECK(loaded.layers[li].out == p.layers[li].out);
        CHECK(loaded.layers[li].act == p.layers[li].act);
        CHECK(loaded.layers[li].weight == p.layers[li].weight);
        CHECK(loaded.layers[li].bias == p.layers[li].bias);
    }
    std::filesystem::remove(path);

    const std::string bad = "test_encoder_bad.enc";
    {
        std::ofstream out(bad, std::ios::binary);
        out << "NOPE";
    }
    CHECK_THROWS_AS(load_encoder(bad), CorruptIndexError);
    std::filesystem::remove(bad);
}

TEST_CASE("stage-1 training: lr=0 leaves both towers bit-unchanged") {
    const auto docs = random_features(30, 8, "d", 1);
    const auto queries = random_features(10, 8, "q", 2);
    RelevanceLabels labels;
    for (std::size_t i = 0; i < 10; ++i) {
        labels.relevant["q" + std::to_string(i)] = {"d" + std::to_string(i)};
    }
    auto qe = make_encoder<float>(8, 8, 6, 3);
    auto de = make_encoder<float>(8, 8, 6, 4);
    const auto qe0 = qe;
    const auto de0 = de;

    Stage1Config cfg;
    cfg.epochs = 3;
    cfg.lr = 0.0;
    cfg.seed = 5;
    train_dual_encoders(qe, de, docs, queries, labels, cfg);
    for (std::size_t li = 0; li < 2; ++li) {
        CHECK(qe.layers[li].weight == qe0.layers[li].weight);
        CHECK(qe.layers[li].bias == qe0.layers[li].bias);
        CHECK(de.layers[li].weight == de0.layers[li].weight);
        CHECK(de.layers[li].bias == de0.layers[li].bias);
    }
}

TEST_CASE("stage-1 training reduces the pairwise loss") {
    const auto docs = random_features(60, 8, "d", 11);
    const auto queries = random_features(30, 8, "q", 12);
    RelevanceLabels labels;
    for (std::size_t i = 0; i < 30; ++i) {
        labels.relevant["q" + std::to_string(i)] = {"d" + std::to_string(i)};
    }
    auto qe = make_encoder<float>(8, 16, 8, 13);
    auto de = make_encoder<float>(8, 16, 8, 14);

    Stage1Config cfg;
    cfg.epochs = 15;
    cfg.lr = 0.05;
    cfg.seed = 15;
    const auto stats = train_dual_encoders(qe, de, docs, queries, labels, cfg);
    CHECK(stats.last_epoch_loss < stats.first_epoch_loss);
    CHECK(stats.last_epoch_loss < std::log(2.0));  // below the untrained baseline
}

TEST_CASE("stage-1 training is deterministic under equal seeds") {
    const auto docs = random_features(40, 6, "d", 21);
    const auto queries = random_features(15, 6, "q", 22);
    RelevanceLabels labels;
    for (std::size_t i = 0; i < 15; ++i) {
        labels.relevant["q" + std::to_string(i)] = {"d" + std::to_string(i % 40)};
    }
    Stage1Config cfg;
    cfg.epochs = 4;
    cfg.lr = 0.05;
    cfg.seed = 23;

    auto qe1 = make_encoder<float>(6, 8, 4, 1);
    auto de1 = make_encoder<float>(6, 8, 4, 2);
    train_dual_encoders(qe1, de1, docs, queries, labels, cfg);

    auto qe2 = make_encoder<float>(6, 8, 4, 1);
    auto de2 = make_encoder<float>(6, 8, 4, 2);
    train_dual_encoders(qe2, de2, docs, queries, labels, cfg);

    for (std::size_t li = 0; li < 2; ++li) {
        CHECK(qe1.layers[li].weight == qe2.layers[li].weight);
        CHECK(de1.layers[li].weight == de2.layers[li].weight);
    }
}

TEST_CASE("encode_matrix shapes and values") {
    const auto feats = random_features(5, 4, "x", 31);
    const auto p = make_encoder<float>(4, 6, 3, 32);
    const auto out = encode_matrix(p, feats);
    CHECK(out.dim == 3);
    CHECK(out.ids == feats.ids);
    REQUIRE(out.values.size() == 15);
    for (std::size_t i = 0; i < 5; ++i) {
        const auto single = encode<float>(p, feats.row(i));
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(out.values[i * 3 + j] == single[j]);
        }
    }
}
