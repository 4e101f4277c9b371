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

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "jpq/common.hpp"

namespace jpq {

enum class Activation : std::uint8_t { identity = 0, tanh = 1 };

// The math is templated on the scalar type: float in production, double in
// the finite-difference gradient checks.

template <typename T>
struct EncoderLayer {
    std::uint32_t in = 0;
    std::uint32_t out = 0;
    std::vector<T> weight;  // out x in, row-major
    std::vector<T> bias;    // out
    Activation act = Activation::identity;
};

template <typename T>
struct EncoderParams {
    std::vector<EncoderLayer<T>> layers;

    std::uint32_t input_dim() const { return layers.front().in; }
    std::uint32_t output_dim() const { return layers.back().out; }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& l : layers) n += l.weight.size() + l.bias.size();
        return n;
    }
};

/// Gradient accumulators, shape-compatible with an EncoderParams.
template <typename T>
struct GradientBuffer {
    std::vector<EncoderLayer<T>> grads;

    explicit GradientBuffer(const EncoderParams<T>& p) {
        grads.reserve(p.layers.size());
        for (const auto& l : p.layers) {
            EncoderLayer<T> g;
            g.in = l.in;
            g.out = l.out;
            g.act = l.act;
            g.weight.assign(l.weight.size(), T{0});
            g.bias.assign(l.bias.size(), T{0});
            grads.push_back(std::move(g));
        }
    }
};

/// Deterministic feed-forward evaluation.
template <typename T>
std::vector<T> encode(const EncoderParams<T>& params, std::span<const T> features) {
    if (features.size() != params.input_dim()) {
        throw std::invalid_argument("encode: feature dimension mismatch");
    }
    std::vector<T> x(features.begin(), features.end());
    for (const auto& l : params.layers) {
        if (x.size() != l.in) {
            throw std::invalid_argument("encode: layer dimension mismatch");
        }
        std::vector<T> y(l.out);
        for (std::uint32_t r = 0; r < l.out; ++r) {
            T acc = l.bias[r];
            const T* w = l.weight.data() + static_cast<std::size_t>(r) * l.in;
            for (std::uint32_t c = 0; c < l.in; ++c) acc += w[c] * x[c];
            y[r] = (l.act == Activation::tanh) ? std::tanh(acc) : acc;
        }
        x = std::move(y);
    }
    return x;
}

/// Reverse-mode gradients of <upstream, encode(params, features)> with
/// respect to every parameter. Accumulates into buf; input_grad, when given,
/// receives the gradient with respect to the features.
template <typename T>
void encode_backward(const EncoderParams<T>& params, std::span<const T> features,
                     std::span<const T> upstream, GradientBuffer<T>& buf,
                     std::vector<T>* input_grad = nullptr) {
    if (features.size() != params.input_dim()) {
        throw std::invalid_argument("encode_backward: feature dimension mismatch");
    }
    if (upstream.size() != params.output_dim()) {
        throw std::invalid_argument("encode_backward: upstream dimension mismatch");
    }

    // Forward pass, keeping every layer input and post-activation output.
    const std::size_t nl = params.layers.size();
    std::vector<std::vector<T>> inputs(nl);
    std::vector<T> x(features.begin(), features.end());
    std::vector<std::vector<T>> outputs(nl);
    for (std::size_t li = 0; li < nl; ++li) {
        const auto& l = params.layers[li];
        inputs[li] = x;
        std::vector<T> y(l.out);
        for (std::uint32_t r = 0; r < l.out; ++r) {
            T acc = l.bias[r];
            const T* w = l.weight.data() + static_cast<std::size_t>(r) * l.in;
            for (std::uint32_t c = 0; c < l.in; ++c) acc += w[c] * x[c];
            y[r] = (l.act == Activation::tanh) ? std::tanh(acc) : acc;
        }
        outputs[li] = y;
        x = std::move(y);
    }

    std::vector<T> delta(upstream.begin(), upstream.end());
    for (std::size_t li = nl; li-- > 0;) {
        const auto& l = params.layers[li];
        auto& g = buf.grads[li];
        // d(activation): tanh'(z) = 1 - tanh(z)^2, with tanh(z) = output.
        if (l.act == Activation::tanh) {
            for (std::uint32_t r = 0; r < l.out; ++r) {
                const T o = outputs[li][r];
                delta[r] *= (T{1} - o * o);
            }
        }
        const std::vector<T>& in = inputs[li];
        for (std::uint32_t r = 0; r < l.out; ++r) {
            g.bias[r] += delta[r];
            T* gw = g.weight.data() + static_cast<std::size_t>(r) * l.in;
            for (std::uint32_t c = 0; c < l.in; ++c) gw[c] += delta[r] * in[c];
        }
        std::vector<T> prev(l.in, T{0});
        for (std::uint32_t r = 0; r < l.out; ++r) {
            const T* w = l.weight.data() + static_cast<std::size_t>(r) * l.in;
            for (std::uint32_t c = 0; c < l.in; ++c) prev[c] += w[c] * delta[r];
        }
        delta = std::move(prev);
    }
    if (input_grad) *input_grad = std::move(delta);
}

/// Default two-layer network: in -> hidden (tanh) -> out (identity),
/// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero bias.
template <typename T>
EncoderParams<T> make_encoder(std::uint32_t input_dim, std::uint32_t hidden_dim,
                              std::uint32_t output_dim, std::uint64_t seed) {
    Rng rng(seed);
    auto make_layer = [&](std::uint32_t in, std::uint32_t out, Activation act) {
        EncoderLayer<T> l;
        l.in = in;
        l.out = out;
        l.act = act;
        const double s = 1.0 / std::sqrt(static_cast<double>(in));
        std::uniform_real_distribution<double> u(-s, s);
        l.weight.resize(static_cast<std::size_t>(out) * in);
        for (auto& w : l.weight) w = static_cast<T>(u(rng));
        l.bias.assign(out, T{0});
        return l;
    };
    EncoderParams<T> p;
    p.layers.push_back(make_layer(input_dim, hidden_dim, Activation::tanh));
    p.layers.push_back(make_layer(hidden_dim, output_dim, Activation::identity));
    return p;
}

template <typename From, typename To>
EncoderParams<To> convert_encoder(const EncoderParams<From>& p) {
    EncoderParams<To> out;
    out.layers.reserve(p.layers.size());
    for (const auto& l : p.layers) {
        EncoderLayer<To> o;
        o.in = l.in;
        o.out = l.out;
        o.act = l.act;
        o.weight.assign(l.weight.begin(), l.weight.end());
        o.bias.assign(l.bias.begin(), l.bias.end());
        out.layers.push_back(std::move(o));
    }
    return out;
}

// "enc" checkpoint file: magic "JPQF", version u32=1, layer count u32, per
// layer [in u32, out u32, act u8], then per layer f32 weights then bias.
// Round-trips bit-exactly.

void save_encoder(const EncoderParams<float>& p, const std::string& path);
EncoderParams<float> load_encoder(const std::string& path);

}  // namespace jpq
