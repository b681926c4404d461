// Copyright (C) 2026 The regionprune Authors
// SPDX-License-Identifier: Apache-2.0

// Scalar-loop decoder forward that reads the model's weights but none of its
// kernels.

#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "dense.hpp"
#include "regionprune/ilp_transformer.hpp"

namespace oracle {

inline VV layer_norm(const VV& x, const std::vector<double>& gain, const std::vector<double>& bias) {
    VV out = x;
    for (std::size_t r = 0; r < x.size(); ++r) {
        const double n = static_cast<double>(x[r].size());
        double mean = 0.0;
        for (double v : x[r]) {
            mean += v / n;
        }
        double var = 0.0;
        for (double v : x[r]) {
            var += (v - mean) * (v - mean) / n;
        }
        for (std::size_t c = 0; c < x[r].size(); ++c) {
            out[r][c] = (x[r][c] - mean) / std::sqrt(var + 1e-5) * gain[c] + bias[c];
        }
    }
    return out;
}

inline void rotate(VV& m, const std::vector<std::size_t>& positions, std::size_t heads, double base) {
    for (std::size_t r = 0; r < m.size(); ++r) {
        const std::size_t hd = m[r].size() / heads;
        for (std::size_t h = 0; h < heads; ++h) {
            for (std::size_t i = 0; i < hd / 2; ++i) {
                const double theta = static_cast<double>(positions[r]) *
                                     std::pow(base, -2.0 * static_cast<double>(i) / static_cast<double>(hd));
                double& a = m[r][h * hd + 2 * i];
                double& b = m[r][h * hd + 2 * i + 1];
                const double a0 = a;
                const double b0 = b;
                a = a0 * std::cos(theta) - b0 * std::sin(theta);
                b = a0 * std::sin(theta) + b0 * std::cos(theta);
            }
        }
    }
}

inline double gelu_tanh(double x) {
    return 0.5 * x * (1.0 + std::tanh(std::sqrt(2.0 / M_PI) * (x + 0.044715 * x * x * x)));
}

inline VV block(const regionprune::ilp::LayerWeights& w, const regionprune::ilp::ModelConfig& cfg, const VV& x,
                const std::vector<std::size_t>& positions) {
    const std::size_t n = x.size();
    const std::size_t d = cfg.hidden;
    const std::size_t hd = d / cfg.heads;
    const VV normed = layer_norm(x, w.attn_norm_gain, w.attn_norm_bias);
    VV q = mul(normed, to_vv(w.wq));
    VV k = mul(normed, to_vv(w.wk));
    const VV v = mul(normed, to_vv(w.wv));
    rotate(q, positions, cfg.heads, cfg.rope_base);
    rotate(k, positions, cfg.heads, cfg.rope_base);

    VV mixed(n, std::vector<double>(d, 0.0));
    for (std::size_t h = 0; h < cfg.heads; ++h) {
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> logits(i + 1);
            for (std::size_t j = 0; j <= i; ++j) {
                double s = 0.0;
                for (std::size_t t = 0; t < hd; ++t) {
                    s += q[i][h * hd + t] * k[j][h * hd + t];
                }
                logits[j] = s / std::sqrt(static_cast<double>(hd));
            }
            const auto p = softmax(logits);
            for (std::size_t j = 0; j <= i; ++j) {
                for (std::size_t t = 0; t < hd; ++t) {
                    mixed[i][h * hd + t] += p[j] * v[j][h * hd + t];
                }
            }
        }
    }
    VV h = x;
    const VV proj = mul(mixed, to_vv(w.wo));
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            h[r][c] += proj[r][c];
        }
    }
    VV up = mul(layer_norm(h, w.mlp_norm_gain, w.mlp_norm_bias), to_vv(w.w_up));
    for (auto& row : up) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            row[c] = gelu_tanh(row[c] + w.b_up[c]);
        }
    }
    const VV down = mul(up, to_vv(w.w_down));
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            h[r][c] += down[r][c] + w.b_down[c];
        }
    }
    return h;
}

/// Hidden state after every block; element 0 is the input.
inline std::vector<VV> forward(const regionprune::ilp::ToyTransformer& model, const VV& embeddings) {
    std::vector<std::size_t> positions(embeddings.size());
    for (std::size_t i = 0; i < positions.size(); ++i) {
        positions[i] = i;
    }
    std::vector<VV> states{embeddings};
    for (std::size_t l = 0; l < model.layer_count(); ++l) {
        states.push_back(block(model.layer(l), model.config(), states.back(), positions));
    }
    return states;
}

}  // namespace oracle
