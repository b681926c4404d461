// Copyright (C) 2026 The regionprune Authors
// SPDX-License-Identifier: Apache-2.0

// Straight-line evaluation of the compression graph with scalar loops.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "dense.hpp"
#include "grid_oracle.hpp"

namespace oracle {

inline void ladder(std::vector<double>& out, std::size_t offset, std::size_t width, double pos) {
    for (std::size_t i = 0; i < width; ++i) {
        const double freq = std::pow(10000.0, -2.0 * static_cast<double>(i / 2) / static_cast<double>(width));
        out[offset + i] = i % 2 == 0 ? std::sin(pos * freq) : std::cos(pos * freq);
    }
}

inline std::vector<double> slot_code(std::size_t slot, std::size_t d) {
    std::vector<double> out(d);
    ladder(out, 0, d, static_cast<double>(slot));
    return out;
}

inline std::vector<double> cell_code(std::size_t row, std::size_t col, std::size_t d) {
    std::vector<double> out(d);
    ladder(out, 0, d / 2, static_cast<double>(row));
    ladder(out, d / 2, d - d / 2, static_cast<double>(col));
    return out;
}

inline VV plus_slots(VV m) {
    for (std::size_t r = 0; r < m.size(); ++r) {
        const auto code = slot_code(r, m[r].size());
        for (std::size_t c = 0; c < m[r].size(); ++c) {
            m[r][c] += code[c];
        }
    }
    return m;
}

struct PlcInstance {
    VV tokens;  // views * side * side rows
    std::size_t side = 8;
    std::size_t views = 1;
    Rect region{0, 0, 7, 7};
    VV q_contextual;
    VV q_noncontextual;
    std::size_t anchor_count = 4;
};

struct PlcReference {
    VV compressed_contextual;
    VV compressed_noncontextual;
    VV fused;
    VV output;   // fused ++ compressed_noncontextual
    VV ablated;  // compressed_contextual ++ compressed_noncontextual
};

inline PlcReference plc_reference(const PlcInstance& in) {
    const std::size_t d = in.q_contextual[0].size();
    const std::size_t side = in.side;
    VV ctx;
    VV nctx;
    std::size_t row_lo = side;
    std::size_t row_hi = 0;
    std::size_t col_lo = side;
    std::size_t col_hi = 0;
    for (std::size_t v = 0; v < in.views; ++v) {
        for (std::size_t r = 0; r < side; ++r) {
            for (std::size_t c = 0; c < side; ++c) {
                auto row = in.tokens[v * side * side + r * side + c];
                const auto code = cell_code(r, c, d);
                for (std::size_t k = 0; k < d; ++k) {
                    row[k] += code[k];
                }
                if (center_inside(in.region, r, c, side)) {
                    ctx.push_back(row);
                    if (v == 0) {
                        row_lo = std::min(row_lo, r);
                        row_hi = std::max(row_hi, r + 1);
                        col_lo = std::min(col_lo, c);
                        col_hi = std::max(col_hi, c + 1);
                    }
                } else {
                    nctx.push_back(row);
                }
            }
        }
    }

    PlcReference out;
    out.compressed_contextual = attention(plus_slots(in.q_contextual), ctx);
    if (nctx.empty()) {
        out.compressed_noncontextual = VV(in.q_noncontextual.size(), std::vector<double>(d, 0.0));
    } else {
        out.compressed_noncontextual = attention(plus_slots(in.q_noncontextual), nctx);
    }

    const auto p = static_cast<long long>(std::llround(std::sqrt(static_cast<double>(in.anchor_count))));
    const auto corner = [&](std::size_t lo, std::size_t hi) {
        const double raw = std::floor((static_cast<double>(lo + hi) - static_cast<double>(p)) / 2.0);
        return static_cast<std::size_t>(std::clamp(static_cast<long long>(raw), 0LL, static_cast<long long>(side) - p));
    };
    const std::size_t r0 = corner(row_lo, row_hi);
    const std::size_t c0 = corner(col_lo, col_hi);
    VV anchor;
    VV anchor_encoded;
    for (std::size_t r = r0; r < r0 + static_cast<std::size_t>(p); ++r) {
        for (std::size_t c = c0; c < c0 + static_cast<std::size_t>(p); ++c) {
            auto row = in.tokens[r * side + c];
            anchor.push_back(row);
            const auto code = cell_code(r, c, d);
            for (std::size_t k = 0; k < d; ++k) {
                row[k] += code[k];
            }
            anchor_encoded.push_back(row);
        }
    }
    out.fused = attention(anchor_encoded, plus_slots(out.compressed_contextual));
    for (std::size_t r = 0; r < out.fused.size(); ++r) {
        for (std::size_t k = 0; k < d; ++k) {
            out.fused[r][k] += anchor[r][k];
        }
    }
    out.output = out.fused;
    out.output.insert(out.output.end(), out.compressed_noncontextual.begin(), out.compressed_noncontextual.end());
    out.ablated = out.compressed_contextual;
    out.ablated.insert(out.ablated.end(), out.compressed_noncontextual.begin(), out.compressed_noncontextual.end());
    return out;
}

}  // namespace oracle
