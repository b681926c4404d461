// Copyright (C) 2026 The regionprune Authors
// SPDX-License-Identifier: Apache-2.0

// Brute-force region geometry: floating-point cell centers and block
// enumeration, independent of the library's integer mapping.

#pragma once

#include <cstddef>
#include <vector>

namespace oracle {

struct Rect {
    int x_min, y_min, x_max, y_max;
};

inline bool center_inside(const Rect& r, std::size_t row, std::size_t col, std::size_t side) {
    const double cx = (static_cast<double>(col) + 0.5) / static_cast<double>(side);
    const double cy = (static_cast<double>(row) + 0.5) / static_cast<double>(side);
    return cx >= r.x_min / 8.0 && cx < (r.x_max + 1) / 8.0 && cy >= r.y_min / 8.0 && cy < (r.y_max + 1) / 8.0;
}

inline std::vector<std::size_t> region_tokens(const Rect& r, std::size_t side, std::size_t views) {
    std::vector<std::size_t> out;
    for (std::size_t v = 0; v < views; ++v) {
        for (std::size_t row = 0; row < side; ++row) {
            for (std::size_t col = 0; col < side; ++col) {
                if (center_inside(r, row, col, side)) {
                    out.push_back(v * side * side + row * side + col);
                }
            }
        }
    }
    return out;
}

inline bool block_in(const Rect& r, int x, int y) {
    return x >= r.x_min && x <= r.x_max && y >= r.y_min && y <= r.y_max;
}

inline double recall(const Rect& gt, const Rect& pred) {
    int both = 0;
    int area = 0;
    for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) {
            if (block_in(gt, x, y)) {
                ++area;
                both += block_in(pred, x, y) ? 1 : 0;
            }
        }
    }
    return static_cast<double>(both) / static_cast<double>(area);
}

inline std::vector<Rect> all_rects() {
    std::vector<Rect> out;
    for (int y0 = 0; y0 < 8; ++y0) {
        for (int x0 = 0; x0 < 8; ++x0) {
            for (int y1 = y0; y1 < 8; ++y1) {
                for (int x1 = x0; x1 < 8; ++x1) {
                    out.push_back({x0, y0, x1, y1});
                }
            }
        }
    }
    return out;
}

inline bool contains(const Rect& outer, const Rect& inner) {
    return outer.x_min <= inner.x_min && outer.y_min <= inner.y_min && outer.x_max >= inner.x_max &&
           outer.y_max >= inner.y_max;
}

}  // namespace oracle
