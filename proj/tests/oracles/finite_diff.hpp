// Copyright (C) 2026 The regionprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "regionprune/tensor_math.hpp"

namespace oracle {

/// Central differences of a scalar function with respect to every entry of
/// `x`; step h = 1e-5·(1 + |x|).
inline regionprune::tensor::Matrix central_difference(regionprune::tensor::Matrix x,
                                                      const std::function<double(const regionprune::tensor::Matrix&)>& f) {
    regionprune::tensor::Matrix grad(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x.data()[i];
        const double h = 1e-5 * (1.0 + std::abs(orig));
        x.data()[i] = orig + h;
        const double up = f(x);
        x.data()[i] = orig - h;
        const double down = f(x);
        x.data()[i] = orig;
        grad.data()[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

/// Worst |a − n| / max(|a|, |n|, floor) over all entries. The floor keeps
/// entries that are zero up to rounding from dominating the ratio.
inline double max_relative_error(const regionprune::tensor::Matrix& analytic, const regionprune::tensor::Matrix& numeric,
                                 double floor = 1e-6) {
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double a = analytic.data()[i];
        const double n = numeric.data()[i];
        const double denom = std::max({std::abs(a), std::abs(n), floor});
        worst = std::max(worst, std::abs(a - n) / denom);
    }
    return worst;
}

}  // namespace oracle
