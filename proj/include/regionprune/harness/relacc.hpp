// Copyright (C) 2026 The regionprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>

namespace regionprune::harness {

using MetricSet = std::map<std::string, double>;

struct RelAccResult {
    MetricSet ratios;   // run / baseline per metric
    double value = 0.0;  // (weighted) mean of the ratios
};

/// Per-metric ratio run/baseline, then their mean: unweighted by default, or
/// Σ w·r / Σ w with `weights`. Throws DataError when the metric sets differ
/// (the message lists the missing and extra names), a baseline value is zero,
/// or the weights do not cover the metrics with positive values.
RelAccResult relative_accuracy(const MetricSet& run, const MetricSet& baseline,
                               const std::optional<MetricSet>& weights = std::nullopt);

/// "98.9%": one decimal, rounded half away from zero.
std::string format_percent(double fraction);

/// Flat JSON object of metric name to number. Throws ParseError otherwise.
MetricSet read_metric_set(std::istream& in, const std::string& source_name = "metrics");
MetricSet read_metric_set_file(const std::string& path);

}  // namespace regionprune::harness
