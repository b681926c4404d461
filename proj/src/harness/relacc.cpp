// Copyright (C) 2026 The regionprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "regionprune/harness/relacc.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <vector>

#include <nlohmann/json.hpp>

#include "regionprune/error.hpp"

namespace regionprune::harness {

namespace {

std::string join(const std::vector<std::string>& names) {
    std::string out;
    for (const auto& n : names) {
        out += out.empty() ? n : ", " + n;
    }
    return out;
}

void expect_same_names(const MetricSet& a, const MetricSet& b, const char* a_name, const char* b_name) {
    std::vector<std::string> only_a;
    std::vector<std::string> only_b;
    for (const auto& [name, _] : a) {
        if (!b.contains(name)) {
            only_a.push_back(name);
        }
    }
    for (const auto& [name, _] : b) {
        if (!a.contains(name)) {
            only_b.push_back(name);
        }
    }
    if (only_a.empty() && only_b.empty()) {
        return;
    }
    std::string msg = "metric sets differ:";
    if (!only_a.empty()) {
        msg += std::string(" only in ") + a_name + " [" + join(only_a) + "]";
    }
    if (!only_b.empty()) {
        msg += std::string(" only in ") + b_name + " [" + join(only_b) + "]";
    }
    throw DataError(msg);
}

}  // namespace

RelAccResult relative_accuracy(const MetricSet& run, const MetricSet& baseline, const std::optional<MetricSet>& weights) {
    if (baseline.empty()) {
        throw DataError("relative accuracy needs at least one metric");
    }
    expect_same_names(run, baseline, "run", "baseline");
    if (weights) {
        expect_same_names(*weights, baseline, "weights", "baseline");
    }
    RelAccResult out;
    double total = 0.0;
    double weight_sum = 0.0;
    for (const auto& [name, base] : baseline) {
        if (base == 0.0 || !std::isfinite(base)) {
            throw DataError("baseline metric '" + name + "' must be finite and nonzero");
        }
        const double ratio = run.at(name) / base;
        const double w = weights ? weights->at(name) : 1.0;
        if (!(w > 0.0) || !std::isfinite(w)) {
            throw DataError("weight for '" + name + "' must be positive");
        }
        out.ratios[name] = ratio;
        total += w * ratio;
        weight_sum += w;
    }
    out.value = total / weight_sum;
    return out;
}

std::string format_percent(double fraction) {
    const double tenths = std::round(fraction * 1000.0);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.1f%%", tenths / 10.0);
    return buf;
}

MetricSet read_metric_set(std::istream& in, const std::string& source_name) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(source_name + ": invalid JSON (" + e.what() + ")");
    }
    if (!j.is_object()) {
        throw ParseError(source_name + ": expected an object of metric name to number");
    }
    MetricSet out;
    for (const auto& [name, value] : j.items()) {
        if (!value.is_number()) {
            throw ParseError(source_name + ": metric '" + name + "' is not a number");
        }
        out[name] = value.get<double>();
    }
    return out;
}

MetricSet read_metric_set_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open '" + path + "'");
    }
    return read_metric_set(in, path);
}

}  // namespace regionprune::harness
