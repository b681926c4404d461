// Copyright (C) 2026 The regionprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <vector>

#include "regionprune/harness/dataset.hpp"
#include "regionprune/harness/report.hpp"
#include "regionprune/ilp_transformer.hpp"

namespace regionprune::harness {

/// Median (mean of the middle pair for even counts), min and max. Throws
/// DataError for an empty list.
TimingStats summarize_times(std::vector<double> samples_ms);

/// Wall time of one call in milliseconds (steady clock).
double time_once(const std::function<void()>& fn);

/// Runs `fn` `warmup` times untimed, then `reps` times on a steady clock.
TimingStats time_repeated(const std::function<void()>& fn, std::size_t reps, std::size_t warmup = 1);

/// Localizer and backbone latencies per sample. Serial scheduling runs them
/// back to back; overlapped scheduling predicts the next sample's region while
/// the backbone handles the current one.
struct PipelineModel {
    double localizer_ms = 0.0;
    double backbone_ms = 0.0;
    std::size_t samples = 1;
};

struct PipelineEstimate {
    double serial_ms = 0.0;      // n·(loc + bb)
    double overlapped_ms = 0.0;  // loc + bb + (n − 1)·max(loc, bb)
    double saving_ms = 0.0;
    double saving_fraction = 0.0;  // saving / serial, 0 when serial is 0
};

/// Throws ConfigError for negative latencies or zero samples.
PipelineEstimate estimate_pipeline(const PipelineModel& model);

struct BenchConfig {
    std::vector<double> rates;
    std::size_t layer = 2;
    std::size_t reps = 10;
    std::size_t warmup = 1;
    SynthConfig synth;
};

struct BenchRow {
    double rate = 0.0;
    double mean_kept = 0.0;
    TimingStats baseline;
    TimingStats ilp;
    double ratio = 0.0;  // median ilp / median baseline
};

/// Times baseline and ILP forwards over the whole dataset at each rate,
/// alternating the two within every repetition. Regions are the ground truth
/// fitted to the rate at dataset level. Everything runs on the calling
/// thread. Throws ConfigError for reps < 3.
std::vector<BenchRow> run_bench(const ilp::ToyTransformer& model, const Dataset& dataset, const BenchConfig& config);

}  // namespace regionprune::harness
