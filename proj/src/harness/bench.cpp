// Copyright (C) 2026 The regionprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "regionprune/harness/bench.hpp"

#include <algorithm>
#include <string>

#include "regionprune/error.hpp"
#include "regionprune/harness/evaluate.hpp"

namespace regionprune::harness {

TimingStats summarize_times(std::vector<double> samples_ms) {
    if (samples_ms.empty()) {
        throw DataError("no timing samples");
    }
    std::sort(samples_ms.begin(), samples_ms.end());
    const std::size_t n = samples_ms.size();
    TimingStats t;
    t.reps = n;
    t.median_ms = n % 2 == 1 ? samples_ms[n / 2] : 0.5 * (samples_ms[n / 2 - 1] + samples_ms[n / 2]);
    t.min_ms = samples_ms.front();
    t.max_ms = samples_ms.back();
    return t;
}

double time_once(const std::function<void()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

TimingStats time_repeated(const std::function<void()>& fn, std::size_t reps, std::size_t warmup) {
    for (std::size_t i = 0; i < warmup; ++i) {
        fn();
    }
    std::vector<double> ms;
    ms.reserve(reps);
    for (std::size_t i = 0; i < reps; ++i) {
        ms.push_back(time_once(fn));
    }
    return summarize_times(std::move(ms));
}

PipelineEstimate estimate_pipeline(const PipelineModel& model) {
    if (model.localizer_ms < 0.0 || model.backbone_ms < 0.0) {
        throw ConfigError("pipeline latencies must be non-negative");
    }
    if (model.samples == 0) {
        throw ConfigError("pipeline model needs at least one sample");
    }
    const auto n = static_cast<double>(model.samples);
    PipelineEstimate e;
    e.serial_ms = n * (model.localizer_ms + model.backbone_ms);
    e.overlapped_ms =
        model.localizer_ms + model.backbone_ms + (n - 1.0) * std::max(model.localizer_ms, model.backbone_ms);
    e.saving_ms = e.serial_ms - e.overlapped_ms;
    e.saving_fraction = e.serial_ms > 0.0 ? e.saving_ms / e.serial_ms : 0.0;
    return e;
}

std::vector<BenchRow> run_bench(const ilp::ToyTransformer& model, const Dataset& dataset, const BenchConfig& config) {
    if (config.reps < 3) {
        throw ConfigError("bench needs at least 3 repetitions, got " + std::to_string(config.reps));
    }
    if (config.rates.empty()) {
        throw ConfigError("bench needs at least one pruning rate");
    }
    const std::size_t dim = model.config().hidden;
    std::vector<ilp::MultimodalSequence> seqs;
    seqs.reserve(dataset.samples.size());
    for (const Sample& s : dataset.samples) {
        seqs.push_back(build_sequence(s, dim, config.synth));
    }
    const std::vector<grid::Region> gt = ground_truth_regions(dataset);
    ilp::ForwardOptions options;
    options.keep_hidden_states = false;

    std::vector<BenchRow> rows;
    for (double rate : config.rates) {
        const localizer::DatasetFit fit = fit_regions(dataset, gt, rate, true);
        std::vector<ilp::PruneConfig> prune(seqs.size());
        for (std::size_t i = 0; i < seqs.size(); ++i) {
            prune[i].layer = config.layer;
            prune[i].region = fit.samples[i].region;
            prune[i].validate(model.config());
        }
        const auto run_baseline = [&] {
            for (const auto& seq : seqs) {
                (void)ilp::forward_baseline(model, seq, options);
            }
        };
        const auto run_ilp = [&] {
            for (std::size_t i = 0; i < seqs.size(); ++i) {
                (void)ilp::forward_ilp(model, seqs[i], prune[i], options);
            }
        };
        for (std::size_t i = 0; i < config.warmup; ++i) {
            run_baseline();
            run_ilp();
        }
        // Interleave the two so slow drift of the machine affects both alike.
        std::vector<double> base_ms;
        std::vector<double> ilp_ms;
        for (std::size_t rep = 0; rep < config.reps; ++rep) {
            base_ms.push_back(time_once(run_baseline));
            ilp_ms.push_back(time_once(run_ilp));
        }
        BenchRow row;
        row.rate = rate;
        row.mean_kept = fit.mean_kept;
        row.baseline = summarize_times(std::move(base_ms));
        row.ilp = summarize_times(std::move(ilp_ms));
        row.ratio = row.baseline.median_ms > 0.0 ? row.ilp.median_ms / row.baseline.median_ms : 0.0;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace regionprune::harness
