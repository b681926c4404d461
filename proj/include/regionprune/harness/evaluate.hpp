// Copyright (C) 2026 The regionprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "regionprune/harness/dataset.hpp"
#include "regionprune/ilp_transformer.hpp"
#include "regionprune/localizer.hpp"

namespace regionprune::harness {

/// Where per-sample contextual regions come from.
enum class RegionSourceKind { ground_truth, file, center, random };

/// Throws ConfigError for names other than gt, file, center and random.
RegionSourceKind parse_region_source(const std::string& name);
const char* to_string(RegionSourceKind kind);

struct RegionSource {
    RegionSourceKind kind = RegionSourceKind::ground_truth;
    /// Predictions for `file`; for center/random they supply the reference
    /// dimensions of samples lacking a ground-truth region.
    const localizer::FileBackedLocalizer* predictions = nullptr;
    std::uint64_t seed = 0;  // random placement
};

/// One region per sample, in dataset order. Center and random copy the
/// dimensions of the ground-truth region, falling back to the predicted one.
/// Throws ConfigError when a required input is missing and LookupError for
/// ids absent from the predictions.
std::vector<grid::Region> resolve_regions(const Dataset& dataset, const RegionSource& source);

/// Ground-truth regions of every sample; throws DataError if any is missing.
std::vector<grid::Region> ground_truth_regions(const Dataset& dataset);

/// Per-sample budget fit; with `dataset_level` the error-diffusing fitter is
/// used so the dataset mean tracks the target. Throws DataError when samples
/// live on different grids.
localizer::DatasetFit fit_regions(const Dataset& dataset, const std::vector<grid::Region>& regions, double rate,
                                  bool dataset_level);

struct IlpSampleResult {
    std::string id;
    grid::Region region = grid::Region::full();
    std::size_t visual_total = 0;
    std::size_t kept = 0;
    double rate = 0.0;
    double proxy_quality = 0.0;
    ilp::FlopEstimate flops;
};

struct IlpEvalConfig {
    std::size_t layer = 2;
    ilp::PositionPolicy positions = ilp::PositionPolicy::keep_original;
    SynthConfig synth;
};

/// Caches each sample's sequence and baseline forward so sweeps over regions,
/// layers and rates pay for the baseline once.
class IlpEvaluator {
public:
    IlpEvaluator(const ilp::ToyTransformer& model, const Dataset& dataset, SynthConfig synth = {});

    /// Pruned forward of every sample against its cached baseline. When
    /// `wall_ms` is set it receives the summed wall time of the pruned forwards.
    std::vector<IlpSampleResult> run(const std::vector<grid::Region>& regions, std::size_t layer,
                                     ilp::PositionPolicy positions, double* wall_ms = nullptr);

    const ilp::MultimodalSequence& sequence(std::size_t index) const { return m_sequences.at(index); }
    const ilp::ForwardResult& baseline(std::size_t index);

private:
    const ilp::ToyTransformer& m_model;
    const Dataset& m_dataset;
    std::vector<ilp::MultimodalSequence> m_sequences;
    std::vector<std::optional<ilp::ForwardResult>> m_baselines;
};

/// Baseline and pruned forward for every sample.
std::vector<IlpSampleResult> evaluate_ilp(const ilp::ToyTransformer& model, const Dataset& dataset,
                                          const std::vector<grid::Region>& regions, const IlpEvalConfig& config);

double mean_proxy_quality(const std::vector<IlpSampleResult>& results);

}  // namespace regionprune::harness
