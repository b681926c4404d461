// Copyright (C) 2026 The regionprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "regionprune/harness/evaluate.hpp"

#include <chrono>

#include "regionprune/error.hpp"

namespace regionprune::harness {

namespace {

std::optional<grid::Region> reference_of(const Sample& sample, const RegionSource& source) {
    if (sample.gt_region) {
        return sample.gt_region;
    }
    if (source.predictions != nullptr) {
        return source.predictions->lookup(sample.id).region;
    }
    return std::nullopt;
}

}  // namespace

RegionSourceKind parse_region_source(const std::string& name) {
    if (name == "gt") {
        return RegionSourceKind::ground_truth;
    }
    switch (localizer::parse_localizer_kind(name)) {
        case localizer::LocalizerKind::file_backed:
            return RegionSourceKind::file;
        case localizer::LocalizerKind::center:
            return RegionSourceKind::center;
        case localizer::LocalizerKind::random:
            return RegionSourceKind::random;
    }
    throw ConfigError("unknown region source '" + name + "'");
}

const char* to_string(RegionSourceKind kind) {
    switch (kind) {
        case RegionSourceKind::ground_truth:
            return "gt";
        case RegionSourceKind::file:
            return "file";
        case RegionSourceKind::center:
            return "center";
        case RegionSourceKind::random:
            return "random";
    }
    return "unknown";
}

std::vector<grid::Region> resolve_regions(const Dataset& dataset, const RegionSource& source) {
    std::vector<grid::Region> out;
    out.reserve(dataset.samples.size());
    const localizer::CenterLocalizer center;
    const localizer::RandomLocalizer random(source.seed);
    for (const Sample& s : dataset.samples) {
        switch (source.kind) {
            case RegionSourceKind::ground_truth:
                if (!s.gt_region) {
                    throw DataError("sample '" + s.id + "' has no ground-truth region");
                }
                out.push_back(*s.gt_region);
                break;
            case RegionSourceKind::file:
                if (source.predictions == nullptr) {
                    throw ConfigError("region source 'file' needs a predictions file");
                }
                out.push_back(source.predictions->localize({s.id, std::nullopt}));
                break;
            case RegionSourceKind::center:
            case RegionSourceKind::random: {
                const auto ref = reference_of(s, source);
                if (!ref) {
                    throw ConfigError("sample '" + s.id +
                                      "' has neither a ground-truth nor a predicted region to size the baseline");
                }
                const localizer::RegionProvider& provider =
                    source.kind == RegionSourceKind::center ? static_cast<const localizer::RegionProvider&>(center)
                                                            : random;
                out.push_back(provider.localize({s.id, ref}));
                break;
            }
        }
    }
    return out;
}

std::vector<grid::Region> ground_truth_regions(const Dataset& dataset) {
    return resolve_regions(dataset, RegionSource{});
}

localizer::DatasetFit fit_regions(const Dataset& dataset, const std::vector<grid::Region>& regions, double rate,
                                  bool dataset_level) {
    if (regions.size() != dataset.samples.size()) {
        throw DataError("fit_regions: region count does not match the dataset");
    }
    const grid::TokenGrid tg = dataset.samples.front().grid;
    for (const Sample& s : dataset.samples) {
        if (!(s.grid == tg)) {
            throw DataError("budget fitting needs one grid for the whole dataset; sample '" + s.id + "' differs");
        }
    }
    const localizer::BudgetSpec spec{rate, tg};
    if (dataset_level) {
        return localizer::fit_budget_dataset(regions, spec);
    }
    spec.validate();
    localizer::DatasetFit out;
    double kept_sum = 0.0;
    for (const grid::Region& r : regions) {
        out.samples.push_back(localizer::fit_to_count(r, tg, spec.kept_target()));
        kept_sum += static_cast<double>(out.samples.back().kept);
    }
    out.mean_kept = kept_sum / static_cast<double>(regions.size());
    out.achieved_rate = 1.0 - out.mean_kept / static_cast<double>(tg.total_tokens());
    return out;
}

IlpEvaluator::IlpEvaluator(const ilp::ToyTransformer& model, const Dataset& dataset, SynthConfig synth)
    : m_model(model), m_dataset(dataset), m_baselines(dataset.samples.size()) {
    m_sequences.reserve(dataset.samples.size());
    for (const Sample& s : dataset.samples) {
        m_sequences.push_back(build_sequence(s, model.config().hidden, synth));
    }
}

const ilp::ForwardResult& IlpEvaluator::baseline(std::size_t index) {
    auto& slot = m_baselines.at(index);
    if (!slot) {
        ilp::ForwardOptions options;
        options.keep_hidden_states = false;
        slot = ilp::forward_baseline(m_model, m_sequences[index], options);
    }
    return *slot;
}

std::vector<IlpSampleResult> IlpEvaluator::run(const std::vector<grid::Region>& regions, std::size_t layer,
                                               ilp::PositionPolicy positions, double* wall_ms) {
    if (regions.size() != m_sequences.size()) {
        throw DataError("region count does not match the dataset");
    }
    const ilp::ModelConfig& mc = m_model.config();
    ilp::ForwardOptions options;
    options.keep_hidden_states = false;
    double elapsed = 0.0;

    std::vector<IlpSampleResult> out;
    out.reserve(regions.size());
    for (std::size_t i = 0; i < regions.size(); ++i) {
        const ilp::MultimodalSequence& seq = m_sequences[i];
        ilp::PruneConfig pc;
        pc.layer = layer;
        pc.region = regions[i];
        pc.positions = positions;
        const ilp::ForwardResult& base = baseline(i);
        const auto t0 = std::chrono::steady_clock::now();
        const ilp::PrunedForward pruned = ilp::forward_ilp(m_model, seq, pc, options);
        elapsed += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

        IlpSampleResult r;
        r.id = m_dataset.samples[i].id;
        r.region = regions[i];
        r.visual_total = pruned.report.visual_total;
        r.kept = pruned.report.kept;
        r.rate = pruned.report.rate;
        r.proxy_quality = ilp::proxy_quality(base, pruned.forward, seq.visual_begin());
        r.flops = ilp::count_flops(seq.size(), seq.size() - pruned.report.dropped, pc.prune_point(), mc.layers,
                                   mc.hidden, mc.heads, mc.mlp);
        out.push_back(std::move(r));
    }
    if (wall_ms != nullptr) {
        *wall_ms = elapsed;
    }
    return out;
}

std::vector<IlpSampleResult> evaluate_ilp(const ilp::ToyTransformer& model, const Dataset& dataset,
                                          const std::vector<grid::Region>& regions, const IlpEvalConfig& config) {
    IlpEvaluator evaluator(model, dataset, config.synth);
    return evaluator.run(regions, config.layer, config.positions);
}

double mean_proxy_quality(const std::vector<IlpSampleResult>& results) {
    if (results.empty()) {
        throw DataError("no samples to average");
    }
    double total = 0.0;
    for (const auto& r : results) {
        total += r.proxy_quality;
    }
    return total / static_cast<double>(results.size());
}

}  // namespace regionprune::harness
