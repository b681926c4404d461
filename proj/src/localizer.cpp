// Copyright (C) 2026 The regionprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "regionprune/localizer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <random>

#include <nlohmann/json.hpp>

#include "regionprune/error.hpp"

namespace regionprune::localizer {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

const grid::Region& require_reference(const LocalizeRequest& request, const char* who) {
    if (!request.reference) {
        throw ConfigError(std::string(who) + " localizer needs reference dimensions for sample '" +
                          request.sample_id + "'");
    }
    return *request.reference;
}

std::size_t abs_diff(std::size_t a, std::size_t b) {
    return a > b ? a - b : b - a;
}

}  // namespace

FileBackedLocalizer FileBackedLocalizer::from_jsonl(std::istream& in, const std::string& source_name) {
    FileBackedLocalizer loc;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const std::string where = source_name + ":" + std::to_string(line_no);
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(where + ": invalid JSON (" + e.what() + ")");
        }
        if (!obj.is_object() || !obj.contains("id") || !obj["id"].is_string() || !obj.contains("region") ||
            !obj["region"].is_string()) {
            throw ParseError(where + ": expected {\"id\": string, \"region\": string}");
        }
        const std::string id = obj["id"].get<std::string>();
        grid::ParsedRegion parsed = [&] {
            try {
                return grid::parse_region(obj["region"].get<std::string>());
            } catch (const ParseError& e) {
                throw ParseError(where + ": " + e.what());
            }
        }();
        for (const auto& repair : parsed.repairs) {
            loc.m_warnings.push_back(where + ": sample '" + id + "': " + repair.describe());
        }
        const auto [it, inserted] = loc.m_entries.insert_or_assign(id, std::move(parsed));
        if (!inserted) {
            loc.m_warnings.push_back(where + ": duplicate id '" + id + "', keeping the later entry");
        }
    }
    return loc;
}

FileBackedLocalizer FileBackedLocalizer::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open predictions file '" + path + "'");
    }
    return from_jsonl(in, path);
}

const grid::ParsedRegion& FileBackedLocalizer::lookup(const std::string& sample_id) const {
    const auto it = m_entries.find(sample_id);
    if (it == m_entries.end()) {
        throw LookupError("no predicted region for sample '" + sample_id + "'");
    }
    return it->second;
}

grid::Region FileBackedLocalizer::localize(const LocalizeRequest& request) const {
    return lookup(request.sample_id).region;
}

grid::Region CenterLocalizer::localize(const LocalizeRequest& request) const {
    return grid::resize_to_match(grid::Region::full(), require_reference(request, "center"));
}

grid::Region RandomLocalizer::localize(const LocalizeRequest& request) const {
    const grid::Region& ref = require_reference(request, "random");
    std::mt19937_64 rng(sample_seed(m_seed, request.sample_id));
    const auto x_slots = static_cast<std::uint64_t>(grid::kGridBlocks - ref.width() + 1);
    const auto y_slots = static_cast<std::uint64_t>(grid::kGridBlocks - ref.height() + 1);
    const int x0 = static_cast<int>(rng() % x_slots);
    const int y0 = static_cast<int>(rng() % y_slots);
    return {x0, y0, x0 + ref.width() - 1, y0 + ref.height() - 1};
}

LocalizerKind parse_localizer_kind(const std::string& name) {
    if (name == "file" || name == "file-backed") {
        return LocalizerKind::file_backed;
    }
    if (name == "center") {
        return LocalizerKind::center;
    }
    if (name == "random") {
        return LocalizerKind::random;
    }
    throw ConfigError("unknown localizer kind '" + name + "' (expected file, center or random)");
}

std::uint64_t sample_seed(std::uint64_t run_seed, const std::string& sample_id) {
    return splitmix64(splitmix64(run_seed) ^ fnv1a(sample_id));
}

std::size_t BudgetSpec::kept_target() const {
    return static_cast<std::size_t>(std::llround((1.0 - rate) * static_cast<double>(grid.total_tokens())));
}

void BudgetSpec::validate() const {
    grid.validate();
    if (!(rate >= 0.0 && rate < 1.0)) {
        throw ConfigError("pruning rate must lie in [0, 1), got " + std::to_string(rate));
    }
    if (kept_target() < 1) {
        throw ConfigError("pruning rate " + std::to_string(rate) + " keeps no tokens on this grid");
    }
}

std::size_t kept_tokens(const grid::Region& region, const grid::TokenGrid& grid) {
    return grid::token_extent(region, grid.side).count() * grid.views;
}

FitResult fit_to_count(const grid::Region& region, const grid::TokenGrid& grid, std::size_t target) {
    grid.validate();
    constexpr int kLast = grid::kGridBlocks - 1;
    FitResult fit{region, kept_tokens(region, grid), 0};
    const bool grow = fit.kept < target;

    while (fit.kept != target) {
        const grid::Region& r = fit.region;
        std::array<std::optional<grid::Region>, 4> candidates;
        if (grow) {
            if (r.x_max() < kLast) candidates[0] = grid::Region(r.x_min(), r.y_min(), r.x_max() + 1, r.y_max());
            if (r.y_max() < kLast) candidates[1] = grid::Region(r.x_min(), r.y_min(), r.x_max(), r.y_max() + 1);
            if (r.x_min() > 0) candidates[2] = grid::Region(r.x_min() - 1, r.y_min(), r.x_max(), r.y_max());
            if (r.y_min() > 0) candidates[3] = grid::Region(r.x_min(), r.y_min() - 1, r.x_max(), r.y_max());
        } else {
            if (r.width() > 1) candidates[0] = grid::Region(r.x_min() + 1, r.y_min(), r.x_max(), r.y_max());
            if (r.height() > 1) candidates[1] = grid::Region(r.x_min(), r.y_min() + 1, r.x_max(), r.y_max());
            if (r.width() > 1) candidates[2] = grid::Region(r.x_min(), r.y_min(), r.x_max() - 1, r.y_max());
            if (r.height() > 1) candidates[3] = grid::Region(r.x_min(), r.y_min(), r.x_max(), r.y_max() - 1);
        }
        std::optional<grid::Region> best;
        std::size_t best_kept = 0;
        std::size_t best_gap = abs_diff(fit.kept, target);
        for (const auto& c : candidates) {
            if (!c) {
                continue;
            }
            const std::size_t k = kept_tokens(*c, grid);
            if (abs_diff(k, target) < best_gap) {
                best = c;
                best_kept = k;
                best_gap = abs_diff(k, target);
            }
        }
        if (!best) {
            break;
        }
        fit.region = *best;
        fit.kept = best_kept;
        ++fit.steps;
    }
    return fit;
}

grid::Region fit_budget(const grid::Region& region, const BudgetSpec& spec) {
    spec.validate();
    return fit_to_count(region, spec.grid, spec.kept_target()).region;
}

DatasetFit fit_budget_dataset(std::span<const grid::Region> regions, const BudgetSpec& spec) {
    spec.validate();
    DatasetFit out;
    if (regions.empty()) {
        return out;
    }
    const auto target = static_cast<long long>(spec.kept_target());
    const auto total = static_cast<long long>(spec.grid.total_tokens());
    long long surplus = 0;
    double kept_sum = 0.0;
    for (const grid::Region& region : regions) {
        const long long aim = std::clamp<long long>(target - surplus, 1, total);
        FitResult fit = fit_to_count(region, spec.grid, static_cast<std::size_t>(aim));
        surplus += static_cast<long long>(fit.kept) - target;
        kept_sum += static_cast<double>(fit.kept);
        out.samples.push_back(fit);
    }
    out.mean_kept = kept_sum / static_cast<double>(regions.size());
    out.achieved_rate = 1.0 - out.mean_kept / static_cast<double>(total);
    return out;
}

RecallSummary mean_recall(std::span<const grid::Region> gt, std::span<const grid::Region> pred) {
    if (gt.empty()) {
        throw DataError("mean_recall: no samples");
    }
    if (gt.size() != pred.size()) {
        throw DataError("mean_recall: " + std::to_string(gt.size()) + " ground-truth regions but " +
                        std::to_string(pred.size()) + " predictions");
    }
    RecallSummary s;
    s.count = gt.size();
    double total = 0.0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        const double r = grid::recall(gt[i], pred[i]);
        total += r;
        s.above_50 += r > 0.5 ? 1 : 0;
        s.above_70 += r > 0.7 ? 1 : 0;
        s.above_90 += r > 0.9 ? 1 : 0;
    }
    s.mean = total / static_cast<double>(gt.size());
    return s;
}

}  // namespace regionprune::localizer
