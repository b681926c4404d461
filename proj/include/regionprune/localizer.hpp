// Copyright (C) 2026 The regionprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "regionprune/grid_region.hpp"

namespace regionprune::localizer {

/// What a provider knows about the sample it is asked about.
struct LocalizeRequest {
    std::string sample_id;
    /// Region whose width and height the Center and Random providers copy
    /// (the ground-truth or predicted region of the sample).
    std::optional<grid::Region> reference;
};

/// Source of contextual regions. Implementations are read-only after
/// construction and safe to share across threads.
class RegionProvider {
public:
    virtual ~RegionProvider() = default;
    virtual grid::Region localize(const LocalizeRequest& request) const = 0;
    virtual std::string name() const = 0;
};

/// Regions exported by an external localization model, one JSON object per
/// line: {"id": "...", "region": "x_min y_min x_max y_max"}.
class FileBackedLocalizer : public RegionProvider {
public:
    /// Unknown keys are ignored; a repeated id replaces the earlier entry and
    /// records a warning. Throws ParseError naming the line on malformed input.
    static FileBackedLocalizer from_jsonl(std::istream& in, const std::string& source_name = "predictions");
    static FileBackedLocalizer from_file(const std::string& path);

    /// Throws LookupError for an unknown sample id.
    grid::Region localize(const LocalizeRequest& request) const override;
    /// Parsed entry including any repairs applied to the stored text.
    const grid::ParsedRegion& lookup(const std::string& sample_id) const;

    std::string name() const override { return "file"; }
    const std::vector<std::string>& warnings() const { return m_warnings; }
    std::size_t size() const { return m_entries.size(); }

private:
    std::map<std::string, grid::ParsedRegion> m_entries;
    std::vector<std::string> m_warnings;
};

/// Region of the reference dimensions centered on the grid.
class CenterLocalizer : public RegionProvider {
public:
    grid::Region localize(const LocalizeRequest& request) const override;
    std::string name() const override { return "center"; }
};

/// Region of the reference dimensions placed uniformly over all positions
/// that fit, drawn from a generator seeded by (seed, sample id).
class RandomLocalizer : public RegionProvider {
public:
    explicit RandomLocalizer(std::uint64_t seed) : m_seed(seed) {}
    grid::Region localize(const LocalizeRequest& request) const override;
    std::string name() const override { return "random"; }

private:
    std::uint64_t m_seed;
};

enum class LocalizerKind { file_backed, center, random };

/// Throws ConfigError for unknown names ("file", "center", "random").
LocalizerKind parse_localizer_kind(const std::string& name);

/// Seed for per-sample generators; stable across runs and platforms.
std::uint64_t sample_seed(std::uint64_t run_seed, const std::string& sample_id);

struct BudgetSpec {
    double rate = 0.0;  // fraction of visual tokens to drop, in [0, 1)
    grid::TokenGrid grid;

    /// round((1 − rate) · total_tokens)
    std::size_t kept_target() const;
    /// Throws ConfigError when the rate is out of range or the target is zero.
    void validate() const;
};

/// Visual tokens a region keeps on `grid` (all views).
std::size_t kept_tokens(const grid::Region& region, const grid::TokenGrid& grid);

struct FitResult {
    grid::Region region;
    std::size_t kept = 0;
    std::size_t steps = 0;
};

/// Greedy one-block-per-step fit toward `target` kept tokens. While under the
/// target the region only grows (candidates right, down, left, up); while over
/// it only shrinks (candidates left, up, right, down). Each step takes the
/// candidate leaving the smallest |kept − target|, earlier candidates winning
/// ties, and the loop stops once no candidate strictly improves. The result
/// therefore contains, or is contained by, the input.
FitResult fit_to_count(const grid::Region& region, const grid::TokenGrid& grid, std::size_t target);

grid::Region fit_budget(const grid::Region& region, const BudgetSpec& spec);

struct DatasetFit {
    std::vector<FitResult> samples;
    double mean_kept = 0.0;
    double achieved_rate = 0.0;
};

/// Fits each region in order, aiming each sample at the budget target minus
/// the running surplus of the samples before it, so the dataset average
/// tracks the target even when block granularity forbids exact counts.
DatasetFit fit_budget_dataset(std::span<const grid::Region> regions, const BudgetSpec& spec);

struct RecallSummary {
    std::size_t count = 0;
    double mean = 0.0;
    std::size_t above_50 = 0;  // recall > 0.5
    std::size_t above_70 = 0;
    std::size_t above_90 = 0;
};

/// Throws DataError for empty or misaligned lists.
RecallSummary mean_recall(std::span<const grid::Region> gt, std::span<const grid::Region> pred);

}  // namespace regionprune::localizer
