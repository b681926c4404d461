// Copyright (C) 2026 The regionprune Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <random>
#include <set>
#include <sstream>

#include "../oracles/grid_oracle.hpp"
#include "regionprune/error.hpp"
#include "regionprune/localizer.hpp"

namespace rp = regionprune;
namespace loc = rp::localizer;
using rp::grid::Region;
using rp::grid::TokenGrid;

namespace {

std::size_t brute_kept(const Region& r, const TokenGrid& g) {
    return oracle::region_tokens({r.x_min(), r.y_min(), r.x_max(), r.y_max()}, g.side, g.views).size();
}

std::size_t gap(std::size_t a, std::size_t b) { return a > b ? a - b : b - a; }

}  // namespace

TEST(FileBacked, ParsesRepairsAndWarns) {
    std::istringstream in(
        "{\"id\": \"a\", \"region\": \"2 1 5 2\", \"extra\": 1}\n"
        "\n"
        "{\"id\": \"b\", \"region\": \"<9> <1> <5> <-1>\"}\n"
        "{\"id\": \"a\", \"region\": \"0 0 7 7\"}\n");
    const auto f = loc::FileBackedLocalizer::from_jsonl(in);
    EXPECT_EQ(f.size(), 2U);
    EXPECT_EQ(f.localize({"a", std::nullopt}), Region::full());
    EXPECT_EQ(f.localize({"b", std::nullopt}), Region(5, 0, 7, 1));
    EXPECT_FALSE(f.lookup("b").repairs.empty());
    // Four repair notes for "b" plus one duplicate-id warning.
    ASSERT_EQ(f.warnings().size(), 5U);
    EXPECT_EQ(std::count_if(f.warnings().begin(), f.warnings().end(),
                            [](const std::string& w) { return w.find("duplicate id 'a'") != std::string::npos; }),
              1);
    EXPECT_THROW(f.localize({"zzz", std::nullopt}), rp::LookupError);
}

TEST(FileBacked, StoredFigureRegion) {
    std::istringstream in("{\"id\": \"fig\", \"region\": \"2 1 5 2\"}\n");
    EXPECT_EQ(loc::FileBackedLocalizer::from_jsonl(in).localize({"fig", std::nullopt}), Region(2, 1, 5, 2));
}

TEST(FileBacked, MalformedLinesAreParseErrors) {
    for (const char* text : {"{\"id\": \"a\"}\n", "not json\n", "{\"id\": 3, \"region\": \"0 0 1 1\"}\n",
                             "{\"id\": \"a\", \"region\": \"0 0 x 1\"}\n"}) {
        std::istringstream in(text);
        EXPECT_THROW(loc::FileBackedLocalizer::from_jsonl(in), rp::ParseError) << text;
    }
}

TEST(Center, CentersReferenceDimensions) {
    const loc::CenterLocalizer c;
    EXPECT_EQ(c.localize({"x", Region(0, 0, 3, 3)}), Region(2, 2, 5, 5));
    EXPECT_EQ(c.localize({"y", Region(4, 4, 7, 7)}), Region(2, 2, 5, 5));
    EXPECT_EQ(c.localize({"z", Region::full()}), Region::full());
    EXPECT_THROW(c.localize({"w", std::nullopt}), rp::ConfigError);
}

TEST(Random, DeterministicPerSeedAndId) {
    const loc::RandomLocalizer a(5);
    const loc::RandomLocalizer b(5);
    const Region ref(0, 0, 2, 1);
    for (int i = 0; i < 50; ++i) {
        const std::string id = "s" + std::to_string(i);
        const Region r = a.localize({id, ref});
        EXPECT_EQ(r, a.localize({id, ref}));
        EXPECT_EQ(r, b.localize({id, ref}));
        EXPECT_EQ(r.width(), 3);
        EXPECT_EQ(r.height(), 2);
    }
    EXPECT_EQ(loc::sample_seed(1, "abc"), loc::sample_seed(1, "abc"));
    EXPECT_NE(loc::sample_seed(1, "abc"), loc::sample_seed(2, "abc"));
    EXPECT_NE(loc::sample_seed(1, "abc"), loc::sample_seed(1, "abd"));
}

TEST(Random, CoversAllPlacements) {
    const loc::RandomLocalizer r(0);
    std::set<std::pair<int, int>> corners;
    for (int i = 0; i < 2000; ++i) {
        const Region out = r.localize({"id" + std::to_string(i), Region(0, 0, 5, 6)});
        corners.insert({out.x_min(), out.y_min()});
    }
    EXPECT_EQ(corners.size(), 3U * 2U);
}

TEST(LocalizerKind, ParsesNames) {
    EXPECT_EQ(loc::parse_localizer_kind("file"), loc::LocalizerKind::file_backed);
    EXPECT_EQ(loc::parse_localizer_kind("center"), loc::LocalizerKind::center);
    EXPECT_EQ(loc::parse_localizer_kind("random"), loc::LocalizerKind::random);
    EXPECT_THROW(loc::parse_localizer_kind("oracle"), rp::ConfigError);
}

TEST(Budget, KeptTargetAndValidation) {
    EXPECT_EQ((loc::BudgetSpec{0.889, {24, 1}}).kept_target(), 64U);
    EXPECT_EQ((loc::BudgetSpec{0.778, {24, 1}}).kept_target(), 128U);
    EXPECT_EQ((loc::BudgetSpec{0.667, {24, 1}}).kept_target(), 192U);
    EXPECT_EQ((loc::BudgetSpec{0.0, {24, 1}}).kept_target(), 576U);
    EXPECT_THROW((loc::BudgetSpec{1.0, {24, 1}}).validate(), rp::ConfigError);
    EXPECT_THROW((loc::BudgetSpec{-0.1, {24, 1}}).validate(), rp::ConfigError);
    EXPECT_THROW((loc::BudgetSpec{0.9999, {4, 1}}).validate(), rp::ConfigError);
}

TEST(Budget, KeptTokensMatchesBruteForce) {
    for (const auto& r : rp::grid::all_regions()) {
        EXPECT_EQ(loc::kept_tokens(r, {14, 3}), brute_kept(r, {14, 3}));
    }
}

TEST(FitBudget, WorkedExamples) {
    const TokenGrid g{24, 1};
    // 8 blocks of 9 tokens already match a 72-token target.
    const auto fixed = loc::fit_to_count(Region(2, 1, 5, 2), g, 72);
    EXPECT_EQ(fixed.region, Region(2, 1, 5, 2));
    EXPECT_EQ(fixed.steps, 0U);
    EXPECT_EQ(loc::fit_budget(Region(3, 3, 4, 4), {0.0, g}), Region::full());

    const auto grown = loc::fit_to_count(Region(3, 3, 4, 4), g, 64);
    EXPECT_EQ(grown.kept, 72U);
    EXPECT_TRUE(grown.region.contains(Region(3, 3, 4, 4)));
}

TEST(FitBudget, GrowthReachesBestContainingRectangleForWorkedExample) {
    const TokenGrid g{24, 1};
    const Region start(3, 3, 4, 4);
    std::size_t best = SIZE_MAX;
    for (const auto& r : oracle::all_rects()) {
        if (oracle::contains(r, {3, 3, 4, 4})) {
            best = std::min(best, gap(oracle::region_tokens(r, 24, 1).size(), 64));
        }
    }
    EXPECT_EQ(gap(loc::fit_to_count(start, g, 64).kept, 64), best);
}

TEST(FitBudget, PropertiesOverAllRectanglesAndTargets) {
    const TokenGrid g{24, 1};
    for (double rate : {0.3, 0.667, 0.778, 0.889, 0.95}) {
        const std::size_t target = loc::BudgetSpec{rate, g}.kept_target();
        for (const auto& r : rp::grid::all_regions()) {
            const auto fit = loc::fit_to_count(r, g, target);
            const std::size_t start = brute_kept(r, g);
            EXPECT_EQ(fit.kept, brute_kept(fit.region, g));
            EXPECT_TRUE(fit.region.contains(r) || r.contains(fit.region));
            EXPECT_LE(gap(fit.kept, target), gap(start, target));
            EXPECT_LE(fit.steps, 28U);
            // Stopping rule: no single one-block move in the fit direction improves.
            const bool grow = start < target;
            if (start == target) {
                EXPECT_EQ(fit.region, r);
                continue;
            }
            const Region& f = fit.region;
            // Edge deltas (x_min, y_min, x_max, y_max) of each one-block move.
            const int grow_moves[4][4] = {{0, 0, 1, 0}, {0, 0, 0, 1}, {-1, 0, 0, 0}, {0, -1, 0, 0}};
            const int shrink_moves[4][4] = {{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, -1, 0}, {0, 0, 0, -1}};
            for (const auto& m : grow ? grow_moves : shrink_moves) {
                const int nx0 = f.x_min() + m[0];
                const int ny0 = f.y_min() + m[1];
                const int nx1 = f.x_max() + m[2];
                const int ny1 = f.y_max() + m[3];
                if (nx0 < 0 || ny0 < 0 || nx1 > 7 || ny1 > 7 || nx0 > nx1 || ny0 > ny1) {
                    continue;
                }
                const std::size_t k = brute_kept(Region(nx0, ny0, nx1, ny1), g);
                EXPECT_GE(gap(k, target), gap(fit.kept, target));
            }
        }
    }
}

TEST(FitBudget, DatasetLevelAverageWithinOneTokenPerSample) {
    std::mt19937_64 rng(17);
    const auto all = rp::grid::all_regions();
    std::vector<Region> regions;
    for (int i = 0; i < 200; ++i) {
        regions.push_back(all[rng() % all.size()]);
    }
    for (double rate : {0.667, 0.778, 0.889}) {
        const loc::BudgetSpec spec{rate, {24, 1}};
        const auto fit = loc::fit_budget_dataset(regions, spec);
        ASSERT_EQ(fit.samples.size(), regions.size());
        EXPECT_LE(std::abs(fit.mean_kept - static_cast<double>(spec.kept_target())), 1.0) << rate;
        EXPECT_NEAR(fit.achieved_rate, 1.0 - fit.mean_kept / 576.0, 1e-15);
    }
}

TEST(MeanRecall, SummaryShape) {
    const std::vector<Region> gt{Region(0, 0, 3, 3), Region(1, 1, 2, 2), Region(4, 4, 7, 7)};
    const auto same = loc::mean_recall(gt, gt);
    EXPECT_EQ(same.count, 3U);
    EXPECT_DOUBLE_EQ(same.mean, 1.0);
    EXPECT_EQ(same.above_50, 3U);
    EXPECT_EQ(same.above_70, 3U);
    EXPECT_EQ(same.above_90, 3U);

    const std::vector<Region> pred{Region(2, 2, 5, 5), Region(1, 1, 2, 2), Region(0, 0, 1, 1)};
    const auto mixed = loc::mean_recall(gt, pred);
    EXPECT_DOUBLE_EQ(mixed.mean, (0.25 + 1.0 + 0.0) / 3.0);
    EXPECT_EQ(mixed.above_50, 1U);
    EXPECT_EQ(mixed.above_90, 1U);

    EXPECT_THROW(loc::mean_recall(std::vector<Region>{}, std::vector<Region>{}), rp::DataError);
    EXPECT_THROW(loc::mean_recall(gt, std::vector<Region>{gt[0]}), rp::DataError);
}

TEST(MeanRecall, RandomBelowGroundTruthOverManySamples) {
    std::mt19937_64 rng(23);
    const auto all = rp::grid::all_regions();
    std::vector<Region> gt;
    std::vector<Region> rnd;
    std::vector<Region> ctr;
    const loc::RandomLocalizer random(99);
    const loc::CenterLocalizer center;
    for (int i = 0; i < 1200; ++i) {
        // Small ground-truth regions, as a localizer would report.
        Region g = all[rng() % all.size()];
        while (g.block_area() > 16) {
            g = all[rng() % all.size()];
        }
        gt.push_back(g);
        rnd.push_back(random.localize({"s" + std::to_string(i), g}));
        ctr.push_back(center.localize({"s" + std::to_string(i), g}));
    }
    const double gt_mean = loc::mean_recall(gt, gt).mean;
    const double rnd_mean = loc::mean_recall(gt, rnd).mean;
    EXPECT_LT(rnd_mean, gt_mean);
    EXPECT_LT(loc::mean_recall(gt, ctr).mean, gt_mean);
}
