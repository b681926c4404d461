// Copyright (C) 2026 The regionprune Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "../oracles/cli_runner.hpp"
#include "regionprune/error.hpp"
#include "regionprune/harness/bench.hpp"
#include "regionprune/harness/dataset.hpp"
#include "regionprune/harness/evaluate.hpp"
#include "regionprune/harness/relacc.hpp"
#include "regionprune/harness/render.hpp"
#include "regionprune/harness/report.hpp"

namespace rp = regionprune;
namespace hs = rp::harness;
using rp::grid::Region;

TEST(Dataset, ParsesSeedAndTokenSamples) {
    std::istringstream in(
        "{\"id\": \"a\", \"side\": 2, \"views\": 1, \"gt_region\": \"2 1 5 2\", \"seed\": 7, \"m\": 2, \"query_len\": 1}\n"
        "{\"id\": \"b\", \"side\": 1, \"views\": 1, \"tokens\": [[1.0, 2.0]], \"m\": 1, \"query_len\": 1}\n");
    const auto ds = hs::read_dataset(in);
    ASSERT_EQ(ds.samples.size(), 2U);
    EXPECT_EQ(ds.find("a").gt_region, Region(2, 1, 5, 2));
    EXPECT_EQ(*ds.find("a").seed, 7U);
    EXPECT_EQ(ds.find("b").tokens->cols(), 2U);
    EXPECT_THROW(ds.find("c"), rp::LookupError);
}

TEST(Dataset, RejectsBadSamples) {
    const char* bad_data[] = {
        // both a seed and tokens
        "{\"id\": \"a\", \"side\": 1, \"views\": 1, \"seed\": 1, \"tokens\": [[1.0]], \"m\": 1, \"query_len\": 1}\n",
        // neither
        "{\"id\": \"a\", \"side\": 1, \"views\": 1, \"m\": 1, \"query_len\": 1}\n",
        // zero-length prompt
        "{\"id\": \"a\", \"side\": 1, \"views\": 1, \"seed\": 1, \"m\": 0, \"query_len\": 1}\n",
        // token rows disagree with the grid
        "{\"id\": \"a\", \"side\": 2, \"views\": 1, \"tokens\": [[1.0]], \"m\": 1, \"query_len\": 1}\n",
        // duplicate ids
        "{\"id\": \"a\", \"side\": 1, \"views\": 1, \"seed\": 1, \"m\": 1, \"query_len\": 1}\n"
        "{\"id\": \"a\", \"side\": 1, \"views\": 1, \"seed\": 2, \"m\": 1, \"query_len\": 1}\n",
        "",
    };
    for (const char* text : bad_data) {
        std::istringstream in(text);
        EXPECT_THROW(hs::read_dataset(in), rp::DataError) << text;
    }
    for (const char* text : {"{not json}\n", "{\"id\": \"a\", \"side\": \"x\"}\n"}) {
        std::istringstream in(text);
        EXPECT_THROW(hs::read_dataset(in), rp::ParseError) << text;
    }
}

TEST(Dataset, WriteReadRoundTrip) {
    hs::GenerateConfig gc;
    gc.count = 5;
    gc.side = 8;
    gc.seed = 3;
    const auto samples = hs::generate_dataset(gc);
    std::stringstream buf;
    hs::write_dataset(buf, samples);
    const auto back = hs::read_dataset(buf);
    ASSERT_EQ(back.samples.size(), 5U);
    std::stringstream again;
    hs::write_dataset(again, back.samples);
    EXPECT_EQ(again.str(), buf.str());
    for (const auto& s : back.samples) {
        ASSERT_TRUE(s.gt_region);
        EXPECT_GE(s.gt_region->width(), 2);
        EXPECT_LE(s.gt_region->width(), 5);
    }
}

TEST(Dataset, MaterializeIsDeterministicWithSignalInRegion) {
    hs::GenerateConfig gc;
    gc.count = 3;
    const auto samples = hs::generate_dataset(gc);
    const auto a = hs::materialize(samples[0], 16);
    const auto b = hs::materialize(samples[0], 16);
    EXPECT_EQ(a.visual, b.visual);
    EXPECT_EQ(a.system.rows(), 8U);
    EXPECT_EQ(a.query.rows(), 8U);
    const auto seq = hs::build_sequence(samples[0], 16);
    EXPECT_EQ(seq.size(), 8U + 576U + 8U);
    // Region rows carry the injected signal, so their mean norm is larger.
    const auto tokens = rp::grid::region_to_tokens(*samples[0].gt_region, samples[0].grid);
    double in_norm = 0.0;
    double out_norm = 0.0;
    for (std::size_t r = 0; r < 576; ++r) {
        double n = 0.0;
        for (double v : a.visual.row(r)) {
            n += v * v;
        }
        (tokens.contains(r) ? in_norm : out_norm) += n;
    }
    EXPECT_GT(in_norm / static_cast<double>(tokens.size()), 2.0 * out_norm / static_cast<double>(576 - tokens.size()));
}

TEST(Report, JsonRoundTripPreservesSummary) {
    hs::RunReport r;
    r.command = "fit";
    r.fingerprint = "0123456789abcdef";
    r.samples.push_back({"a", "2 1 5 2", 576, 72, 0.875, {{"proxy_quality", 0.25}}});
    r.samples.push_back({"b", "0 0 7 7", 576, 576, 0.0, {{"proxy_quality", 1.0 / 3.0}}});
    r.metrics = hs::summarize(r);
    r.timings["baseline"] = {10, 1.5, 1.0, 2.0};
    r.relacc = hs::RelAccRecord{"fedcba", {{"x", 0.9}}, 0.9};
    r.notes.push_back("note");
    const std::string text = hs::to_json(r);
    std::istringstream in(text);
    const auto back = hs::read_report(in);
    EXPECT_EQ(hs::to_json(back), text);
    EXPECT_EQ(hs::summarize(back), r.metrics);
    EXPECT_DOUBLE_EQ(r.metrics.at("mean_kept"), 324.0);
    EXPECT_DOUBLE_EQ(back.samples[1].metrics.at("proxy_quality"), 1.0 / 3.0);
    std::istringstream junk("[1, 2]");
    EXPECT_THROW(hs::read_report(junk), rp::ParseError);
}

TEST(Fingerprint, StableAndSensitive) {
    const auto make = [](double rate) {
        hs::Fingerprint f;
        f.add("command", std::string_view("fit")).add("rate", rate).add("seed", std::uint64_t{7});
        return f.hex();
    };
    EXPECT_EQ(make(0.5), make(0.5));
    EXPECT_NE(make(0.5), make(0.25));
    EXPECT_EQ(make(0.5).size(), 16U);
}

TEST(RelAcc, WorkedExamples) {
    const hs::MetricSet base{{"a", 2.0}, {"b", 4.0}};
    EXPECT_EQ(hs::format_percent(hs::relative_accuracy(base, base).value), "100.0%");
    const hs::MetricSet run{{"a", 1.8}, {"b", 4.4}};
    EXPECT_EQ(hs::format_percent(hs::relative_accuracy(run, base).value), "100.0%");
    EXPECT_EQ(hs::format_percent(hs::relative_accuracy({{"x", 0.989}}, {{"x", 1.0}}).value), "98.9%");
    const auto weighted = hs::relative_accuracy(run, base, hs::MetricSet{{"a", 3.0}, {"b", 1.0}});
    EXPECT_NEAR(weighted.value, (3 * 0.9 + 1.1) / 4.0, 1e-15);
}

TEST(RelAcc, MismatchListsDifference) {
    try {
        hs::relative_accuracy({{"a", 1.0}, {"c", 1.0}}, {{"a", 1.0}, {"b", 1.0}});
        FAIL() << "expected DataError";
    } catch (const rp::DataError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("c"), std::string::npos);
        EXPECT_NE(msg.find("b"), std::string::npos);
    }
    EXPECT_THROW(hs::relative_accuracy({{"a", 1.0}}, {{"a", 0.0}}), rp::DataError);
    EXPECT_THROW(hs::relative_accuracy({{"a", 1.0}}, {{"a", 1.0}}, hs::MetricSet{{"a", 0.0}}), rp::DataError);
}

TEST(Render, FigureRegionGeometryFollowsTokenExtent) {
    hs::RenderSpec spec;
    spec.grid = {24, 1};
    spec.overlays.push_back({"pred", Region(2, 1, 5, 2)});
    const double cell = spec.view_size / 24.0;
    const auto rect = hs::region_rect(spec, Region(2, 1, 5, 2), 0);
    const auto origin = hs::region_rect(spec, Region::full(), 0);
    // Token cols 6..17 and rows 3..8.
    EXPECT_DOUBLE_EQ(rect.x - origin.x, 6 * cell);
    EXPECT_DOUBLE_EQ(rect.width, 12 * cell);
    EXPECT_DOUBLE_EQ(rect.y - origin.y, 3 * cell);
    EXPECT_DOUBLE_EQ(rect.height, 6 * cell);
    EXPECT_DOUBLE_EQ(origin.width, spec.view_size);
}

TEST(Render, DeterministicAndShadesFullGrid) {
    hs::RenderSpec spec;
    spec.grid = {24, 2};
    spec.overlays.push_back({"gt <a&b>", Region(2, 1, 5, 2)});
    spec.overlays.push_back({"pred", Region(1, 1, 3, 3)});
    spec.kept = Region(2, 1, 5, 2);
    const std::string svg = hs::render_svg(spec);
    EXPECT_EQ(svg, hs::render_svg(spec));
    EXPECT_EQ(hs::render_ppm(spec), hs::render_ppm(spec));
    EXPECT_NE(svg.find("gt &lt;a&amp;b&gt;"), std::string::npos);
    EXPECT_NE(svg.find("id=\"view-1\""), std::string::npos);

    hs::RenderSpec full;
    full.grid = {8, 1};
    full.kept = Region::full();
    full.ppm_scale = 2;
    const std::string ppm = hs::render_ppm(full);
    EXPECT_EQ(ppm.rfind("P3", 0), 0U);
}

TEST(Bench, TimingSummaryAndPipeline) {
    const auto t = hs::summarize_times({5.0, 1.0, 3.0, 2.0});
    EXPECT_EQ(t.reps, 4U);
    EXPECT_DOUBLE_EQ(t.median_ms, 2.5);
    EXPECT_DOUBLE_EQ(t.min_ms, 1.0);
    EXPECT_DOUBLE_EQ(t.max_ms, 5.0);

    for (double loc : {0.0, 1.0, 5.0, 40.0}) {
        for (double bb : {0.5, 5.0, 12.0}) {
            for (std::size_t n : {1U, 2U, 10U}) {
                const auto est = hs::estimate_pipeline({loc, bb, n});
                EXPECT_LE(est.overlapped_ms, est.serial_ms + 1e-12);
                EXPECT_DOUBLE_EQ(est.serial_ms, static_cast<double>(n) * (loc + bb));
                EXPECT_DOUBLE_EQ(est.overlapped_ms, loc + bb + static_cast<double>(n - 1) * std::max(loc, bb));
            }
        }
    }
    EXPECT_THROW(hs::estimate_pipeline({-1.0, 1.0, 1}), rp::ConfigError);
    EXPECT_THROW(hs::estimate_pipeline({1.0, 1.0, 0}), rp::ConfigError);
}

TEST(Bench, RateZeroRatioNearOne) {
    rp::ilp::ModelConfig mc;
    mc.layers = 4;
    mc.hidden = 64;
    mc.heads = 4;
    mc.mlp = 128;
    const rp::ilp::ToyTransformer model(mc);
    hs::GenerateConfig gc;
    gc.count = 2;
    gc.side = 16;
    hs::Dataset ds{hs::generate_dataset(gc), {}};
    hs::BenchConfig bc;
    bc.rates = {0.0};
    bc.reps = 15;
    bc.warmup = 2;
    const auto rows = hs::run_bench(model, ds, bc);
    ASSERT_EQ(rows.size(), 1U);
    EXPECT_DOUBLE_EQ(rows[0].mean_kept, 256.0);
    EXPECT_GE(rows[0].ratio, 0.9);
    EXPECT_LE(rows[0].ratio, 1.1);
    bc.reps = 2;
    EXPECT_THROW(hs::run_bench(model, ds, bc), rp::ConfigError);
}

TEST(Evaluate, RegionSourcesAndFitting) {
    hs::GenerateConfig gc;
    gc.count = 80;
    const hs::Dataset ds{hs::generate_dataset(gc), {}};
    EXPECT_EQ(hs::parse_region_source("gt"), hs::RegionSourceKind::ground_truth);
    EXPECT_THROW(hs::parse_region_source("nope"), rp::ConfigError);
    const auto gt = hs::ground_truth_regions(ds);
    const auto center = hs::resolve_regions(ds, {hs::RegionSourceKind::center, nullptr, 0});
    for (std::size_t i = 0; i < gt.size(); ++i) {
        EXPECT_EQ(center[i].width(), gt[i].width());
        EXPECT_EQ(center[i].height(), gt[i].height());
    }
    for (double rate : {0.667, 0.778, 0.889}) {
        const auto fit = hs::fit_regions(ds, gt, rate, true);
        const double target = static_cast<double>(rp::localizer::BudgetSpec{rate, {24, 1}}.kept_target());
        EXPECT_LE(std::abs(fit.mean_kept - target), 1.0);
    }
}

TEST(Evaluate, LastLayerPruningKeepsProxyQualityAtOne) {
    rp::ilp::ModelConfig mc;
    mc.layers = 3;
    const rp::ilp::ToyTransformer model(mc);
    hs::GenerateConfig gc;
    gc.count = 4;
    gc.side = 12;
    const hs::Dataset ds{hs::generate_dataset(gc), {}};
    hs::IlpEvaluator ev(model, ds);
    for (const auto& r : ev.run(hs::ground_truth_regions(ds), 3, rp::ilp::PositionPolicy::keep_original)) {
        EXPECT_NEAR(r.proxy_quality, 1.0, 1e-12);
    }
}

// ---------------------------------------------------------------------------
// Command line

TEST(Cli, MapOutputs) {
    const auto fig = testutil::run({"map", "--region", "2 1 5 2", "--side", "24"});
    EXPECT_EQ(fig.code, 0);
    std::istringstream lines(fig.out);
    std::string line;
    std::vector<std::size_t> idx;
    while (std::getline(lines, line)) {
        if (!line.empty() && line[0] != '#') {
            idx.push_back(std::stoul(line));
        }
    }
    EXPECT_EQ(idx.size(), 72U);
    EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
    EXPECT_EQ(std::adjacent_find(idx.begin(), idx.end()), idx.end());

    const auto full = testutil::run({"map", "--region", "0 0 7 7", "--side", "24"});
    EXPECT_EQ(std::count(full.out.begin(), full.out.end(), '\n'), 577);
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(testutil::run({"map", "--region", "2 one 5 2"}).code, hs::exit_config);
    EXPECT_EQ(testutil::run({"map"}).code, hs::exit_config);
    EXPECT_EQ(testutil::run({}).code, hs::exit_config);
    EXPECT_EQ(testutil::run({"frobnicate"}).code, hs::exit_config);
    EXPECT_EQ(testutil::run({"--help"}).code, hs::exit_ok);

    testutil::ScratchDir dir;
    testutil::write_text(dir.file("bad.jsonl"),
                         "{\"id\": \"a\", \"side\": 2, \"views\": 1, \"tokens\": [[1.0]], \"m\": 1, \"query_len\": 1}\n");
    EXPECT_EQ(testutil::run({"fit", "--dataset", dir.file("bad.jsonl"), "--rate", "0.5"}).code, hs::exit_data);
    EXPECT_EQ(testutil::run({"fit", "--dataset", dir.file("missing.jsonl"), "--rate", "0.5"}).code, hs::exit_data);

    ASSERT_EQ(testutil::run({"--out", dir.path().string(), "synth", "--count", "3", "--side", "8"}).code, 0);
    const std::string ds = dir.file("dataset.jsonl");
    EXPECT_EQ(testutil::run({"fit", "--dataset", ds, "--rate", "1.5"}).code, hs::exit_config);
    EXPECT_EQ(testutil::run({"sweep-k", "--dataset", ds, "--k-max", "9", "--no-timing"}).code, hs::exit_config);
    EXPECT_EQ(testutil::run({"ilp", "--dataset", ds, "--layer", "0"}).code, hs::exit_config);
    EXPECT_EQ(testutil::run({"locate", "--dataset", ds, "--source", "file"}).code, hs::exit_config);
    EXPECT_EQ(testutil::run({"bench", "--dataset", ds, "--reps", "2"}).code, hs::exit_config);
}

TEST(Cli, RelAccCommand) {
    testutil::ScratchDir dir;
    testutil::write_text(dir.file("base.json"), "{\"gqa\": 60.0, \"mme\": 1500.0}");
    testutil::write_text(dir.file("run.json"), "{\"gqa\": 54.0, \"mme\": 1650.0}");
    testutil::write_text(dir.file("other.json"), "{\"gqa\": 54.0}");
    const auto r = testutil::run({"relacc", "--run", dir.file("run.json"), "--baseline", dir.file("base.json")});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("100.0%"), std::string::npos) << r.out;
    const auto same = testutil::run({"relacc", "--run", dir.file("base.json"), "--baseline", dir.file("base.json")});
    EXPECT_NE(same.out.find("100.0%"), std::string::npos);
    EXPECT_EQ(testutil::run({"relacc", "--run", dir.file("other.json"), "--baseline", dir.file("base.json")}).code,
              hs::exit_data);
}

TEST(Cli, SweepKProperties) {
    testutil::ScratchDir dir;
    ASSERT_EQ(testutil::run({"--out", dir.path().string(), "--seed", "4", "synth", "--count", "24", "--side", "12"})
                  .code,
              0);
    const auto r = testutil::run({"--seed", "4", "sweep-k", "--dataset", dir.file("dataset.jsonl"), "--layers", "6",
                                  "--no-timing"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream lines(r.out);
    std::string line;
    std::map<std::string, std::vector<double>> quality;  // rate -> quality by K
    std::size_t rows = 0;
    while (std::getline(lines, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 'K') {
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            f.push_back(cell);
        }
        ASSERT_EQ(f.size(), 9U);
        ++rows;
        quality[f[1]].push_back(std::stod(f[4]));
        // 24 samples of 8 + 144 + 8 rows on the default 6-layer, 32-wide model.
        const auto per_sample = rp::ilp::count_flops(160, 160, 1, 6, 32, 2, 64).baseline;
        EXPECT_EQ(std::stoull(f[5]), 24 * per_sample);
        EXPECT_DOUBLE_EQ(std::stod(f[7]), std::stod(f[6]) / std::stod(f[5]));
    }
    EXPECT_EQ(rows, 18U);
    std::size_t pairs = 0;
    std::size_t ok = 0;
    for (const auto& [rate, q] : quality) {
        EXPECT_NEAR(q.back(), 1.0, 1e-12) << rate;
        for (std::size_t k = 1; k < q.size(); ++k) {
            ++pairs;
            ok += q[k] >= q[k - 1] ? 1 : 0;
        }
    }
    EXPECT_GE(static_cast<double>(ok), 0.95 * static_cast<double>(pairs));
}

TEST(Cli, RecallReportShape) {
    testutil::ScratchDir dir;
    ASSERT_EQ(testutil::run({"--out", dir.path().string(), "synth", "--count", "10"}).code, 0);
    const auto gt = testutil::run({"recall", "--dataset", dir.file("dataset.jsonl"), "--source", "gt"});
    ASSERT_EQ(gt.code, 0) << gt.err;
    for (const char* key : {"mean_recall", "recall>0.5", "recall>0.7", "recall>0.9"}) {
        EXPECT_NE(gt.out.find(key), std::string::npos) << key;
    }
}

TEST(Cli, RenderWritesSvgAndPpm) {
    testutil::ScratchDir dir;
    const auto r = testutil::run({"--out", dir.path().string(), "render", "--side", "24", "--region", "2 1 5 2",
                                  "--label", "pred"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto files = testutil::snapshot(dir.path());
    EXPECT_EQ(files.count("render.svg"), 1U);
    EXPECT_EQ(files.count("render.ppm"), 1U);
    const auto stdout_svg = testutil::run({"render", "--side", "24", "--region", "2 1 5 2", "--label", "pred"});
    EXPECT_EQ(stdout_svg.out, files.at("render.svg"));
}
