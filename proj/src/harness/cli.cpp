// Copyright (C) 2026 The regionprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "regionprune/harness/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "regionprune/error.hpp"
#include "regionprune/grid_region.hpp"
#include "regionprune/harness/bench.hpp"
#include "regionprune/harness/dataset.hpp"
#include "regionprune/harness/evaluate.hpp"
#include "regionprune/harness/relacc.hpp"
#include "regionprune/harness/render.hpp"
#include "regionprune/harness/report.hpp"
#include "regionprune/harness/trace.hpp"
#include "regionprune/ilp_transformer.hpp"
#include "regionprune/localizer.hpp"
#include "regionprune/plc_compressor.hpp"

namespace regionprune::harness {

namespace {

constexpr const char* kProxyNote =
    "proxy_quality is the mean cosine similarity between final hidden states of the pruned and unpruned runs over "
    "retained non-system rows; it stands in for task accuracy";

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string rate_key(double rate) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", rate);
    return buf;
}

struct Context {
    std::uint64_t seed = 0;
    std::string out_dir;
    std::ostream& out;
    std::ostream& err;

    /// Primary output: a file under --out, or `out` when no directory is set.
    void emit(const std::string& file_name, const std::string& content) const {
        if (out_dir.empty()) {
            out << content;
            return;
        }
        write_file(file_name, content);
    }

    void write_file(const std::string& file_name, const std::string& content) const {
        if (out_dir.empty()) {
            throw ConfigError("writing '" + file_name + "' needs --out <dir>");
        }
        std::error_code ec;
        std::filesystem::create_directories(out_dir, ec);
        const std::filesystem::path path = std::filesystem::path(out_dir) / file_name;
        std::ofstream f(path, std::ios::binary);
        if (!f) {
            throw DataError("cannot write '" + path.string() + "'");
        }
        f << content;
        if (!f) {
            throw DataError("failed writing '" + path.string() + "'");
        }
        out << "wrote " << path.string() << '\n';
    }

    void warn_all(const std::vector<std::string>& warnings) const {
        for (const auto& w : warnings) {
            err << "warning: " << w << '\n';
        }
    }
};

struct ModelOptions {
    std::size_t layers = 4;
    std::size_t heads = 2;
    std::size_t hidden = 32;
    std::size_t mlp = 64;
    double qk_alignment = 0.75;

    void add_to(CLI::App* app) {
        app->add_option("--layers", layers, "Decoder blocks L")->capture_default_str();
        app->add_option("--heads", heads, "Attention heads")->capture_default_str();
        app->add_option("--hidden", hidden, "Hidden width")->capture_default_str();
        app->add_option("--mlp", mlp, "MLP width")->capture_default_str();
        app->add_option("--qk-alignment", qk_alignment, "Correlation between query and key projections")
            ->capture_default_str();
    }

    ilp::ModelConfig config(std::uint64_t seed) const {
        ilp::ModelConfig c;
        c.layers = layers;
        c.heads = heads;
        c.hidden = hidden;
        c.mlp = mlp;
        c.seed = seed;
        c.qk_alignment = qk_alignment;
        c.validate();
        return c;
    }
};

struct SourceOptions {
    std::string source = "gt";
    std::string predictions;

    void add_to(CLI::App* app, const std::string& default_source) {
        source = default_source;
        app->add_option("--source", source, "Region source: gt, file, center or random")->capture_default_str();
        app->add_option("--predictions", predictions, "Predicted regions (JSON Lines)");
    }
};

/// Owns the optional predictions file behind a RegionSource.
struct LoadedSource {
    std::optional<localizer::FileBackedLocalizer> predictions;
    RegionSource source;
};

LoadedSource load_source(const SourceOptions& opts, const Context& ctx) {
    LoadedSource ls;
    ls.source.kind = parse_region_source(opts.source);
    ls.source.seed = ctx.seed;
    if (!opts.predictions.empty()) {
        ls.predictions = localizer::FileBackedLocalizer::from_file(opts.predictions);
        ctx.warn_all(ls.predictions->warnings());
    }
    if (ls.source.kind == RegionSourceKind::file && !ls.predictions) {
        throw ConfigError("--source file needs --predictions");
    }
    ls.source.predictions = ls.predictions ? &*ls.predictions : nullptr;
    return ls;
}

Dataset load_dataset(const std::string& path, const Context& ctx) {
    Dataset ds = read_dataset_file(path);
    ctx.warn_all(ds.warnings);
    return ds;
}

grid::Region parse_region_arg(const std::string& text, const Context& ctx) {
    grid::ParsedRegion parsed = grid::parse_region(text);
    for (const auto& repair : parsed.repairs) {
        ctx.err << "warning: region '" << text << "': " << repair.describe() << '\n';
    }
    return parsed.region;
}

/// Hash of the subcommand name, the global seed, every option value (given
/// or default) and the bytes of every input file.
std::string fingerprint_of(const CLI::App& sub, std::uint64_t seed, const std::vector<std::string>& file_options) {
    Fingerprint fp;
    fp.add("command", sub.get_name());
    fp.add("seed", seed);
    auto options = sub.get_options();
    std::sort(options.begin(), options.end(),
              [](const CLI::Option* a, const CLI::Option* b) { return a->get_name() < b->get_name(); });
    for (const CLI::Option* opt : options) {
        const std::string name = opt->get_name();
        if (name == "--help" || name == "-h") {
            continue;
        }
        std::string value;
        if (opt->count() > 0) {
            for (const auto& r : opt->results()) {
                value += r + "\x1f";
            }
        } else {
            value = opt->get_default_str();
        }
        fp.add(name, value);
        if (opt->count() > 0 && std::find(file_options.begin(), file_options.end(), name) != file_options.end()) {
            for (const auto& path : opt->results()) {
                fp.add_file(name + ":bytes", path);
            }
        }
    }
    return fp.hex();
}

void finish_report(RunReport& report) {
    if (!report.samples.empty()) {
        for (const auto& [name, value] : summarize(report)) {
            report.metrics[name] = value;
        }
    }
}

SampleRecord record_of(const IlpSampleResult& r) {
    SampleRecord s;
    s.id = r.id;
    s.region = grid::format_region(r.region);
    s.visual_total = r.visual_total;
    s.kept = r.kept;
    s.rate = r.rate;
    s.metrics["proxy_quality"] = r.proxy_quality;
    s.metrics["flops_ratio"] = r.flops.ratio;
    return s;
}

struct LoadedMetrics {
    MetricSet metrics;
    std::string fingerprint;  // the report's own, or a hash of the file
};

/// Metrics from a run report, or from a flat {name: number} object.
LoadedMetrics metrics_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open '" + path + "'");
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(buffer.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path + ": invalid JSON (" + e.what() + ")");
    }
    if (j.is_object() && j.contains("command") && j.contains("metrics")) {
        std::istringstream again(buffer.str());
        RunReport r = read_report(again, path);
        return {std::move(r.metrics), r.fingerprint};
    }
    std::istringstream again(buffer.str());
    return {read_metric_set(again, path), Fingerprint().add("metrics", buffer.str()).hex()};
}

// ---- commands ---------------------------------------------------------------

struct SynthCmd {
    GenerateConfig gen;

    void add(CLI::App* app) {
        app->add_option("--count", gen.count, "Samples")->capture_default_str();
        app->add_option("--side", gen.side, "Tokens per view edge")->capture_default_str();
        app->add_option("--views", gen.views, "Views per sample")->capture_default_str();
        app->add_option("--m", gen.system_len, "System prompt rows")->capture_default_str();
        app->add_option("--query-len", gen.query_len, "Query rows")->capture_default_str();
        app->add_option("--min-extent", gen.min_extent, "Smallest region edge in blocks")->capture_default_str();
        app->add_option("--max-extent", gen.max_extent, "Largest region edge in blocks")->capture_default_str();
    }

    void run(const Context& ctx) {
        gen.seed = ctx.seed;
        std::ostringstream os;
        write_dataset(os, generate_dataset(gen));
        ctx.emit("dataset.jsonl", os.str());
    }
};

struct MapCmd {
    std::string region;
    std::size_t side = 24;
    std::size_t views = 1;

    void add(CLI::App* app) {
        app->add_option("--region", region, "Region string \"x_min y_min x_max y_max\"")->required();
        app->add_option("--side", side, "Tokens per view edge")->capture_default_str();
        app->add_option("--views", views, "Views")->capture_default_str();
    }

    void run(const Context& ctx) {
        const grid::Region r = parse_region_arg(region, ctx);
        const grid::TokenGrid tg{side, views};
        tg.validate();
        const grid::TokenIndexSet tokens = grid::region_to_tokens(r, tg);
        std::string s = "# region " + grid::format_region(r) + " side " + std::to_string(side) + " views " +
                        std::to_string(views) + " tokens " + std::to_string(tokens.size()) + "\n";
        for (std::size_t idx : tokens) {
            s += std::to_string(idx) + "\n";
        }
        ctx.emit("map.txt", s);
    }
};

struct LocateCmd {
    std::string dataset;
    SourceOptions source;

    void add(CLI::App* app) {
        app->add_option("--dataset", dataset, "Dataset (JSON Lines)")->required();
        source.add_to(app, "file");
    }

    void run(const Context& ctx) {
        const Dataset ds = load_dataset(dataset, ctx);
        const LoadedSource ls = load_source(source, ctx);
        const std::vector<grid::Region> regions = resolve_regions(ds, ls.source);
        std::string s;
        for (std::size_t i = 0; i < regions.size(); ++i) {
            nlohmann::json j;
            j["id"] = ds.samples[i].id;
            j["region"] = grid::format_region(regions[i]);
            j["source"] = to_string(ls.source.kind);
            s += j.dump() + "\n";
        }
        ctx.emit("locate.jsonl", s);
    }
};

struct FitCmd {
    std::string dataset;
    SourceOptions source;
    double rate = 0.0;
    bool per_sample = false;

    void add(CLI::App* app) {
        app->add_option("--dataset", dataset, "Dataset (JSON Lines)")->required();
        source.add_to(app, "gt");
        app->add_option("--rate", rate, "Target pruning rate in [0, 1)")->required();
        app->add_flag("--per-sample", per_sample, "Fit every sample to the target on its own");
    }

    void run(const Context& ctx, const std::string& fingerprint) {
        const Dataset ds = load_dataset(dataset, ctx);
        const LoadedSource ls = load_source(source, ctx);
        const std::vector<grid::Region> regions = resolve_regions(ds, ls.source);
        const localizer::DatasetFit fit = fit_regions(ds, regions, rate, !per_sample);
        const grid::TokenGrid tg = ds.samples.front().grid;
        const localizer::BudgetSpec spec{rate, tg};

        RunReport report;
        report.command = "fit";
        report.fingerprint = fingerprint;
        for (std::size_t i = 0; i < fit.samples.size(); ++i) {
            const auto& f = fit.samples[i];
            SampleRecord s;
            s.id = ds.samples[i].id;
            s.region = grid::format_region(f.region);
            s.visual_total = tg.total_tokens();
            s.kept = f.kept;
            s.rate = 1.0 - static_cast<double>(f.kept) / static_cast<double>(tg.total_tokens());
            s.metrics["steps"] = static_cast<double>(f.steps);
            report.samples.push_back(std::move(s));
        }
        finish_report(report);
        report.metrics["target_kept"] = static_cast<double>(spec.kept_target());
        report.metrics["target_rate"] = rate;
        report.metrics["achieved_rate"] = fit.achieved_rate;
        report.notes.push_back(per_sample ? "regions fitted per sample"
                                          : "regions fitted at dataset level (running surplus carried forward)");
        ctx.emit("fit.json", to_json(report));
    }
};

struct PlcCmd {
    std::string dataset;
    SourceOptions source;
    std::size_t dim = 64;
    std::size_t contextual = 64;
    std::size_t noncontextual = 4;
    std::size_t anchors = 64;
    std::string checkpoint;
    std::string save_checkpoint;
    bool ablate = false;

    void add(CLI::App* app) {
        app->add_option("--dataset", dataset, "Dataset (JSON Lines)")->required();
        source.add_to(app, "gt");
        app->add_option("--dim", dim, "Token width")->capture_default_str();
        app->add_option("--contextual-queries", contextual, "Contextual query bank rows")->capture_default_str();
        app->add_option("--noncontextual-queries", noncontextual, "Non-contextual query bank rows")
            ->capture_default_str();
        app->add_option("--anchors", anchors, "Anchor tokens (a perfect square)")->capture_default_str();
        app->add_option("--checkpoint", checkpoint, "Load query banks from this file");
        app->add_option("--save-checkpoint", save_checkpoint, "Write the query banks used to this file");
        app->add_flag("--ablate", ablate, "Skip the fusion step");
    }

    void run(const Context& ctx, const std::string& fingerprint) {
        const Dataset ds = load_dataset(dataset, ctx);
        const LoadedSource ls = load_source(source, ctx);
        const std::vector<grid::Region> regions = resolve_regions(ds, ls.source);

        plc::PlcParams params;
        if (!checkpoint.empty()) {
            std::ifstream in(checkpoint, std::ios::binary);
            if (!in) {
                throw DataError("cannot open checkpoint '" + checkpoint + "'");
            }
            params = plc::load_params(in);
            dim = params.dim();
        } else {
            params = plc::PlcParams::initialize(dim, ctx.seed, contextual, noncontextual, anchors);
        }
        if (!save_checkpoint.empty()) {
            std::ofstream f(save_checkpoint, std::ios::binary);
            if (!f) {
                throw DataError("cannot write checkpoint '" + save_checkpoint + "'");
            }
            plc::save_params(params, f);
        }

        RunReport report;
        report.command = "plc";
        report.fingerprint = fingerprint;
        for (std::size_t i = 0; i < regions.size(); ++i) {
            const Sample& sample = ds.samples[i];
            const plc::VisualTokens tokens = build_visual(sample, dim);
            SampleRecord s;
            s.id = sample.id;
            s.region = grid::format_region(regions[i]);
            s.visual_total = sample.grid.total_tokens();
            tensor::Matrix rows;
            if (ablate) {
                rows = plc::compress_ablated(tokens, regions[i], params);
            } else {
                plc::PlcOutput o = plc::compress(tokens, regions[i], params);
                std::map<plc::RowSource, std::size_t> counts;
                for (auto p : o.provenance) {
                    ++counts[p];
                }
                s.metrics["fused_rows"] = static_cast<double>(counts[plc::RowSource::fused_anchor]);
                s.metrics["compressed_rows"] = static_cast<double>(counts[plc::RowSource::compressed_noncontextual]);
                s.metrics["empty_rows"] = static_cast<double>(counts[plc::RowSource::empty_source]);
                rows = std::move(o.tokens);
            }
            double norm_sq = 0.0;
            for (double v : rows.data()) {
                norm_sq += v * v;
            }
            s.kept = rows.rows();
            s.rate = 1.0 - static_cast<double>(rows.rows()) / static_cast<double>(s.visual_total);
            s.metrics["output_rows"] = static_cast<double>(rows.rows());
            s.metrics["output_norm"] = std::sqrt(norm_sq);
            report.samples.push_back(std::move(s));
        }
        finish_report(report);
        if (ablate) {
            report.notes.push_back("ablated: anchor rows pass through unfused");
        }
        ctx.emit("plc.json", to_json(report));
    }
};

struct IlpCmd {
    std::string dataset;
    SourceOptions source;
    ModelOptions model;
    std::optional<double> rate;
    bool per_sample = false;
    std::size_t layer = 2;
    std::string positions = "keep";
    std::string method = "region";
    bool trace = false;

    void add(CLI::App* app) {
        app->add_option("--dataset", dataset, "Dataset (JSON Lines)")->required();
        source.add_to(app, "gt");
        model.add_to(app);
        app->add_option("--rate", rate, "Fit regions to this pruning rate first");
        app->add_flag("--per-sample", per_sample, "Fit every sample to the target on its own");
        app->add_option("--layer", layer, "Prune after block K")->capture_default_str();
        app->add_option("--positions", positions, "Rotary positions after pruning: keep or reindex")
            ->capture_default_str();
        app->add_option("--method", method, "region, or topr for the attention-score baseline")
            ->capture_default_str();
        app->add_flag("--trace", trace, "Dump block-K attention maps and the prune report per sample");
    }

    void run(const Context& ctx, const std::string& fingerprint) {
        if (method != "region" && method != "topr") {
            throw ConfigError("--method must be region or topr, got '" + method + "'");
        }
        if (positions != "keep" && positions != "reindex") {
            throw ConfigError("--positions must be keep or reindex, got '" + positions + "'");
        }
        if (trace && ctx.out_dir.empty()) {
            throw ConfigError("--trace needs --out <dir>");
        }
        const ilp::PositionPolicy policy =
            positions == "keep" ? ilp::PositionPolicy::keep_original : ilp::PositionPolicy::reindex;
        const Dataset ds = load_dataset(dataset, ctx);
        const LoadedSource ls = load_source(source, ctx);
        std::vector<grid::Region> regions = resolve_regions(ds, ls.source);
        if (rate) {
            const localizer::DatasetFit fit = fit_regions(ds, regions, *rate, !per_sample);
            for (std::size_t i = 0; i < regions.size(); ++i) {
                regions[i] = fit.samples[i].region;
            }
        }
        const ilp::ModelConfig mc = model.config(ctx.seed);
        ilp::PruneConfig probe;
        probe.layer = layer;
        probe.validate(mc);
        const ilp::ToyTransformer net(mc);

        ilp::ForwardOptions options;
        options.keep_hidden_states = false;
        if (trace) {
            options.capture_attention_layer = layer;
        }

        RunReport report;
        report.command = "ilp";
        report.fingerprint = fingerprint;
        for (std::size_t i = 0; i < regions.size(); ++i) {
            const Sample& sample = ds.samples[i];
            const ilp::MultimodalSequence seq = build_sequence(sample, mc.hidden);
            const ilp::ForwardResult base = ilp::forward_baseline(net, seq, options);
            ilp::PrunedForward pruned = [&] {
                if (method == "topr") {
                    const std::size_t budget = localizer::kept_tokens(regions[i], sample.grid);
                    if (budget == 0) {
                        throw DataError("sample '" + sample.id + "': region keeps no tokens");
                    }
                    return ilp::forward_topr_baseline(net, seq, budget, layer, policy, options);
                }
                ilp::PruneConfig pc;
                pc.layer = layer;
                pc.region = regions[i];
                pc.positions = policy;
                return ilp::forward_ilp(net, seq, pc, options);
            }();
            IlpSampleResult r;
            r.id = sample.id;
            r.region = regions[i];
            r.visual_total = pruned.report.visual_total;
            r.kept = pruned.report.kept;
            r.rate = pruned.report.rate;
            r.proxy_quality = ilp::proxy_quality(base, pruned.forward, seq.visual_begin());
            r.flops = ilp::count_flops(seq.size(), seq.size() - pruned.report.dropped, pruned.report.prune_point,
                                       mc.layers, mc.hidden, mc.heads, mc.mlp);
            SampleRecord rec = record_of(r);
            if (method == "topr") {
                rec.region.clear();
            }
            report.samples.push_back(std::move(rec));
            if (trace) {
                AttentionTrace t;
                t.sample_id = sample.id;
                t.method = method;
                t.layer = layer;
                t.visual_begin = seq.visual_begin();
                t.visual_end = seq.visual_end();
                t.sequence_length = seq.size();
                t.report = pruned.report;
                t.attention = std::move(pruned.forward.attention);
                ctx.write_file("trace_" + sample.id + ".json", trace_to_json(t));
            }
        }
        finish_report(report);
        report.notes.push_back(kProxyNote);
        report.notes.push_back(method == "topr" ? "method: top-R by received query attention, budget = region size"
                                                : "method: region-guided pruning");
        ctx.emit("ilp.json", to_json(report));
    }
};

struct SweepCmd {
    std::string dataset;
    SourceOptions source;
    ModelOptions model;
    std::vector<double> rates{0.667, 0.778, 0.889};
    std::size_t k_min = 1;
    std::size_t k_max = 0;
    bool no_timing = false;

    void add(CLI::App* app) {
        app->add_option("--dataset", dataset, "Dataset (JSON Lines)")->required();
        source.add_to(app, "gt");
        model.add_to(app);
        app->add_option("--rates", rates, "Pruning rates")->delimiter(',')->capture_default_str();
        app->add_option("--k-min", k_min, "First prune layer")->capture_default_str();
        app->add_option("--k-max", k_max, "Last prune layer (0 = L)")->capture_default_str();
        app->add_flag("--no-timing", no_timing, "Write 0 in the wall_ms column");
    }

    void run(const Context& ctx) {
        const ilp::ModelConfig mc = model.config(ctx.seed);
        const std::size_t last = k_max == 0 ? mc.layers : k_max;
        if (k_min < 1 || last > mc.layers || k_min > last) {
            throw ConfigError("K range " + std::to_string(k_min) + ".." + std::to_string(last) +
                              " must lie within 1.." + std::to_string(mc.layers));
        }
        if (rates.empty()) {
            throw ConfigError("sweep needs at least one rate");
        }
        const Dataset ds = load_dataset(dataset, ctx);
        const LoadedSource ls = load_source(source, ctx);
        const std::vector<grid::Region> regions = resolve_regions(ds, ls.source);
        std::vector<std::vector<grid::Region>> fitted;
        for (double r : rates) {
            const localizer::DatasetFit fit = fit_regions(ds, regions, r, true);
            std::vector<grid::Region> rs;
            for (const auto& f : fit.samples) {
                rs.push_back(f.region);
            }
            fitted.push_back(std::move(rs));
        }
        const ilp::ToyTransformer net(mc);
        IlpEvaluator evaluator(net, ds);

        std::string csv = std::string("# ") + kProxyNote + "\n";
        csv += "K,rate,achieved_rate,mean_kept,proxy_quality,flops_baseline,flops_pruned,flops_ratio,wall_ms\n";
        for (std::size_t k = k_min; k <= last; ++k) {
            for (std::size_t ri = 0; ri < rates.size(); ++ri) {
                double wall = 0.0;
                const auto results =
                    evaluator.run(fitted[ri], k, ilp::PositionPolicy::keep_original, no_timing ? nullptr : &wall);
                std::uint64_t fb = 0;
                std::uint64_t fp = 0;
                double kept = 0.0;
                double rate_sum = 0.0;
                for (const auto& r : results) {
                    fb += r.flops.baseline;
                    fp += r.flops.pruned;
                    kept += static_cast<double>(r.kept);
                    rate_sum += r.rate;
                }
                const auto n = static_cast<double>(results.size());
                csv += std::to_string(k) + "," + rate_key(rates[ri]) + "," + fmt(rate_sum / n) + "," + fmt(kept / n) +
                       "," + fmt(mean_proxy_quality(results)) + "," + std::to_string(fb) + "," + std::to_string(fp) +
                       "," + fmt(static_cast<double>(fp) / static_cast<double>(fb)) + "," + fmt(wall) + "\n";
            }
        }
        ctx.emit("sweep_k.csv", csv);
    }
};

struct BenchCmd {
    std::string dataset;
    ModelOptions model;
    std::vector<double> rates{0.0, 0.889};
    std::size_t reps = 10;
    std::size_t warmup = 1;
    std::size_t layer = 2;
    double localizer_ms = 0.0;
    GenerateConfig synthetic{1, 24, 1, 35, 40, 0, 2, 5};

    void add(CLI::App* app) {
        app->add_option("--dataset", dataset, "Dataset (JSON Lines); a synthetic sample when omitted");
        model.add_to(app);
        app->add_option("--rates", rates, "Pruning rates")->delimiter(',')->capture_default_str();
        app->add_option("--reps", reps, "Timed repetitions (at least 3)")->capture_default_str();
        app->add_option("--warmup", warmup, "Untimed repetitions")->capture_default_str();
        app->add_option("--layer", layer, "Prune after block K")->capture_default_str();
        app->add_option("--localizer-ms", localizer_ms, "Localizer latency per sample for the pipeline model")
            ->capture_default_str();
        app->add_option("--side", synthetic.side, "Synthetic sample: tokens per view edge")->capture_default_str();
        app->add_option("--m", synthetic.system_len, "Synthetic sample: system rows")->capture_default_str();
        app->add_option("--query-len", synthetic.query_len, "Synthetic sample: query rows")->capture_default_str();
    }

    void run(const Context& ctx, const std::string& fingerprint) {
        if (reps < 3) {
            throw ConfigError("--reps must be at least 3");
        }
        Dataset ds;
        if (dataset.empty()) {
            synthetic.seed = ctx.seed;
            ds.samples = generate_dataset(synthetic);
        } else {
            ds = load_dataset(dataset, ctx);
        }
        const ilp::ToyTransformer net(model.config(ctx.seed));
        BenchConfig cfg;
        cfg.rates = rates;
        cfg.layer = layer;
        cfg.reps = reps;
        cfg.warmup = warmup;
        const std::vector<BenchRow> rows = run_bench(net, ds, cfg);

        RunReport report;
        report.command = "bench";
        report.fingerprint = fingerprint;
        std::ostringstream text;
        for (const BenchRow& row : rows) {
            const std::string key = rate_key(row.rate);
            report.timings["baseline@" + key] = row.baseline;
            report.timings["ilp@" + key] = row.ilp;
            report.metrics["ratio@" + key] = row.ratio;
            report.metrics["mean_kept@" + key] = row.mean_kept;
            const PipelineEstimate pe = estimate_pipeline(
                {localizer_ms, row.ilp.median_ms / static_cast<double>(ds.samples.size()), ds.samples.size()});
            report.metrics["pipeline_serial_ms@" + key] = pe.serial_ms;
            report.metrics["pipeline_overlapped_ms@" + key] = pe.overlapped_ms;
            report.metrics["pipeline_saving_ms@" + key] = pe.saving_ms;
        }
        report.notes.push_back("timings are wall-clock medians over the listed repetitions; not deterministic");
        ctx.emit("bench.json", to_json(report));
    }
};

struct RelAccCmd {
    std::string run_path;
    std::string baseline_path;
    std::string weights_path;

    void add(CLI::App* app) {
        app->add_option("--run", run_path, "Run report or metric JSON")->required();
        app->add_option("--baseline", baseline_path, "Baseline report or metric JSON")->required();
        app->add_option("--weights", weights_path, "Per-metric weights (JSON object)");
    }

    void run(const Context& ctx, const std::string& fingerprint) {
        const LoadedMetrics run = metrics_from_file(run_path);
        const LoadedMetrics base = metrics_from_file(baseline_path);
        std::optional<MetricSet> weights;
        if (!weights_path.empty()) {
            weights = read_metric_set_file(weights_path);
        }
        const RelAccResult r = relative_accuracy(run.metrics, base.metrics, weights);
        std::string s;
        for (const auto& [name, ratio] : r.ratios) {
            s += "ratio " + name + " " + fmt(ratio) + "\n";
        }
        s += std::string("RelAcc ") + format_percent(r.value) + (weights ? " (weighted)" : " (unweighted mean)") +
             "\n";
        ctx.emit("relacc.txt", s);
        if (!ctx.out_dir.empty()) {
            RunReport report;
            report.command = "relacc";
            report.fingerprint = fingerprint;
            report.metrics = run.metrics;
            report.relacc = RelAccRecord{base.fingerprint, r.ratios, r.value};
            ctx.write_file("relacc.json", to_json(report));
        }
    }
};

struct RecallCmd {
    std::string dataset;
    SourceOptions source;

    void add(CLI::App* app) {
        app->add_option("--dataset", dataset, "Dataset with ground-truth regions")->required();
        source.add_to(app, "file");
    }

    void run(const Context& ctx) {
        const Dataset ds = load_dataset(dataset, ctx);
        const LoadedSource ls = load_source(source, ctx);
        const std::vector<grid::Region> gt = ground_truth_regions(ds);
        const std::vector<grid::Region> pred = resolve_regions(ds, ls.source);
        const localizer::RecallSummary rs = localizer::mean_recall(gt, pred);
        std::string s;
        s += "source " + std::string(to_string(ls.source.kind)) + "\n";
        s += "samples " + std::to_string(rs.count) + "\n";
        s += "mean_recall " + fmt(rs.mean) + "\n";
        s += "recall>0.5 " + std::to_string(rs.above_50) + "\n";
        s += "recall>0.7 " + std::to_string(rs.above_70) + "\n";
        s += "recall>0.9 " + std::to_string(rs.above_90) + "\n";
        ctx.emit("recall.txt", s);
    }
};

struct RenderCmd {
    std::string dataset;
    std::string sample_id;
    std::size_t side = 24;
    std::size_t views = 1;
    std::vector<std::string> regions;
    std::vector<std::string> labels;
    std::string kept;
    bool ppm = false;

    void add(CLI::App* app) {
        app->add_option("--dataset", dataset, "Dataset to take the grid and ground truth from");
        app->add_option("--id", sample_id, "Sample id within --dataset");
        app->add_option("--side", side, "Tokens per view edge (without --dataset)")->capture_default_str();
        app->add_option("--views", views, "Views (without --dataset)")->capture_default_str();
        app->add_option("--region", regions, "Region to outline (repeatable)");
        app->add_option("--label", labels, "Label for the matching --region");
        app->add_option("--kept", kept, "Region whose tokens are shaded (default: first outlined region)");
        app->add_flag("--ppm", ppm, "Without --out, print the PPM raster instead of SVG");
    }

    void run(const Context& ctx) {
        RenderSpec spec;
        spec.grid = {side, views};
        if (!dataset.empty()) {
            const Dataset ds = load_dataset(dataset, ctx);
            const Sample& s = sample_id.empty() ? ds.samples.front() : ds.find(sample_id);
            spec.grid = s.grid;
            if (s.gt_region) {
                spec.overlays.push_back({"gt", *s.gt_region});
            }
        } else if (!sample_id.empty()) {
            throw ConfigError("--id needs --dataset");
        }
        if (labels.size() > regions.size()) {
            throw ConfigError("more --label values than --region values");
        }
        for (std::size_t i = 0; i < regions.size(); ++i) {
            const std::string label = i < labels.size() ? labels[i] : "region " + std::to_string(i + 1);
            spec.overlays.push_back({label, parse_region_arg(regions[i], ctx)});
        }
        if (!kept.empty()) {
            spec.kept = parse_region_arg(kept, ctx);
        } else if (!spec.overlays.empty()) {
            spec.kept = spec.overlays.front().region;
        }
        if (ctx.out_dir.empty()) {
            ctx.out << (ppm ? render_ppm(spec) : render_svg(spec));
            return;
        }
        ctx.write_file("render.svg", render_svg(spec));
        ctx.write_file("render.ppm", render_ppm(spec));
    }
};

int classify(const std::exception& e, std::ostream& err) {
    err << "error: " << e.what() << '\n';
    if (dynamic_cast<const ConfigError*>(&e) != nullptr || dynamic_cast<const ParseError*>(&e) != nullptr) {
        return exit_config;
    }
    if (dynamic_cast<const DataError*>(&e) != nullptr || dynamic_cast<const LookupError*>(&e) != nullptr ||
        dynamic_cast<const ShapeError*>(&e) != nullptr) {
        return exit_data;
    }
    return exit_failure;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Region-guided visual token pruning and compression toolkit", "regionprune"};
    app.set_config("--config", "", "TOML file supplying option values");
    app.require_subcommand(1, 1);
    app.fallthrough();

    std::uint64_t seed = 0;
    std::string out_dir;
    app.add_option("--seed", seed, "Seed for model weights, query banks, synthetic data and random regions")
        ->capture_default_str();
    app.add_option("--out", out_dir, "Directory for output files (default: standard output)");

    SynthCmd synth;
    MapCmd map;
    LocateCmd locate;
    FitCmd fit;
    PlcCmd plc_cmd;
    IlpCmd ilp_cmd;
    SweepCmd sweep;
    BenchCmd bench;
    RelAccCmd relacc;
    RecallCmd recall;
    RenderCmd render;

    CLI::App* synth_app = app.add_subcommand("synth", "Generate a synthetic dataset");
    CLI::App* map_app = app.add_subcommand("map", "List the token indices a region covers");
    CLI::App* locate_app = app.add_subcommand("locate", "Resolve a region per sample");
    CLI::App* fit_app = app.add_subcommand("fit", "Fit regions to a pruning-rate budget");
    CLI::App* plc_app = app.add_subcommand("plc", "Compress visual tokens with the query banks");
    CLI::App* ilp_app = app.add_subcommand("ilp", "Prune visual rows inside the toy decoder");
    CLI::App* sweep_app = app.add_subcommand("sweep-k", "Sweep the prune layer and rate");
    CLI::App* bench_app = app.add_subcommand("bench", "Time baseline and pruned forwards");
    CLI::App* relacc_app = app.add_subcommand("relacc", "Relative accuracy of a run against a baseline");
    CLI::App* recall_app = app.add_subcommand("recall", "Area recall of predicted regions");
    CLI::App* render_app = app.add_subcommand("render", "Draw regions on the token grid (SVG, PPM)");
    synth.add(synth_app);
    map.add(map_app);
    locate.add(locate_app);
    fit.add(fit_app);
    plc_cmd.add(plc_app);
    ilp_cmd.add(ilp_app);
    sweep.add(sweep_app);
    bench.add(bench_app);
    relacc.add(relacc_app);
    recall.add(recall_app);
    render.add(render_app);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_config;
    }

    const Context ctx{seed, out_dir, out, err};
    try {
        const auto fingerprint = [&](const CLI::App* sub, std::vector<std::string> files = {}) {
            return fingerprint_of(*sub, seed, files);
        };
        if (synth_app->parsed()) {
            synth.run(ctx);
        } else if (map_app->parsed()) {
            map.run(ctx);
        } else if (locate_app->parsed()) {
            locate.run(ctx);
        } else if (fit_app->parsed()) {
            fit.run(ctx, fingerprint(fit_app, {"--dataset", "--predictions"}));
        } else if (plc_app->parsed()) {
            plc_cmd.run(ctx, fingerprint(plc_app, {"--dataset", "--predictions", "--checkpoint"}));
        } else if (ilp_app->parsed()) {
            ilp_cmd.run(ctx, fingerprint(ilp_app, {"--dataset", "--predictions"}));
        } else if (sweep_app->parsed()) {
            sweep.run(ctx);
        } else if (bench_app->parsed()) {
            bench.run(ctx, fingerprint(bench_app, {"--dataset"}));
        } else if (relacc_app->parsed()) {
            relacc.run(ctx, fingerprint(relacc_app, {"--run", "--baseline", "--weights"}));
        } else if (recall_app->parsed()) {
            recall.run(ctx);
        } else if (render_app->parsed()) {
            render.run(ctx);
        }
    } catch (const std::exception& e) {
        return classify(e, err);
    }
    return exit_ok;
}

}  // namespace regionprune::harness
