// Copyright (C) 2026 The regionprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "regionprune/harness/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <span>

#include <nlohmann/json.hpp>

#include "regionprune/error.hpp"
#include "regionprune/localizer.hpp"

namespace regionprune::harness {

namespace {

using nlohmann::json;

std::size_t positive_field(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key) || !obj[key].is_number_unsigned()) {
        throw ParseError(where + ": field '" + key + "' must be a non-negative integer");
    }
    return obj[key].get<std::size_t>();
}

tensor::Matrix parse_tokens(const json& rows, const std::string& where) {
    if (!rows.is_array() || rows.empty() || !rows[0].is_array()) {
        throw ParseError(where + ": 'tokens' must be a non-empty array of rows");
    }
    const std::size_t dim = rows[0].size();
    tensor::Matrix m(rows.size(), dim);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (!rows[r].is_array() || rows[r].size() != dim) {
            throw ParseError(where + ": token row " + std::to_string(r) + " has the wrong length");
        }
        for (std::size_t c = 0; c < dim; ++c) {
            if (!rows[r][c].is_number()) {
                throw ParseError(where + ": token row " + std::to_string(r) + " holds a non-number");
            }
            m(r, c) = rows[r][c].get<double>();
        }
    }
    return m;
}

Sample parse_sample(const json& obj, const std::string& where, std::vector<std::string>& warnings) {
    if (!obj.is_object()) {
        throw ParseError(where + ": expected a JSON object");
    }
    if (!obj.contains("id") || !obj["id"].is_string()) {
        throw ParseError(where + ": field 'id' must be a string");
    }
    Sample s;
    s.id = obj["id"].get<std::string>();
    s.grid.side = positive_field(obj, "side", where);
    s.grid.views = obj.contains("views") ? positive_field(obj, "views", where) : 1;
    s.system_len = positive_field(obj, "m", where);
    s.query_len = positive_field(obj, "query_len", where);
    if (obj.contains("gt_region") && !obj["gt_region"].is_null()) {
        if (!obj["gt_region"].is_string()) {
            throw ParseError(where + ": field 'gt_region' must be a region string");
        }
        grid::ParsedRegion parsed = [&] {
            try {
                return grid::parse_region(obj["gt_region"].get<std::string>());
            } catch (const ParseError& e) {
                throw ParseError(where + ": " + e.what());
            }
        }();
        for (const auto& repair : parsed.repairs) {
            warnings.push_back(where + ": sample '" + s.id + "': " + repair.describe());
        }
        s.gt_region = parsed.region;
    }
    if (obj.contains("seed")) {
        if (!obj["seed"].is_number_unsigned()) {
            throw ParseError(where + ": field 'seed' must be a non-negative integer");
        }
        s.seed = obj["seed"].get<std::uint64_t>();
    }
    if (obj.contains("tokens")) {
        s.tokens = parse_tokens(obj["tokens"], where);
    }
    try {
        s.validate();
    } catch (const Error& e) {
        throw DataError(where + ": " + e.what());
    }
    return s;
}

tensor::Matrix gaussian_rows(std::mt19937_64& rng, std::size_t rows, std::size_t dim) {
    std::normal_distribution<double> normal(0.0, 1.0);
    tensor::Matrix m(rows, dim);
    for (double& v : m.data()) {
        v = normal(rng);
    }
    return m;
}

void add_direction(std::span<double> row, const std::vector<double>& direction, double scale) {
    for (std::size_t c = 0; c < row.size(); ++c) {
        row[c] += scale * direction[c];
    }
}

}  // namespace

void Sample::validate() const {
    if (id.empty()) {
        throw DataError("sample id is empty");
    }
    grid.validate();
    if (system_len == 0 || query_len == 0) {
        throw DataError("sample '" + id + "': prompt lengths m and query_len must be positive");
    }
    if (seed.has_value() == tokens.has_value()) {
        throw DataError("sample '" + id + "': exactly one of 'seed' and 'tokens' must be present");
    }
    if (tokens && tokens->rows() != grid.total_tokens()) {
        throw DataError("sample '" + id + "': " + std::to_string(tokens->rows()) + " token rows, grid holds " +
                        std::to_string(grid.total_tokens()));
    }
    if (tokens && !tokens->all_finite()) {
        throw DataError("sample '" + id + "': embedded tokens contain non-finite values");
    }
}

const Sample& Dataset::find(const std::string& id) const {
    for (const Sample& s : samples) {
        if (s.id == id) {
            return s;
        }
    }
    throw LookupError("no sample with id '" + id + "'");
}

Dataset read_dataset(std::istream& in, const std::string& source_name) {
    Dataset ds;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const std::string where = source_name + ":" + std::to_string(line_no);
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(where + ": invalid JSON (" + e.what() + ")");
        }
        Sample s = parse_sample(obj, where, ds.warnings);
        if (!seen.insert(s.id).second) {
            throw DataError(where + ": duplicate sample id '" + s.id + "'");
        }
        ds.samples.push_back(std::move(s));
    }
    if (ds.samples.empty()) {
        throw DataError(source_name + ": dataset holds no samples");
    }
    return ds;
}

Dataset read_dataset_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open dataset '" + path + "'");
    }
    return read_dataset(in, path);
}

void write_dataset(std::ostream& out, const std::vector<Sample>& samples) {
    for (const Sample& s : samples) {
        json obj;
        obj["id"] = s.id;
        obj["side"] = s.grid.side;
        obj["views"] = s.grid.views;
        if (s.gt_region) {
            obj["gt_region"] = grid::format_region(*s.gt_region);
        }
        if (s.seed) {
            obj["seed"] = *s.seed;
        }
        if (s.tokens) {
            json rows = json::array();
            for (std::size_t r = 0; r < s.tokens->rows(); ++r) {
                const auto row = s.tokens->row(r);
                rows.push_back(json(std::vector<double>(row.begin(), row.end())));
            }
            obj["tokens"] = std::move(rows);
        }
        obj["m"] = s.system_len;
        obj["query_len"] = s.query_len;
        out << obj.dump() << '\n';
    }
}

SampleTensors materialize(const Sample& sample, std::size_t dim, const SynthConfig& synth) {
    sample.validate();
    if (dim == 0) {
        throw ConfigError("embedding width must be positive");
    }
    SampleTensors t;
    if (sample.tokens) {
        if (sample.tokens->cols() != dim) {
            throw DataError("sample '" + sample.id + "': embedded tokens are " + std::to_string(sample.tokens->cols()) +
                            " wide, model expects " + std::to_string(dim));
        }
        std::mt19937_64 rng(localizer::sample_seed(0, sample.id));
        t.system = gaussian_rows(rng, sample.system_len, dim);
        t.query = gaussian_rows(rng, sample.query_len, dim);
        t.visual = *sample.tokens;
        return t;
    }

    std::mt19937_64 rng(*sample.seed);
    // Shared signal direction with norm √dim, drawn before any token.
    std::vector<double> direction(dim);
    {
        std::normal_distribution<double> normal(0.0, 1.0);
        double norm_sq = 0.0;
        for (double& v : direction) {
            v = normal(rng);
            norm_sq += v * v;
        }
        const double scale = std::sqrt(static_cast<double>(dim) / norm_sq);
        for (double& v : direction) {
            v *= scale;
        }
    }
    t.system = gaussian_rows(rng, sample.system_len, dim);
    t.visual = gaussian_rows(rng, sample.grid.total_tokens(), dim);
    t.query = gaussian_rows(rng, sample.query_len, dim);
    if (sample.gt_region) {
        for (std::size_t row : grid::region_to_tokens(*sample.gt_region, sample.grid)) {
            add_direction(t.visual.row(row), direction, synth.signal_strength);
        }
        for (std::size_t r = 0; r < t.query.rows(); ++r) {
            add_direction(t.query.row(r), direction, synth.query_alignment);
        }
    }
    return t;
}

ilp::MultimodalSequence build_sequence(const Sample& sample, std::size_t dim, const SynthConfig& synth) {
    SampleTensors t = materialize(sample, dim, synth);
    return ilp::MultimodalSequence::assemble(t.system, t.visual, sample.grid, t.query);
}

plc::VisualTokens build_visual(const Sample& sample, std::size_t dim, const SynthConfig& synth) {
    SampleTensors t = materialize(sample, dim, synth);
    return {std::move(t.visual), sample.grid};
}

std::vector<Sample> generate_dataset(const GenerateConfig& config) {
    if (config.count == 0) {
        throw ConfigError("synthetic dataset needs at least one sample");
    }
    if (config.min_extent < 1 || config.max_extent > grid::kGridBlocks || config.min_extent > config.max_extent) {
        throw ConfigError("region extents must satisfy 1 <= min <= max <= 8");
    }
    const grid::TokenGrid tg{config.side, config.views};
    tg.validate();

    std::mt19937_64 rng(config.seed);
    const auto extent_span = static_cast<std::uint64_t>(config.max_extent - config.min_extent + 1);
    const auto centered = [&rng](int extent) {
        const auto slots = static_cast<std::uint64_t>(grid::kGridBlocks - extent + 1);
        return static_cast<int>((rng() % slots + rng() % slots) / 2);
    };

    std::vector<Sample> out;
    out.reserve(config.count);
    for (std::size_t i = 0; i < config.count; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "s%04zu", i);
        Sample s;
        s.id = id;
        s.grid = tg;
        s.system_len = config.system_len;
        s.query_len = config.query_len;
        const int w = config.min_extent + static_cast<int>(rng() % extent_span);
        const int h = config.min_extent + static_cast<int>(rng() % extent_span);
        const int x0 = centered(w);
        const int y0 = centered(h);
        s.gt_region = grid::Region(x0, y0, x0 + w - 1, y0 + h - 1);
        s.seed = localizer::sample_seed(config.seed, s.id);
        s.validate();
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace regionprune::harness
