// Copyright (C) 2026 The regionprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "regionprune/harness/trace.hpp"

#include <algorithm>
#include <istream>

#include <nlohmann/json.hpp>

#include "regionprune/error.hpp"

namespace regionprune::harness {

using nlohmann::json;

std::string trace_to_json(const AttentionTrace& trace) {
    json j;
    j["sample_id"] = trace.sample_id;
    j["method"] = trace.method;
    j["layer"] = trace.layer;
    j["visual_begin"] = trace.visual_begin;
    j["visual_end"] = trace.visual_end;
    j["sequence_length"] = trace.sequence_length;
    j["prune_report"] = {{"visual_total", trace.report.visual_total},
                         {"kept", trace.report.kept},
                         {"dropped", trace.report.dropped},
                         {"prune_point", trace.report.prune_point},
                         {"rate", trace.report.rate},
                         {"kept_visual_rows", trace.report.kept_visual_rows}};
    json heads = json::array();
    for (const tensor::Matrix& m : trace.attention) {
        json rows = json::array();
        for (std::size_t r = 0; r < m.rows(); ++r) {
            const auto row = m.row(r);
            rows.push_back(std::vector<double>(row.begin(), row.end()));
        }
        heads.push_back(std::move(rows));
    }
    j["attention"] = std::move(heads);
    return j.dump() + "\n";
}

AttentionTrace read_trace(std::istream& in, const std::string& source_name) {
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(source_name + ": invalid JSON (" + e.what() + ")");
    }
    AttentionTrace t;
    try {
        t.sample_id = j.at("sample_id").get<std::string>();
        t.method = j.at("method").get<std::string>();
        t.layer = j.at("layer").get<std::size_t>();
        t.visual_begin = j.at("visual_begin").get<std::size_t>();
        t.visual_end = j.at("visual_end").get<std::size_t>();
        t.sequence_length = j.at("sequence_length").get<std::size_t>();
        const json& pr = j.at("prune_report");
        t.report.visual_total = pr.at("visual_total").get<std::size_t>();
        t.report.kept = pr.at("kept").get<std::size_t>();
        t.report.dropped = pr.at("dropped").get<std::size_t>();
        t.report.prune_point = pr.at("prune_point").get<std::size_t>();
        t.report.rate = pr.at("rate").get<double>();
        t.report.kept_visual_rows = pr.at("kept_visual_rows").get<std::vector<std::size_t>>();
        for (const json& head : j.at("attention")) {
            const auto rows = head.get<std::vector<std::vector<double>>>();
            tensor::Matrix m(rows.size(), rows.size());
            for (std::size_t r = 0; r < rows.size(); ++r) {
                if (rows[r].size() != rows.size()) {
                    throw ShapeError(source_name + ": attention map is not square");
                }
                std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
            }
            t.attention.push_back(std::move(m));
        }
    } catch (const json::exception& e) {
        throw ParseError(source_name + ": not an attention trace (" + e.what() + ")");
    }
    return t;
}

}  // namespace regionprune::harness
