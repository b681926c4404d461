// Copyright (C) 2026 The regionprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "regionprune/harness/report.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>

#include <nlohmann/json.hpp>

#include "regionprune/error.hpp"

namespace regionprune::harness {

namespace {

using nlohmann::json;

json timing_to_json(const TimingStats& t) {
    return {{"reps", t.reps}, {"median_ms", t.median_ms}, {"min_ms", t.min_ms}, {"max_ms", t.max_ms}};
}

TimingStats timing_from_json(const json& j) {
    TimingStats t;
    t.reps = j.at("reps").get<std::size_t>();
    t.median_ms = j.at("median_ms").get<double>();
    t.min_ms = j.at("min_ms").get<double>();
    t.max_ms = j.at("max_ms").get<double>();
    return t;
}

}  // namespace

void Fingerprint::mix(std::string_view bytes) {
    for (unsigned char c : bytes) {
        m_state ^= c;
        m_state *= 0x100000001B3ULL;
    }
}

Fingerprint& Fingerprint::add(std::string_view key, std::string_view value) {
    mix(key);
    mix("=");
    mix(std::to_string(value.size()));
    mix(":");
    mix(value);
    mix("\n");
    return *this;
}

Fingerprint& Fingerprint::add(std::string_view key, double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(std::bit_cast<std::uint64_t>(value)));
    return add(key, std::string_view(buf));
}

Fingerprint& Fingerprint::add(std::string_view key, std::uint64_t value) {
    return add(key, std::string_view(std::to_string(value)));
}

Fingerprint& Fingerprint::add_file(std::string_view key, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot read '" + path + "' for fingerprinting");
    }
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return add(key, std::string_view(bytes));
}

std::string Fingerprint::hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(m_state));
    return buf;
}

std::map<std::string, double> summarize(const RunReport& report) {
    if (report.samples.empty()) {
        throw DataError("report '" + report.command + "' holds no samples to summarize");
    }
    const auto n = static_cast<double>(report.samples.size());
    std::map<std::string, double> sums;
    std::map<std::string, std::size_t> counts;
    double kept = 0.0;
    double rate = 0.0;
    for (const SampleRecord& s : report.samples) {
        kept += static_cast<double>(s.kept);
        rate += s.rate;
        for (const auto& [name, value] : s.metrics) {
            sums[name] += value;
            ++counts[name];
        }
    }
    std::map<std::string, double> out;
    out["mean_kept"] = kept / n;
    out["mean_rate"] = rate / n;
    for (const auto& [name, total] : sums) {
        out["mean_" + name] = total / static_cast<double>(counts[name]);
    }
    return out;
}

std::string to_json(const RunReport& report) {
    json j;
    j["command"] = report.command;
    j["fingerprint"] = report.fingerprint;
    j["metrics"] = report.metrics;
    json samples = json::array();
    for (const SampleRecord& s : report.samples) {
        json o;
        o["id"] = s.id;
        if (!s.region.empty()) {
            o["region"] = s.region;
        }
        o["visual_total"] = s.visual_total;
        o["kept"] = s.kept;
        o["rate"] = s.rate;
        o["metrics"] = s.metrics;
        samples.push_back(std::move(o));
    }
    j["samples"] = std::move(samples);
    json timings = json::object();
    for (const auto& [label, t] : report.timings) {
        timings[label] = timing_to_json(t);
    }
    j["timings"] = std::move(timings);
    if (report.relacc) {
        j["relacc"] = {{"baseline_fingerprint", report.relacc->baseline_fingerprint},
                       {"ratios", report.relacc->ratios},
                       {"value", report.relacc->value}};
    }
    j["notes"] = report.notes;
    return j.dump(2) + "\n";
}

void write_report(std::ostream& out, const RunReport& report) {
    out << to_json(report);
}

RunReport read_report(std::istream& in, const std::string& source_name) {
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(source_name + ": invalid JSON (" + e.what() + ")");
    }
    try {
        RunReport r;
        r.command = j.at("command").get<std::string>();
        r.fingerprint = j.at("fingerprint").get<std::string>();
        r.metrics = j.at("metrics").get<std::map<std::string, double>>();
        for (const json& o : j.at("samples")) {
            SampleRecord s;
            s.id = o.at("id").get<std::string>();
            s.region = o.value("region", std::string());
            s.visual_total = o.at("visual_total").get<std::size_t>();
            s.kept = o.at("kept").get<std::size_t>();
            s.rate = o.at("rate").get<double>();
            s.metrics = o.at("metrics").get<std::map<std::string, double>>();
            r.samples.push_back(std::move(s));
        }
        if (j.contains("timings")) {
            for (const auto& [label, t] : j["timings"].items()) {
                r.timings[label] = timing_from_json(t);
            }
        }
        if (j.contains("relacc")) {
            const json& ra = j["relacc"];
            r.relacc = RelAccRecord{ra.at("baseline_fingerprint").get<std::string>(),
                                    ra.at("ratios").get<std::map<std::string, double>>(),
                                    ra.at("value").get<double>()};
        }
        if (j.contains("notes")) {
            r.notes = j["notes"].get<std::vector<std::string>>();
        }
        return r;
    } catch (const json::exception& e) {
        throw ParseError(source_name + ": not a run report (" + e.what() + ")");
    }
}

RunReport read_report_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open report '" + path + "'");
    }
    return read_report(in, path);
}

}  // namespace regionprune::harness
