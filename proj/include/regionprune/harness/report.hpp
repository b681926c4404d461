// Copyright (C) 2026 The regionprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace regionprune::harness {

/// FNV-1a (64-bit) over labelled fields, rendered as 16 hex digits. Field
/// order matters; callers add inputs in a fixed order.
class Fingerprint {
public:
    Fingerprint& add(std::string_view key, std::string_view value);
    Fingerprint& add(std::string_view key, double value);
    Fingerprint& add(std::string_view key, std::uint64_t value);
    /// Hashes the file's bytes; throws DataError if it cannot be read.
    Fingerprint& add_file(std::string_view key, const std::string& path);

    std::uint64_t value() const { return m_state; }
    std::string hex() const;

private:
    void mix(std::string_view bytes);

    std::uint64_t m_state = 0xCBF29CE484222325ULL;
};

struct TimingStats {
    std::size_t reps = 0;
    double median_ms = 0.0;
    double min_ms = 0.0;
    double max_ms = 0.0;
};

struct SampleRecord {
    std::string id;
    std::string region;  // "x_min y_min x_max y_max", empty when not applicable
    std::size_t visual_total = 0;
    std::size_t kept = 0;
    double rate = 0.0;  // achieved pruning rate of this sample
    std::map<std::string, double> metrics;
};

struct RelAccRecord {
    std::string baseline_fingerprint;
    std::map<std::string, double> ratios;
    double value = 0.0;  // weighted mean of the ratios
};

struct RunReport {
    std::string command;
    std::string fingerprint;
    std::vector<SampleRecord> samples;
    /// Dataset-level metrics; for per-sample commands these are the means
    /// produced by summarize().
    std::map<std::string, double> metrics;
    std::map<std::string, TimingStats> timings;
    /// Present only when the run was compared against a baseline run.
    std::optional<RelAccRecord> relacc;
    std::vector<std::string> notes;
};

/// Mean kept count, mean achieved rate, and the mean of every per-sample
/// metric, keyed "mean_kept", "mean_rate" and "mean_<metric>". Throws
/// DataError when the report holds no samples.
std::map<std::string, double> summarize(const RunReport& report);

/// Canonical JSON (sorted keys, two-space indent, trailing newline).
std::string to_json(const RunReport& report);
void write_report(std::ostream& out, const RunReport& report);
/// Throws ParseError on malformed documents.
RunReport read_report(std::istream& in, const std::string& source_name = "report");
RunReport read_report_file(const std::string& path);

}  // namespace regionprune::harness
