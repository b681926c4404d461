// Copyright (C) 2026 The regionprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "regionprune/ilp_transformer.hpp"

namespace regionprune::harness {

/// Attention maps of one block plus the prune report of the same run.
struct AttentionTrace {
    std::string sample_id;
    std::string method;  // "region" or "topr"
    std::size_t layer = 0;
    std::size_t visual_begin = 0;
    std::size_t visual_end = 0;
    std::size_t sequence_length = 0;
    ilp::PruneReport report;
    std::vector<tensor::Matrix> attention;  // per head, rows x rows
};

/// Canonical JSON with full-precision numbers.
std::string trace_to_json(const AttentionTrace& trace);
/// Throws ParseError on malformed input and ShapeError on ragged maps.
AttentionTrace read_trace(std::istream& in, const std::string& source_name = "trace");

}  // namespace regionprune::harness
