// Copyright (C) 2026 The regionprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "regionprune/grid_region.hpp"
#include "regionprune/ilp_transformer.hpp"
#include "regionprune/plc_compressor.hpp"
#include "regionprune/tensor_math.hpp"

namespace regionprune::harness {

/// One evaluation unit. Visual tokens are either embedded (rows x dim) or
/// generated from `seed`; exactly one of the two is set.
struct Sample {
    std::string id;
    grid::TokenGrid grid;
    std::optional<grid::Region> gt_region;
    std::optional<std::uint64_t> seed;
    std::optional<tensor::Matrix> tokens;
    std::size_t system_len = 0;  // "m" in the dataset files
    std::size_t query_len = 0;

    /// Throws DataError when the invariants above do not hold.
    void validate() const;
};

struct Dataset {
    std::vector<Sample> samples;
    /// Repairs applied to stored region strings, one line each.
    std::vector<std::string> warnings;

    const Sample& find(const std::string& id) const;
};

/// JSON Lines, one sample per line:
/// {"id", "side", "views", "gt_region"?, "seed"? | "tokens"?, "m", "query_len"}.
/// Throws ParseError for malformed lines and DataError for invalid samples or
/// duplicate ids.
Dataset read_dataset(std::istream& in, const std::string& source_name = "dataset");
Dataset read_dataset_file(const std::string& path);
void write_dataset(std::ostream& out, const std::vector<Sample>& samples);

/// Knobs of the synthetic token generator.
struct SynthConfig {
    /// Multiple of the shared signal direction added to tokens inside the
    /// ground-truth region.
    double signal_strength = 5.0;
    /// Multiple of the same direction added to query rows.
    double query_alignment = 4.0;
};

/// Embedding rows of one sample, split by role.
struct SampleTensors {
    tensor::Matrix system;
    tensor::Matrix visual;
    tensor::Matrix query;
};

/// Materializes a sample at width `dim`. Seeded samples draw Gaussian rows
/// from their seed; embedded samples use their stored visual tokens and draw
/// system/query rows from the sample id. Throws DataError when embedded
/// tokens have a different width.
SampleTensors materialize(const Sample& sample, std::size_t dim, const SynthConfig& synth = {});

ilp::MultimodalSequence build_sequence(const Sample& sample, std::size_t dim, const SynthConfig& synth = {});
plc::VisualTokens build_visual(const Sample& sample, std::size_t dim, const SynthConfig& synth = {});

struct GenerateConfig {
    std::size_t count = 32;
    std::size_t side = 24;
    std::size_t views = 1;
    std::size_t system_len = 8;
    std::size_t query_len = 8;
    std::uint64_t seed = 0;
    /// Ground-truth regions have width and height in [min_extent, max_extent].
    int min_extent = 2;
    int max_extent = 5;
};

/// Seeded samples with ground-truth regions whose placement favours the grid
/// center (mean of two uniform draws per axis).
std::vector<Sample> generate_dataset(const GenerateConfig& config);

}  // namespace regionprune::harness
