// Copyright (C) 2026 The regionprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "regionprune/grid_region.hpp"
#include "regionprune/pos_encoder.hpp"
#include "regionprune/tensor_math.hpp"

namespace regionprune::plc {

using tensor::Matrix;

/// Visual encoder output: one row per token of `grid`, in grid index order.
struct VisualTokens {
    Matrix embeddings;
    grid::TokenGrid grid;

    std::size_t dim() const { return embeddings.cols(); }
    /// Throws ShapeError/DataError on row-count mismatch or non-finite values.
    void validate() const;
};

/// Learnable query banks plus the anchor-patch size.
struct PlcParams {
    Matrix q_contextual;     // N_{Q^k} x d_h
    Matrix q_noncontextual;  // N_{Q^nk} x d_h
    std::size_t anchor_count = 64;

    std::size_t dim() const { return q_contextual.cols(); }
    std::size_t anchor_side() const;
    tensor::PosEncoder pos_encoder() const { return tensor::PosEncoder(dim()); }

    /// Throws ConfigError for empty banks, mismatched widths or a non-square anchor count.
    void validate() const;

    /// Gaussian banks with standard deviation 1/√dim drawn from `seed`.
    static PlcParams initialize(std::size_t dim, std::uint64_t seed, std::size_t contextual_queries = 64,
                                std::size_t noncontextual_queries = 4, std::size_t anchor_count = 64);
};

struct TokenPartition {
    Matrix contextual;
    std::vector<grid::GridCell> contextual_cells;
    std::vector<std::size_t> contextual_rows;
    Matrix noncontextual;
    std::vector<grid::GridCell> noncontextual_cells;
    std::vector<std::size_t> noncontextual_rows;
};

/// Splits token rows by region membership, keeping each row's grid cell.
TokenPartition partition(const VisualTokens& tokens, const grid::Region& region);

struct AnchorPatch {
    Matrix tokens;
    std::vector<grid::GridCell> cells;
    std::vector<std::size_t> rows;
};

/// The √N_r x √N_r patch of original tokens from view 0 centered on the
/// midpoint of the region's token rectangle. The corner is rounded half-down
/// and clamped so the patch stays on the grid. Throws ConfigError when the
/// patch is wider than the grid or the region covers no tokens.
AnchorPatch extract_anchor(const VisualTokens& tokens, const grid::Region& region, std::size_t anchor_count);

enum class RowSource { fused_anchor, compressed_noncontextual, empty_source };

const char* to_string(RowSource source);

struct PlcOutput {
    Matrix tokens;  // (N_r + N_{Q^nk}) x d_h
    std::vector<RowSource> provenance;
};

/// Every intermediate of one compression pass; the gradient pass replays it.
struct PlcTrace {
    TokenPartition parts;
    AnchorPatch anchor;

    Matrix encoded_contextual_queries;  // P(Q^k)
    Matrix encoded_contextual;          // P(X^kv)
    Matrix contextual_probs;
    Matrix compressed_contextual;  // X̂^kv

    bool noncontextual_empty = false;
    Matrix encoded_noncontextual_queries;  // P(Q^nk)
    Matrix encoded_noncontextual;          // P(X^nkv)
    Matrix noncontextual_probs;
    Matrix compressed_noncontextual;  // X̂^nkv, zeros when the source is empty

    Matrix encoded_anchor;                 // P(X^r)
    Matrix encoded_compressed_contextual;  // P(X̂^kv)
    Matrix fusion_probs;
    Matrix fused;  // X^fused

    PlcOutput output;
};

PlcTrace compress_traced(const VisualTokens& tokens, const grid::Region& region, const PlcParams& params);

/// Same pass from an explicit partition and anchor patch.
PlcTrace compress_partitioned(TokenPartition parts, AnchorPatch anchor, const PlcParams& params);

/// Concat(X^fused, X̂^nkv); always N_r + N_{Q^nk} rows.
PlcOutput compress(const VisualTokens& tokens, const grid::Region& region, const PlcParams& params);

/// Concat(X̂^kv, X̂^nkv) without anchors or fusion; N_{Q^k} + N_{Q^nk} rows.
Matrix compress_ablated(const VisualTokens& tokens, const grid::Region& region, const PlcParams& params);

struct PlcGradients {
    Matrix d_q_contextual;
    Matrix d_q_noncontextual;
    Matrix d_tokens;  // one row per visual token of the input grid
};

/// Gradients of <upstream, output.tokens> with respect to both query banks and
/// every input token. Throws ShapeError naming the mismatched tensor.
PlcGradients plc_backward(const PlcTrace& trace, const PlcParams& params, const Matrix& upstream,
                          std::size_t token_rows);
PlcGradients plc_backward(const VisualTokens& tokens, const grid::Region& region, const PlcParams& params,
                          const Matrix& upstream);

/// Little-endian checkpoint: "RPLC", u32 version, u32 d_h, u32 N_{Q^k},
/// u32 N_{Q^nk}, u32 N_r, then Q^k and Q^nk as row-major f64.
void save_params(const PlcParams& params, std::ostream& out);
/// Throws DataError on bad magic, unknown version, truncation or invalid counts.
PlcParams load_params(std::istream& in);

}  // namespace regionprune::plc
