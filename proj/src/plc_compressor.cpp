// Copyright (C) 2026 The regionprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "regionprune/plc_compressor.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "regionprune/error.hpp"

namespace regionprune::plc {

namespace {

std::size_t integer_sqrt(std::size_t n) {
    auto root = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
    while (root * root > n) {
        --root;
    }
    while ((root + 1) * (root + 1) <= n) {
        ++root;
    }
    return root;
}

Matrix gaussian_bank(std::size_t rows, std::size_t dim, double stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, stddev);
    Matrix m(rows, dim);
    for (double& v : m.data()) {
        v = dist(rng);
    }
    return m;
}

void scatter_add(Matrix& dst, const Matrix& src, const std::vector<std::size_t>& rows) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= dst.rows()) {
            throw ShapeError("token gradient: trace row " + std::to_string(rows[i]) + " exceeds " +
                             std::to_string(dst.rows()) + " input tokens");
        }
        auto out = dst.row(rows[i]);
        const auto in = src.row(i);
        for (std::size_t c = 0; c < in.size(); ++c) {
            out[c] += in[c];
        }
    }
}

}  // namespace

void VisualTokens::validate() const {
    grid.validate();
    if (embeddings.rows() != grid.total_tokens()) {
        throw ShapeError("visual tokens: " + std::to_string(embeddings.rows()) + " rows for a grid of " +
                         std::to_string(grid.total_tokens()) + " tokens");
    }
    if (embeddings.cols() == 0) {
        throw ShapeError("visual tokens: zero embedding width");
    }
    if (!embeddings.all_finite()) {
        throw DataError("visual tokens contain non-finite values");
    }
}

std::size_t PlcParams::anchor_side() const {
    return integer_sqrt(anchor_count);
}

void PlcParams::validate() const {
    if (q_contextual.rows() == 0 || q_noncontextual.rows() == 0 || anchor_count == 0) {
        throw ConfigError("PLC needs at least one query in each bank and at least one anchor token");
    }
    if (q_contextual.cols() == 0 || q_contextual.cols() != q_noncontextual.cols()) {
        throw ConfigError("PLC query banks disagree on width: " + std::to_string(q_contextual.cols()) + " vs " +
                          std::to_string(q_noncontextual.cols()));
    }
    const std::size_t side = anchor_side();
    if (side * side != anchor_count) {
        throw ConfigError("anchor count " + std::to_string(anchor_count) + " is not a perfect square");
    }
    if (!q_contextual.all_finite() || !q_noncontextual.all_finite()) {
        throw ConfigError("PLC query banks contain non-finite values");
    }
}

PlcParams PlcParams::initialize(std::size_t dim, std::uint64_t seed, std::size_t contextual_queries,
                                std::size_t noncontextual_queries, std::size_t anchor_count) {
    if (dim == 0) {
        throw ConfigError("PLC hidden width must be positive");
    }
    std::mt19937_64 rng(seed);
    const double stddev = 1.0 / std::sqrt(static_cast<double>(dim));
    PlcParams params;
    params.q_contextual = gaussian_bank(contextual_queries, dim, stddev, rng);
    params.q_noncontextual = gaussian_bank(noncontextual_queries, dim, stddev, rng);
    params.anchor_count = anchor_count;
    params.validate();
    return params;
}

TokenPartition partition(const VisualTokens& tokens, const grid::Region& region) {
    tokens.validate();
    const grid::TokenIndexSet selected = grid::region_to_tokens(region, tokens.grid);
    TokenPartition parts;
    const std::size_t total = tokens.grid.total_tokens();
    parts.contextual_rows.reserve(selected.size());
    parts.noncontextual_rows.reserve(total - selected.size());
    auto next = selected.begin();
    for (std::size_t i = 0; i < total; ++i) {
        if (next != selected.end() && *next == i) {
            parts.contextual_rows.push_back(i);
            ++next;
        } else {
            parts.noncontextual_rows.push_back(i);
        }
    }
    for (std::size_t row : parts.contextual_rows) {
        parts.contextual_cells.push_back(grid::cell_of(tokens.grid, row));
    }
    for (std::size_t row : parts.noncontextual_rows) {
        parts.noncontextual_cells.push_back(grid::cell_of(tokens.grid, row));
    }
    parts.contextual = tensor::gather_rows(tokens.embeddings, parts.contextual_rows);
    parts.noncontextual = tensor::gather_rows(tokens.embeddings, parts.noncontextual_rows);
    if (parts.noncontextual.rows() == 0) {
        parts.noncontextual = Matrix(0, tokens.dim());
    }
    return parts;
}

AnchorPatch extract_anchor(const VisualTokens& tokens, const grid::Region& region, std::size_t anchor_count) {
    tokens.validate();
    const std::size_t patch = integer_sqrt(anchor_count);
    const std::size_t side = tokens.grid.side;
    if (patch * patch != anchor_count || patch == 0) {
        throw ConfigError("anchor count " + std::to_string(anchor_count) + " is not a positive perfect square");
    }
    if (patch > side) {
        throw ConfigError("anchor patch " + std::to_string(patch) + "x" + std::to_string(patch) +
                          " does not fit a grid of side " + std::to_string(side));
    }
    const grid::TokenRect rect = grid::token_extent(region, side);
    if (rect.empty()) {
        throw ConfigError("region covers no tokens on a grid of side " + std::to_string(side));
    }
    const auto corner = [&](std::size_t begin, std::size_t end) {
        const long long twice = static_cast<long long>(begin + end) - static_cast<long long>(patch);
        const long long start = grid::floor_half(twice);
        return static_cast<std::size_t>(std::clamp<long long>(start, 0, static_cast<long long>(side - patch)));
    };
    const std::size_t row0 = corner(rect.row_begin, rect.row_end);
    const std::size_t col0 = corner(rect.col_begin, rect.col_end);

    AnchorPatch anchor;
    for (std::size_t r = row0; r < row0 + patch; ++r) {
        for (std::size_t c = col0; c < col0 + patch; ++c) {
            const grid::GridCell cell{0, r, c};
            anchor.cells.push_back(cell);
            anchor.rows.push_back(grid::index_of(tokens.grid, cell));
        }
    }
    anchor.tokens = tensor::gather_rows(tokens.embeddings, anchor.rows);
    return anchor;
}

const char* to_string(RowSource source) {
    switch (source) {
    case RowSource::fused_anchor:
        return "fused-anchor";
    case RowSource::compressed_noncontextual:
        return "compressed-noncontextual";
    case RowSource::empty_source:
        return "empty-source";
    }
    return "unknown";
}

PlcTrace compress_partitioned(TokenPartition parts, AnchorPatch anchor, const PlcParams& params) {
    params.validate();
    const std::size_t dim = params.dim();
    if (parts.contextual.rows() == 0) {
        throw DataError("PLC: region maps to no contextual tokens on this grid");
    }
    tensor::expect_shape(parts.contextual, parts.contextual_cells.size(), dim, "contextual tokens");
    if (parts.noncontextual.rows() > 0) {
        tensor::expect_shape(parts.noncontextual, parts.noncontextual_cells.size(), dim, "noncontextual tokens");
    }
    tensor::expect_shape(anchor.tokens, params.anchor_count, dim, "anchor tokens");

    const tensor::PosEncoder pe = params.pos_encoder();
    PlcTrace t;

    t.encoded_contextual_queries = pe.with_slots(params.q_contextual);
    t.encoded_contextual = pe.with_cells(parts.contextual, parts.contextual_cells);
    auto ctx = tensor::attention_with_probs(t.encoded_contextual_queries, t.encoded_contextual);
    t.compressed_contextual = std::move(ctx.output);
    t.contextual_probs = std::move(ctx.probs);

    t.encoded_noncontextual_queries = pe.with_slots(params.q_noncontextual);
    t.noncontextual_empty = parts.noncontextual.rows() == 0;
    if (t.noncontextual_empty) {
        t.compressed_noncontextual = Matrix(params.q_noncontextual.rows(), dim);
    } else {
        t.encoded_noncontextual = pe.with_cells(parts.noncontextual, parts.noncontextual_cells);
        auto nctx = tensor::attention_with_probs(t.encoded_noncontextual_queries, t.encoded_noncontextual);
        t.compressed_noncontextual = std::move(nctx.output);
        t.noncontextual_probs = std::move(nctx.probs);
    }

    t.encoded_anchor = pe.with_cells(anchor.tokens, anchor.cells);
    t.encoded_compressed_contextual = pe.with_slots(t.compressed_contextual);
    auto fuse = tensor::attention_with_probs(t.encoded_anchor, t.encoded_compressed_contextual);
    t.fusion_probs = std::move(fuse.probs);
    t.fused = tensor::add(fuse.output, anchor.tokens);

    t.output.tokens = tensor::concat_rows(t.fused, t.compressed_noncontextual);
    t.output.provenance.assign(t.fused.rows(), RowSource::fused_anchor);
    t.output.provenance.insert(t.output.provenance.end(), t.compressed_noncontextual.rows(),
                               t.noncontextual_empty ? RowSource::empty_source
                                                     : RowSource::compressed_noncontextual);

    t.parts = std::move(parts);
    t.anchor = std::move(anchor);
    return t;
}

PlcTrace compress_traced(const VisualTokens& tokens, const grid::Region& region, const PlcParams& params) {
    params.validate();
    if (tokens.dim() != params.dim()) {
        throw ShapeError("visual tokens have width " + std::to_string(tokens.dim()) +
                         " but the PLC query banks have width " + std::to_string(params.dim()));
    }
    TokenPartition parts = partition(tokens, region);
    AnchorPatch anchor = extract_anchor(tokens, region, params.anchor_count);
    return compress_partitioned(std::move(parts), std::move(anchor), params);
}

PlcOutput compress(const VisualTokens& tokens, const grid::Region& region, const PlcParams& params) {
    return compress_traced(tokens, region, params).output;
}

Matrix compress_ablated(const VisualTokens& tokens, const grid::Region& region, const PlcParams& params) {
    PlcTrace t = compress_traced(tokens, region, params);
    return tensor::concat_rows(t.compressed_contextual, t.compressed_noncontextual);
}

PlcGradients plc_backward(const PlcTrace& trace, const PlcParams& params, const Matrix& upstream,
                          std::size_t token_rows) {
    const std::size_t dim = params.dim();
    const std::size_t n_anchor = trace.fused.rows();
    const std::size_t n_nctx = trace.compressed_noncontextual.rows();
    tensor::expect_shape(upstream, n_anchor + n_nctx, dim, "upstream gradient");

    Matrix d_fused(n_anchor, dim);
    std::copy_n(upstream.data().begin(), n_anchor * dim, d_fused.data().begin());
    Matrix d_nctx(n_nctx, dim);
    std::copy_n(upstream.data().begin() + static_cast<std::ptrdiff_t>(n_anchor * dim), n_nctx * dim,
                d_nctx.data().begin());

    // X^fused = attn(P(X^r), P(X̂^kv)) + X^r
    auto fuse = tensor::attention_backward(trace.encoded_anchor, trace.encoded_compressed_contextual,
                                           trace.fusion_probs, d_fused);
    Matrix d_anchor = tensor::add(d_fused, fuse.d_query);

    // X̂^kv = attn(P(Q^k), P(X^kv))
    auto ctx = tensor::attention_backward(trace.encoded_contextual_queries, trace.encoded_contextual,
                                          trace.contextual_probs, fuse.d_kv);

    PlcGradients grads;
    grads.d_q_contextual = std::move(ctx.d_query);
    grads.d_tokens = Matrix(token_rows, dim);
    scatter_add(grads.d_tokens, ctx.d_kv, trace.parts.contextual_rows);
    scatter_add(grads.d_tokens, d_anchor, trace.anchor.rows);

    if (trace.noncontextual_empty) {
        grads.d_q_noncontextual = Matrix(params.q_noncontextual.rows(), dim);
    } else {
        auto nctx = tensor::attention_backward(trace.encoded_noncontextual_queries, trace.encoded_noncontextual,
                                               trace.noncontextual_probs, d_nctx);
        grads.d_q_noncontextual = std::move(nctx.d_query);
        scatter_add(grads.d_tokens, nctx.d_kv, trace.parts.noncontextual_rows);
    }
    return grads;
}

PlcGradients plc_backward(const VisualTokens& tokens, const grid::Region& region, const PlcParams& params,
                          const Matrix& upstream) {
    const PlcTrace trace = compress_traced(tokens, region, params);
    return plc_backward(trace, params, upstream, tokens.grid.total_tokens());
}

}  // namespace regionprune::plc
