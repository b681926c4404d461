// Copyright (C) 2026 The regionprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "regionprune/grid_region.hpp"
#include "regionprune/tensor_math.hpp"

namespace regionprune::ilp {

using tensor::Matrix;

struct ModelConfig {
    std::size_t layers = 4;
    std::size_t heads = 2;
    std::size_t hidden = 32;
    std::size_t mlp = 64;
    std::uint64_t seed = 0;
    /// W_k = a·W_q + √(1−a²)·R. Positive values make attention favour
    /// content-aligned query/key pairs.
    double qk_alignment = 0.75;
    double rope_base = 10000.0;

    /// Throws ConfigError unless hidden is divisible by heads and the head width is even.
    void validate() const;
    std::size_t head_dim() const { return hidden / heads; }
};

struct LayerWeights {
    std::vector<double> attn_norm_gain;
    std::vector<double> attn_norm_bias;
    Matrix wq;  // hidden x hidden, applied as x·W
    Matrix wk;
    Matrix wv;
    Matrix wo;
    std::vector<double> mlp_norm_gain;
    std::vector<double> mlp_norm_bias;
    Matrix w_up;  // hidden x mlp
    std::vector<double> b_up;
    Matrix w_down;  // mlp x hidden
    std::vector<double> b_down;
};

/// Pre-norm causal decoder stack with rotary positions and a tanh-GELU MLP.
/// Weights are immutable after construction and fully determined by the config.
class ToyTransformer {
public:
    explicit ToyTransformer(ModelConfig config);

    const ModelConfig& config() const { return m_config; }
    const LayerWeights& layer(std::size_t index) const { return m_layers.at(index); }
    std::size_t layer_count() const { return m_layers.size(); }

private:
    ModelConfig m_config;
    std::vector<LayerWeights> m_layers;
};

enum class RowRole { system, visual, query };

/// System prompt, then visual tokens, then the user query.
struct MultimodalSequence {
    Matrix embeddings;
    std::vector<RowRole> roles;
    grid::TokenGrid grid;
    std::size_t system_len = 0;
    std::size_t query_len = 0;

    static MultimodalSequence assemble(const Matrix& system, const Matrix& visual, const grid::TokenGrid& grid,
                                       const Matrix& query);

    std::size_t visual_begin() const { return system_len; }
    std::size_t visual_end() const { return system_len + grid.total_tokens(); }
    std::size_t size() const { return embeddings.rows(); }
    /// Throws ShapeError/DataError when the row layout and roles disagree.
    void validate() const;
};

struct ForwardOptions {
    /// Keep the hidden state entering every layer plus the final output.
    bool keep_hidden_states = true;
    /// 1-based block whose per-head attention maps are returned.
    std::optional<std::size_t> capture_attention_layer;
};

struct ForwardResult {
    /// hidden_states[l] is the state after l blocks (0 = embeddings); rows
    /// shrink from the prune point on. Empty unless requested.
    std::vector<Matrix> hidden_states;
    Matrix final_hidden;
    /// Original sequence index of every row of final_hidden.
    std::vector<std::size_t> row_ids;
    /// Rotary position used for every row of final_hidden.
    std::vector<std::size_t> positions;
    /// Per-head attention probabilities of the captured block (rows x rows).
    std::vector<Matrix> attention;

    std::vector<double> logits_proxy() const;
};

ForwardResult forward_baseline(const ToyTransformer& model, const MultimodalSequence& seq,
                               const ForwardOptions& options = {});

/// Runs blocks first_layer..L (1-based) on an explicit hidden state.
ForwardResult forward_from(const ToyTransformer& model, const Matrix& hidden, std::vector<std::size_t> positions,
                           std::size_t first_layer, const ForwardOptions& options = {});

enum class PositionPolicy { keep_original, reindex };
/// after_layer prunes the output of block K; before_layer prunes its input.
enum class PruneBoundary { after_layer, before_layer };

struct PruneConfig {
    std::size_t layer = 2;
    grid::Region region = grid::Region::full();
    PositionPolicy positions = PositionPolicy::keep_original;
    PruneBoundary boundary = PruneBoundary::after_layer;

    /// Number of blocks run on the full sequence.
    std::size_t prune_point() const { return boundary == PruneBoundary::after_layer ? layer : layer - 1; }
    void validate(const ModelConfig& model) const;
};

struct PruneReport {
    std::size_t visual_total = 0;
    std::size_t kept = 0;
    std::size_t dropped = 0;
    std::size_t prune_point = 0;
    double rate = 0.0;
    /// Sequence indices of the visual rows that survived.
    std::vector<std::size_t> kept_visual_rows;
};

struct PrunedForward {
    ForwardResult forward;
    PruneReport report;
};

/// Blocks 1..K on the full sequence, then drops visual rows outside the region
/// and continues on the shortened sequence. Throws DataError if the region maps
/// to no tokens on the sequence's grid.
PrunedForward forward_ilp(const ToyTransformer& model, const MultimodalSequence& seq, const PruneConfig& cfg,
                          const ForwardOptions& options = {});

/// Mean attention each visual row receives from the query rows, averaged over
/// heads. Returns one score per visual row in sequence order.
std::vector<double> received_attention(const std::vector<Matrix>& attention, const MultimodalSequence& seq);

/// Indices (into `scores`) of the `budget` largest scores; ties go to the lower
/// index. The result is sorted ascending.
std::vector<std::size_t> top_r(const std::vector<double>& scores, std::size_t budget);

/// Attention-score baseline: after block K keep the `budget` visual rows that
/// received the most attention from query rows in block K.
PrunedForward forward_topr_baseline(const ToyTransformer& model, const MultimodalSequence& seq, std::size_t budget,
                                    std::size_t layer, PositionPolicy positions = PositionPolicy::keep_original,
                                    const ForwardOptions& options = {});

struct FlopEstimate {
    std::uint64_t baseline = 0;
    std::uint64_t pruned = 0;
    double ratio = 1.0;  // pruned / baseline
};

/// FLOPs of one block on n rows:
///   8·n·d² (q, k, v, o projections) + 4·n²·d (scores and weighted sum)
///   + 3·H·n² (softmax) + 4·n·d·mlp (up and down projections).
std::uint64_t block_flops(std::uint64_t rows, std::uint64_t hidden, std::uint64_t heads, std::uint64_t mlp);

/// K blocks at `len_before` rows and L−K blocks at `len_after` rows.
FlopEstimate count_flops(std::size_t len_before, std::size_t len_after, std::size_t prune_layer, std::size_t layers,
                         std::size_t hidden, std::size_t heads, std::size_t mlp);

/// Mean row-wise cosine similarity between the final hidden states of two
/// runs, over the rows of `pruned` that sit at or after the first visual row.
double proxy_quality(const ForwardResult& baseline, const ForwardResult& pruned, std::size_t visual_begin);

}  // namespace regionprune::ilp
