// Copyright (C) 2026 The regionprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "regionprune/ilp_transformer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "regionprune/error.hpp"

namespace regionprune::ilp {

namespace {

constexpr double kNormEps = 1e-5;

Matrix gaussian(std::size_t rows, std::size_t cols, double stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, stddev);
    Matrix m(rows, cols);
    for (double& v : m.data()) {
        v = dist(rng);
    }
    return m;
}

std::vector<double> gaussian_vec(std::size_t n, double mean, double stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(mean, stddev);
    std::vector<double> v(n);
    for (double& x : v) {
        x = dist(rng);
    }
    return v;
}

Matrix layer_norm(const Matrix& x, const std::vector<double>& gain, const std::vector<double>& bias) {
    const std::size_t d = x.cols();
    Matrix out(x.rows(), d);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto in = x.row(r);
        double mean = 0.0;
        for (double v : in) {
            mean += v;
        }
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (double v : in) {
            var += (v - mean) * (v - mean);
        }
        var /= static_cast<double>(d);
        const double inv = 1.0 / std::sqrt(var + kNormEps);
        auto dst = out.row(r);
        for (std::size_t c = 0; c < d; ++c) {
            dst[c] = (in[c] - mean) * inv * gain[c] + bias[c];
        }
    }
    return out;
}

double gelu(double x) {
    constexpr double kSqrt2OverPi = 0.7978845608028654;
    return 0.5 * x * (1.0 + std::tanh(kSqrt2OverPi * (x + 0.044715 * x * x * x)));
}

struct RopeTable {
    std::vector<double> cos;  // rows x half
    std::vector<double> sin;
    std::size_t half = 0;
};

RopeTable rope_table(const std::vector<std::size_t>& positions, std::size_t head_dim, double base) {
    RopeTable t;
    t.half = head_dim / 2;
    t.cos.resize(positions.size() * t.half);
    t.sin.resize(positions.size() * t.half);
    for (std::size_t i = 0; i < t.half; ++i) {
        const double freq = std::pow(base, -2.0 * static_cast<double>(i) / static_cast<double>(head_dim));
        for (std::size_t r = 0; r < positions.size(); ++r) {
            const double angle = static_cast<double>(positions[r]) * freq;
            t.cos[r * t.half + i] = std::cos(angle);
            t.sin[r * t.half + i] = std::sin(angle);
        }
    }
    return t;
}

void apply_rope(Matrix& m, const RopeTable& rope, std::size_t heads, std::size_t head_dim) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        const double* c = rope.cos.data() + r * rope.half;
        const double* s = rope.sin.data() + r * rope.half;
        for (std::size_t h = 0; h < heads; ++h) {
            double* x = row.data() + h * head_dim;
            for (std::size_t i = 0; i < rope.half; ++i) {
                const double a = x[2 * i];
                const double b = x[2 * i + 1];
                x[2 * i] = a * c[i] - b * s[i];
                x[2 * i + 1] = a * s[i] + b * c[i];
            }
        }
    }
}

void add_bias(Matrix& m, const std::vector<double>& bias) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            row[c] += bias[c];
        }
    }
}

// Causal multi-head attention over pre-projected q, k, v. Scores accumulate
// over the head dimension in ascending order, one key column at a time.
Matrix causal_attention(const Matrix& q, const Matrix& k, const Matrix& v, std::size_t heads, std::size_t head_dim,
                        std::vector<Matrix>* capture) {
    const std::size_t n = q.rows();
    Matrix out(n, q.cols());
    if (capture != nullptr) {
        capture->assign(heads, Matrix(n, n));
    }
    const double inv_scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
    std::vector<double> scores(n);
    std::vector<double> keys_t(head_dim * n);  // head_dim x n
    for (std::size_t h = 0; h < heads; ++h) {
        const std::size_t off = h * head_dim;
        for (std::size_t j = 0; j < n; ++j) {
            const double* kj = k.row(j).data() + off;
            for (std::size_t t = 0; t < head_dim; ++t) {
                keys_t[t * n + j] = kj[t];
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double* qi = q.row(i).data() + off;
            const std::size_t visible = i + 1;
            std::fill_n(scores.begin(), visible, 0.0);
            for (std::size_t t = 0; t < head_dim; ++t) {
                const double s = qi[t];
                const double* kt = keys_t.data() + t * n;
                for (std::size_t j = 0; j < visible; ++j) {
                    scores[j] += s * kt[j];
                }
            }
            double peak = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < visible; ++j) {
                scores[j] *= inv_scale;
                peak = std::max(peak, scores[j]);
            }
            double total = 0.0;
            for (std::size_t j = 0; j < visible; ++j) {
                scores[j] = std::exp(scores[j] - peak);
                total += scores[j];
            }
            double* oi = out.row(i).data() + off;
            for (std::size_t j = 0; j < visible; ++j) {
                const double p = scores[j] / total;
                const double* vj = v.row(j).data() + off;
                for (std::size_t t = 0; t < head_dim; ++t) {
                    oi[t] += p * vj[t];
                }
                if (capture != nullptr) {
                    (*capture)[h](i, j) = p;
                }
            }
        }
    }
    return out;
}

Matrix run_block(const LayerWeights& w, const ModelConfig& cfg, const Matrix& x, const RopeTable& rope,
                 std::vector<Matrix>* capture) {
    const Matrix normed = layer_norm(x, w.attn_norm_gain, w.attn_norm_bias);
    Matrix q = tensor::matmul(normed, w.wq);
    Matrix k = tensor::matmul(normed, w.wk);
    const Matrix v = tensor::matmul(normed, w.wv);
    apply_rope(q, rope, cfg.heads, cfg.head_dim());
    apply_rope(k, rope, cfg.heads, cfg.head_dim());
    const Matrix mixed = causal_attention(q, k, v, cfg.heads, cfg.head_dim(), capture);

    Matrix h = tensor::add(x, tensor::matmul(mixed, w.wo));
    const Matrix normed2 = layer_norm(h, w.mlp_norm_gain, w.mlp_norm_bias);
    Matrix up = tensor::matmul(normed2, w.w_up);
    add_bias(up, w.b_up);
    for (double& u : up.data()) {
        u = gelu(u);
    }
    Matrix down = tensor::matmul(up, w.w_down);
    add_bias(down, w.b_down);
    tensor::add_inplace(h, down);
    return h;
}

struct RunState {
    Matrix hidden;
    std::vector<std::size_t> positions;
    std::vector<std::size_t> row_ids;
};

// Runs blocks [first, last] (1-based, inclusive) in place.
void run_blocks(const ToyTransformer& model, RunState& state, std::size_t first, std::size_t last,
                const ForwardOptions& options, ForwardResult& result) {
    if (first > last) {
        return;
    }
    const ModelConfig& cfg = model.config();
    const RopeTable rope = rope_table(state.positions, cfg.head_dim(), cfg.rope_base);
    for (std::size_t l = first; l <= last; ++l) {
        const bool capture = options.capture_attention_layer && *options.capture_attention_layer == l;
        state.hidden = run_block(model.layer(l - 1), cfg, state.hidden, rope, capture ? &result.attention : nullptr);
        if (options.keep_hidden_states) {
            result.hidden_states.push_back(state.hidden);
        }
    }
}

void finish(RunState& state, ForwardResult& result) {
    result.final_hidden = std::move(state.hidden);
    result.row_ids = std::move(state.row_ids);
    result.positions = std::move(state.positions);
}

std::vector<std::size_t> iota_vec(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), std::size_t{0});
    return v;
}

// Full sequence through `prune_point` blocks, keep `kept_rows`, then the rest.
PrunedForward forward_pruned(const ToyTransformer& model, const MultimodalSequence& seq, std::size_t prune_point,
                             std::vector<std::size_t> kept_visual, PositionPolicy policy,
                             const ForwardOptions& options, bool kept_from_capture,
                             std::size_t capture_layer) {
    const std::size_t layers = model.layer_count();
    ForwardResult result;
    RunState state{seq.embeddings, iota_vec(seq.size()), iota_vec(seq.size())};
    if (options.keep_hidden_states) {
        result.hidden_states.push_back(state.hidden);
    }
    ForwardOptions prefix_options = options;
    if (kept_from_capture) {
        prefix_options.capture_attention_layer = capture_layer;
    }
    run_blocks(model, state, 1, prune_point, prefix_options, result);

    if (kept_from_capture) {
        const auto scores = received_attention(result.attention, seq);
        kept_visual = top_r(scores, kept_visual.size());
        for (std::size_t& idx : kept_visual) {
            idx += seq.visual_begin();
        }
        if (!options.capture_attention_layer || *options.capture_attention_layer != capture_layer) {
            result.attention.clear();
        }
    }

    std::vector<std::size_t> kept_rows;
    kept_rows.reserve(seq.system_len + kept_visual.size() + seq.query_len);
    for (std::size_t i = 0; i < seq.visual_begin(); ++i) {
        kept_rows.push_back(i);
    }
    kept_rows.insert(kept_rows.end(), kept_visual.begin(), kept_visual.end());
    for (std::size_t i = seq.visual_end(); i < seq.size(); ++i) {
        kept_rows.push_back(i);
    }

    RunState pruned;
    pruned.hidden = tensor::gather_rows(state.hidden, kept_rows);
    pruned.row_ids = kept_rows;
    pruned.positions = policy == PositionPolicy::keep_original ? kept_rows : iota_vec(kept_rows.size());
    run_blocks(model, pruned, prune_point + 1, layers, options, result);
    finish(pruned, result);

    PrunedForward out;
    out.forward = std::move(result);
    out.report.visual_total = seq.grid.total_tokens();
    out.report.kept = kept_visual.size();
    out.report.dropped = out.report.visual_total - out.report.kept;
    out.report.prune_point = prune_point;
    out.report.rate = static_cast<double>(out.report.dropped) / static_cast<double>(out.report.visual_total);
    out.report.kept_visual_rows = std::move(kept_visual);
    return out;
}

}  // namespace

void ModelConfig::validate() const {
    if (layers == 0 || heads == 0 || hidden == 0 || mlp == 0) {
        throw ConfigError("model needs positive layers, heads, hidden and mlp widths");
    }
    if (hidden % heads != 0) {
        throw ConfigError("hidden width " + std::to_string(hidden) + " is not divisible by " +
                          std::to_string(heads) + " heads");
    }
    if (head_dim() % 2 != 0) {
        throw ConfigError("rotary positions need an even head width, got " + std::to_string(head_dim()));
    }
    if (!(qk_alignment >= 0.0 && qk_alignment <= 1.0)) {
        throw ConfigError("qk_alignment must lie in [0, 1]");
    }
}

ToyTransformer::ToyTransformer(ModelConfig config) : m_config(config) {
    m_config.validate();
    std::mt19937_64 rng(m_config.seed);
    const std::size_t d = m_config.hidden;
    const double proj_std = 1.0 / std::sqrt(static_cast<double>(d));
    const double down_std = 1.0 / std::sqrt(static_cast<double>(m_config.mlp));
    const double a = m_config.qk_alignment;
    const double b = std::sqrt(1.0 - a * a);
    m_layers.reserve(m_config.layers);
    for (std::size_t l = 0; l < m_config.layers; ++l) {
        LayerWeights w;
        w.attn_norm_gain = gaussian_vec(d, 1.0, 0.1, rng);
        w.attn_norm_bias = gaussian_vec(d, 0.0, 0.02, rng);
        w.wq = gaussian(d, d, proj_std, rng);
        const Matrix noise = gaussian(d, d, proj_std, rng);
        w.wk = Matrix(d, d);
        for (std::size_t i = 0; i < w.wk.size(); ++i) {
            w.wk.data()[i] = a * w.wq.data()[i] + b * noise.data()[i];
        }
        w.wv = gaussian(d, d, proj_std, rng);
        w.wo = gaussian(d, d, proj_std, rng);
        w.mlp_norm_gain = gaussian_vec(d, 1.0, 0.1, rng);
        w.mlp_norm_bias = gaussian_vec(d, 0.0, 0.02, rng);
        w.w_up = gaussian(d, m_config.mlp, proj_std, rng);
        w.b_up = gaussian_vec(m_config.mlp, 0.0, 0.02, rng);
        w.w_down = gaussian(m_config.mlp, d, down_std, rng);
        w.b_down = gaussian_vec(d, 0.0, 0.02, rng);
        m_layers.push_back(std::move(w));
    }
}

MultimodalSequence MultimodalSequence::assemble(const Matrix& system, const Matrix& visual,
                                                const grid::TokenGrid& grid, const Matrix& query) {
    grid.validate();
    const std::size_t d = visual.cols();
    if (system.rows() > 0) {
        tensor::expect_shape(system, system.rows(), d, "system prompt embeddings");
    }
    tensor::expect_shape(visual, grid.total_tokens(), d, "visual token embeddings");
    if (query.rows() > 0) {
        tensor::expect_shape(query, query.rows(), d, "user query embeddings");
    }
    MultimodalSequence seq;
    seq.grid = grid;
    seq.system_len = system.rows();
    seq.query_len = query.rows();
    seq.embeddings = tensor::concat_rows(tensor::concat_rows(system, visual), query);
    seq.roles.assign(seq.system_len, RowRole::system);
    seq.roles.insert(seq.roles.end(), grid.total_tokens(), RowRole::visual);
    seq.roles.insert(seq.roles.end(), seq.query_len, RowRole::query);
    return seq;
}

void MultimodalSequence::validate() const {
    grid.validate();
    if (embeddings.rows() != system_len + grid.total_tokens() + query_len || roles.size() != embeddings.rows()) {
        throw ShapeError("multimodal sequence: row count does not match system + visual + query layout");
    }
    for (std::size_t i = 0; i < roles.size(); ++i) {
        const RowRole expected = i < visual_begin() ? RowRole::system
                                 : i < visual_end() ? RowRole::visual
                                                    : RowRole::query;
        if (roles[i] != expected) {
            throw DataError("multimodal sequence: row " + std::to_string(i) + " is out of system/visual/query order");
        }
    }
    if (!embeddings.all_finite()) {
        throw DataError("multimodal sequence contains non-finite embeddings");
    }
}

std::vector<double> ForwardResult::logits_proxy() const {
    if (final_hidden.rows() == 0) {
        return {};
    }
    const auto last = final_hidden.row(final_hidden.rows() - 1);
    return {last.begin(), last.end()};
}

ForwardResult forward_from(const ToyTransformer& model, const Matrix& hidden, std::vector<std::size_t> positions,
                           std::size_t first_layer, const ForwardOptions& options) {
    if (positions.size() != hidden.rows()) {
        throw ShapeError("forward_from: " + std::to_string(positions.size()) + " positions for " +
                         std::to_string(hidden.rows()) + " rows");
    }
    if (first_layer == 0 || first_layer > model.layer_count() + 1) {
        throw ConfigError("forward_from: first layer " + std::to_string(first_layer) + " outside 1.." +
                          std::to_string(model.layer_count() + 1));
    }
    ForwardResult result;
    RunState state{hidden, std::move(positions), iota_vec(hidden.rows())};
    if (options.keep_hidden_states) {
        result.hidden_states.push_back(state.hidden);
    }
    run_blocks(model, state, first_layer, model.layer_count(), options, result);
    finish(state, result);
    return result;
}

ForwardResult forward_baseline(const ToyTransformer& model, const MultimodalSequence& seq,
                               const ForwardOptions& options) {
    seq.validate();
    if (seq.size() == 0) {
        throw DataError("forward: empty sequence");
    }
    if (seq.embeddings.cols() != model.config().hidden) {
        throw ShapeError("sequence width " + std::to_string(seq.embeddings.cols()) + " != model hidden " +
                         std::to_string(model.config().hidden));
    }
    return forward_from(model, seq.embeddings, iota_vec(seq.size()), 1, options);
}

void PruneConfig::validate(const ModelConfig& model) const {
    if (layer < 1 || layer > model.layers) {
        throw ConfigError("prune layer K=" + std::to_string(layer) + " outside 1.." + std::to_string(model.layers));
    }
}

PrunedForward forward_ilp(const ToyTransformer& model, const MultimodalSequence& seq, const PruneConfig& cfg,
                          const ForwardOptions& options) {
    cfg.validate(model.config());
    seq.validate();
    if (seq.embeddings.cols() != model.config().hidden) {
        throw ShapeError("sequence width " + std::to_string(seq.embeddings.cols()) + " != model hidden " +
                         std::to_string(model.config().hidden));
    }
    const grid::TokenIndexSet selected = grid::region_to_tokens(cfg.region, seq.grid);
    if (selected.empty()) {
        throw DataError("region " + grid::format_region(cfg.region) + " maps to no tokens on a grid of side " +
                        std::to_string(seq.grid.side));
    }
    std::vector<std::size_t> kept;
    kept.reserve(selected.size());
    for (std::size_t idx : selected) {
        kept.push_back(seq.visual_begin() + idx);
    }
    return forward_pruned(model, seq, cfg.prune_point(), std::move(kept), cfg.positions, options, false, 0);
}

std::vector<double> received_attention(const std::vector<Matrix>& attention, const MultimodalSequence& seq) {
    const std::size_t visual = seq.grid.total_tokens();
    std::vector<double> scores(visual, 0.0);
    if (attention.empty() || seq.query_len == 0) {
        return scores;
    }
    for (const Matrix& map : attention) {
        tensor::expect_shape(map, seq.size(), seq.size(), "attention map");
        for (std::size_t i = seq.visual_end(); i < seq.size(); ++i) {
            const auto row = map.row(i);
            for (std::size_t v = 0; v < visual; ++v) {
                scores[v] += row[seq.visual_begin() + v];
            }
        }
    }
    const double norm = static_cast<double>(attention.size() * seq.query_len);
    for (double& s : scores) {
        s /= norm;
    }
    return scores;
}

std::vector<std::size_t> top_r(const std::vector<double>& scores, std::size_t budget) {
    std::vector<std::size_t> order = iota_vec(scores.size());
    budget = std::min(budget, scores.size());
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    order.resize(budget);
    std::sort(order.begin(), order.end());
    return order;
}

PrunedForward forward_topr_baseline(const ToyTransformer& model, const MultimodalSequence& seq, std::size_t budget,
                                    std::size_t layer, PositionPolicy positions, const ForwardOptions& options) {
    seq.validate();
    if (budget < 1 || budget > seq.grid.total_tokens()) {
        throw ConfigError("top-R budget " + std::to_string(budget) + " outside 1.." +
                          std::to_string(seq.grid.total_tokens()));
    }
    if (layer < 1 || layer > model.layer_count()) {
        throw ConfigError("top-R layer K=" + std::to_string(layer) + " outside 1.." +
                          std::to_string(model.layer_count()));
    }
    // The kept list is only sized here; its contents come from block K's attention.
    std::vector<std::size_t> placeholder(budget);
    return forward_pruned(model, seq, layer, std::move(placeholder), positions, options, true, layer);
}

std::uint64_t block_flops(std::uint64_t rows, std::uint64_t hidden, std::uint64_t heads, std::uint64_t mlp) {
    const std::uint64_t n = rows;
    const std::uint64_t d = hidden;
    return 8 * n * d * d + 4 * n * n * d + 3 * heads * n * n + 4 * n * d * mlp;
}

FlopEstimate count_flops(std::size_t len_before, std::size_t len_after, std::size_t prune_layer, std::size_t layers,
                         std::size_t hidden, std::size_t heads, std::size_t mlp) {
    if (len_before == 0 || hidden == 0 || heads == 0 || mlp == 0 || layers == 0) {
        throw ConfigError("count_flops needs positive dimensions");
    }
    if (prune_layer > layers) {
        throw ConfigError("count_flops: prune layer " + std::to_string(prune_layer) + " exceeds " +
                          std::to_string(layers) + " layers");
    }
    if (len_after > len_before) {
        throw ConfigError("count_flops: pruned length exceeds the original length");
    }
    const std::uint64_t full = block_flops(len_before, hidden, heads, mlp);
    const std::uint64_t shortened = block_flops(len_after, hidden, heads, mlp);
    FlopEstimate est;
    est.baseline = layers * full;
    est.pruned = prune_layer * full + (layers - prune_layer) * shortened;
    est.ratio = static_cast<double>(est.pruned) / static_cast<double>(est.baseline);
    return est;
}

double proxy_quality(const ForwardResult& baseline, const ForwardResult& pruned, std::size_t visual_begin) {
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t r = 0; r < pruned.row_ids.size(); ++r) {
        const std::size_t id = pruned.row_ids[r];
        if (id < visual_begin) {
            continue;
        }
        if (id >= baseline.final_hidden.rows()) {
            throw ShapeError("proxy_quality: row id " + std::to_string(id) + " missing from the baseline");
        }
        const auto a = baseline.final_hidden.row(id);
        const auto b = pruned.final_hidden.row(r);
        double dot = 0.0;
        double na = 0.0;
        double nb = 0.0;
        for (std::size_t c = 0; c < a.size(); ++c) {
            dot += a[c] * b[c];
            na += a[c] * a[c];
            nb += b[c] * b[c];
        }
        total += dot / std::sqrt(na * nb);
        ++count;
    }
    if (count == 0) {
        throw DataError("proxy_quality: no retained rows at or after the first visual row");
    }
    return total / static_cast<double>(count);
}

}  // namespace regionprune::ilp
