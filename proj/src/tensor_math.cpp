// Copyright (C) 2026 The regionprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "regionprune/tensor_math.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "regionprune/error.hpp"

namespace regionprune::tensor {

namespace {

std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void expect_same_shape(const Matrix& a, const Matrix& b, std::string_view op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
    }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : m_rows(rows), m_cols(cols), m_data(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : m_rows(rows), m_cols(cols), m_data(std::move(data)) {
    if (m_data.size() != rows * cols) {
        throw ShapeError("matrix data holds " + std::to_string(m_data.size()) + " values, expected " +
                         std::to_string(rows * cols));
    }
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t n = rows.size();
    const std::size_t d = n == 0 ? 0 : rows.begin()->size();
    Matrix m(n, d);
    std::size_t r = 0;
    for (const auto& row : rows) {
        if (row.size() != d) {
            throw ShapeError("from_rows: ragged row " + std::to_string(r));
        }
        std::copy(row.begin(), row.end(), m.row(r).begin());
        ++r;
    }
    return m;
}

bool Matrix::all_finite() const {
    return std::all_of(m_data.begin(), m_data.end(), [](double v) { return std::isfinite(v); });
}

void expect_shape(const Matrix& m, std::size_t rows, std::size_t cols, std::string_view name) {
    if (m.rows() != rows || m.cols() != cols) {
        throw ShapeError(std::string(name) + ": expected " + std::to_string(rows) + "x" + std::to_string(cols) +
                         ", got " + shape_str(m));
    }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: " + shape_str(a) + " · " + shape_str(b));
    }
    Matrix c(a.rows(), b.cols());
    const std::size_t inner = a.cols();
    const std::size_t width = b.cols();
    const std::size_t n = a.rows();
    // Four output rows share each rhs row load; every entry still accumulates
    // over k in ascending order, so a row's result does not depend on n.
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        double* o0 = c.row(i).data();
        double* o1 = c.row(i + 1).data();
        double* o2 = c.row(i + 2).data();
        double* o3 = c.row(i + 3).data();
        const double* l0 = a.row(i).data();
        const double* l1 = a.row(i + 1).data();
        const double* l2 = a.row(i + 2).data();
        const double* l3 = a.row(i + 3).data();
        for (std::size_t k = 0; k < inner; ++k) {
            const double s0 = l0[k];
            const double s1 = l1[k];
            const double s2 = l2[k];
            const double s3 = l3[k];
            const double* rhs = b.row(k).data();
            for (std::size_t j = 0; j < width; ++j) {
                const double r = rhs[j];
                o0[j] += s0 * r;
                o1[j] += s1 * r;
                o2[j] += s2 * r;
                o3[j] += s3 * r;
            }
        }
    }
    for (; i < n; ++i) {
        double* out = c.row(i).data();
        const double* lhs = a.row(i).data();
        for (std::size_t k = 0; k < inner; ++k) {
            const double s = lhs[k];
            const double* rhs = b.row(k).data();
            for (std::size_t j = 0; j < width; ++j) {
                out[j] += s * rhs[j];
            }
        }
    }
    return c;
}

Matrix matmul_bt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw ShapeError("matmul_bt: " + shape_str(a) + " · (" + shape_str(b) + ")ᵀ");
    }
    Matrix c(a.rows(), b.rows());
    const std::size_t inner = a.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* lhs = a.row(i).data();
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const double* rhs = b.row(j).data();
            double acc = 0.0;
            for (std::size_t k = 0; k < inner; ++k) {
                acc += lhs[k] * rhs[k];
            }
            c(i, j) = acc;
        }
    }
    return c;
}

Matrix matmul_at(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw ShapeError("matmul_at: (" + shape_str(a) + ")ᵀ · " + shape_str(b));
    }
    Matrix c(a.cols(), b.cols());
    for (std::size_t k = 0; k < a.rows(); ++k) {
        const double* lhs = a.row(k).data();
        const double* rhs = b.row(k).data();
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double s = lhs[i];
            double* out = c.row(i).data();
            for (std::size_t j = 0; j < b.cols(); ++j) {
                out[j] += s * rhs[j];
            }
        }
    }
    return c;
}

Matrix transpose(const Matrix& m) {
    Matrix t(m.cols(), m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            t(c, r) = m(r, c);
        }
    }
    return t;
}

Matrix add(const Matrix& a, const Matrix& b) {
    Matrix out = a;
    add_inplace(out, b);
    return out;
}

void add_inplace(Matrix& a, const Matrix& b) {
    expect_same_shape(a, b, "add");
    auto dst = a.data();
    auto src = b.data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i] += src[i];
    }
}

Matrix scaled(const Matrix& m, double factor) {
    Matrix out = m;
    for (double& v : out.data()) {
        v *= factor;
    }
    return out;
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows) {
    Matrix out(rows.size(), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= m.rows()) {
            throw ShapeError("gather_rows: row " + std::to_string(rows[i]) + " out of range for " + shape_str(m));
        }
        const auto src = m.row(rows[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

Matrix concat_rows(const Matrix& top, const Matrix& bottom) {
    if (top.cols() != bottom.cols() && !top.empty() && !bottom.empty()) {
        throw ShapeError("concat_rows: " + shape_str(top) + " over " + shape_str(bottom));
    }
    const std::size_t cols = top.empty() ? bottom.cols() : top.cols();
    std::vector<double> data;
    data.reserve(top.size() + bottom.size());
    data.insert(data.end(), top.data().begin(), top.data().end());
    data.insert(data.end(), bottom.data().begin(), bottom.data().end());
    return Matrix(top.rows() + bottom.rows(), cols, std::move(data));
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    expect_same_shape(a, b, "max_abs_diff");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
    }
    return worst;
}

Matrix softmax_rows(const Matrix& m) {
    Matrix out(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto in = m.row(r);
        auto dst = out.row(r);
        if (in.empty()) {
            continue;
        }
        const double peak = *std::max_element(in.begin(), in.end());
        double total = 0.0;
        for (std::size_t c = 0; c < in.size(); ++c) {
            dst[c] = std::exp(in[c] - peak);
            total += dst[c];
        }
        for (double& v : dst) {
            v /= total;
        }
    }
    return out;
}

Matrix attention(const Matrix& q, const Matrix& kv) {
    return attention_with_probs(q, kv).output;
}

AttentionResult attention_with_probs(const Matrix& q, const Matrix& kv) {
    if (kv.rows() == 0) {
        throw ShapeError("attention: key/value set is empty");
    }
    if (q.cols() != kv.cols()) {
        throw ShapeError("attention: query width " + std::to_string(q.cols()) + " != key width " +
                         std::to_string(kv.cols()));
    }
    Matrix logits = matmul_bt(q, kv);
    const double inv_scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
    for (double& v : logits.data()) {
        v *= inv_scale;
    }
    Matrix probs = softmax_rows(logits);
    Matrix output = matmul(probs, kv);
    return {std::move(output), std::move(probs)};
}

AttentionGrads attention_backward(const Matrix& q, const Matrix& kv, const Matrix& probs, const Matrix& d_out) {
    expect_shape(probs, q.rows(), kv.rows(), "attention probs");
    expect_shape(d_out, q.rows(), kv.cols(), "attention upstream gradient");
    const double inv_scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));

    // output = P·V, P = softmax(S), S = Q·Kᵀ·inv_scale, with K = V = kv.
    Matrix d_probs = matmul_bt(d_out, kv);
    Matrix d_logits(probs.rows(), probs.cols());
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        const auto p = probs.row(i);
        const auto dp = d_probs.row(i);
        double dot = 0.0;
        for (std::size_t j = 0; j < p.size(); ++j) {
            dot += p[j] * dp[j];
        }
        auto ds = d_logits.row(i);
        for (std::size_t j = 0; j < p.size(); ++j) {
            ds[j] = p[j] * (dp[j] - dot) * inv_scale;
        }
    }

    AttentionGrads grads;
    grads.d_query = matmul(d_logits, kv);
    grads.d_kv = matmul_at(probs, d_out);           // value path
    add_inplace(grads.d_kv, matmul_at(d_logits, q));  // key path
    return grads;
}

}  // namespace regionprune::tensor
