// Copyright (C) 2026 The regionprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace regionprune::tensor {

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const { return m_rows; }
    std::size_t cols() const { return m_cols; }
    std::size_t size() const { return m_data.size(); }
    bool empty() const { return m_data.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return m_data[r * m_cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return m_data[r * m_cols + c]; }

    std::span<double> row(std::size_t r) { return {m_data.data() + r * m_cols, m_cols}; }
    std::span<const double> row(std::size_t r) const { return {m_data.data() + r * m_cols, m_cols}; }

    std::span<double> data() { return m_data; }
    std::span<const double> data() const { return m_data; }

    bool all_finite() const;

    /// Exact element-wise equality (bitwise for finite values).
    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t m_rows = 0;
    std::size_t m_cols = 0;
    std::vector<double> m_data;
};

/// Throws ShapeError mentioning `name` unless `m` is rows x cols.
void expect_shape(const Matrix& m, std::size_t rows, std::size_t cols, std::string_view name);

Matrix matmul(const Matrix& a, const Matrix& b);
/// a · bᵀ without materializing the transpose.
Matrix matmul_bt(const Matrix& a, const Matrix& b);
/// aᵀ · b without materializing the transpose.
Matrix matmul_at(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

Matrix add(const Matrix& a, const Matrix& b);
void add_inplace(Matrix& a, const Matrix& b);
Matrix scaled(const Matrix& m, double factor);

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows);
Matrix concat_rows(const Matrix& top, const Matrix& bottom);

double max_abs_diff(const Matrix& a, const Matrix& b);

/// Row-wise softmax with per-row max subtraction.
Matrix softmax_rows(const Matrix& m);

struct AttentionResult {
    Matrix output;  // a x d
    Matrix probs;   // a x b
};

/// softmax(q·kvᵀ / √d)·kv with kv serving as both keys and values.
/// Throws ShapeError when kv has no rows or the widths disagree.
Matrix attention(const Matrix& q, const Matrix& kv);
AttentionResult attention_with_probs(const Matrix& q, const Matrix& kv);

struct AttentionGrads {
    Matrix d_query;
    Matrix d_kv;
};

/// Gradients of attention(q, kv) given the forward probabilities and dL/d(output).
AttentionGrads attention_backward(const Matrix& q, const Matrix& kv, const Matrix& probs, const Matrix& d_out);

}  // namespace regionprune::tensor
