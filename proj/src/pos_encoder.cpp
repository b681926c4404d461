// Copyright (C) 2026 The regionprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "regionprune/pos_encoder.hpp"

#include <cmath>
#include <string>

#include "regionprune/error.hpp"

namespace regionprune::tensor {

PosEncoder::PosEncoder(std::size_t dim, double base) : m_dim(dim), m_base(base) {
    if (dim == 0) {
        throw ConfigError("positional encoder needs dim >= 1");
    }
}

void PosEncoder::fill_ladder(std::span<double> out, double position) const {
    const auto width = static_cast<double>(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const std::size_t pair = i / 2;
        const double freq = std::pow(m_base, -2.0 * static_cast<double>(pair) / width);
        out[i] = (i % 2 == 0) ? std::sin(position * freq) : std::cos(position * freq);
    }
}

std::vector<double> PosEncoder::encode_slot(std::size_t slot) const {
    std::vector<double> out(m_dim);
    fill_ladder(out, static_cast<double>(slot));
    return out;
}

std::vector<double> PosEncoder::encode_cell(std::size_t row, std::size_t col) const {
    std::vector<double> out(m_dim);
    const std::size_t row_dims = m_dim / 2;
    std::span<double> all(out);
    fill_ladder(all.first(row_dims), static_cast<double>(row));
    fill_ladder(all.subspan(row_dims), static_cast<double>(col));
    return out;
}

Matrix PosEncoder::with_slots(const Matrix& m) const {
    expect_shape(m, m.rows(), m_dim, "slot-encoded matrix");
    Matrix out = m;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto enc = encode_slot(r);
        auto dst = out.row(r);
        for (std::size_t c = 0; c < m_dim; ++c) {
            dst[c] += enc[c];
        }
    }
    return out;
}

Matrix PosEncoder::with_cells(const Matrix& m, std::span<const grid::GridCell> cells) const {
    expect_shape(m, cells.size(), m_dim, "cell-encoded matrix");
    Matrix out = m;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto enc = encode_cell(cells[r].row, cells[r].col);
        auto dst = out.row(r);
        for (std::size_t c = 0; c < m_dim; ++c) {
            dst[c] += enc[c];
        }
    }
    return out;
}

}  // namespace regionprune::tensor
