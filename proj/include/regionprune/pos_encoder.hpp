// Copyright (C) 2026 The regionprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "regionprune/grid_region.hpp"
#include "regionprune/tensor_math.hpp"

namespace regionprune::tensor {

/// Fixed sinusoidal positional encodings, added to rows before attention.
///
/// Slot encodings (query banks, compressed tokens) use the standard 1D
/// sin/cos ladder over all `dim` channels. Grid encodings give the first
/// floor(dim/2) channels to the token row and the rest to the column, each
/// half being an independent 1D ladder.
class PosEncoder {
public:
    explicit PosEncoder(std::size_t dim, double base = 10000.0);

    std::size_t dim() const { return m_dim; }

    std::vector<double> encode_slot(std::size_t slot) const;
    std::vector<double> encode_cell(std::size_t row, std::size_t col) const;

    /// m + [encode_slot(0); encode_slot(1); ...]
    Matrix with_slots(const Matrix& m) const;
    /// m + [encode_cell(cells[i].row, cells[i].col)]; the view index is not encoded.
    Matrix with_cells(const Matrix& m, std::span<const grid::GridCell> cells) const;

private:
    void fill_ladder(std::span<double> out, double position) const;

    std::size_t m_dim;
    double m_base;
};

}  // namespace regionprune::tensor
