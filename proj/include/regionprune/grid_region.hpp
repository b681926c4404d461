// Copyright (C) 2026 The regionprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace regionprune::grid {

/// Blocks per edge of the region grid.
inline constexpr int kGridBlocks = 8;

/// Axis-aligned rectangle of blocks on the 8x8 region grid, inclusive bounds.
class Region {
public:
    /// Throws ConfigError unless 0 <= min <= max <= 7 on both axes.
    Region(int x_min, int y_min, int x_max, int y_max);

    static Region full() { return {0, 0, kGridBlocks - 1, kGridBlocks - 1}; }

    int x_min() const { return m_x_min; }
    int y_min() const { return m_y_min; }
    int x_max() const { return m_x_max; }
    int y_max() const { return m_y_max; }

    int width() const { return m_x_max - m_x_min + 1; }
    int height() const { return m_y_max - m_y_min + 1; }
    int block_area() const { return width() * height(); }

    bool contains(const Region& other) const;
    bool contains_block(int x, int y) const;
    std::optional<Region> intersect(const Region& other) const;

    friend bool operator==(const Region&, const Region&) = default;

private:
    int m_x_min;
    int m_y_min;
    int m_x_max;
    int m_y_max;
};

std::ostream& operator<<(std::ostream& os, const Region& region);

/// Every valid region on the grid (1296 of them), in lexicographic order of
/// (y_min, x_min, y_max, x_max).
std::vector<Region> all_regions();

enum class RepairKind { clamped, swapped };

/// One correction applied while turning localizer text into a valid Region.
struct RepairEvent {
    RepairKind kind;
    std::string field;  // "x_min", ..., or "x"/"y" for swaps
    long long before;
    long long after;

    std::string describe() const;
};

struct ParsedRegion {
    Region region;
    std::vector<RepairEvent> repairs;
};

/// Parses `<x_min> <y_min> <x_max> <y_max>` (angle brackets and a trailing
/// period optional). Out-of-range coordinates are clamped into [0, 7], then
/// inverted pairs are swapped; each correction is reported in `repairs`.
/// Throws ParseError naming the offending token.
ParsedRegion parse_region(std::string_view text);

/// Plain `x_min y_min x_max y_max` form; parse_region inverts it.
std::string format_region(const Region& region);

/// Layout of one or more square token grids sharing a region.
struct TokenGrid {
    std::size_t side = 24;
    std::size_t views = 1;

    std::size_t tokens_per_view() const { return side * side; }
    std::size_t total_tokens() const { return views * side * side; }

    /// Throws ConfigError for zero side or zero views.
    void validate() const;

    friend bool operator==(const TokenGrid&, const TokenGrid&) = default;
};

struct GridCell {
    std::size_t view = 0;
    std::size_t row = 0;
    std::size_t col = 0;

    friend bool operator==(const GridCell&, const GridCell&) = default;
};

/// Row index layout is view-major, then row-major within a view.
GridCell cell_of(const TokenGrid& grid, std::size_t index);
std::size_t index_of(const TokenGrid& grid, const GridCell& cell);

/// Half-open token rectangle within one view.
struct TokenRect {
    std::size_t row_begin = 0;
    std::size_t row_end = 0;
    std::size_t col_begin = 0;
    std::size_t col_end = 0;

    std::size_t rows() const { return row_end - row_begin; }
    std::size_t cols() const { return col_end - col_begin; }
    std::size_t count() const { return rows() * cols(); }
    bool empty() const { return count() == 0; }

    friend bool operator==(const TokenRect&, const TokenRect&) = default;
};

/// Tokens of a `side`x`side` view whose cell centers fall inside the region's
/// continuous extent [x_min/8, (x_max+1)/8) x [y_min/8, (y_max+1)/8).
/// Computed in exact integer arithmetic; may be empty for sides below 8.
TokenRect token_extent(const Region& region, std::size_t side);

/// Sorted, duplicate-free token rows of a TokenGrid.
class TokenIndexSet {
public:
    /// Throws DataError if indices are not strictly increasing or out of range.
    TokenIndexSet(TokenGrid grid, std::vector<std::size_t> indices);

    const TokenGrid& grid() const { return m_grid; }
    const std::vector<std::size_t>& indices() const { return m_indices; }
    std::size_t size() const { return m_indices.size(); }
    bool empty() const { return m_indices.empty(); }
    bool contains(std::size_t index) const;

    auto begin() const { return m_indices.begin(); }
    auto end() const { return m_indices.end(); }

private:
    TokenGrid m_grid;
    std::vector<std::size_t> m_indices;
};

/// The same region is applied to every view; the result is the sorted union.
TokenIndexSet region_to_tokens(const Region& region, const TokenGrid& grid);

/// Area-based recall: |gt ∩ pred| / |gt| in blocks.
double recall(const Region& gt, const Region& pred);

/// Region with the target's width and height, centered on `source` and
/// shifted the minimum amount needed to stay on the grid. Half-block centers
/// round toward the top-left.
Region resize_to_match(const Region& source, const Region& target_dims);

/// floor(numerator / 2) for possibly negative numerators; the round-half-down
/// rule used wherever a patch corner is derived from a midpoint.
inline long long floor_half(long long numerator) {
    return numerator >= 0 ? numerator / 2 : -((-numerator + 1) / 2);
}

}  // namespace regionprune::grid
