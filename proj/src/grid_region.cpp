// Copyright (C) 2026 The regionprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "regionprune/grid_region.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <ostream>
#include <sstream>

#include "regionprune/error.hpp"

namespace regionprune::grid {

namespace {

bool in_grid(int v) {
    return v >= 0 && v < kGridBlocks;
}

// Smallest r >= 0 with 8r + 4 >= bound, i.e. ceil((bound - 4) / 8) floored at 0.
std::size_t first_center_at_or_after(long long bound) {
    const long long shifted = bound - 4;
    if (shifted <= 0) {
        return 0;
    }
    return static_cast<std::size_t>((shifted + 7) / 8);
}

std::pair<std::size_t, std::size_t> axis_extent(int lo_block, int hi_block, std::size_t side) {
    // Cell r has center (2r + 1) / (2 side); it lies in [lo/8, (hi+1)/8) iff
    // side*lo <= 8r + 4 < side*(hi+1).
    const auto s = static_cast<long long>(side);
    const std::size_t begin = first_center_at_or_after(s * lo_block);
    const std::size_t end = std::min(first_center_at_or_after(s * (hi_block + 1)), side);
    return {begin, std::max(begin, end)};
}

std::string_view trim(std::string_view s) {
    const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
    while (!s.empty() && is_space(s.front())) {
        s.remove_prefix(1);
    }
    while (!s.empty() && is_space(s.back())) {
        s.remove_suffix(1);
    }
    return s;
}

}  // namespace

Region::Region(int x_min, int y_min, int x_max, int y_max)
    : m_x_min(x_min), m_y_min(y_min), m_x_max(x_max), m_y_max(y_max) {
    if (!in_grid(x_min) || !in_grid(y_min) || !in_grid(x_max) || !in_grid(y_max) || x_min > x_max ||
        y_min > y_max) {
        std::ostringstream msg;
        msg << "invalid region [" << x_min << ", " << y_min << ", " << x_max << ", " << y_max
            << "]: need 0 <= min <= max <= " << kGridBlocks - 1;
        throw ConfigError(msg.str());
    }
}

bool Region::contains(const Region& other) const {
    return m_x_min <= other.m_x_min && m_y_min <= other.m_y_min && other.m_x_max <= m_x_max &&
           other.m_y_max <= m_y_max;
}

bool Region::contains_block(int x, int y) const {
    return x >= m_x_min && x <= m_x_max && y >= m_y_min && y <= m_y_max;
}

std::optional<Region> Region::intersect(const Region& other) const {
    const int x0 = std::max(m_x_min, other.m_x_min);
    const int y0 = std::max(m_y_min, other.m_y_min);
    const int x1 = std::min(m_x_max, other.m_x_max);
    const int y1 = std::min(m_y_max, other.m_y_max);
    if (x0 > x1 || y0 > y1) {
        return std::nullopt;
    }
    return Region(x0, y0, x1, y1);
}

std::ostream& operator<<(std::ostream& os, const Region& region) {
    return os << "Region(" << region.x_min() << "," << region.y_min() << "," << region.x_max() << ","
              << region.y_max() << ")";
}

std::vector<Region> all_regions() {
    std::vector<Region> out;
    out.reserve(1296);
    for (int y0 = 0; y0 < kGridBlocks; ++y0) {
        for (int x0 = 0; x0 < kGridBlocks; ++x0) {
            for (int y1 = y0; y1 < kGridBlocks; ++y1) {
                for (int x1 = x0; x1 < kGridBlocks; ++x1) {
                    out.emplace_back(x0, y0, x1, y1);
                }
            }
        }
    }
    return out;
}

std::string RepairEvent::describe() const {
    std::ostringstream msg;
    if (kind == RepairKind::clamped) {
        msg << "clamped " << field << " from " << before << " to " << after;
    } else {
        msg << "swapped inverted " << field << " bounds";
    }
    return msg.str();
}

ParsedRegion parse_region(std::string_view text) {
    std::string_view body = trim(text);
    if (!body.empty() && body.back() == '.') {
        body.remove_suffix(1);
    }

    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (pos < body.size()) {
        while (pos < body.size() && (body[pos] == ' ' || body[pos] == '\t')) {
            ++pos;
        }
        const std::size_t start = pos;
        while (pos < body.size() && body[pos] != ' ' && body[pos] != '\t') {
            ++pos;
        }
        if (pos > start) {
            fields.push_back(body.substr(start, pos - start));
        }
    }
    if (fields.size() != 4) {
        throw ParseError("region text '" + std::string(text) + "': expected 4 fields, got " +
                         std::to_string(fields.size()));
    }

    static constexpr std::array<const char*, 4> kNames = {"x_min", "y_min", "x_max", "y_max"};
    std::array<long long, 4> raw{};
    for (std::size_t i = 0; i < 4; ++i) {
        std::string_view token = fields[i];
        if (token.size() >= 2 && token.front() == '<' && token.back() == '>') {
            token = token.substr(1, token.size() - 2);
        }
        long long value = 0;
        const char* first = token.data();
        const char* last = token.data() + token.size();
        if (!token.empty() && *first == '+') {
            ++first;
        }
        const auto [ptr, ec] = std::from_chars(first, last, value);
        if (token.empty() || ec != std::errc() || ptr != last) {
            throw ParseError("region field " + std::string(kNames[i]) + ": '" + std::string(fields[i]) +
                             "' is not an integer");
        }
        raw[i] = value;
    }

    std::vector<RepairEvent> repairs;
    std::array<int, 4> v{};
    for (std::size_t i = 0; i < 4; ++i) {
        const long long clamped = std::clamp<long long>(raw[i], 0, kGridBlocks - 1);
        if (clamped != raw[i]) {
            repairs.push_back({RepairKind::clamped, kNames[i], raw[i], clamped});
        }
        v[i] = static_cast<int>(clamped);
    }
    if (v[0] > v[2]) {
        repairs.push_back({RepairKind::swapped, "x", v[0], v[2]});
        std::swap(v[0], v[2]);
    }
    if (v[1] > v[3]) {
        repairs.push_back({RepairKind::swapped, "y", v[1], v[3]});
        std::swap(v[1], v[3]);
    }
    return {Region(v[0], v[1], v[2], v[3]), std::move(repairs)};
}

std::string format_region(const Region& region) {
    std::ostringstream out;
    out << region.x_min() << ' ' << region.y_min() << ' ' << region.x_max() << ' ' << region.y_max();
    return out.str();
}

void TokenGrid::validate() const {
    if (side == 0 || views == 0) {
        throw ConfigError("token grid needs side >= 1 and views >= 1 (got side=" + std::to_string(side) +
                          ", views=" + std::to_string(views) + ")");
    }
}

GridCell cell_of(const TokenGrid& grid, std::size_t index) {
    const std::size_t per_view = grid.tokens_per_view();
    const std::size_t within = index % per_view;
    return {index / per_view, within / grid.side, within % grid.side};
}

std::size_t index_of(const TokenGrid& grid, const GridCell& cell) {
    return cell.view * grid.tokens_per_view() + cell.row * grid.side + cell.col;
}

TokenRect token_extent(const Region& region, std::size_t side) {
    const auto [row_begin, row_end] = axis_extent(region.y_min(), region.y_max(), side);
    const auto [col_begin, col_end] = axis_extent(region.x_min(), region.x_max(), side);
    if (row_begin == row_end || col_begin == col_end) {
        return {row_begin, row_begin, col_begin, col_begin};
    }
    return {row_begin, row_end, col_begin, col_end};
}

TokenIndexSet::TokenIndexSet(TokenGrid grid, std::vector<std::size_t> indices)
    : m_grid(grid), m_indices(std::move(indices)) {
    const std::size_t total = m_grid.total_tokens();
    for (std::size_t i = 0; i < m_indices.size(); ++i) {
        if (m_indices[i] >= total) {
            throw DataError("token index " + std::to_string(m_indices[i]) + " out of range for " +
                            std::to_string(total) + " tokens");
        }
        if (i > 0 && m_indices[i] <= m_indices[i - 1]) {
            throw DataError("token indices must be strictly increasing");
        }
    }
}

bool TokenIndexSet::contains(std::size_t index) const {
    return std::binary_search(m_indices.begin(), m_indices.end(), index);
}

TokenIndexSet region_to_tokens(const Region& region, const TokenGrid& grid) {
    grid.validate();
    const TokenRect rect = token_extent(region, grid.side);
    std::vector<std::size_t> indices;
    indices.reserve(rect.count() * grid.views);
    for (std::size_t view = 0; view < grid.views; ++view) {
        for (std::size_t r = rect.row_begin; r < rect.row_end; ++r) {
            for (std::size_t c = rect.col_begin; c < rect.col_end; ++c) {
                indices.push_back(index_of(grid, {view, r, c}));
            }
        }
    }
    return TokenIndexSet(grid, std::move(indices));
}

double recall(const Region& gt, const Region& pred) {
    const auto overlap = gt.intersect(pred);
    if (!overlap) {
        return 0.0;
    }
    return static_cast<double>(overlap->block_area()) / static_cast<double>(gt.block_area());
}

Region resize_to_match(const Region& source, const Region& target_dims) {
    const auto place = [](int lo, int hi, int extent) {
        // Twice the continuous center is lo + hi + 1; the new low edge is
        // center - extent/2 rounded half-down, then clamped onto the grid.
        const long long start = floor_half(static_cast<long long>(lo) + hi + 1 - extent);
        return static_cast<int>(std::clamp<long long>(start, 0, kGridBlocks - extent));
    };
    const int w = target_dims.width();
    const int h = target_dims.height();
    const int x0 = place(source.x_min(), source.x_max(), w);
    const int y0 = place(source.y_min(), source.y_max(), h);
    return {x0, y0, x0 + w - 1, y0 + h - 1};
}

}  // namespace regionprune::grid
