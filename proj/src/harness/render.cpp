// Copyright (C) 2026 The regionprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "regionprune/harness/render.hpp"

#include <array>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "regionprune/error.hpp"

namespace regionprune::harness {

namespace {

constexpr double kMargin = 16.0;
constexpr double kViewGap = 16.0;

struct Rgb {
    std::uint8_t r, g, b;
};

constexpr std::array<const char*, 6> kPaletteHex = {"#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"};
constexpr std::array<Rgb, 6> kPaletteRgb = {
    Rgb{214, 39, 40}, Rgb{44, 160, 44}, Rgb{255, 127, 14}, Rgb{148, 103, 189}, Rgb{140, 86, 75}, Rgb{227, 119, 194}};
constexpr Rgb kBackground{255, 255, 255};
constexpr Rgb kShade{158, 202, 225};
constexpr Rgb kTokenLine{221, 221, 221};
constexpr Rgb kBlockLine{136, 136, 136};

std::string num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

void check(const RenderSpec& spec) {
    spec.grid.validate();
    if (!(spec.view_size > 0.0) || spec.ppm_scale == 0) {
        throw ConfigError("render sizes must be positive");
    }
}

double view_origin(const RenderSpec& spec, std::size_t view) {
    return kMargin + static_cast<double>(view) * (spec.view_size + kViewGap);
}

// Under the cell-center rule token c belongs to block (8c + 4) / side; a
// token starts a block when its predecessor belongs to another one.
bool starts_block(std::size_t token, std::size_t side) {
    const auto block_of = [side](std::size_t c) { return (8 * c + 4) / side; };
    return token == 0 || block_of(token) != block_of(token - 1);
}

std::string rect_attrs(const SvgRect& r) {
    return "x=\"" + num(r.x) + "\" y=\"" + num(r.y) + "\" width=\"" + num(r.width) + "\" height=\"" + num(r.height) +
           "\"";
}

}  // namespace

SvgRect region_rect(const RenderSpec& spec, const grid::Region& region, std::size_t view) {
    const grid::TokenRect t = grid::token_extent(region, spec.grid.side);
    const double cell = spec.view_size / static_cast<double>(spec.grid.side);
    return {view_origin(spec, view) + static_cast<double>(t.col_begin) * cell,
            kMargin + static_cast<double>(t.row_begin) * cell, static_cast<double>(t.cols()) * cell,
            static_cast<double>(t.rows()) * cell};
}

std::string render_svg(const RenderSpec& spec) {
    check(spec);
    const std::size_t side = spec.grid.side;
    const double views = static_cast<double>(spec.grid.views);
    const double width = 2.0 * kMargin + views * spec.view_size + (views - 1.0) * kViewGap;
    const double height = 2.0 * kMargin + spec.view_size;
    const double cell = spec.view_size / static_cast<double>(side);

    std::string s;
    s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" + num(height) +
         "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\">\n";
    s += "  <rect width=\"" + num(width) + "\" height=\"" + num(height) + "\" fill=\"#ffffff\"/>\n";
    for (std::size_t v = 0; v < spec.grid.views; ++v) {
        const double x0 = view_origin(spec, v);
        const double y0 = kMargin;
        s += "  <g id=\"view-" + std::to_string(v) + "\">\n";
        if (spec.kept) {
            const SvgRect r = region_rect(spec, *spec.kept, v);
            if (r.width > 0.0 && r.height > 0.0) {
                s += "    <rect class=\"kept\" " + rect_attrs(r) + " fill=\"#9ecae1\" fill-opacity=\"0.6\"/>\n";
            }
        }
        std::string tokens;
        for (std::size_t i = 0; i <= side; ++i) {
            const double p = static_cast<double>(i) * cell;
            tokens += "M" + num(x0 + p) + " " + num(y0) + "V" + num(y0 + spec.view_size);
            tokens += "M" + num(x0) + " " + num(y0 + p) + "H" + num(x0 + spec.view_size);
        }
        s += "    <path class=\"tokens\" d=\"" + tokens + "\" stroke=\"#dddddd\" stroke-width=\"0.5\" fill=\"none\"/>\n";
        std::string blocks;
        for (std::size_t i = 0; i <= side; ++i) {
            if (i < side && !starts_block(i, side)) {
                continue;
            }
            const double p = static_cast<double>(i) * cell;
            blocks += "M" + num(x0 + p) + " " + num(y0) + "V" + num(y0 + spec.view_size);
            blocks += "M" + num(x0) + " " + num(y0 + p) + "H" + num(x0 + spec.view_size);
        }
        s += "    <path class=\"blocks\" d=\"" + blocks + "\" stroke=\"#888888\" stroke-width=\"1\" fill=\"none\"/>\n";
        for (std::size_t k = 0; k < spec.overlays.size(); ++k) {
            const Overlay& o = spec.overlays[k];
            const SvgRect r = region_rect(spec, o.region, v);
            if (r.width <= 0.0 || r.height <= 0.0) {
                continue;
            }
            const char* color = kPaletteHex[k % kPaletteHex.size()];
            s += "    <rect class=\"region\" " + rect_attrs(r) + " fill=\"none\" stroke=\"" + color +
                 "\" stroke-width=\"2\"/>\n";
            s += "    <text x=\"" + num(r.x + 3.0) + "\" y=\"" + num(r.y + 13.0) +
                 "\" font-family=\"monospace\" font-size=\"12\" fill=\"" + color + "\">" + escape_xml(o.label) +
                 "</text>\n";
        }
        s += "  </g>\n";
    }
    s += "</svg>\n";
    return s;
}

std::string render_ppm(const RenderSpec& spec) {
    check(spec);
    const std::size_t side = spec.grid.side;
    const std::size_t scale = spec.ppm_scale;
    const std::size_t view_px = side * scale;
    const std::size_t width = spec.grid.views * view_px + (spec.grid.views - 1) * scale;
    const std::size_t height = view_px;
    std::vector<Rgb> px(width * height, kBackground);
    const auto at = [&](std::size_t x, std::size_t y) -> Rgb& { return px[y * width + x]; };

    for (std::size_t v = 0; v < spec.grid.views; ++v) {
        const std::size_t x0 = v * (view_px + scale);
        const auto token_rect = [&](const grid::Region& r) { return grid::token_extent(r, side); };
        if (spec.kept) {
            const grid::TokenRect t = token_rect(*spec.kept);
            for (std::size_t y = t.row_begin * scale; y < t.row_end * scale; ++y) {
                for (std::size_t x = t.col_begin * scale; x < t.col_end * scale; ++x) {
                    at(x0 + x, y) = kShade;
                }
            }
        }
        for (std::size_t y = 0; y < view_px; ++y) {
            for (std::size_t x = 0; x < view_px; ++x) {
                if (x % scale == 0 || y % scale == 0) {
                    const bool block_x = x % scale == 0 && starts_block(x / scale, side);
                    const bool block_y = y % scale == 0 && starts_block(y / scale, side);
                    Rgb& p = at(x0 + x, y);
                    if (block_x || block_y) {
                        p = kBlockLine;
                    } else if (p.r == kBackground.r && p.g == kBackground.g && p.b == kBackground.b) {
                        p = kTokenLine;
                    }
                }
            }
        }
        for (std::size_t k = 0; k < spec.overlays.size(); ++k) {
            const grid::TokenRect t = token_rect(spec.overlays[k].region);
            if (t.empty()) {
                continue;
            }
            const Rgb color = kPaletteRgb[k % kPaletteRgb.size()];
            const std::size_t left = t.col_begin * scale;
            const std::size_t right = t.col_end * scale - 1;
            const std::size_t top = t.row_begin * scale;
            const std::size_t bottom = t.row_end * scale - 1;
            for (std::size_t x = left; x <= right; ++x) {
                at(x0 + x, top) = color;
                at(x0 + x, bottom) = color;
            }
            for (std::size_t y = top; y <= bottom; ++y) {
                at(x0 + left, y) = color;
                at(x0 + right, y) = color;
            }
        }
    }

    std::string s = "P3\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            const Rgb& p = at(x, y);
            s += std::to_string(p.r) + " " + std::to_string(p.g) + " " + std::to_string(p.b);
            s += x + 1 == width ? '\n' : ' ';
        }
    }
    return s;
}

}  // namespace regionprune::harness
