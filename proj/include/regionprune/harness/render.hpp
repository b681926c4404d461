// Copyright (C) 2026 The regionprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "regionprune/grid_region.hpp"

namespace regionprune::harness {

struct Overlay {
    std::string label;
    grid::Region region;
};

struct RenderSpec {
    grid::TokenGrid grid;
    std::vector<Overlay> overlays;
    /// Tokens drawn shaded; usually the region used for pruning.
    std::optional<grid::Region> kept;
    /// Edge length of one view in SVG user units.
    double view_size = 384.0;
    /// Pixels per token in the PPM raster.
    std::size_t ppm_scale = 8;
};

/// Pixel-space rectangle of a region's token extent within view `view`.
struct SvgRect {
    double x = 0.0;
    double y = 0.0;
    double width = 0.0;
    double height = 0.0;
};
SvgRect region_rect(const RenderSpec& spec, const grid::Region& region, std::size_t view);

/// Views side by side, token grid lines, block grid lines, kept-token shading,
/// then one outlined and labelled rectangle per overlay at its token extent.
/// Coordinates are printed with two decimals so output is byte-stable.
std::string render_svg(const RenderSpec& spec);

/// The same picture as an ASCII PPM (P3) without labels.
std::string render_ppm(const RenderSpec& spec);

}  // namespace regionprune::harness
