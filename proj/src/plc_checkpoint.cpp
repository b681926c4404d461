// Copyright (C) 2026 The regionprune Authors
// SPDX-License-Identifier: Apache-2.0

#include <array>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "regionprune/error.hpp"
#include "regionprune/plc_compressor.hpp"

namespace regionprune::plc {

namespace {

constexpr std::array<char, 4> kMagic = {'R', 'P', 'L', 'C'};
constexpr std::uint32_t kVersion = 1;
// Refuse absurd headers before allocating.
constexpr std::uint32_t kMaxExtent = 1u << 20;

void put_u32(std::ostream& out, std::uint32_t v) {
    std::array<char, 4> bytes{};
    for (std::size_t i = 0; i < 4; ++i) {
        bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
    }
    out.write(bytes.data(), bytes.size());
}

void put_f64(std::ostream& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    std::array<char, 8> bytes{};
    for (std::size_t i = 0; i < 8; ++i) {
        bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFFu);
    }
    out.write(bytes.data(), bytes.size());
}

void read_exact(std::istream& in, char* dst, std::size_t n, const char* what) {
    in.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) {
        throw DataError(std::string("PLC checkpoint truncated while reading ") + what);
    }
}

std::uint32_t get_u32(std::istream& in, const char* what) {
    std::array<unsigned char, 4> bytes{};
    read_exact(in, reinterpret_cast<char*>(bytes.data()), bytes.size(), what);
    std::uint32_t v = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
    }
    return v;
}

double get_f64(std::istream& in) {
    std::array<unsigned char, 8> bytes{};
    read_exact(in, reinterpret_cast<char*>(bytes.data()), bytes.size(), "query bank values");
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < 8; ++i) {
        bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    }
    return std::bit_cast<double>(bits);
}

Matrix get_bank(std::istream& in, std::uint32_t rows, std::uint32_t dim) {
    Matrix m(rows, dim);
    for (double& v : m.data()) {
        v = get_f64(in);
    }
    return m;
}

}  // namespace

void save_params(const PlcParams& params, std::ostream& out) {
    params.validate();
    out.write(kMagic.data(), kMagic.size());
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(params.dim()));
    put_u32(out, static_cast<std::uint32_t>(params.q_contextual.rows()));
    put_u32(out, static_cast<std::uint32_t>(params.q_noncontextual.rows()));
    put_u32(out, static_cast<std::uint32_t>(params.anchor_count));
    for (double v : params.q_contextual.data()) {
        put_f64(out, v);
    }
    for (double v : params.q_noncontextual.data()) {
        put_f64(out, v);
    }
    if (!out) {
        throw DataError("failed to write PLC checkpoint");
    }
}

PlcParams load_params(std::istream& in) {
    std::array<char, 4> magic{};
    read_exact(in, magic.data(), magic.size(), "magic");
    if (magic != kMagic) {
        throw DataError("not a PLC checkpoint (bad magic)");
    }
    const std::uint32_t version = get_u32(in, "version");
    if (version != kVersion) {
        throw DataError("unsupported PLC checkpoint version " + std::to_string(version));
    }
    const std::uint32_t dim = get_u32(in, "d_h");
    const std::uint32_t n_ctx = get_u32(in, "contextual query count");
    const std::uint32_t n_nctx = get_u32(in, "noncontextual query count");
    const std::uint32_t n_anchor = get_u32(in, "anchor count");
    for (std::uint32_t v : {dim, n_ctx, n_nctx, n_anchor}) {
        if (v == 0 || v > kMaxExtent) {
            throw DataError("PLC checkpoint header has an out-of-range count: " + std::to_string(v));
        }
    }
    PlcParams params;
    params.q_contextual = get_bank(in, n_ctx, dim);
    params.q_noncontextual = get_bank(in, n_nctx, dim);
    params.anchor_count = n_anchor;
    try {
        params.validate();
    } catch (const ConfigError& e) {
        throw DataError(std::string("PLC checkpoint: ") + e.what());
    }
    return params;
}

}  // namespace regionprune::plc
