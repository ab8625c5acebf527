// Copyright (c) 2026 The radial-attention Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include "radial/grid.hpp"
#include "radial/mask.hpp"
#include "radial/parallel.hpp"

namespace radial {

/// Compressed block-sparse layout of a mask at block size B: CSR over the
/// ceil(n/B) x ceil(n/B) block grid. A block is kept when any token pair it
/// covers is kept (superset semantics), except the power kind, whose rule is
/// applied directly at block level.
struct BlockLayout {
    GridShape shape;
    std::uint32_t block_size = 1;
    std::uint32_t grid_rows = 0;
    std::vector<std::uint64_t> row_ptr;  // grid_rows + 1, nondecreasing
    std::vector<std::uint32_t> col_idx;  // strictly increasing within a row
    PatternKind kind = PatternKind::radial;
    bool sink = true;

    std::uint64_t kept_blocks() const { return row_ptr.empty() ? 0 : row_ptr.back(); }

    std::uint64_t total_blocks() const {
        return static_cast<std::uint64_t>(grid_rows) * grid_rows;
    }

    bool block_at(std::uint32_t row, std::uint32_t col) const {
        auto first = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[row]);
        auto last = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[row + 1]);
        return std::binary_search(first, last, col);
    }

    bool operator==(const BlockLayout&) const = default;
};

inline std::uint32_t grid_rows_for(const GridShape& shape, std::uint32_t block_size) {
    std::uint64_t n = shape.total_tokens();
    std::uint64_t rows = (n + block_size - 1) / block_size;
    if (rows > 0xffffffffull) {
        throw std::length_error("block grid exceeds 2^32 rows");
    }
    return static_cast<std::uint32_t>(rows);
}

/// Partition the pattern's token mask into B x B blocks. Runs per block row
/// by painting kept key intervals, so paper-scale shapes never touch an n x n
/// structure.
inline BlockLayout blockify(const GridShape& shape, const PatternSpec& pattern,
                            std::uint32_t block_size) {
    if (block_size < 1) throw std::invalid_argument("blockify: block_size must be >= 1");
    pattern.validate();
    const std::uint64_t n = shape.total_tokens();
    const std::uint32_t s = shape.tokens_per_frame;
    const std::uint32_t R = grid_rows_for(shape, block_size);
    const std::uint64_t B = block_size;

    std::vector<std::vector<std::uint32_t>> rows(R);
    parallel_for(R, [&](std::uint64_t I) {
        std::vector<bool> hit(R, false);
        if (pattern.kind == PatternKind::power) {
            // block-level rule: |I-J| in {0, 1} or a power of two
            for (std::uint64_t t = 0; t < R; t = t == 0 ? 1 : t << 1) {
                if (I >= t) hit[I - t] = true;
                if (I + t < R) hit[I + t] = true;
            }
            if (pattern.sink) {
                std::uint32_t last = static_cast<std::uint32_t>((s - 1) / B);
                for (std::uint32_t J = 0; J <= last && J < R; ++J) hit[J] = true;
            }
        } else {
            const std::uint64_t u0 = I * B;
            const std::uint64_t u1 = std::min<std::uint64_t>(n, (I + 1) * B) - 1;
            for (std::uint32_t i = static_cast<std::uint32_t>(u0 / s);
                 static_cast<std::uint64_t>(i) * s <= u1; ++i) {
                auto k_lo = static_cast<std::uint32_t>(std::max<std::uint64_t>(u0, std::uint64_t{i} * s) -
                                                       std::uint64_t{i} * s);
                auto k_hi = static_cast<std::uint32_t>(
                    std::min<std::uint64_t>(u1, std::uint64_t{i} * s + s - 1) - std::uint64_t{i} * s);
                for (std::uint32_t j = 0; j < shape.frames; ++j) {
                    auto span = detail::kept_span(pattern, shape, i, k_lo, k_hi, j);
                    if (!span) continue;
                    std::uint64_t v_lo = static_cast<std::uint64_t>(j) * s + span->first;
                    std::uint64_t v_hi = static_cast<std::uint64_t>(j) * s + span->second;
                    for (std::uint64_t J = v_lo / B; J <= v_hi / B; ++J) hit[J] = true;
                }
            }
        }
        auto& out = rows[I];
        for (std::uint32_t J = 0; J < R; ++J) {
            if (hit[J]) out.push_back(J);
        }
    });

    BlockLayout layout;
    layout.shape = shape;
    layout.block_size = block_size;
    layout.grid_rows = R;
    layout.kind = pattern.kind;
    layout.sink = pattern.sink;
    layout.row_ptr.resize(R + 1, 0);
    for (std::uint32_t I = 0; I < R; ++I) {
        layout.row_ptr[I + 1] = layout.row_ptr[I] + rows[I].size();
    }
    layout.col_idx.reserve(layout.row_ptr[R]);
    for (auto& r : rows) {
        layout.col_idx.insert(layout.col_idx.end(), r.begin(), r.end());
    }
    return layout;
}

/// Fraction of blocks skipped: 1 - kept / R^2.
inline double sparsity(const BlockLayout& layout) {
    return 1.0 - static_cast<double>(layout.kept_blocks()) /
                     static_cast<double>(layout.total_blocks());
}

/// FLOPs accounting for the two attention matmuls (QK^T and PV, 2 FLOPs per
/// multiply-add); softmax cost is excluded. Sparse cost counts whole B x B
/// blocks, edge blocks included.
struct FlopsReport {
    double dense_flops = 0;
    double sparse_flops = 0;
    double reduction = 0;
};

inline FlopsReport attention_flops(const BlockLayout& layout, std::uint32_t head_dim,
                                   std::uint32_t num_heads) {
    if (head_dim < 1) throw std::invalid_argument("attention_flops: head_dim must be >= 1");
    if (num_heads < 1) throw std::invalid_argument("attention_flops: num_heads must be >= 1");
    const double n = static_cast<double>(layout.shape.total_tokens());
    const double B = layout.block_size;
    FlopsReport r;
    r.dense_flops = 4.0 * n * n * head_dim * num_heads;
    r.sparse_flops = 4.0 * static_cast<double>(layout.kept_blocks()) * B * B * head_dim * num_heads;
    r.reduction = r.dense_flops / r.sparse_flops;
    return r;
}

// ---------------------------------------------------------------------------
// Serialization ( .ramk )
// ---------------------------------------------------------------------------

/// Structured parse failure; field() names the offending part of the stream.
class ParseError : public std::runtime_error {
public:
    ParseError(std::string field, const std::string& message)
        : std::runtime_error("parse error in '" + field + "': " + message),
          field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

namespace detail {

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}
inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}
inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

class ByteReader {
public:
    ByteReader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

    std::uint8_t u8(const char* field) { return *take(field, 1); }
    std::uint16_t u16(const char* field) {
        const std::uint8_t* p = take(field, 2);
        return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
    }
    std::uint32_t u32(const char* field) {
        const std::uint8_t* p = take(field, 4);
        return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
               (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
    }
    std::uint64_t u64(const char* field) {
        std::uint64_t v = 0;
        const std::uint8_t* p = take(field, 8);
        for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(p[b]) << (8 * b);
        return v;
    }
    std::size_t remaining() const { return size_ - pos_; }

private:
    const std::uint8_t* take(const char* field, std::size_t bytes) {
        if (size_ - pos_ < bytes) {
            throw ParseError(field, "truncated: need " + std::to_string(bytes) + " bytes, have " +
                                        std::to_string(size_ - pos_));
        }
        const std::uint8_t* p = data_ + pos_;
        pos_ += bytes;
        return p;
    }
    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline constexpr std::uint16_t kLayoutFormatVersion = 1;

/// Binary ".ramk" encoding: magic "RAMK", version u16, f u32, s u32, B u32,
/// kind u8, sink u8, R u32, row_ptr as (R+1) u64, col_idx as u32. All
/// little-endian.
inline std::vector<std::uint8_t> serialize(const BlockLayout& layout) {
    std::vector<std::uint8_t> out;
    out.reserve(25 + 8 * layout.row_ptr.size() + 4 * layout.col_idx.size());
    for (char c : {'R', 'A', 'M', 'K'}) out.push_back(static_cast<std::uint8_t>(c));
    detail::put_u16(out, kLayoutFormatVersion);
    detail::put_u32(out, layout.shape.frames);
    detail::put_u32(out, layout.shape.tokens_per_frame);
    detail::put_u32(out, layout.block_size);
    out.push_back(static_cast<std::uint8_t>(layout.kind));
    out.push_back(layout.sink ? 1 : 0);
    detail::put_u32(out, layout.grid_rows);
    for (auto v : layout.row_ptr) detail::put_u64(out, v);
    for (auto v : layout.col_idx) detail::put_u32(out, v);
    return out;
}

inline BlockLayout deserialize(const std::uint8_t* data, std::size_t size) {
    detail::ByteReader rd(data, size);
    char magic[4];
    for (char& c : magic) c = static_cast<char>(rd.u8("magic"));
    if (std::memcmp(magic, "RAMK", 4) != 0) {
        throw ParseError("magic", "expected \"RAMK\"");
    }
    std::uint16_t version = rd.u16("version");
    if (version != kLayoutFormatVersion) {
        throw ParseError("version", "unsupported version " + std::to_string(version));
    }
    std::uint32_t f = rd.u32("frames");
    std::uint32_t s = rd.u32("tokens_per_frame");
    std::uint32_t B = rd.u32("block_size");
    std::uint8_t kind_raw = rd.u8("kind");
    std::uint8_t sink_raw = rd.u8("sink");
    std::uint32_t R = rd.u32("grid_rows");
    if (f < 1) throw ParseError("frames", "must be >= 1");
    if (s < 1) throw ParseError("tokens_per_frame", "must be >= 1");
    if (static_cast<std::uint64_t>(f) * s > (std::uint64_t{1} << 32)) {
        throw ParseError("tokens_per_frame", "shape exceeds 2^32 tokens");
    }
    if (B < 1) throw ParseError("block_size", "must be >= 1");
    if (kind_raw > static_cast<std::uint8_t>(PatternKind::harmonic)) {
        throw ParseError("kind", "unknown pattern kind " + std::to_string(kind_raw));
    }
    if (sink_raw > 1) throw ParseError("sink", "must be 0 or 1");

    BlockLayout layout;
    layout.shape = GridShape(f, s);
    layout.block_size = B;
    layout.kind = static_cast<PatternKind>(kind_raw);
    layout.sink = sink_raw == 1;
    layout.grid_rows = R;
    if (R != grid_rows_for(layout.shape, B)) {
        throw ParseError("grid_rows", "expected " + std::to_string(grid_rows_for(layout.shape, B)) +
                                          " for this shape, got " + std::to_string(R));
    }
    layout.row_ptr.resize(static_cast<std::size_t>(R) + 1);
    for (std::size_t idx = 0; idx <= R; ++idx) {
        layout.row_ptr[idx] = rd.u64("row_ptr");
        if (idx > 0 && layout.row_ptr[idx] < layout.row_ptr[idx - 1]) {
            throw ParseError("row_ptr", "not nondecreasing at row " + std::to_string(idx));
        }
    }
    std::uint64_t nnz = layout.row_ptr[R];
    if (nnz > layout.total_blocks()) {
        throw ParseError("row_ptr", "kept-block count exceeds grid capacity");
    }
    layout.col_idx.resize(nnz);
    for (std::uint64_t idx = 0; idx < nnz; ++idx) {
        layout.col_idx[idx] = rd.u32("col_idx");
        if (layout.col_idx[idx] >= R) {
            throw ParseError("col_idx", "column " + std::to_string(layout.col_idx[idx]) +
                                            " out of range at entry " + std::to_string(idx));
        }
    }
    for (std::uint32_t row = 0; row < R; ++row) {
        for (std::uint64_t idx = layout.row_ptr[row] + 1; idx < layout.row_ptr[row + 1]; ++idx) {
            if (layout.col_idx[idx] <= layout.col_idx[idx - 1]) {
                throw ParseError("col_idx", "not strictly increasing in row " + std::to_string(row));
            }
        }
    }
    if (rd.remaining() != 0) {
        throw ParseError("trailer", std::to_string(rd.remaining()) + " trailing bytes");
    }
    return layout;
}

inline BlockLayout deserialize(const std::vector<std::uint8_t>& bytes) {
    return deserialize(bytes.data(), bytes.size());
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kMaxRenderGrid = 8192;

/// Binary PGM (P5), one pixel per block: kept = 0 (black), dropped = 255.
inline std::vector<std::uint8_t> render_pgm(const BlockLayout& layout) {
    const std::uint32_t R = layout.grid_rows;
    if (R > kMaxRenderGrid) {
        throw std::length_error("render_pgm: grid " + std::to_string(R) + " exceeds " +
                                std::to_string(kMaxRenderGrid));
    }
    std::string header = "P5\n" + std::to_string(R) + " " + std::to_string(R) + "\n255\n";
    std::vector<std::uint8_t> img(header.size() + static_cast<std::size_t>(R) * R, 255);
    std::memcpy(img.data(), header.data(), header.size());
    std::uint8_t* pixels = img.data() + header.size();
    for (std::uint32_t row = 0; row < R; ++row) {
        for (std::uint64_t idx = layout.row_ptr[row]; idx < layout.row_ptr[row + 1]; ++idx) {
            pixels[static_cast<std::size_t>(row) * R + layout.col_idx[idx]] = 0;
        }
    }
    return img;
}

}  // namespace radial
