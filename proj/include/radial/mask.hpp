// Copyright (c) 2026 The radial-attention Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "radial/grid.hpp"
#include "radial/parallel.hpp"

namespace radial {

namespace detail {

inline std::uint32_t floor_log2(std::uint64_t x) {
    // precondition: x >= 1
    return static_cast<std::uint32_t>(std::bit_width(x) - 1);
}

inline std::uint32_t ceil_log2(std::uint64_t x) {
    // precondition: x >= 1
    return x <= 1 ? 0 : static_cast<std::uint32_t>(std::bit_width(x - 1));
}

// Exponent of the band holding frame distance d: floor(log2(max(d, 1))).
inline std::uint32_t band_exponent(std::uint64_t d) {
    return floor_log2(std::max<std::uint64_t>(d, 1));
}

// true iff t is 0 or a power of two (the kept set of frame/token distances
// in the power-of-two baseline).
inline bool is_power_distance(std::uint64_t t) {
    return (t & (t - 1)) == 0;  // also true for t == 0
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Band geometry
// ---------------------------------------------------------------------------

/// Signed band index of the frame pair (i, j): sign(j-i) * floor(log2(max(|i-j|, 1))).
/// Band 0 is the dense central band; bands above/below the diagonal carry
/// positive/negative indices.
inline std::int32_t band_index(std::uint32_t i, std::uint32_t j) {
    if (i == j) return 0;
    std::uint64_t d = i < j ? j - i : i - j;
    auto mag = static_cast<std::int32_t>(detail::band_exponent(d));
    return j > i ? mag : -mag;
}

/// Number of diagonal bands a mask over f frames is divided into:
/// 2*ceil(log2(max(f, 2))) - 1. Always odd.
inline std::uint32_t num_bands(std::uint32_t frames) {
    if (frames < 1) throw std::invalid_argument("num_bands: frames must be >= 1");
    return 2 * detail::ceil_log2(std::max<std::uint32_t>(frames, 2)) - 1;
}

/// Diagonal width of the frame pair (i, j): the exact rational
/// s / 2^floor(log2(max(|i-j|, 1))). Exact in double for any valid shape
/// (numerator below 2^32, power-of-two denominator).
inline double diagonal_width(std::uint32_t i, std::uint32_t j, const GridShape& shape) {
    std::uint64_t d = i < j ? j - i : i - j;
    auto e = static_cast<int>(detail::band_exponent(d));
    return std::ldexp(static_cast<double>(shape.tokens_per_frame), -e);
}

/// Stride at which same-position diagonals are retained once the diagonal
/// width drops below 1: ceil(2^floor(log2(max(|i-j|,1))) / s). Equals 1
/// whenever 2^floor(log2(max(|i-j|,1))) <= s.
inline std::uint64_t keep_period(std::uint32_t i, std::uint32_t j, const GridShape& shape) {
    std::uint64_t d = i < j ? j - i : i - j;
    std::uint64_t pw = std::uint64_t{1} << detail::band_exponent(d);
    std::uint64_t s = shape.tokens_per_frame;
    return (pw + s - 1) / s;
}

// ---------------------------------------------------------------------------
// Token-level keep predicates
// ---------------------------------------------------------------------------

namespace detail {

inline void check_indices(std::uint32_t i, std::uint32_t j, std::uint32_t k, std::uint32_t l,
                          const GridShape& shape) {
    if (i >= shape.frames || j >= shape.frames) {
        throw std::out_of_range("frame index out of range");
    }
    if (k >= shape.tokens_per_frame || l >= shape.tokens_per_frame) {
        throw std::out_of_range("token position out of range");
    }
}

// Kept key interval of frame j for queries spanning positions [k_lo, k_hi]
// of frame i, for every frame-structured kind. At most one interval per
// frame pair: the case-2 diagonal sits inside the case-1 band whenever both
// are active (the period is 1 while 2^e <= s).
inline std::optional<std::pair<std::uint32_t, std::uint32_t>> kept_span(
    const PatternSpec& pattern, const GridShape& shape, std::uint32_t i, std::uint32_t k_lo,
    std::uint32_t k_hi, std::uint32_t j) {
    const std::uint32_t s = shape.tokens_per_frame;
    const std::uint64_t d = i < j ? j - i : i - j;

    auto full = std::make_pair(std::uint32_t{0}, s - 1);
    auto band = [&](std::uint32_t sigma) {
        std::uint32_t lo = k_lo > sigma ? k_lo - sigma : 0;
        std::uint64_t hi64 = static_cast<std::uint64_t>(k_hi) + sigma;
        std::uint32_t hi = hi64 >= s ? s - 1 : static_cast<std::uint32_t>(hi64);
        return std::make_pair(lo, hi);
    };
    auto diag = std::make_pair(k_lo, k_hi);

    if (pattern.sink && j == 0) return full;

    switch (pattern.kind) {
        case PatternKind::dense:
            return full;
        case PatternKind::radial: {
            std::uint64_t pw = std::uint64_t{1} << band_exponent(d);
            if (pw <= s) return band(static_cast<std::uint32_t>(s / pw) - 1);
            std::uint64_t period = (pw + s - 1) / s;
            if (d % period == 0) return diag;
            return std::nullopt;
        }
        case PatternKind::spatial:
            if (d <= pattern.require_temporal_window()) return full;
            return std::nullopt;
        case PatternKind::temporal:
            return band(std::min(pattern.require_spatial_window(), s - 1));
        case PatternKind::sta:
            if (d <= pattern.require_temporal_window()) {
                return band(std::min(pattern.require_spatial_window(), s - 1));
            }
            return std::nullopt;
        case PatternKind::harmonic: {
            std::uint64_t dist = std::max<std::uint64_t>(d, 1);
            std::uint64_t width = s / dist;
            if (width >= 1) return band(static_cast<std::uint32_t>(width) - 1);
            std::uint64_t period = (dist + s - 1) / s;
            if (d % period == 0) return diag;
            return std::nullopt;
        }
        case PatternKind::power:
            break;  // not frame-structured; handled by its own paths
    }
    throw std::logic_error("kept_span: power pattern has no per-frame span");
}

}  // namespace detail

/// The radial mask's three-case keep rule plus the attention sink:
/// query token (i, k) may attend key token (j, l) iff
///   2^e <= s and |k-l|+1 <= s/2^e        (dense-to-banded near bands), or
///   |i-j| mod ceil(2^e / s) == 0 and k == l  (subsampled far diagonals), or
///   sink and j == 0,
/// where e = floor(log2(max(|i-j|, 1))). The width comparison is evaluated
/// exactly: |k-l|+1 <= s/2^e iff (|k-l|+1) * 2^e <= s.
inline bool radial_keep(std::uint32_t i, std::uint32_t j, std::uint32_t k, std::uint32_t l,
                        const GridShape& shape, bool sink) {
    detail::check_indices(i, j, k, l, shape);
    if (sink && j == 0) return true;
    const std::uint64_t s = shape.tokens_per_frame;
    const std::uint64_t d = i < j ? j - i : i - j;
    const std::uint64_t pw = std::uint64_t{1} << detail::band_exponent(d);
    const std::uint64_t dk = k < l ? l - k : k - l;
    if (pw <= s && dk + 1 <= s / pw) return true;
    const std::uint64_t period = (pw + s - 1) / s;
    return d % period == 0 && k == l;
}

/// Keep rule of the non-radial baselines. The pattern's sink flag ORs in
/// j == 0 for every kind.
inline bool baseline_keep(const PatternSpec& pattern, std::uint32_t i, std::uint32_t j,
                          std::uint32_t k, std::uint32_t l, const GridShape& shape) {
    detail::check_indices(i, j, k, l, shape);
    if (pattern.kind == PatternKind::radial) {
        throw std::invalid_argument("baseline_keep: use radial_keep for the radial kind");
    }
    if (pattern.sink && j == 0) return true;
    const std::uint32_t s = shape.tokens_per_frame;
    const std::uint64_t d = i < j ? j - i : i - j;
    const std::uint64_t dk = k < l ? l - k : k - l;
    switch (pattern.kind) {
        case PatternKind::dense:
            return true;
        case PatternKind::spatial:
            return d <= pattern.require_temporal_window();
        case PatternKind::temporal:
            return dk <= pattern.require_spatial_window();
        case PatternKind::sta:
            return d <= pattern.require_temporal_window() &&
                   dk <= pattern.require_spatial_window();
        case PatternKind::power: {
            std::uint64_t u = static_cast<std::uint64_t>(i) * s + k;
            std::uint64_t v = static_cast<std::uint64_t>(j) * s + l;
            return detail::is_power_distance(u < v ? v - u : u - v);
        }
        case PatternKind::harmonic: {
            std::uint64_t dist = std::max<std::uint64_t>(d, 1);
            if ((dk + 1) * dist <= s) return true;  // |k-l|+1 <= s/max(d,1), exact
            std::uint64_t period = (dist + s - 1) / s;
            return d % period == 0 && k == l;
        }
        case PatternKind::radial:
            break;
    }
    return false;
}

/// Dispatch over all kinds.
inline bool pattern_keep(const PatternSpec& pattern, std::uint32_t i, std::uint32_t j,
                         std::uint32_t k, std::uint32_t l, const GridShape& shape) {
    return pattern.kind == PatternKind::radial
               ? radial_keep(i, j, k, l, shape, pattern.sink)
               : baseline_keep(pattern, i, j, k, l, shape);
}

inline bool pattern_keep(const PatternSpec& pattern, std::uint64_t u, std::uint64_t v,
                         const GridShape& shape) {
    return pattern_keep(pattern, shape.frame_of(u), shape.frame_of(v), shape.pos_of(u),
                        shape.pos_of(v), shape);
}

// ---------------------------------------------------------------------------
// Kept-key enumeration
// ---------------------------------------------------------------------------

/// Calls fn(j, l_lo, l_hi) for the disjoint, (j, l)-ascending intervals of
/// keys kept for query token (i, k). Masked attention and materialization
/// run off this, so their cost is proportional to the kept set.
template <typename Fn>
inline void for_each_kept_interval(const PatternSpec& pattern, const GridShape& shape,
                                   std::uint32_t i, std::uint32_t k, Fn&& fn) {
    pattern.validate();
    const std::uint32_t s = shape.tokens_per_frame;
    if (pattern.kind == PatternKind::power) {
        const std::uint64_t n = shape.total_tokens();
        const std::uint64_t u = static_cast<std::uint64_t>(i) * s + k;
        std::vector<std::uint64_t> keys;
        keys.push_back(u);
        for (std::uint64_t t = 1; t < n; t <<= 1) {
            if (u >= t) keys.push_back(u - t);
            if (u + t < n) keys.push_back(u + t);
        }
        std::sort(keys.begin(), keys.end());
        if (pattern.sink) {
            fn(std::uint32_t{0}, std::uint32_t{0}, s - 1);
            // frame-0 keys are already covered by the sink interval
            keys.erase(std::remove_if(keys.begin(), keys.end(),
                                      [s](std::uint64_t v) { return v < s; }),
                       keys.end());
        }
        for (std::uint64_t v : keys) {
            auto j = static_cast<std::uint32_t>(v / s);
            auto l = static_cast<std::uint32_t>(v % s);
            fn(j, l, l);
        }
        return;
    }
    for (std::uint32_t j = 0; j < shape.frames; ++j) {
        if (auto span = detail::kept_span(pattern, shape, i, k, k, j)) {
            fn(j, span->first, span->second);
        }
    }
}

// ---------------------------------------------------------------------------
// Dense materialization
// ---------------------------------------------------------------------------

/// Desk-scale dense bit matrix of a token mask; bit (u, v) set means query u
/// may attend key v.
class TokenMask {
public:
    TokenMask(const GridShape& shape)
        : shape_(shape), n_(shape.total_tokens()), words_per_row_((n_ + 63) / 64),
          bits_(words_per_row_ * n_, 0) {}

    const GridShape& shape() const { return shape_; }
    std::uint64_t size() const { return n_; }

    bool test(std::uint64_t u, std::uint64_t v) const {
        return (bits_[u * words_per_row_ + v / 64] >> (v % 64)) & 1;
    }
    void set(std::uint64_t u, std::uint64_t v) {
        bits_[u * words_per_row_ + v / 64] |= std::uint64_t{1} << (v % 64);
    }
    void set_range(std::uint64_t u, std::uint64_t v_lo, std::uint64_t v_hi) {
        for (std::uint64_t v = v_lo; v <= v_hi; ++v) set(u, v);
    }

    std::uint64_t kept_count() const {
        std::uint64_t c = 0;
        for (auto w : bits_) c += static_cast<std::uint64_t>(std::popcount(w));
        return c;
    }

    std::uint64_t row_kept_count(std::uint64_t u) const {
        std::uint64_t c = 0;
        for (std::uint64_t w = 0; w < words_per_row_; ++w) {
            c += static_cast<std::uint64_t>(std::popcount(bits_[u * words_per_row_ + w]));
        }
        return c;
    }

private:
    GridShape shape_;
    std::uint64_t n_;
    std::uint64_t words_per_row_;
    std::vector<std::uint64_t> bits_;
};

/// Dense n*n boolean storage stays under ~32 MB at this cap.
inline constexpr std::uint64_t kDefaultMaterializeCap = 16384;

/// Materializes the token mask; refuses shapes above the cap.
inline TokenMask materialize_mask(const GridShape& shape, const PatternSpec& pattern,
                                  std::uint64_t cap = kDefaultMaterializeCap) {
    const std::uint64_t n = shape.total_tokens();
    if (n > cap) {
        throw std::length_error("materialize_mask: " + std::to_string(n) + " tokens exceeds cap " +
                                std::to_string(cap) + " (" + std::to_string(n) + "x" +
                                std::to_string(n) + " bits)");
    }
    pattern.validate();
    TokenMask mask(shape);
    const std::uint32_t s = shape.tokens_per_frame;
    parallel_for(n, [&](std::uint64_t u) {
        auto i = static_cast<std::uint32_t>(u / s);
        auto k = static_cast<std::uint32_t>(u % s);
        for_each_kept_interval(pattern, shape, i, k,
                               [&](std::uint32_t j, std::uint32_t lo, std::uint32_t hi) {
                                   std::uint64_t base = static_cast<std::uint64_t>(j) * s;
                                   mask.set_range(u, base + lo, base + hi);
                               });
    });
    return mask;
}

// ---------------------------------------------------------------------------
// Streaming counts
// ---------------------------------------------------------------------------

namespace detail {

// Token pairs within one frame pair at spatial half-width sigma <= s-1:
// |{(k,l) in [0,s)^2 : |k-l| <= sigma}| = s(2*sigma+1) - sigma(sigma+1).
inline std::uint64_t band_pair_count(std::uint64_t s, std::uint64_t sigma) {
    if (sigma >= s) sigma = s - 1;
    return s * (2 * sigma + 1) - sigma * (sigma + 1);
}

// Kept (k,l) pairs of one ordered frame pair at distance d, sink excluded.
inline std::uint64_t frame_pair_count(const PatternSpec& pattern, const GridShape& shape,
                                      std::uint64_t d) {
    const std::uint64_t s = shape.tokens_per_frame;
    switch (pattern.kind) {
        case PatternKind::dense:
            return s * s;
        case PatternKind::radial: {
            std::uint64_t pw = std::uint64_t{1} << band_exponent(d);
            if (pw <= s) return band_pair_count(s, s / pw - 1);
            std::uint64_t period = (pw + s - 1) / s;
            return d % period == 0 ? s : 0;
        }
        case PatternKind::spatial:
            return d <= pattern.require_temporal_window() ? s * s : 0;
        case PatternKind::temporal:
            return band_pair_count(s, pattern.require_spatial_window());
        case PatternKind::sta:
            return d <= pattern.require_temporal_window()
                       ? band_pair_count(s, pattern.require_spatial_window())
                       : 0;
        case PatternKind::harmonic: {
            std::uint64_t dist = std::max<std::uint64_t>(d, 1);
            std::uint64_t width = s / dist;
            if (width >= 1) return band_pair_count(s, width - 1);
            std::uint64_t period = (dist + s - 1) / s;
            return d % period == 0 ? s : 0;
        }
        case PatternKind::power:
            break;
    }
    throw std::logic_error("frame_pair_count: power has no per-frame-pair form");
}

// Sum over u in [0, m] of the number of powers of two <= u (0 for u == 0).
inline std::uint64_t sum_powers_le(std::uint64_t m) {
    std::uint64_t total = 0;
    for (std::uint64_t p = 1; p <= m; p <<= 1) {
        total += m - p + 1;
        if (p > m / 2) break;  // avoid shift overflow
    }
    return total;
}

// Kept token pairs of the power pattern: |u-v| in {0} or a power of two,
// optionally ORed with the frame-0 sink column. Closed form, O(log n).
inline std::uint64_t power_count(const GridShape& shape, bool sink) {
    const std::uint64_t n = shape.total_tokens();
    const std::uint64_t s = shape.tokens_per_frame;
    std::uint64_t base = n;  // t == 0
    for (std::uint64_t t = 1; t < n; t <<= 1) {
        base += 2 * (n - t);
        if (t > (n - 1) / 2) break;
    }
    if (!sink) return base;
    // overlap = sum over queries u of the power-kept keys inside frame 0
    std::uint64_t overlap = 0;
    if (s >= 1) {
        // u < s: self plus powers reaching left to 0 and right to s-1
        overlap += s + 2 * sum_powers_le(s - 1);
        // u >= s: powers t with u-s < t <= u
        if (n > s) {
            overlap += sum_powers_le(n - 1) - sum_powers_le(s - 1);  // sum over u in [s, n) of cnt(u)
            overlap -= sum_powers_le(n - 1 - s);                     // minus sum of cnt(u - s)
        }
    }
    return base + n * s - overlap;
}

}  // namespace detail

/// Exact number of kept token pairs, by closed-form per-frame-pair
/// arithmetic grouped by frame distance; O(f + log n), safe at paper scale.
/// Always equals the materialized mask's kept count.
inline std::uint64_t count_kept(const GridShape& shape, const PatternSpec& pattern) {
    pattern.validate();
    if (pattern.kind == PatternKind::power) return detail::power_count(shape, pattern.sink);
    const std::uint64_t f = shape.frames;
    const std::uint64_t s = shape.tokens_per_frame;
    std::uint64_t total = 0;
    for (std::uint64_t d = 0; d < f; ++d) {
        std::uint64_t pairs = d == 0 ? f : 2 * (f - d);
        total += pairs * detail::frame_pair_count(pattern, shape, d);
    }
    if (pattern.sink) {
        // queries of frame i see the whole of frame 0 instead of the
        // distance-i pattern block
        for (std::uint64_t i = 0; i < f; ++i) {
            total += s * s - detail::frame_pair_count(pattern, shape, i);
        }
    }
    return total;
}

}  // namespace radial
