// Copyright (c) 2026 The radial-attention Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace radial {

/// Geometry of a video latent: f frames of s tokens each, flattened to
/// n = f*s tokens with token (i,k) at index i*s + k.
struct GridShape {
    std::uint32_t frames = 1;
    std::uint32_t tokens_per_frame = 1;

    GridShape() = default;
    GridShape(std::uint32_t f, std::uint32_t s) : frames(f), tokens_per_frame(s) {
        if (f < 1 || s < 1) {
            throw std::invalid_argument("GridShape: frames and tokens_per_frame must be >= 1");
        }
        if (static_cast<std::uint64_t>(f) * s > (std::uint64_t{1} << 32)) {
            throw std::invalid_argument("GridShape: total tokens exceeds 2^32");
        }
    }

    std::uint64_t total_tokens() const {
        return static_cast<std::uint64_t>(frames) * tokens_per_frame;
    }

    std::uint32_t frame_of(std::uint64_t token) const {
        return static_cast<std::uint32_t>(token / tokens_per_frame);
    }
    std::uint32_t pos_of(std::uint64_t token) const {
        return static_cast<std::uint32_t>(token % tokens_per_frame);
    }

    bool operator==(const GridShape&) const = default;
};

enum class PatternKind : std::uint8_t {
    radial = 0,
    dense = 1,
    spatial = 2,
    temporal = 3,
    sta = 4,
    power = 5,
    harmonic = 6,
};

inline std::string_view kind_name(PatternKind k) {
    switch (k) {
        case PatternKind::radial: return "radial";
        case PatternKind::dense: return "dense";
        case PatternKind::spatial: return "spatial";
        case PatternKind::temporal: return "temporal";
        case PatternKind::sta: return "sta";
        case PatternKind::power: return "power";
        case PatternKind::harmonic: return "harmonic";
    }
    return "unknown";
}

inline std::optional<PatternKind> parse_kind(std::string_view name) {
    for (auto k : {PatternKind::radial, PatternKind::dense, PatternKind::spatial,
                   PatternKind::temporal, PatternKind::sta, PatternKind::power,
                   PatternKind::harmonic}) {
        if (kind_name(k) == name) return k;
    }
    return std::nullopt;
}

/// Which mask family to build, plus its parameters.
///
/// The sink flag grants every query access to all frame-0 keys. It defaults
/// on for the radial family and off for the baselines. Window fields are
/// only read by the kinds that need them (spatial reads temporal_window,
/// temporal reads spatial_window, sta reads both); asking a kind for a
/// window it was not given is an error.
struct PatternSpec {
    PatternKind kind = PatternKind::radial;
    bool sink = true;
    std::optional<std::uint32_t> temporal_window;
    std::optional<std::uint32_t> spatial_window;

    static PatternSpec radial(bool sink = true) { return {PatternKind::radial, sink, {}, {}}; }
    static PatternSpec dense() { return {PatternKind::dense, false, {}, {}}; }
    static PatternSpec spatial(std::uint32_t temporal_window, bool sink = false) {
        return {PatternKind::spatial, sink, temporal_window, {}};
    }
    static PatternSpec temporal(std::uint32_t spatial_window, bool sink = false) {
        return {PatternKind::temporal, sink, {}, spatial_window};
    }
    static PatternSpec sta(std::uint32_t temporal_window, std::uint32_t spatial_window,
                           bool sink = false) {
        return {PatternKind::sta, sink, temporal_window, spatial_window};
    }
    static PatternSpec power(bool sink = false) { return {PatternKind::power, sink, {}, {}}; }
    static PatternSpec harmonic(bool sink = false) { return {PatternKind::harmonic, sink, {}, {}}; }

    PatternSpec with_sink(bool s) const {
        PatternSpec p = *this;
        p.sink = s;
        return p;
    }

    bool reads_temporal_window() const {
        return kind == PatternKind::spatial || kind == PatternKind::sta;
    }
    bool reads_spatial_window() const {
        return kind == PatternKind::temporal || kind == PatternKind::sta;
    }

    std::uint32_t require_temporal_window() const {
        if (!temporal_window) {
            throw std::invalid_argument(std::string(kind_name(kind)) +
                                        " pattern requires temporal_window");
        }
        return *temporal_window;
    }
    std::uint32_t require_spatial_window() const {
        if (!spatial_window) {
            throw std::invalid_argument(std::string(kind_name(kind)) +
                                        " pattern requires spatial_window");
        }
        return *spatial_window;
    }

    /// Throws if a window the kind reads is missing.
    void validate() const {
        if (reads_temporal_window()) (void)require_temporal_window();
        if (reads_spatial_window()) (void)require_spatial_window();
    }

    bool operator==(const PatternSpec&) const = default;
};

}  // namespace radial
