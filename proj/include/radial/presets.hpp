// Copyright (c) 2026 The radial-attention Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "radial/grid.hpp"

namespace radial {

/// Video-model latent geometries behind the --preset flag.
///
/// Latent dimensions are inferred, not published:
///  - 720p models (HunyuanVideo, Wan2.1): a 125-frame 720p clip is ~115200
///    tokens over (125-1)/4+1 = 32 latent frames, giving s = 3600 tokens
///    per latent frame; latent frames = (video_frames - 1)/4 + 1.
///  - Mochi 1 (480p, 848x480, 6x temporal compression): s = 53 * 30 = 1590,
///    latent frames = (video_frames - 1)/6 + 1.
struct ModelPreset {
    std::string_view name;
    std::uint32_t video_frames;
    std::uint32_t latent_frames;
    std::uint32_t tokens_per_frame;
    std::uint32_t block_size;

    GridShape shape() const { return GridShape(latent_frames, tokens_per_frame); }
};

inline constexpr std::array<ModelPreset, 8> kModelPresets{{
    {"hunyuan-117", 117, 30, 3600, 128},
    {"hunyuan-253", 253, 64, 3600, 128},
    {"hunyuan-509", 509, 128, 3600, 128},
    {"wan-69", 69, 18, 3600, 128},
    {"wan-161", 161, 41, 3600, 128},
    {"mochi-163", 163, 28, 1590, 128},
    {"mochi-331", 331, 56, 1590, 128},
    {"mochi-667", 667, 112, 1590, 128},
}};

inline std::optional<ModelPreset> find_preset(std::string_view name) {
    for (const auto& p : kModelPresets) {
        if (p.name == name) return p;
    }
    return std::nullopt;
}

inline std::string preset_names() {
    std::string out;
    for (const auto& p : kModelPresets) {
        if (!out.empty()) out += ", ";
        out += p.name;
    }
    return out;
}

}  // namespace radial
