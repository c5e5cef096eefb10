#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "srg/volume.hpp"

namespace srg {

struct StructureDice {
    std::uint32_t label = 0;
    std::uint64_t truth_voxels = 0;
    std::uint64_t predicted_voxels = 0;
    std::uint64_t intersection_voxels = 0;
    double dice = 0.0;  // 2|A cap B| / (|A|+|B|); 1 when both sets are empty
};

/// Per-structure overlap against ground truth plus a confusion matrix over
/// the mapped labels. Confusion is (m+1)^2 row-major with row = truth, col =
/// prediction; index 0 pools background and unmapped labels, index k >= 1 is
/// label_map[k-1].
struct SegmentationReport {
    std::vector<StructureDice> per_structure;
    double macro_dice = 0.0;
    std::uint64_t total_voxels = 0;
    std::uint64_t agreeing_voxels = 0;  // confusion diagonal
    std::vector<std::uint64_t> confusion;
};

[[nodiscard]] SegmentationReport dice_report(const LabelVolume& pred, const LabelVolume& truth,
                                             std::span<const std::uint32_t> label_map);

[[nodiscard]] std::string format_dice_report(const SegmentationReport& report);

// ---------------------------------------------------------------------------
// overlay rendering
// ---------------------------------------------------------------------------

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
};

struct RgbImage {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<Rgb> pixels;  // row-major, top row first
};

/// Fixed palette keyed by label id (golden-angle hue walk), so renders are
/// reproducible without carrying palette files around.
[[nodiscard]] Rgb palette_color(std::uint32_t label);

/// Grayscale slice (volume-global min-max mapped to 0..255, constant volumes
/// to 128) with labeled pixels blended 50/50 toward their label color. An
/// empty palette falls back to palette_color; otherwise label l uses
/// palette[(l-1) % palette.size()].
[[nodiscard]] RgbImage render_overlay_image(const ScalarVolume& scalar, const LabelVolume& labels,
                                            Axis axis, std::uint32_t index,
                                            std::span<const Rgb> palette = {});

void write_png(const RgbImage& image, const std::filesystem::path& path);

void render_overlay(const ScalarVolume& scalar, const LabelVolume& labels, Axis axis,
                    std::uint32_t index, std::span<const Rgb> palette,
                    const std::filesystem::path& out_path);

}  // namespace srg
