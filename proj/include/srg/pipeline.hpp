#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "srg/evaluation.hpp"
#include "srg/matching.hpp"
#include "srg/superseg.hpp"

namespace srg {

/// Everything one end-to-end run needs. truth_path may stay empty to skip the
/// Dice stage; every other path is required.
struct PipelineConfig {
    std::filesystem::path model_path;
    std::filesystem::path scalar_path;
    std::filesystem::path truth_path;
    std::filesystem::path out_dir;
    double min_depth = 0.0;
    StructuringElement element = StructuringElement::cross6;
    CostWeights weights;
    GreedyOptions greedy;
    EvalOptions eval;
    std::uint64_t seed = 0;
};

/// Config text: `key = value` lines, `#` comments. Keys: model, scalar,
/// truth, out_dir, min_depth, element (cross6|cube26), alpha, vweights and
/// eweights (comma-separated triples), p_empty, greedy_volume (0|1), seed.
[[nodiscard]] PipelineConfig parse_pipeline_config(const std::string& text);
[[nodiscard]] PipelineConfig load_pipeline_config(const std::filesystem::path& path);

/// Voxelwise prediction implied by an assignment: each voxel takes the model
/// vertex label of the region it belongs to; voxels outside every region
/// (label 0) stay 0.
[[nodiscard]] LabelVolume predicted_label_volume(const LabelVolume& super_labels,
                                                 std::span<const std::uint32_t> assignment,
                                                 std::span<const std::uint32_t> model_vertex_labels);

struct PipelineResult {
    std::uint32_t n_super = 0;
    Solution solution;
    std::optional<SegmentationReport> dice;
    std::filesystem::path out_dir;
};

/// superseg -> super graph -> greedy match -> join/evaluate -> reports.
/// Validates that every input exists before writing anything, then leaves
/// super.srgvol, super.srg, seg.srgvol, obs.srg, report.txt, overlay.png,
/// eval.txt (with ground truth), and manifest.json in out_dir.
PipelineResult run_pipeline(const PipelineConfig& config);

}  // namespace srg
