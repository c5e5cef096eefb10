#pragma once

#include <cstdint>

#include "srg/volume.hpp"

namespace srg {

enum class StructuringElement { cross6, cube26 };

/// Per-voxel gradient magnitude (dilation minus erosion). Values are >= 0 and
/// identically 0 on constant input; geometry matches the source volume.
using GradientVolume = ScalarVolume;

/// How the watershed seeds were chosen, kept with the result so a labeling can
/// be reproduced from its parameters alone.
struct SeedPolicy {
    double min_depth = 0.0;
    std::uint32_t connectivity = 6;
    std::uint32_t n_seeds = 0;
};

struct SupersegResult {
    LabelVolume labels;       // every voxel labeled 1..n_super, each region 6-connected
    std::uint32_t n_super = 0;
    SeedPolicy seed_policy;
};

/// out[v] = max - min of the volume over the structuring element centered at
/// v, the element clamped to the volume at borders.
[[nodiscard]] GradientVolume morphological_gradient(const ScalarVolume& vol,
                                                    StructuringElement element);

/// Watershed by priority flood. Minima shallower than min_depth are suppressed
/// first (h-minima transform via reconstruction by erosion); seeds are the
/// 6-connected regional-minima plateaus of the suppressed relief, numbered by
/// smallest contained linear voxel index. Flooding pops by (relief value,
/// insertion sequence) and assigns on push, so there are no watershed lines
/// and the labeling is deterministic.
[[nodiscard]] SupersegResult watershed(const GradientVolume& grad, double min_depth);

/// Splits every 6-connected component of every nonzero label into a fresh
/// label 1..m, numbered by smallest contained linear voxel index. Label 0 is
/// preserved as background.
[[nodiscard]] LabelVolume relabel_connected(const LabelVolume& labels);

}  // namespace srg
