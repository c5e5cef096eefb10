#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "srg/volume.hpp"

namespace srg {

/// Portable Gaussian sampler: Marsaglia's polar method over std::mt19937_64.
/// std::normal_distribution is implementation-defined, which would make golden
/// values compiler-specific; this sampler produces the same stream everywhere.
class GaussianSampler {
public:
    explicit GaussianSampler(std::uint64_t seed) : rng_(seed) {}

    [[nodiscard]] double next();

private:
    [[nodiscard]] double uniform_pm1();

    std::mt19937_64 rng_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

enum class Shape { ball, box };

/// One synthetic structure. For `ball`, size holds (r, r, r) and membership is
/// ||p - center|| <= r; for `box`, size holds full edge lengths and membership
/// is per-axis |p - center| <= size/2. All lengths in mm, tested against voxel
/// centers.
struct StructureSpec {
    std::uint32_t label = 0;
    Shape shape = Shape::ball;
    Vec3 center;
    Vec3 size;
    double mean_intensity = 0.0;
    double intensity_stddev = 0.0;
};

/// Recipe for a synthetic annotated volume. Structures are rasterized in list
/// order (later entries win on overlap); every labeled voxel draws its
/// intensity from Normal(mean, stddev) while background voxels take the
/// constant background intensity.
struct PhantomSpec {
    Dims dims;
    Spacing spacing;
    std::vector<StructureSpec> structures;
    double background_intensity = 0.0;
    std::uint64_t seed = 0;
};

/// Throws Errc::invalid_spec unless: labels are unique, positive, and
/// contiguous from 1; every structure lies within the physical volume bounds;
/// sizes are positive, stddevs non-negative, all values finite.
void validate_spec(const PhantomSpec& spec);

[[nodiscard]] std::pair<ScalarVolume, LabelVolume> generate_phantom(const PhantomSpec& spec);

/// Rigidly translates each structure by the matching entry of `shifts` (mm),
/// re-rasterizes, and redraws intensities with `seed`. Shifted structures must
/// stay in bounds; shifts.size() must equal spec.structures.size().
[[nodiscard]] std::pair<ScalarVolume, LabelVolume> perturb_phantom(const PhantomSpec& spec,
                                                                   std::span<const Vec3> shifts,
                                                                   std::uint64_t seed);

// Text configuration: top-level `key = value` lines (dims, spacing,
// background, seed) followed by one [structure] block per structure. `#`
// starts a comment. Round-trips exactly through %.17g.
[[nodiscard]] PhantomSpec parse_phantom_spec(const std::string& text);
[[nodiscard]] std::string serialize_phantom_spec(const PhantomSpec& spec);
[[nodiscard]] PhantomSpec load_phantom_spec(const std::filesystem::path& path);
void save_phantom_spec(const PhantomSpec& spec, const std::filesystem::path& path);

}  // namespace srg
