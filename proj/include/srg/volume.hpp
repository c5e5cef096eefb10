#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <type_traits>
#include <utility>
#include <vector>

#include "srg/error.hpp"

namespace srg {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    [[nodiscard]] double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

inline Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
inline Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
inline Vec3 operator*(double s, const Vec3& v) { return {s * v.x, s * v.y, s * v.z}; }
inline Vec3 operator/(const Vec3& v, double s) { return {v.x / s, v.y / s, v.z / s}; }
inline bool operator==(const Vec3& a, const Vec3& b) { return a.x == b.x && a.y == b.y && a.z == b.z; }

/// Voxel counts along x, y, z.
struct Dims {
    std::uint32_t nx = 0;
    std::uint32_t ny = 0;
    std::uint32_t nz = 0;

    [[nodiscard]] std::size_t voxel_count() const {
        return static_cast<std::size_t>(nx) * ny * nz;
    }
    bool operator==(const Dims&) const = default;
};

/// Millimeters per voxel along each axis; strictly positive.
struct Spacing {
    double sx = 1.0;
    double sy = 1.0;
    double sz = 1.0;

    [[nodiscard]] double voxel_volume() const { return sx * sy * sz; }
    bool operator==(const Spacing&) const = default;
};

enum class Axis { x, y, z };

/// Row-major 2D plane extracted from a volume.
template <typename T>
struct Plane {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> values;

    [[nodiscard]] T& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    [[nodiscard]] const T& at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

// ---------------------------------------------------------------------------
// VoxelGrid
// ---------------------------------------------------------------------------

/// Dense 3D grid in x-fastest linear order: voxel (x,y,z) lives at index
/// x + nx*(y + ny*z). Immutable after construction; safe to share across
/// threads read-only. Floating-point grids reject non-finite values.
template <typename T>
class VoxelGrid {
public:
    VoxelGrid(Dims dims, Spacing spacing, std::vector<T> data)
        : dims_(dims), spacing_(spacing), data_(std::move(data)) {
        if (dims_.nx == 0 || dims_.ny == 0 || dims_.nz == 0)
            throw Error(Errc::corrupt_header, "volume dimensions must be positive");
        if (!(spacing_.sx > 0.0) || !(spacing_.sy > 0.0) || !(spacing_.sz > 0.0))
            throw Error(Errc::corrupt_header, "voxel spacing must be strictly positive");
        if (data_.size() != dims_.voxel_count())
            throw Error(Errc::corrupt_header, "payload size does not match dimensions");
        if constexpr (std::is_floating_point_v<T>) {
            for (T v : data_)
                if (!std::isfinite(v))
                    throw Error(Errc::non_finite_data, "volume contains non-finite values");
        }
    }

    /// Uniform grid of `fill`.
    static VoxelGrid filled(Dims dims, Spacing spacing, T fill) {
        return VoxelGrid(dims, spacing, std::vector<T>(dims.voxel_count(), fill));
    }

    [[nodiscard]] const Dims& dims() const noexcept { return dims_; }
    [[nodiscard]] const Spacing& spacing() const noexcept { return spacing_; }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] std::span<const T> data() const noexcept { return data_; }

    [[nodiscard]] std::size_t index_of(std::uint32_t x, std::uint32_t y, std::uint32_t z) const noexcept {
        return x + static_cast<std::size_t>(dims_.nx) * (y + static_cast<std::size_t>(dims_.ny) * z);
    }

    [[nodiscard]] const T& at(std::uint32_t x, std::uint32_t y, std::uint32_t z) const noexcept {
        return data_[index_of(x, y, z)];
    }

    [[nodiscard]] const T& operator[](std::size_t i) const noexcept { return data_[i]; }

    /// Physical position of the voxel center, in mm.
    [[nodiscard]] Vec3 voxel_center(std::uint32_t x, std::uint32_t y, std::uint32_t z) const noexcept {
        return {(x + 0.5) * spacing_.sx, (y + 0.5) * spacing_.sy, (z + 0.5) * spacing_.sz};
    }

private:
    Dims dims_;
    Spacing spacing_;
    std::vector<T> data_;
};

/// 3D grid of real-valued intensities.
using ScalarVolume = VoxelGrid<double>;

/// 3D grid of non-negative integer labels; label 0 is background.
using LabelVolume = VoxelGrid<std::uint32_t>;

/// Distinct nonzero labels in ascending order.
[[nodiscard]] std::vector<std::uint32_t> distinct_labels(const LabelVolume& vol);

template <typename A, typename B>
[[nodiscard]] bool same_geometry(const VoxelGrid<A>& a, const VoxelGrid<B>& b) {
    return a.dims() == b.dims() && a.spacing() == b.spacing();
}

template <typename A, typename B>
void require_same_geometry(const VoxelGrid<A>& a, const VoxelGrid<B>& b) {
    if (!same_geometry(a, b))
        throw Error(Errc::geometry_mismatch, "volumes have different dims or spacing");
}

Plane<double> extract_slice(const ScalarVolume& vol, Axis axis, std::uint32_t index);
Plane<std::uint32_t> extract_slice(const LabelVolume& vol, Axis axis, std::uint32_t index);

}  // namespace srg
