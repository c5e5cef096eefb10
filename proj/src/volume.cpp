#include "srg/volume.hpp"

#include <algorithm>
#include <set>

namespace srg {

std::vector<std::uint32_t> distinct_labels(const LabelVolume& vol) {
    std::set<std::uint32_t> seen;
    for (std::uint32_t v : vol.data())
        if (v != 0)
            seen.insert(v);
    return {seen.begin(), seen.end()};
}

namespace {

template <typename T>
Plane<T> slice_impl(const VoxelGrid<T>& vol, Axis axis, std::uint32_t index) {
    const Dims& d = vol.dims();
    const std::uint32_t extent = axis == Axis::x ? d.nx : axis == Axis::y ? d.ny : d.nz;
    if (index >= extent)
        throw Error(Errc::index_out_of_range, "slice index out of range");

    Plane<T> out;
    switch (axis) {
        case Axis::x:  // rows = z, cols = y
            out.rows = d.nz;
            out.cols = d.ny;
            out.values.resize(out.rows * out.cols);
            for (std::uint32_t z = 0; z < d.nz; ++z)
                for (std::uint32_t y = 0; y < d.ny; ++y)
                    out.at(z, y) = vol.at(index, y, z);
            break;
        case Axis::y:  // rows = z, cols = x
            out.rows = d.nz;
            out.cols = d.nx;
            out.values.resize(out.rows * out.cols);
            for (std::uint32_t z = 0; z < d.nz; ++z)
                for (std::uint32_t x = 0; x < d.nx; ++x)
                    out.at(z, x) = vol.at(x, index, z);
            break;
        case Axis::z:  // rows = y, cols = x
            out.rows = d.ny;
            out.cols = d.nx;
            out.values.resize(out.rows * out.cols);
            for (std::uint32_t y = 0; y < d.ny; ++y)
                for (std::uint32_t x = 0; x < d.nx; ++x)
                    out.at(y, x) = vol.at(x, y, index);
            break;
    }
    return out;
}

}  // namespace

Plane<double> extract_slice(const ScalarVolume& vol, Axis axis, std::uint32_t index) {
    return slice_impl(vol, axis, index);
}

Plane<std::uint32_t> extract_slice(const LabelVolume& vol, Axis axis, std::uint32_t index) {
    return slice_impl(vol, axis, index);
}

}  // namespace srg
