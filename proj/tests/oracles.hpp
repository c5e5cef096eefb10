// Reference implementations the tests compare the library against. Everything
// here recomputes its answer from first principles with naive loops and stays
// off the library's code paths on purpose: these transcribe the documented
// math directly, so a library bug cannot cancel out of both sides.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <span>
#include <vector>

#include "srg/graph.hpp"
#include "srg/matching.hpp"
#include "srg/superseg.hpp"
#include "srg/volume.hpp"

namespace oracle {

// --- z-score plumbing -----------------------------------------------------------

inline double floor_sd(double sd) { return sd < 1e-6 ? 1e-6 : sd; }

inline double vec_scale(const srg::Vec3& sd) {
    const double a = floor_sd(sd.x), b = floor_sd(sd.y), c = floor_sd(sd.z);
    return std::sqrt(a * a + b * b + c * c);
}

inline double dist3(const srg::Vec3& a, const srg::Vec3& b) {
    const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// --- cost formulas ----------------------------------------------------------------

inline double vertex_cost(const srg::VertexAttributes& obs, const srg::ModelVertexStats& m,
                          double w_centroid, double w_intensity, double w_volume) {
    const double dc = dist3(obs.centroid, m.centroid_mean) / vec_scale(m.centroid_stddev);
    const double di =
        std::fabs(obs.mean_intensity - m.intensity_mean) / floor_sd(m.intensity_stddev);
    const double dv = std::fabs(obs.volume - m.volume_mean) / floor_sd(m.volume_stddev);
    return w_centroid * dc + w_intensity * di + w_volume * dv;
}

inline double edge_cost(const srg::EdgeAttributes& obs, const srg::ModelEdgeStats& m,
                        double w_dvec, double w_vratio, double w_contrast) {
    const double dd = dist3(obs.centroid_vector, m.dvec_mean) / vec_scale(m.dvec_stddev);
    const double dr = std::fabs(std::log(obs.volume_ratio) - std::log(m.vratio_mean)) /
                      floor_sd(m.log_vratio_stddev);
    const double dc = std::fabs(obs.contrast - m.contrast_mean) / floor_sd(m.contrast_stddev);
    return w_dvec * dd + w_vratio * dr + w_contrast * dc;
}

// --- joined observation attributes -------------------------------------------------

struct JoinedVertex {
    std::uint64_t count = 0;
    srg::Vec3 centroid;
    double mean_intensity = 0.0;
    double volume = 0.0;
};

/// Per-voxel pass bucketing every labeled voxel straight into its assigned
/// model vertex; attributes from the bucket sums.
inline std::vector<JoinedVertex> join(std::span<const std::uint32_t> assignment,
                                      const srg::LabelVolume& labels,
                                      const srg::ScalarVolume& scalar, std::size_t n_model) {
    struct Sums {
        std::uint64_t count = 0;
        double sx = 0, sy = 0, sz = 0, si = 0;
    };
    std::vector<Sums> sums(n_model);
    const auto d = labels.dims();
    const auto sp = labels.spacing();
    for (std::uint32_t z = 0; z < d.nz; ++z)
        for (std::uint32_t y = 0; y < d.ny; ++y)
            for (std::uint32_t x = 0; x < d.nx; ++x) {
                const std::uint32_t l = labels.at(x, y, z);
                if (l == 0)
                    continue;
                Sums& s = sums[assignment[l - 1]];
                s.count += 1;
                s.sx += (x + 0.5) * sp.sx;
                s.sy += (y + 0.5) * sp.sy;
                s.sz += (z + 0.5) * sp.sz;
                s.si += scalar.at(x, y, z);
            }
    std::vector<JoinedVertex> out(n_model);
    for (std::size_t j = 0; j < n_model; ++j) {
        const Sums& s = sums[j];
        out[j].count = s.count;
        if (s.count == 0)
            continue;
        const double c = static_cast<double>(s.count);
        out[j].centroid = {s.sx / c, s.sy / c, s.sz / c};
        out[j].mean_intensity = s.si / c;
        out[j].volume = c * sp.voxel_volume();
    }
    return out;
}

/// Direct transcription of the segmentation cost: alpha-weighted mean vertex
/// cost plus (1-alpha)-weighted mean over all ordered vertex pairs, EMPTY
/// vertices charging p_empty per term they touch.
inline double total_cost(std::span<const std::uint32_t> assignment,
                         const srg::LabelVolume& labels, const srg::ScalarVolume& scalar,
                         const srg::ModelStatistics& model, const srg::CostWeights& w,
                         double p_empty) {
    const std::size_t n = model.n();
    const auto joined = join(assignment, labels, scalar, n);

    double sum_v = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        if (joined[j].count == 0) {
            sum_v += p_empty;
            continue;
        }
        const srg::VertexAttributes a{joined[j].centroid, joined[j].mean_intensity,
                                      joined[j].volume};
        sum_v += vertex_cost(a, model.vertices[j], w.w_centroid, w.w_intensity, w.w_volume);
    }

    double sum_e = 0.0;
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) {
            if (j == k)
                continue;
            if (joined[j].count == 0 || joined[k].count == 0) {
                sum_e += p_empty;
                continue;
            }
            const srg::EdgeAttributes e{joined[k].centroid - joined[j].centroid,
                                        joined[k].volume / joined[j].volume,
                                        joined[k].mean_intensity - joined[j].mean_intensity};
            sum_e += edge_cost(e, model.edge(j, k), w.w_dvec, w.w_vratio, w.w_contrast);
        }

    const double nn = static_cast<double>(n);
    return w.alpha * sum_v / nn + (1.0 - w.alpha) * sum_e / (nn * nn);
}

/// Brute-force per-region argmin of the vertex cost against every model
/// vertex (ties to the lowest index), region attributes recomputed here from
/// the voxels.
inline std::vector<std::uint32_t> greedy(const srg::LabelVolume& super,
                                         const srg::ScalarVolume& scalar,
                                         const srg::ModelStatistics& model, double w_centroid,
                                         double w_intensity, double w_volume) {
    std::uint32_t n_super = 0;
    for (std::uint32_t l : super.data())
        n_super = std::max(n_super, l);

    // identity assignment = one bucket per region
    std::vector<std::uint32_t> identity(n_super);
    std::iota(identity.begin(), identity.end(), 0u);
    const auto regions = join(identity, super, scalar, n_super);

    std::vector<std::uint32_t> out(n_super, 0);
    for (std::uint32_t j = 0; j < n_super; ++j) {
        const srg::VertexAttributes a{regions[j].centroid, regions[j].mean_intensity,
                                      regions[j].volume};
        double best = vertex_cost(a, model.vertices[0], w_centroid, w_intensity, w_volume);
        std::uint32_t best_i = 0;
        for (std::uint32_t i = 1; i < model.n(); ++i) {
            const double c = vertex_cost(a, model.vertices[i], w_centroid, w_intensity, w_volume);
            if (c < best) {
                best = c;
                best_i = i;
            }
        }
        out[j] = best_i;
    }
    return out;
}

// --- segmentation overlap -----------------------------------------------------------

struct DiceCounts {
    std::uint64_t truth = 0, pred = 0, both = 0;
};

inline DiceCounts dice_counts(const srg::LabelVolume& pred, const srg::LabelVolume& truth,
                              std::uint32_t label) {
    DiceCounts c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool t = truth[i] == label;
        const bool p = pred[i] == label;
        c.truth += t;
        c.pred += p;
        c.both += t && p;
    }
    return c;
}

inline double dice(const srg::LabelVolume& pred, const srg::LabelVolume& truth,
                   std::uint32_t label) {
    const DiceCounts c = dice_counts(pred, truth, label);
    const std::uint64_t denom = c.truth + c.pred;
    return denom == 0 ? 1.0 : 2.0 * static_cast<double>(c.both) / static_cast<double>(denom);
}

// --- connected components -------------------------------------------------------------

/// 6-connected components of equal nonzero labels by union-find. Returns the
/// component root per voxel; SIZE_MAX marks background.
inline std::vector<std::size_t> components(const srg::LabelVolume& labels) {
    const auto d = labels.dims();
    const std::size_t n = labels.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});

    const auto find = [&](std::size_t i) {
        while (parent[i] != i) {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        return i;
    };
    const auto unite = [&](std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b)
            parent[std::max(a, b)] = std::min(a, b);
    };

    for (std::uint32_t z = 0; z < d.nz; ++z)
        for (std::uint32_t y = 0; y < d.ny; ++y)
            for (std::uint32_t x = 0; x < d.nx; ++x) {
                const std::size_t i = labels.index_of(x, y, z);
                if (labels[i] == 0)
                    continue;
                if (x + 1 < d.nx && labels[i + 1] == labels[i])
                    unite(i, i + 1);
                if (y + 1 < d.ny) {
                    const std::size_t j = labels.index_of(x, y + 1, z);
                    if (labels[j] == labels[i])
                        unite(i, j);
                }
                if (z + 1 < d.nz) {
                    const std::size_t j = labels.index_of(x, y, z + 1);
                    if (labels[j] == labels[i])
                        unite(i, j);
                }
            }

    std::vector<std::size_t> roots(n, SIZE_MAX);
    for (std::size_t i = 0; i < n; ++i)
        if (labels[i] != 0)
            roots[i] = find(i);
    return roots;
}

// --- morphology --------------------------------------------------------------------------

inline srg::ScalarVolume gradient(const srg::ScalarVolume& vol, srg::StructuringElement elem) {
    const auto d = vol.dims();
    std::vector<double> out(vol.size());
    for (std::uint32_t z = 0; z < d.nz; ++z)
        for (std::uint32_t y = 0; y < d.ny; ++y)
            for (std::uint32_t x = 0; x < d.nx; ++x) {
                double lo = vol.at(x, y, z), hi = lo;
                const auto visit = [&](std::int64_t ax, std::int64_t ay, std::int64_t az) {
                    if (ax < 0 || ay < 0 || az < 0 || ax >= d.nx || ay >= d.ny || az >= d.nz)
                        return;
                    const double v = vol.at(static_cast<std::uint32_t>(ax),
                                            static_cast<std::uint32_t>(ay),
                                            static_cast<std::uint32_t>(az));
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                };
                if (elem == srg::StructuringElement::cross6) {
                    visit(std::int64_t(x) - 1, y, z);
                    visit(std::int64_t(x) + 1, y, z);
                    visit(x, std::int64_t(y) - 1, z);
                    visit(x, std::int64_t(y) + 1, z);
                    visit(x, y, std::int64_t(z) - 1);
                    visit(x, y, std::int64_t(z) + 1);
                } else {
                    for (std::int64_t az = std::int64_t(z) - 1; az <= std::int64_t(z) + 1; ++az)
                        for (std::int64_t ay = std::int64_t(y) - 1; ay <= std::int64_t(y) + 1;
                             ++ay)
                            for (std::int64_t ax = std::int64_t(x) - 1;
                                 ax <= std::int64_t(x) + 1; ++ax)
                                visit(ax, ay, az);
                }
                out[vol.index_of(x, y, z)] = hi - lo;
            }
    return {d, vol.spacing(), std::move(out)};
}

// --- statistics ---------------------------------------------------------------------------

inline double mean(std::span<const double> xs) {
    double s = 0;
    for (double x : xs)
        s += x;
    return s / static_cast<double>(xs.size());
}

/// Unbiased sample stddev (K-1 denominator); 0 for a single sample.
inline double sample_sd(std::span<const double> xs) {
    if (xs.size() < 2)
        return 0.0;
    const double m = mean(xs);
    double s = 0;
    for (double x : xs)
        s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

// --- slices -------------------------------------------------------------------------------

template <typename T>
std::vector<T> slice(const srg::VoxelGrid<T>& vol, srg::Axis axis, std::uint32_t index) {
    const auto d = vol.dims();
    std::vector<T> out;
    if (axis == srg::Axis::x) {
        for (std::uint32_t z = 0; z < d.nz; ++z)
            for (std::uint32_t y = 0; y < d.ny; ++y)
                out.push_back(vol.at(index, y, z));
    } else if (axis == srg::Axis::y) {
        for (std::uint32_t z = 0; z < d.nz; ++z)
            for (std::uint32_t x = 0; x < d.nx; ++x)
                out.push_back(vol.at(x, index, z));
    } else {
        for (std::uint32_t y = 0; y < d.ny; ++y)
            for (std::uint32_t x = 0; x < d.nx; ++x)
                out.push_back(vol.at(x, y, index));
    }
    return out;
}

// --- hand-rolled NIfTI-1 writer --------------------------------------------------------------

/// Pokes a single-file little-endian NIfTI-1 header + payload byte by byte.
/// Caller supplies the raw payload for the given datatype code.
inline void write_nifti(const std::filesystem::path& path, srg::Dims dims, srg::Spacing spacing,
                        std::int16_t datatype, std::int16_t bitpix,
                        const std::vector<unsigned char>& payload, float scl_slope = 0.0f,
                        float scl_inter = 0.0f) {
    std::vector<unsigned char> h(352, 0);
    const auto put_i32 = [&](std::size_t off, std::int32_t v) { std::memcpy(&h[off], &v, 4); };
    const auto put_i16 = [&](std::size_t off, std::int16_t v) { std::memcpy(&h[off], &v, 2); };
    const auto put_f32 = [&](std::size_t off, float v) { std::memcpy(&h[off], &v, 4); };

    put_i32(0, 348);
    put_i16(40, 3);  // dim[0]
    put_i16(42, static_cast<std::int16_t>(dims.nx));
    put_i16(44, static_cast<std::int16_t>(dims.ny));
    put_i16(46, static_cast<std::int16_t>(dims.nz));
    put_i16(48, 1);
    put_i16(50, 1);
    put_i16(52, 1);
    put_i16(54, 1);
    put_i16(70, datatype);
    put_i16(72, bitpix);
    put_f32(76, 1.0f);  // pixdim[0]
    put_f32(80, static_cast<float>(spacing.sx));
    put_f32(84, static_cast<float>(spacing.sy));
    put_f32(88, static_cast<float>(spacing.sz));
    put_f32(108, 352.0f);  // vox_offset
    put_f32(112, scl_slope);
    put_f32(116, scl_inter);
    h[123] = 2;  // xyzt_units: mm
    h[344] = 'n';
    h[345] = '+';
    h[346] = '1';
    h[347] = '\0';

    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(h.data()), static_cast<std::streamsize>(h.size()));
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size()));
}

// --- geometry ----------------------------------------------------------------------------------

/// Voxels whose center lies within `radius` of `center`, counted directly.
inline std::uint64_t ball_voxels(srg::Dims dims, srg::Spacing spacing, srg::Vec3 center,
                                 double radius) {
    std::uint64_t count = 0;
    for (std::uint32_t z = 0; z < dims.nz; ++z)
        for (std::uint32_t y = 0; y < dims.ny; ++y)
            for (std::uint32_t x = 0; x < dims.nx; ++x) {
                const double px = (x + 0.5) * spacing.sx - center.x;
                const double py = (y + 0.5) * spacing.sy - center.y;
                const double pz = (z + 0.5) * spacing.sz - center.z;
                if (std::sqrt(px * px + py * py + pz * pz) <= radius)
                    ++count;
            }
    return count;
}

}  // namespace oracle
