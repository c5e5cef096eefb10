#include "srg/superseg.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <queue>
#include <vector>

#include "srg/error.hpp"

namespace srg {

namespace {

// Visits the in-bounds 6-neighbors of (x,y,z) in increasing linear-offset
// order: z-1, y-1, x-1, x+1, y+1, z+1. Flood determinism depends on this
// order, so every traversal below goes through here.
template <typename Fn>
void for_each_neighbor6(const Dims& d, std::uint32_t x, std::uint32_t y, std::uint32_t z, Fn&& fn) {
    const std::size_t i = x + static_cast<std::size_t>(d.nx) * (y + static_cast<std::size_t>(d.ny) * z);
    const std::size_t plane = static_cast<std::size_t>(d.nx) * d.ny;
    if (z > 0) fn(i - plane);
    if (y > 0) fn(i - d.nx);
    if (x > 0) fn(i - 1);
    if (x + 1 < d.nx) fn(i + 1);
    if (y + 1 < d.ny) fn(i + d.nx);
    if (z + 1 < d.nz) fn(i + plane);
}

struct Coord {
    std::uint32_t x, y, z;
};

Coord decode(const Dims& d, std::size_t i) {
    return {static_cast<std::uint32_t>(i % d.nx), static_cast<std::uint32_t>((i / d.nx) % d.ny),
            static_cast<std::uint32_t>(i / (static_cast<std::size_t>(d.nx) * d.ny))};
}

// Reconstruction by erosion of marker J >= mask I (Vincent's hybrid
// sequential algorithm): one raster pass, one antiraster pass that also
// seeds a FIFO, then queue-driven propagation until stable.
std::vector<double> reconstruct_by_erosion(const std::vector<double>& mask,
                                           std::vector<double> marker, const Dims& d) {
    const std::size_t plane = static_cast<std::size_t>(d.nx) * d.ny;
    const std::size_t n = mask.size();

    auto scan_update = [&](std::size_t i, std::uint32_t x, std::uint32_t y, std::uint32_t z,
                           bool forward) {
        double m = marker[i];
        if (forward) {
            if (z > 0) m = std::min(m, marker[i - plane]);
            if (y > 0) m = std::min(m, marker[i - d.nx]);
            if (x > 0) m = std::min(m, marker[i - 1]);
        } else {
            if (x + 1 < d.nx) m = std::min(m, marker[i + 1]);
            if (y + 1 < d.ny) m = std::min(m, marker[i + d.nx]);
            if (z + 1 < d.nz) m = std::min(m, marker[i + plane]);
        }
        marker[i] = std::max(mask[i], m);
    };

    std::size_t i = 0;
    for (std::uint32_t z = 0; z < d.nz; ++z)
        for (std::uint32_t y = 0; y < d.ny; ++y)
            for (std::uint32_t x = 0; x < d.nx; ++x, ++i)
                scan_update(i, x, y, z, true);

    std::deque<std::size_t> fifo;
    i = n;
    for (std::uint32_t zr = d.nz; zr-- > 0;)
        for (std::uint32_t yr = d.ny; yr-- > 0;)
            for (std::uint32_t xr = d.nx; xr-- > 0;) {
                --i;
                scan_update(i, xr, yr, zr, false);
                bool enqueue = false;
                const auto probe = [&](std::size_t q) {
                    if (marker[q] > marker[i] && marker[q] > mask[q])
                        enqueue = true;
                };
                if (xr + 1 < d.nx) probe(i + 1);
                if (yr + 1 < d.ny) probe(i + d.nx);
                if (zr + 1 < d.nz) probe(i + plane);
                if (enqueue)
                    fifo.push_back(i);
            }

    while (!fifo.empty()) {
        const std::size_t p = fifo.front();
        fifo.pop_front();
        const auto c = decode(d, p);
        for_each_neighbor6(d, c.x, c.y, c.z, [&](std::size_t q) {
            if (marker[q] > marker[p] && mask[q] != marker[q]) {
                marker[q] = std::max(marker[p], mask[q]);
                fifo.push_back(q);
            }
        });
    }
    return marker;
}

}  // namespace

GradientVolume morphological_gradient(const ScalarVolume& vol, StructuringElement element) {
    const Dims d = vol.dims();
    std::vector<double> out(vol.size());
    const auto src = vol.data();

    std::size_t i = 0;
    for (std::uint32_t z = 0; z < d.nz; ++z)
        for (std::uint32_t y = 0; y < d.ny; ++y)
            for (std::uint32_t x = 0; x < d.nx; ++x, ++i) {
                double lo = src[i], hi = src[i];
                const auto take = [&](std::size_t q) {
                    lo = std::min(lo, src[q]);
                    hi = std::max(hi, src[q]);
                };
                if (element == StructuringElement::cross6) {
                    for_each_neighbor6(d, x, y, z, take);
                } else {
                    const std::uint32_t z1 = std::min(z + 1, d.nz - 1);
                    const std::uint32_t y1 = std::min(y + 1, d.ny - 1);
                    const std::uint32_t x1 = std::min(x + 1, d.nx - 1);
                    for (std::uint32_t zz = z > 0 ? z - 1 : 0; zz <= z1; ++zz)
                        for (std::uint32_t yy = y > 0 ? y - 1 : 0; yy <= y1; ++yy)
                            for (std::uint32_t xx = x > 0 ? x - 1 : 0; xx <= x1; ++xx)
                                take(vol.index_of(xx, yy, zz));
                }
                out[i] = hi - lo;
            }
    return {d, vol.spacing(), std::move(out)};
}

SupersegResult watershed(const GradientVolume& grad, double min_depth) {
    if (grad.size() == 0)
        throw Error(Errc::empty_volume, "watershed: empty gradient volume");
    if (!(min_depth >= 0.0) || !std::isfinite(min_depth))
        throw Error(Errc::invalid_spec, "watershed: min_depth must be finite and >= 0");

    const Dims d = grad.dims();
    const std::size_t n = grad.size();

    std::vector<double> relief(grad.data().begin(), grad.data().end());
    if (min_depth > 0.0) {
        std::vector<double> marker(relief);
        for (double& v : marker)
            v += min_depth;
        relief = reconstruct_by_erosion(relief, std::move(marker), d);
    }

    // Seeds: regional-minima plateaus, found by flooding each equal-valued
    // plateau once and checking for a strictly lower neighbor.
    std::vector<std::uint32_t> labels(n, 0);
    std::vector<bool> visited(n, false);
    std::vector<std::size_t> plateau, frontier;
    std::uint32_t n_seeds = 0;
    for (std::size_t start = 0; start < n; ++start) {
        if (visited[start])
            continue;
        const double v = relief[start];
        plateau.clear();
        frontier.clear();
        frontier.push_back(start);
        visited[start] = true;
        bool has_lower = false;
        while (!frontier.empty()) {
            const std::size_t p = frontier.back();
            frontier.pop_back();
            plateau.push_back(p);
            const auto c = decode(d, p);
            for_each_neighbor6(d, c.x, c.y, c.z, [&](std::size_t q) {
                if (relief[q] < v)
                    has_lower = true;
                else if (relief[q] == v && !visited[q]) {
                    visited[q] = true;
                    frontier.push_back(q);
                }
            });
        }
        if (!has_lower) {
            ++n_seeds;
            for (std::size_t p : plateau)
                labels[p] = n_seeds;
        }
    }

    // Priority flood: pop lowest relief first, earliest push wins ties,
    // assign on push so every voxel is claimed exactly once.
    struct QItem {
        double value;
        std::uint64_t seq;
        std::size_t idx;
        bool operator>(const QItem& o) const {
            return value != o.value ? value > o.value : seq > o.seq;
        }
    };
    std::priority_queue<QItem, std::vector<QItem>, std::greater<QItem>> heap;
    std::uint64_t seq = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (labels[i] != 0)
            heap.push({relief[i], seq++, i});

    while (!heap.empty()) {
        const QItem top = heap.top();
        heap.pop();
        const auto c = decode(d, top.idx);
        for_each_neighbor6(d, c.x, c.y, c.z, [&](std::size_t q) {
            if (labels[q] == 0) {
                labels[q] = labels[top.idx];
                heap.push({relief[q], seq++, q});
            }
        });
    }

    SupersegResult result{LabelVolume(d, grad.spacing(), std::move(labels)), n_seeds,
                          {min_depth, 6, n_seeds}};
    return result;
}

LabelVolume relabel_connected(const LabelVolume& labels) {
    const Dims d = labels.dims();
    const std::size_t n = labels.size();
    const auto src = labels.data();

    std::vector<std::uint32_t> out(n, 0);
    std::vector<std::size_t> frontier;
    std::uint32_t next = 0;
    for (std::size_t start = 0; start < n; ++start) {
        if (src[start] == 0 || out[start] != 0)
            continue;
        const std::uint32_t l = src[start];
        ++next;
        out[start] = next;
        frontier.clear();
        frontier.push_back(start);
        while (!frontier.empty()) {
            const std::size_t p = frontier.back();
            frontier.pop_back();
            const auto c = decode(d, p);
            for_each_neighbor6(d, c.x, c.y, c.z, [&](std::size_t q) {
                if (src[q] == l && out[q] == 0) {
                    out[q] = next;
                    frontier.push_back(q);
                }
            });
        }
    }
    return {d, labels.spacing(), std::move(out)};
}

}  // namespace srg
