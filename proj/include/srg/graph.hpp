#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "srg/volume.hpp"

namespace srg {

/// Stddev floor applied per attribute component when fitting models. Keeps
/// z-score normalization well-posed for K=1 fits and constant attributes.
inline constexpr double kSigmaFloor = 1e-6;

/// Hard ceiling on graph vertices. Graphs are fully connected, so edge
/// storage grows as n^2; past this limit construction and parsing refuse with
/// InstanceTooLarge instead of attempting multi-gigabyte allocations. Seen in
/// practice when a watershed runs on a noisy volume without minima
/// suppression.
inline constexpr std::size_t kMaxGraphVertices = 4096;

struct VertexAttributes {
    Vec3 centroid;                  // mm, voxel-center convention
    double mean_intensity = 0.0;    // image units
    double volume = 0.0;            // mm^3
};

/// Directed edge attributes for the ordered pair (source, target). The
/// reversed edge carries (-centroid_vector, 1/volume_ratio, -contrast); the
/// negations hold exactly, the ratio inversion to rounding (FP division is
/// not exactly invertible).
struct EdgeAttributes {
    Vec3 centroid_vector;       // target centroid - source centroid, mm
    double volume_ratio = 1.0;  // target volume / source volume, > 0
    double contrast = 0.0;      // target mean - source mean
};

/// Fully connected attributed relational graph. Edges are stored for all
/// ordered pairs (i,j), i != j, in an n*n grid with an unused diagonal. A
/// vertex may be EMPTY (present flag false) when it was assigned no voxels;
/// its attributes and incident edges are then meaningless and consumers must
/// check the flag.
struct Srg {
    std::vector<std::uint32_t> vertex_labels;   // external structure ids
    std::vector<VertexAttributes> vertex_attrs;
    std::vector<bool> vertex_present;
    std::vector<EdgeAttributes> edge_attrs;     // n*n, row-major, diagonal unused

    [[nodiscard]] std::size_t n() const { return vertex_attrs.size(); }

    [[nodiscard]] const EdgeAttributes& edge(std::size_t i, std::size_t j) const;
    [[nodiscard]] EdgeAttributes& edge(std::size_t i, std::size_t j);
};

/// Per-vertex, per-attribute-component Gaussians fitted over K training
/// graphs (diagonal covariance). volume_ratio is fitted in the log domain:
/// vratio_mean is the geometric mean back in linear units (for K=1, the
/// sample itself) and log_vratio_stddev the stddev of log(ratio). All stddevs
/// carry the kSigmaFloor.
struct ModelVertexStats {
    Vec3 centroid_mean;
    Vec3 centroid_stddev;
    double intensity_mean = 0.0, intensity_stddev = kSigmaFloor;
    double volume_mean = 0.0, volume_stddev = kSigmaFloor;
};

struct ModelEdgeStats {
    Vec3 dvec_mean;
    Vec3 dvec_stddev;
    double vratio_mean = 1.0, log_vratio_stddev = kSigmaFloor;
    double contrast_mean = 0.0, contrast_stddev = kSigmaFloor;
};

struct ModelStatistics {
    std::vector<std::uint32_t> vertex_labels;
    std::vector<ModelVertexStats> vertices;
    std::vector<ModelEdgeStats> edges;  // n*n, row-major, diagonal unused
    std::uint32_t sample_count = 0;     // K

    [[nodiscard]] std::size_t n() const { return vertices.size(); }

    [[nodiscard]] const ModelEdgeStats& edge(std::size_t i, std::size_t j) const;
    [[nodiscard]] ModelEdgeStats& edge(std::size_t i, std::size_t j);
};

// ---------------------------------------------------------------------------
// attribute extraction
// ---------------------------------------------------------------------------

/// Sufficient statistics of a voxel region. Pooling two regions by add() gives
/// exactly the statistics of their union, which is what lets assignments be
/// re-scored without touching voxels again.
struct RegionStats {
    std::uint64_t voxel_count = 0;
    Vec3 position_sum;          // sum of voxel centers, mm
    double intensity_sum = 0.0;

    void add(const RegionStats& other) {
        voxel_count += other.voxel_count;
        position_sum = position_sum + other.position_sum;
        intensity_sum += other.intensity_sum;
    }

    [[nodiscard]] VertexAttributes to_attributes(double voxel_volume) const;  // pre: voxel_count > 0
};

/// One linear pass over the volumes; result[k] holds the statistics of the
/// voxels labeled label_map[k]. Labels not in the map are ignored; absent
/// labels yield zero counts (callers decide whether that is an error).
[[nodiscard]] std::vector<RegionStats> accumulate_regions(const ScalarVolume& scalar,
                                                          const LabelVolume& labels,
                                                          std::span<const std::uint32_t> label_map);

/// Derives the ordered edge (source -> target) from endpoint attributes.
[[nodiscard]] EdgeAttributes edge_between(const VertexAttributes& source,
                                          const VertexAttributes& target);

/// Assembles a fully connected graph from per-vertex region statistics.
/// Buckets with zero voxels become EMPTY vertices; edges touching them are
/// left defaulted.
[[nodiscard]] Srg graph_from_stats(std::span<const RegionStats> buckets,
                                   std::span<const std::uint32_t> labels, double voxel_volume);

/// Builds the graph of a labeled volume: one vertex per label_map entry with
/// centroid (mm), mean intensity, and volume (voxel count x voxel volume),
/// plus all ordered edges. Throws MissingLabel if a map entry is absent from
/// the volume and GeometryMismatch if the volumes disagree.
[[nodiscard]] Srg build_srg(const ScalarVolume& scalar, const LabelVolume& labels,
                            std::span<const std::uint32_t> label_map);

// ---------------------------------------------------------------------------
// model fitting
// ---------------------------------------------------------------------------

/// Per-attribute sample mean and sample stddev (unbiased, K-1 denominator)
/// over K graphs with identical vertex sets, stddevs floored at kSigmaFloor.
/// K=1 keeps the sample values as means with floored stddevs.
[[nodiscard]] ModelStatistics fit_model(std::span<const Srg> graphs);

/// The model graph G_M: attribute means as a plain Srg.
[[nodiscard]] Srg model_graph(const ModelStatistics& stats);

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------
// Text format (.srg), one record per line, reals printed with 17 significant
// digits so values round-trip exactly:
//
//   srg v1 n=<n> [k=<K>]
//   vertex <id> centroid=<x,y,z> intensity=<m> volume=<v>
//   vertex <id> EMPTY
//   edge <i> <j> dvec=<x,y,z> vratio=<r> contrast=<c>
//
// <i>, <j> are 1-based vertex positions in file order. Model files carry the
// k=<K> header field and follow each vertex/edge line with a `stddev` line of
// the same shape; the vratio stddev is the log-domain sigma. Edges touching
// EMPTY vertices are omitted.

[[nodiscard]] std::string serialize_graph(const Srg& graph);
[[nodiscard]] Srg parse_graph(const std::string& text);
[[nodiscard]] std::string serialize_model(const ModelStatistics& stats);
[[nodiscard]] ModelStatistics parse_model(const std::string& text);

void save_graph(const Srg& graph, const std::filesystem::path& path);
[[nodiscard]] Srg load_graph(const std::filesystem::path& path);
void save_model(const ModelStatistics& stats, const std::filesystem::path& path);
[[nodiscard]] ModelStatistics load_model(const std::filesystem::path& path);

}  // namespace srg
