#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "srg/graph.hpp"
#include "srg/volume.hpp"

namespace srg {

/// Cost-function weights: alpha balances the vertex term against the edge
/// term; each attribute group carries per-attribute weights that must sum to
/// 1 (within 1e-12) with no negative entries.
struct CostWeights {
    double alpha = 0.5;
    // vertex attributes
    double w_centroid = 1.0 / 3;
    double w_intensity = 1.0 / 3;
    double w_volume = 1.0 / 3;
    // edge attributes
    double w_dvec = 1.0 / 3;
    double w_vratio = 1.0 / 3;
    double w_contrast = 1.0 / 3;

    void validate() const;  // throws InvalidSpec on violation
};

/// Per-attribute normalization scales taken from a model's stddevs: every
/// attribute distance is divided by its scale (a z-score). Vector attributes
/// use the Euclidean norm of their per-component stddevs as a single scale.
/// All scales are > 0 thanks to the fitting floor.
struct DistanceSpec {
    struct VertexScales {
        double centroid = 1.0;
        double intensity = 1.0;
        double volume = 1.0;
    };
    struct EdgeScales {
        double dvec = 1.0;
        double vratio = 1.0;  // applies to |log r_obs - log r_model|
        double contrast = 1.0;
    };
    std::vector<VertexScales> vertex;  // per model vertex
    std::vector<EdgeScales> edges;     // n*n, row-major, diagonal unused

    [[nodiscard]] static DistanceSpec from_model(const ModelStatistics& stats);

    /// Multiplies every scale by factor (> 0). Costs scale by 1/factor;
    /// argmins are unchanged.
    void scale_all(double factor);

    [[nodiscard]] const EdgeScales& edge(std::size_t i, std::size_t j) const;
};

/// Weighted distance between an observation vertex and model vertex i:
/// sum over vertex attributes of weight * distance / scale, with Euclidean
/// distance for centroids and absolute difference for scalars. Throws
/// EmptyVertex if either vertex is EMPTY.
[[nodiscard]] double vertex_cost(const Srg& obs, std::size_t obs_v, const Srg& model,
                                 std::size_t model_v, const CostWeights& weights,
                                 const DistanceSpec& dist);

/// Weighted distance between observation edge (oj, ok) and model edge
/// (mj, mk): Euclidean for centroid vectors, |log r_obs - log r_model| for
/// volume ratios, absolute difference for contrast. Throws EmptyVertex if any
/// endpoint is EMPTY.
[[nodiscard]] double edge_cost(const Srg& obs, std::size_t oj, std::size_t ok, const Srg& model,
                               std::size_t mj, std::size_t mk, const CostWeights& weights,
                               const DistanceSpec& dist);

// ---------------------------------------------------------------------------
// solutions
// ---------------------------------------------------------------------------

struct CostBreakdown {
    double total = 0.0;
    double vertex_term = 0.0;  // alpha * (1/n) * sum of vertex costs
    double edge_term = 0.0;    // (1-alpha) * (1/n^2) * sum of edge costs
    // unweighted-by-alpha raw sums, split per attribute plus EMPTY penalties
    double v_centroid = 0.0, v_intensity = 0.0, v_volume = 0.0, v_empty = 0.0;
    double e_dvec = 0.0, e_vratio = 0.0, e_contrast = 0.0, e_empty = 0.0;
};

/// An assignment of super-regions to model vertices plus everything derived
/// from it. assignment[j] is the 0-based model vertex for super-region j
/// (region label j+1); external I/O prints these 1-based.
struct Solution {
    std::vector<std::uint32_t> assignment;
    Srg observation;  // n model vertices, EMPTY where nothing was assigned
    CostBreakdown cost;
};

struct EvalOptions {
    /// Cost charged in place of each vertex/edge cost that touches an EMPTY
    /// vertex. In z-score units a weighted unit distance sums to 1, so the
    /// default charges ten unit distances per affected term.
    double p_empty = 10.0;
};

struct GreedyOptions {
    /// The volume weight is dropped from the greedy vertex cost by default:
    /// super-regions are far smaller than model structures, so raw volume
    /// distance misleads the initial assignment. Evaluation always restores
    /// the full weights.
    bool include_volume = false;
};

/// Builds the observation graph for an assignment: per-region sufficient
/// statistics pooled (in ascending region order) into one bucket per model
/// vertex, attributes recomputed from the pooled sums. Model vertices with no
/// regions come back EMPTY.
[[nodiscard]] Srg join_regions(const LabelVolume& super_labels, const ScalarVolume& scalar,
                               std::span<const std::uint32_t> assignment, std::size_t n_model,
                               std::span<const std::uint32_t> model_vertex_labels = {});

/// Scores an assignment: joins regions, then
///   C(S) = alpha (1/n) sum_j cV(j) + (1-alpha) (1/n^2) sum_{j != k} cE(j,k)
/// over the n joined observation vertices, each paired with its model vertex.
/// EMPTY vertices charge p_empty in place of each cost they touch. Throws
/// AssignmentLengthMismatch when the assignment does not cover the regions.
[[nodiscard]] Solution evaluate(std::span<const std::uint32_t> assignment,
                                const LabelVolume& super_labels, const ScalarVolume& scalar,
                                const ModelStatistics& model, const CostWeights& weights,
                                const EvalOptions& opts = {});

/// Independent per-region argmin of the vertex cost against every model
/// vertex, ties to the lowest model index.
[[nodiscard]] std::vector<std::uint32_t> greedy_initial(const Srg& super_graph,
                                                        const ModelStatistics& model,
                                                        const CostWeights& weights,
                                                        const GreedyOptions& opts = {});

/// Global minimum of C(S) by full enumeration in lexicographic assignment
/// order (ties keep the first, i.e. lexicographically smallest, assignment).
/// Throws InstanceTooLarge when n^n_super exceeds cap.
struct ExhaustiveResult {
    std::vector<std::uint32_t> assignment;
    double cost = 0.0;
};
[[nodiscard]] ExhaustiveResult exhaustive_best(const LabelVolume& super_labels,
                                               const ScalarVolume& scalar,
                                               const ModelStatistics& model,
                                               const CostWeights& weights,
                                               std::uint64_t cap = 250000,
                                               const EvalOptions& opts = {});

// ---------------------------------------------------------------------------
// weight sweeps
// ---------------------------------------------------------------------------

struct SweepRow {
    CostWeights weights;
    std::vector<std::uint32_t> assignment;
    CostBreakdown cost;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    /// Smallest row index p such that rows p..end all share one assignment
    /// (the greedy solution has stopped changing). Always set when rows are
    /// non-empty; equal to the last index when there is no wider plateau.
    std::optional<std::size_t> plateau_start;
};

[[nodiscard]] SweepResult sweep_weights(std::span<const CostWeights> profiles,
                                        const Srg& super_graph, const LabelVolume& super_labels,
                                        const ScalarVolume& scalar, const ModelStatistics& model,
                                        const GreedyOptions& greedy_opts = {},
                                        const EvalOptions& eval_opts = {});

/// The nine exploratory (centroid, intensity) vertex-weight pairs, volume
/// weight 0, everything else taken from base.
[[nodiscard]] std::vector<CostWeights> exploration_profiles(const CostWeights& base);

// ---------------------------------------------------------------------------
// reports
// ---------------------------------------------------------------------------

/// Human-readable match report: one line per model vertex (assigned regions,
/// EMPTY flags), per-attribute cost contributions, and the totals.
[[nodiscard]] std::string format_match_report(const Solution& solution,
                                              const ModelStatistics& model);

/// Tab-separated sweep table (centroid and intensity weights, total cost,
/// vertex and edge terms, assignment) with a trailing plateau line.
[[nodiscard]] std::string format_sweep_table(const SweepResult& sweep);

}  // namespace srg
