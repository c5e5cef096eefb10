#include "srg/matching.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "srg/error.hpp"
#include "srg/text.hpp"

namespace srg {

// ---------------------------------------------------------------------------
// weights and scales
// ---------------------------------------------------------------------------

void CostWeights::validate() const {
    const auto finite_nonneg = [](double w) { return std::isfinite(w) && w >= 0.0; };
    if (!std::isfinite(alpha) || alpha < 0.0 || alpha > 1.0)
        throw Error(Errc::invalid_spec, "alpha must lie in [0,1]");
    if (!finite_nonneg(w_centroid) || !finite_nonneg(w_intensity) || !finite_nonneg(w_volume) ||
        !finite_nonneg(w_dvec) || !finite_nonneg(w_vratio) || !finite_nonneg(w_contrast))
        throw Error(Errc::invalid_spec, "attribute weights must be finite and >= 0");
    if (std::abs(w_centroid + w_intensity + w_volume - 1.0) > 1e-12)
        throw Error(Errc::invalid_spec, "vertex attribute weights must sum to 1");
    if (std::abs(w_dvec + w_vratio + w_contrast - 1.0) > 1e-12)
        throw Error(Errc::invalid_spec, "edge attribute weights must sum to 1");
}

namespace {

double floored(double sd) {
    return std::max(sd, kSigmaFloor);
}

double vec_scale(const Vec3& sd) {
    return Vec3{floored(sd.x), floored(sd.y), floored(sd.z)}.norm();
}

}  // namespace

DistanceSpec DistanceSpec::from_model(const ModelStatistics& stats) {
    const std::size_t n = stats.n();
    DistanceSpec dist;
    dist.vertex.resize(n);
    dist.edges.resize(n * n);
    for (std::size_t v = 0; v < n; ++v) {
        const ModelVertexStats& m = stats.vertices[v];
        dist.vertex[v] = {vec_scale(m.centroid_stddev), floored(m.intensity_stddev),
                          floored(m.volume_stddev)};
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j)
                continue;
            const ModelEdgeStats& m = stats.edges[i * n + j];
            dist.edges[i * n + j] = {vec_scale(m.dvec_stddev), floored(m.log_vratio_stddev),
                                     floored(m.contrast_stddev)};
        }
    return dist;
}

void DistanceSpec::scale_all(double factor) {
    if (!(factor > 0.0) || !std::isfinite(factor))
        throw Error(Errc::invalid_spec, "scale factor must be finite and > 0");
    for (auto& s : vertex) {
        s.centroid *= factor;
        s.intensity *= factor;
        s.volume *= factor;
    }
    for (auto& s : edges) {
        s.dvec *= factor;
        s.vratio *= factor;
        s.contrast *= factor;
    }
}

const DistanceSpec::EdgeScales& DistanceSpec::edge(std::size_t i, std::size_t j) const {
    const std::size_t n = vertex.size();
    if (i >= n || j >= n || i == j)
        throw Error(Errc::index_out_of_range, "distance scales: bad edge index");
    return edges[i * n + j];
}

// ---------------------------------------------------------------------------
// costs
// ---------------------------------------------------------------------------

namespace {

struct VertexCostParts {
    double centroid = 0.0;
    double intensity = 0.0;
    double volume = 0.0;
};

VertexCostParts vertex_parts(const VertexAttributes& obs, const VertexAttributes& model,
                             const DistanceSpec::VertexScales& s) {
    return {(obs.centroid - model.centroid).norm() / s.centroid,
            std::abs(obs.mean_intensity - model.mean_intensity) / s.intensity,
            std::abs(obs.volume - model.volume) / s.volume};
}

struct EdgeCostParts {
    double dvec = 0.0;
    double vratio = 0.0;
    double contrast = 0.0;
};

EdgeCostParts edge_parts(const EdgeAttributes& obs, const EdgeAttributes& model,
                         const DistanceSpec::EdgeScales& s) {
    return {(obs.centroid_vector - model.centroid_vector).norm() / s.dvec,
            std::abs(std::log(obs.volume_ratio) - std::log(model.volume_ratio)) / s.vratio,
            std::abs(obs.contrast - model.contrast) / s.contrast};
}

void require_present(const Srg& g, std::size_t v, const char* which) {
    if (v >= g.n())
        throw Error(Errc::index_out_of_range,
                    std::string(which) + " vertex index " + std::to_string(v) + " out of range");
    if (!g.vertex_present[v])
        throw Error(Errc::empty_vertex, std::string(which) + " vertex " + std::to_string(v + 1) +
                                            " is EMPTY");
}

}  // namespace

double vertex_cost(const Srg& obs, std::size_t obs_v, const Srg& model, std::size_t model_v,
                   const CostWeights& weights, const DistanceSpec& dist) {
    require_present(obs, obs_v, "observation");
    require_present(model, model_v, "model");
    const auto p = vertex_parts(obs.vertex_attrs[obs_v], model.vertex_attrs[model_v],
                                dist.vertex[model_v]);
    return weights.w_centroid * p.centroid + weights.w_intensity * p.intensity +
           weights.w_volume * p.volume;
}

double edge_cost(const Srg& obs, std::size_t oj, std::size_t ok, const Srg& model, std::size_t mj,
                 std::size_t mk, const CostWeights& weights, const DistanceSpec& dist) {
    require_present(obs, oj, "observation");
    require_present(obs, ok, "observation");
    require_present(model, mj, "model");
    require_present(model, mk, "model");
    const auto p = edge_parts(obs.edge(oj, ok), model.edge(mj, mk), dist.edge(mj, mk));
    return weights.w_dvec * p.dvec + weights.w_vratio * p.vratio + weights.w_contrast * p.contrast;
}

// ---------------------------------------------------------------------------
// joining and evaluation
// ---------------------------------------------------------------------------

Srg join_regions(const LabelVolume& super_labels, const ScalarVolume& scalar,
                 std::span<const std::uint32_t> assignment, std::size_t n_model,
                 std::span<const std::uint32_t> model_vertex_labels) {
    if (n_model == 0)
        throw Error(Errc::invalid_spec, "join_regions: model must have vertices");
    for (std::uint32_t a : assignment)
        if (a >= n_model)
            throw Error(Errc::index_out_of_range,
                        "assignment references model vertex " + std::to_string(a + 1) +
                            " of " + std::to_string(n_model));

    std::vector<std::uint32_t> region_ids(assignment.size());
    for (std::size_t j = 0; j < assignment.size(); ++j)
        region_ids[j] = static_cast<std::uint32_t>(j + 1);
    const auto region_stats = accumulate_regions(scalar, super_labels, region_ids);

    std::vector<RegionStats> buckets(n_model);
    for (std::size_t j = 0; j < assignment.size(); ++j)
        buckets[assignment[j]].add(region_stats[j]);

    std::vector<std::uint32_t> labels(model_vertex_labels.begin(), model_vertex_labels.end());
    if (labels.empty()) {
        labels.resize(n_model);
        for (std::size_t i = 0; i < n_model; ++i)
            labels[i] = static_cast<std::uint32_t>(i + 1);
    } else if (labels.size() != n_model) {
        throw Error(Errc::invalid_spec, "join_regions: one label per model vertex required");
    }
    return graph_from_stats(buckets, labels, super_labels.spacing().voxel_volume());
}

namespace {

// Eq.-style score of an already-joined observation graph against the model
// graph: observation vertex j pairs with model vertex j. Shared by evaluate
// and the exhaustive search so both produce bit-identical costs.
CostBreakdown cost_of_observation(const Srg& obs, const Srg& model_g, const CostWeights& w,
                                  const DistanceSpec& dist, const EvalOptions& opts) {
    const std::size_t n = model_g.n();
    CostBreakdown c;
    for (std::size_t j = 0; j < n; ++j) {
        if (!obs.vertex_present[j]) {
            c.v_empty += opts.p_empty;
            continue;
        }
        const auto p = vertex_parts(obs.vertex_attrs[j], model_g.vertex_attrs[j], dist.vertex[j]);
        c.v_centroid += w.w_centroid * p.centroid;
        c.v_intensity += w.w_intensity * p.intensity;
        c.v_volume += w.w_volume * p.volume;
    }
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) {
            if (j == k)
                continue;
            if (!obs.vertex_present[j] || !obs.vertex_present[k]) {
                c.e_empty += opts.p_empty;
                continue;
            }
            const auto p = edge_parts(obs.edge(j, k), model_g.edge(j, k), dist.edge(j, k));
            c.e_dvec += w.w_dvec * p.dvec;
            c.e_vratio += w.w_vratio * p.vratio;
            c.e_contrast += w.w_contrast * p.contrast;
        }
    const double nn = static_cast<double>(n);
    c.vertex_term = w.alpha * (1.0 / nn) * (c.v_centroid + c.v_intensity + c.v_volume + c.v_empty);
    c.edge_term = (1.0 - w.alpha) * (1.0 / (nn * nn)) *
                  (c.e_dvec + c.e_vratio + c.e_contrast + c.e_empty);
    c.total = c.vertex_term + c.edge_term;
    return c;
}

std::uint32_t max_label_of(const LabelVolume& labels) {
    std::uint32_t m = 0;
    for (std::uint32_t l : labels.data())
        m = std::max(m, l);
    return m;
}

}  // namespace

Solution evaluate(std::span<const std::uint32_t> assignment, const LabelVolume& super_labels,
                  const ScalarVolume& scalar, const ModelStatistics& model,
                  const CostWeights& weights, const EvalOptions& opts) {
    weights.validate();
    if (!(opts.p_empty >= 0.0) || !std::isfinite(opts.p_empty))
        throw Error(Errc::invalid_spec, "p_empty must be finite and >= 0");
    const std::uint32_t n_super = max_label_of(super_labels);
    if (assignment.size() != n_super)
        throw Error(Errc::assignment_length_mismatch,
                    "assignment covers " + std::to_string(assignment.size()) + " regions, volume has " +
                        std::to_string(n_super));

    Solution sol;
    sol.assignment.assign(assignment.begin(), assignment.end());
    sol.observation =
        join_regions(super_labels, scalar, assignment, model.n(), model.vertex_labels);
    const Srg model_g = model_graph(model);
    const DistanceSpec dist = DistanceSpec::from_model(model);
    sol.cost = cost_of_observation(sol.observation, model_g, weights, dist, opts);
    return sol;
}

// ---------------------------------------------------------------------------
// solvers
// ---------------------------------------------------------------------------

std::vector<std::uint32_t> greedy_initial(const Srg& super_graph, const ModelStatistics& model,
                                          const CostWeights& weights, const GreedyOptions& opts) {
    weights.validate();
    if (super_graph.n() == 0)
        throw Error(Errc::invalid_spec, "greedy_initial: no super vertices");
    const Srg model_g = model_graph(model);
    const DistanceSpec dist = DistanceSpec::from_model(model);

    // Zeroing the volume weight skews the weight sum away from 1, which is
    // harmless here: a common rescaling of the remaining weights cannot
    // change any argmin.
    CostWeights greedy_w = weights;
    if (!opts.include_volume)
        greedy_w.w_volume = 0.0;

    std::vector<std::uint32_t> assignment(super_graph.n());
    for (std::size_t j = 0; j < super_graph.n(); ++j) {
        std::size_t best = 0;
        double best_cost = vertex_cost(super_graph, j, model_g, 0, greedy_w, dist);
        for (std::size_t i = 1; i < model_g.n(); ++i) {
            const double c = vertex_cost(super_graph, j, model_g, i, greedy_w, dist);
            if (c < best_cost) {
                best_cost = c;
                best = i;
            }
        }
        assignment[j] = static_cast<std::uint32_t>(best);
    }
    return assignment;
}

ExhaustiveResult exhaustive_best(const LabelVolume& super_labels, const ScalarVolume& scalar,
                                 const ModelStatistics& model, const CostWeights& weights,
                                 std::uint64_t cap, const EvalOptions& opts) {
    weights.validate();
    const std::size_t n = model.n();
    const std::uint32_t n_super = max_label_of(super_labels);
    if (n == 0 || n_super == 0)
        throw Error(Errc::invalid_spec, "exhaustive_best: empty model or segmentation");

    std::uint64_t space = 1;
    for (std::uint32_t j = 0; j < n_super; ++j) {
        if (space > cap / n) {
            space = cap + 1;
            break;
        }
        space *= n;
    }
    if (space > cap)
        throw Error(Errc::instance_too_large,
                    "assignment space " + std::to_string(n) + "^" + std::to_string(n_super) +
                        " exceeds cap " + std::to_string(cap));

    std::vector<std::uint32_t> region_ids(n_super);
    for (std::uint32_t j = 0; j < n_super; ++j)
        region_ids[j] = j + 1;
    const auto region_stats = accumulate_regions(scalar, super_labels, region_ids);
    const Srg model_g = model_graph(model);
    const DistanceSpec dist = DistanceSpec::from_model(model);
    const double voxel_volume = super_labels.spacing().voxel_volume();

    std::vector<std::uint32_t> a(n_super, 0);
    std::vector<RegionStats> buckets(n);
    ExhaustiveResult best;
    bool first = true;
    while (true) {
        std::fill(buckets.begin(), buckets.end(), RegionStats{});
        for (std::uint32_t j = 0; j < n_super; ++j)
            buckets[a[j]].add(region_stats[j]);
        const Srg obs = graph_from_stats(buckets, model.vertex_labels, voxel_volume);
        const double cost = cost_of_observation(obs, model_g, weights, dist, opts).total;
        // strict < keeps the lexicographically smallest assignment on ties,
        // because enumeration runs in lexicographic order
        if (first || cost < best.cost) {
            best.assignment = a;
            best.cost = cost;
            first = false;
        }
        // next assignment: rightmost digit fastest
        std::size_t pos = n_super;
        while (pos > 0) {
            --pos;
            if (++a[pos] < n)
                break;
            a[pos] = 0;
            if (pos == 0)
                return best;
        }
    }
}

// ---------------------------------------------------------------------------
// sweeps
// ---------------------------------------------------------------------------

SweepResult sweep_weights(std::span<const CostWeights> profiles, const Srg& super_graph,
                          const LabelVolume& super_labels, const ScalarVolume& scalar,
                          const ModelStatistics& model, const GreedyOptions& greedy_opts,
                          const EvalOptions& eval_opts) {
    if (profiles.empty())
        throw Error(Errc::invalid_spec, "sweep_weights: need at least one profile");
    SweepResult result;
    result.rows.reserve(profiles.size());
    for (const CostWeights& w : profiles) {
        SweepRow row;
        row.weights = w;
        row.assignment = greedy_initial(super_graph, model, w, greedy_opts);
        row.cost = evaluate(row.assignment, super_labels, scalar, model, w, eval_opts).cost;
        result.rows.push_back(std::move(row));
    }
    std::size_t p = result.rows.size() - 1;
    while (p > 0 && result.rows[p - 1].assignment == result.rows.back().assignment)
        --p;
    result.plateau_start = p;
    return result;
}

std::vector<CostWeights> exploration_profiles(const CostWeights& base) {
    static constexpr double kPairs[][2] = {
        {0.0, 1.0},  {0.001, 0.999}, {0.005, 0.995}, {0.01, 0.99}, {0.02, 0.98},
        {0.1, 0.9},  {0.2, 0.8},    {0.5, 0.5},     {1.0, 0.0},
    };
    std::vector<CostWeights> out;
    out.reserve(std::size(kPairs));
    for (const auto& pair : kPairs) {
        CostWeights w = base;
        w.w_centroid = pair[0];
        w.w_intensity = pair[1];
        w.w_volume = 0.0;
        out.push_back(w);
    }
    return out;
}

// ---------------------------------------------------------------------------
// reports
// ---------------------------------------------------------------------------

std::string format_match_report(const Solution& solution, const ModelStatistics& model) {
    const std::size_t n = model.n();
    std::ostringstream out;
    out << "match report\n";
    out << "model_vertices=" << n << " super_regions=" << solution.assignment.size() << '\n';

    out << "assignment:";
    for (std::uint32_t a : solution.assignment)
        out << ' ' << a + 1;
    out << '\n';

    std::vector<std::vector<std::uint32_t>> regions_of(n);
    for (std::size_t j = 0; j < solution.assignment.size(); ++j)
        regions_of[solution.assignment[j]].push_back(static_cast<std::uint32_t>(j + 1));

    std::vector<std::uint32_t> empties;
    for (std::size_t i = 0; i < n; ++i) {
        out << "vertex " << i + 1 << " label=" << model.vertex_labels[i];
        if (regions_of[i].empty()) {
            out << " EMPTY\n";
            empties.push_back(static_cast<std::uint32_t>(i + 1));
            continue;
        }
        out << " regions=";
        for (std::size_t r = 0; r < regions_of[i].size(); ++r)
            out << (r ? "," : "") << regions_of[i][r];
        out << '\n';
    }
    out << "empty_vertices=";
    if (empties.empty()) {
        out << "none";
    } else {
        for (std::size_t r = 0; r < empties.size(); ++r)
            out << (r ? "," : "") << empties[r];
    }
    out << '\n';

    const CostBreakdown& c = solution.cost;
    out << "cost total=" << text::g17(c.total) << " vertex_term=" << text::g17(c.vertex_term)
        << " edge_term=" << text::g17(c.edge_term) << '\n';
    out << "cost_vertex centroid=" << text::g17(c.v_centroid)
        << " intensity=" << text::g17(c.v_intensity) << " volume=" << text::g17(c.v_volume)
        << " empty_penalty=" << text::g17(c.v_empty) << '\n';
    out << "cost_edge dvec=" << text::g17(c.e_dvec) << " vratio=" << text::g17(c.e_vratio)
        << " contrast=" << text::g17(c.e_contrast) << " empty_penalty=" << text::g17(c.e_empty)
        << '\n';
    return out.str();
}

std::string format_sweep_table(const SweepResult& sweep) {
    std::ostringstream out;
    out << "centroid\tintensity\tcost\tvertex_term\tedge_term\tassignment\n";
    for (const SweepRow& row : sweep.rows) {
        out << text::g17(row.weights.w_centroid) << '\t' << text::g17(row.weights.w_intensity)
            << '\t' << text::g17(row.cost.total) << '\t' << text::g17(row.cost.vertex_term) << '\t'
            << text::g17(row.cost.edge_term) << '\t';
        for (std::size_t j = 0; j < row.assignment.size(); ++j)
            out << (j ? "," : "") << row.assignment[j] + 1;
        out << '\n';
    }
    if (sweep.plateau_start) {
        const std::size_t p = *sweep.plateau_start;
        out << "plateau: assignment constant from centroid weight "
            << text::g17(sweep.rows[p].weights.w_centroid) << " (rows " << p + 1 << ".."
            << sweep.rows.size() << ")\n";
    }
    return out.str();
}

}  // namespace srg
