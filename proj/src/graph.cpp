#include "srg/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "srg/error.hpp"
#include "srg/text.hpp"

namespace srg {

namespace {

[[noreturn]] void bad_index(std::size_t i, std::size_t j, std::size_t n) {
    throw Error(Errc::index_out_of_range, "edge (" + std::to_string(i) + "," + std::to_string(j) +
                                              ") invalid for graph of " + std::to_string(n) +
                                              " vertices");
}

}  // namespace

const EdgeAttributes& Srg::edge(std::size_t i, std::size_t j) const {
    if (i >= n() || j >= n() || i == j)
        bad_index(i, j, n());
    return edge_attrs[i * n() + j];
}

EdgeAttributes& Srg::edge(std::size_t i, std::size_t j) {
    if (i >= n() || j >= n() || i == j)
        bad_index(i, j, n());
    return edge_attrs[i * n() + j];
}

const ModelEdgeStats& ModelStatistics::edge(std::size_t i, std::size_t j) const {
    if (i >= n() || j >= n() || i == j)
        bad_index(i, j, n());
    return edges[i * n() + j];
}

ModelEdgeStats& ModelStatistics::edge(std::size_t i, std::size_t j) {
    if (i >= n() || j >= n() || i == j)
        bad_index(i, j, n());
    return edges[i * n() + j];
}

// ---------------------------------------------------------------------------
// attribute extraction
// ---------------------------------------------------------------------------

VertexAttributes RegionStats::to_attributes(double voxel_volume) const {
    const double c = static_cast<double>(voxel_count);
    return {position_sum / c, intensity_sum / c, c * voxel_volume};
}

std::vector<RegionStats> accumulate_regions(const ScalarVolume& scalar, const LabelVolume& labels,
                                            std::span<const std::uint32_t> label_map) {
    require_same_geometry(scalar, labels);

    std::uint32_t max_mapped = 0;
    for (std::uint32_t id : label_map)
        max_mapped = std::max(max_mapped, id);
    constexpr std::uint32_t kUnmapped = 0xffffffffu;
    std::vector<std::uint32_t> lut(static_cast<std::size_t>(max_mapped) + 1, kUnmapped);
    for (std::size_t k = 0; k < label_map.size(); ++k) {
        if (lut[label_map[k]] != kUnmapped)
            throw Error(Errc::invalid_spec,
                        "duplicate id " + std::to_string(label_map[k]) + " in label map");
        lut[label_map[k]] = static_cast<std::uint32_t>(k);
    }

    std::vector<RegionStats> stats(label_map.size());
    const Dims d = labels.dims();
    const auto lab = labels.data();
    const auto val = scalar.data();
    std::size_t i = 0;
    for (std::uint32_t z = 0; z < d.nz; ++z)
        for (std::uint32_t y = 0; y < d.ny; ++y)
            for (std::uint32_t x = 0; x < d.nx; ++x, ++i) {
                const std::uint32_t l = lab[i];
                if (l > max_mapped || lut[l] == kUnmapped)
                    continue;
                RegionStats& s = stats[lut[l]];
                ++s.voxel_count;
                s.position_sum = s.position_sum + labels.voxel_center(x, y, z);
                s.intensity_sum += val[i];
            }
    return stats;
}

EdgeAttributes edge_between(const VertexAttributes& source, const VertexAttributes& target) {
    return {target.centroid - source.centroid, target.volume / source.volume,
            target.mean_intensity - source.mean_intensity};
}

Srg graph_from_stats(std::span<const RegionStats> buckets, std::span<const std::uint32_t> labels,
                     double voxel_volume) {
    if (labels.size() != buckets.size())
        throw Error(Errc::invalid_spec, "graph_from_stats: one label per bucket required");
    const std::size_t n = buckets.size();
    Srg g;
    g.vertex_labels.assign(labels.begin(), labels.end());
    g.vertex_attrs.resize(n);
    g.vertex_present.resize(n);
    g.edge_attrs.resize(n * n);
    for (std::size_t k = 0; k < n; ++k) {
        g.vertex_present[k] = buckets[k].voxel_count > 0;
        if (g.vertex_present[k])
            g.vertex_attrs[k] = buckets[k].to_attributes(voxel_volume);
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j && g.vertex_present[i] && g.vertex_present[j])
                g.edge_attrs[i * n + j] = edge_between(g.vertex_attrs[i], g.vertex_attrs[j]);
    return g;
}

Srg build_srg(const ScalarVolume& scalar, const LabelVolume& labels,
              std::span<const std::uint32_t> label_map) {
    const auto stats = accumulate_regions(scalar, labels, label_map);
    for (std::size_t k = 0; k < stats.size(); ++k)
        if (stats[k].voxel_count == 0)
            throw Error(Errc::missing_label,
                        "label " + std::to_string(label_map[k]) + " absent from volume");
    return graph_from_stats(stats, label_map, labels.spacing().voxel_volume());
}

// ---------------------------------------------------------------------------
// model fitting
// ---------------------------------------------------------------------------

namespace {

struct MeanSd {
    double mean = 0.0;
    double sd = kSigmaFloor;
};

// Sample mean and unbiased (K-1) stddev with the kSigmaFloor floor. Two-pass;
// K is tiny here.
MeanSd fit(std::span<const double> xs) {
    const double k = static_cast<double>(xs.size());
    double sum = 0.0;
    for (double x : xs)
        sum += x;
    MeanSd out{sum / k, kSigmaFloor};
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) {
            const double d = x - out.mean;
            ss += d * d;
        }
        out.sd = std::max(std::sqrt(ss / (k - 1.0)), kSigmaFloor);
    }
    return out;
}

// Applies fit() to one extracted scalar per graph.
template <typename Extract>
MeanSd fit_over(std::span<const Srg> graphs, Extract&& extract) {
    std::vector<double> xs(graphs.size());
    for (std::size_t g = 0; g < graphs.size(); ++g)
        xs[g] = extract(graphs[g]);
    return fit(xs);
}

}  // namespace

ModelStatistics fit_model(std::span<const Srg> graphs) {
    if (graphs.empty())
        throw Error(Errc::invalid_spec, "fit_model: need at least one graph");
    const Srg& first = graphs.front();
    const std::size_t n = first.n();
    for (const Srg& g : graphs) {
        if (g.vertex_labels != first.vertex_labels)
            throw Error(Errc::inconsistent_label_maps,
                        "training graphs carry different vertex sets");
        for (std::size_t k = 0; k < g.n(); ++k)
            if (!g.vertex_present[k])
                throw Error(Errc::inconsistent_label_maps,
                            "training graph has an EMPTY vertex (label " +
                                std::to_string(g.vertex_labels[k]) + ")");
    }

    ModelStatistics stats;
    stats.vertex_labels = first.vertex_labels;
    stats.vertices.resize(n);
    stats.edges.resize(n * n);
    stats.sample_count = static_cast<std::uint32_t>(graphs.size());

    for (std::size_t v = 0; v < n; ++v) {
        ModelVertexStats& m = stats.vertices[v];
        const auto cx = fit_over(graphs, [&](const Srg& g) { return g.vertex_attrs[v].centroid.x; });
        const auto cy = fit_over(graphs, [&](const Srg& g) { return g.vertex_attrs[v].centroid.y; });
        const auto cz = fit_over(graphs, [&](const Srg& g) { return g.vertex_attrs[v].centroid.z; });
        m.centroid_mean = {cx.mean, cy.mean, cz.mean};
        m.centroid_stddev = {cx.sd, cy.sd, cz.sd};
        const auto in = fit_over(graphs, [&](const Srg& g) { return g.vertex_attrs[v].mean_intensity; });
        m.intensity_mean = in.mean;
        m.intensity_stddev = in.sd;
        const auto vo = fit_over(graphs, [&](const Srg& g) { return g.vertex_attrs[v].volume; });
        m.volume_mean = vo.mean;
        m.volume_stddev = vo.sd;
    }

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j)
                continue;
            ModelEdgeStats& m = stats.edges[i * n + j];
            const auto ex = fit_over(graphs, [&](const Srg& g) { return g.edge(i, j).centroid_vector.x; });
            const auto ey = fit_over(graphs, [&](const Srg& g) { return g.edge(i, j).centroid_vector.y; });
            const auto ez = fit_over(graphs, [&](const Srg& g) { return g.edge(i, j).centroid_vector.z; });
            m.dvec_mean = {ex.mean, ey.mean, ez.mean};
            m.dvec_stddev = {ex.sd, ey.sd, ez.sd};
            // Ratios are fitted in the log domain: the arithmetic mean of raw
            // ratios would break the r(i,j) = 1/r(j,i) antisymmetry. For K=1
            // the sample is kept verbatim so the model graph reproduces the
            // training graph bit for bit.
            const auto lv = fit_over(graphs, [&](const Srg& g) { return std::log(g.edge(i, j).volume_ratio); });
            m.vratio_mean = graphs.size() == 1 ? first.edge(i, j).volume_ratio : std::exp(lv.mean);
            m.log_vratio_stddev = lv.sd;
            const auto co = fit_over(graphs, [&](const Srg& g) { return g.edge(i, j).contrast; });
            m.contrast_mean = co.mean;
            m.contrast_stddev = co.sd;
        }
    return stats;
}

Srg model_graph(const ModelStatistics& stats) {
    const std::size_t n = stats.n();
    Srg g;
    g.vertex_labels = stats.vertex_labels;
    g.vertex_attrs.resize(n);
    g.vertex_present.assign(n, true);
    g.edge_attrs.resize(n * n);
    for (std::size_t v = 0; v < n; ++v)
        g.vertex_attrs[v] = {stats.vertices[v].centroid_mean, stats.vertices[v].intensity_mean,
                             stats.vertices[v].volume_mean};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) {
                const ModelEdgeStats& m = stats.edges[i * n + j];
                g.edge_attrs[i * n + j] = {m.dvec_mean, m.vratio_mean, m.contrast_mean};
            }
    return g;
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

namespace {

std::string vec_field(const char* key, const Vec3& v) {
    return std::string(key) + "=" + text::g17(v.x) + "," + text::g17(v.y) + "," + text::g17(v.z);
}

[[noreturn]] void bad_graph(std::size_t line, const std::string& what) {
    throw Error(Errc::corrupt_header, "srg text line " + std::to_string(line) + ": " + what);
}

struct FieldReader {
    const std::vector<std::string>& tokens;
    std::size_t line;

    // token of the form key=value
    std::string value(std::size_t idx, const std::string& key) const {
        if (idx >= tokens.size())
            bad_graph(line, "missing field " + key);
        const std::string prefix = key + "=";
        if (tokens[idx].rfind(prefix, 0) != 0)
            bad_graph(line, "expected " + key + "=..., got '" + tokens[idx] + "'");
        return tokens[idx].substr(prefix.size());
    }

    double real(std::size_t idx, const std::string& key) const {
        double out;
        if (!text::parse_double(value(idx, key), out))
            bad_graph(line, "bad number in " + key);
        return out;
    }

    Vec3 vec(std::size_t idx, const std::string& key) const {
        const auto parts = text::split(value(idx, key), ',');
        Vec3 v;
        if (parts.size() != 3 || !text::parse_double(parts[0], v.x) ||
            !text::parse_double(parts[1], v.y) || !text::parse_double(parts[2], v.z))
            bad_graph(line, key + " needs three comma-separated numbers");
        return v;
    }

    std::uint64_t integer(std::size_t idx, const std::string& what) const {
        if (idx >= tokens.size())
            bad_graph(line, "missing " + what);
        std::uint64_t out;
        if (!text::parse_u64(tokens[idx], out))
            bad_graph(line, "bad " + what + " '" + tokens[idx] + "'");
        return out;
    }
};

void append_vertex_line(std::ostringstream& out, const Srg& g, std::size_t v) {
    out << "vertex " << g.vertex_labels[v];
    if (!g.vertex_present[v]) {
        out << " EMPTY\n";
        return;
    }
    const VertexAttributes& a = g.vertex_attrs[v];
    out << ' ' << vec_field("centroid", a.centroid) << " intensity=" << text::g17(a.mean_intensity)
        << " volume=" << text::g17(a.volume) << '\n';
}

void append_edge_line(std::ostringstream& out, std::size_t i, std::size_t j,
                      const EdgeAttributes& e) {
    out << "edge " << i + 1 << ' ' << j + 1 << ' ' << vec_field("dvec", e.centroid_vector)
        << " vratio=" << text::g17(e.volume_ratio) << " contrast=" << text::g17(e.contrast)
        << '\n';
}

// Shared scaffold for parse_graph / parse_model: validates the header, hands
// each record line to the callbacks, and records which ordered pairs carried
// an edge line (edge_seen, n*n) so the callers can enforce their census.
struct GraphParser {
    std::size_t n = 0;
    bool is_model = false;
    std::uint64_t k = 0;
    std::vector<bool> edge_seen;

    template <typename VertexFn, typename EdgeFn, typename StddevFn>
    void run(const std::string& textdata, VertexFn&& on_vertex, EdgeFn&& on_edge,
             StddevFn&& on_stddev) {
        std::istringstream in(textdata);
        std::string raw;
        std::size_t line_no = 0;
        bool saw_header = false;
        std::size_t vertex_count = 0;

        while (std::getline(in, raw)) {
            ++line_no;
            const std::string line = text::trim(raw);
            if (line.empty() || line[0] == '#')
                continue;
            const auto tokens = text::split_ws(line);
            const FieldReader f{tokens, line_no};

            if (!saw_header) {
                if (tokens.size() < 3 || tokens[0] != "srg" || tokens[1] != "v1")
                    bad_graph(line_no, "expected header 'srg v1 n=<n>'");
                std::uint64_t n64;
                if (!text::parse_u64(f.value(2, "n"), n64) || n64 == 0)
                    bad_graph(line_no, "bad vertex count");
                n = static_cast<std::size_t>(n64);
                if (tokens.size() > 3) {
                    if (!text::parse_u64(f.value(3, "k"), k) || k == 0)
                        bad_graph(line_no, "bad sample count");
                    is_model = true;
                }
                if (tokens.size() > 4)
                    bad_graph(line_no, "trailing tokens after header");
                saw_header = true;
                edge_seen.assign(n * n, false);
                continue;
            }

            if (tokens[0] == "vertex") {
                if (vertex_count == n)
                    bad_graph(line_no, "more vertex lines than the header declares");
                on_vertex(vertex_count, f);
                ++vertex_count;
            } else if (tokens[0] == "edge") {
                if (vertex_count != n)
                    bad_graph(line_no, "edge line before all vertices");
                const auto i = f.integer(1, "source index");
                const auto j = f.integer(2, "target index");
                if (i < 1 || i > n || j < 1 || j > n || i == j)
                    bad_graph(line_no, "edge indices out of range");
                if (edge_seen[(i - 1) * n + (j - 1)])
                    bad_graph(line_no, "duplicate edge");
                edge_seen[(i - 1) * n + (j - 1)] = true;
                on_edge(i - 1, j - 1, f);
            } else if (tokens[0] == "stddev") {
                if (!is_model)
                    bad_graph(line_no, "stddev line in a plain graph file");
                on_stddev(f);
            } else {
                bad_graph(line_no, "unknown record '" + tokens[0] + "'");
            }
        }
        if (!saw_header)
            throw Error(Errc::corrupt_header, "srg text: empty file");
        if (vertex_count != n)
            bad_graph(line_no, "fewer vertex lines than the header declares");
    }
};

}  // namespace

std::string serialize_graph(const Srg& graph) {
    std::ostringstream out;
    out << "srg v1 n=" << graph.n() << '\n';
    for (std::size_t v = 0; v < graph.n(); ++v)
        append_vertex_line(out, graph, v);
    for (std::size_t i = 0; i < graph.n(); ++i)
        for (std::size_t j = 0; j < graph.n(); ++j)
            if (i != j && graph.vertex_present[i] && graph.vertex_present[j])
                append_edge_line(out, i, j, graph.edge(i, j));
    return out.str();
}

Srg parse_graph(const std::string& textdata) {
    GraphParser p;
    Srg g;
    p.run(
        textdata,
        [&](std::size_t v, const FieldReader& f) {
            if (g.vertex_attrs.empty()) {
                g.vertex_labels.resize(p.n);
                g.vertex_attrs.resize(p.n);
                g.vertex_present.assign(p.n, true);
                g.edge_attrs.resize(p.n * p.n);
            }
            g.vertex_labels[v] = static_cast<std::uint32_t>(f.integer(1, "vertex id"));
            if (f.tokens.size() == 3 && f.tokens[2] == "EMPTY") {
                g.vertex_present[v] = false;
                return;
            }
            g.vertex_attrs[v] = {f.vec(2, "centroid"), f.real(3, "intensity"), f.real(4, "volume")};
        },
        [&](std::size_t i, std::size_t j, const FieldReader& f) {
            if (!g.vertex_present[i] || !g.vertex_present[j])
                bad_graph(f.line, "edge references an EMPTY vertex");
            g.edge_attrs[i * p.n + j] = {f.vec(3, "dvec"), f.real(4, "vratio"), f.real(5, "contrast")};
        },
        [&](const FieldReader&) {});
    if (p.is_model)
        throw Error(Errc::corrupt_header, "srg text: model file (k= header); use load_model");

    // every ordered pair between present vertices must have appeared
    for (std::size_t i = 0; i < g.n(); ++i)
        for (std::size_t j = 0; j < g.n(); ++j)
            if (i != j && g.vertex_present[i] && g.vertex_present[j] && !p.edge_seen[i * g.n() + j])
                throw Error(Errc::corrupt_header, "srg text: missing edge " + std::to_string(i + 1) +
                                                      " " + std::to_string(j + 1));
    return g;
}

std::string serialize_model(const ModelStatistics& stats) {
    std::ostringstream out;
    out << "srg v1 n=" << stats.n() << " k=" << stats.sample_count << '\n';
    const Srg means = model_graph(stats);
    for (std::size_t v = 0; v < stats.n(); ++v) {
        append_vertex_line(out, means, v);
        const ModelVertexStats& m = stats.vertices[v];
        out << "stddev " << stats.vertex_labels[v] << ' ' << vec_field("centroid", m.centroid_stddev)
            << " intensity=" << text::g17(m.intensity_stddev)
            << " volume=" << text::g17(m.volume_stddev) << '\n';
    }
    for (std::size_t i = 0; i < stats.n(); ++i)
        for (std::size_t j = 0; j < stats.n(); ++j) {
            if (i == j)
                continue;
            append_edge_line(out, i, j, means.edge(i, j));
            const ModelEdgeStats& m = stats.edge(i, j);
            out << "stddev " << i + 1 << ' ' << j + 1 << ' ' << vec_field("dvec", m.dvec_stddev)
                << " vratio=" << text::g17(m.log_vratio_stddev)
                << " contrast=" << text::g17(m.contrast_stddev) << '\n';
        }
    return out.str();
}

ModelStatistics parse_model(const std::string& textdata) {
    GraphParser p;
    ModelStatistics stats;
    // stddev lines attach to the most recent vertex/edge line
    enum class Last { none, vertex, edge };
    Last last = Last::none;
    std::size_t last_v = 0, last_i = 0, last_j = 0;
    std::size_t vertex_sd = 0, edge_sd = 0;

    p.run(
        textdata,
        [&](std::size_t v, const FieldReader& f) {
            if (stats.vertices.empty()) {
                stats.vertex_labels.resize(p.n);
                stats.vertices.resize(p.n);
                stats.edges.resize(p.n * p.n);
            }
            stats.vertex_labels[v] = static_cast<std::uint32_t>(f.integer(1, "vertex id"));
            if (f.tokens.size() == 3 && f.tokens[2] == "EMPTY")
                bad_graph(f.line, "model files cannot carry EMPTY vertices");
            ModelVertexStats& m = stats.vertices[v];
            m.centroid_mean = f.vec(2, "centroid");
            m.intensity_mean = f.real(3, "intensity");
            m.volume_mean = f.real(4, "volume");
            last = Last::vertex;
            last_v = v;
        },
        [&](std::size_t i, std::size_t j, const FieldReader& f) {
            ModelEdgeStats& m = stats.edges[i * p.n + j];
            m.dvec_mean = f.vec(3, "dvec");
            m.vratio_mean = f.real(4, "vratio");
            m.contrast_mean = f.real(5, "contrast");
            last = Last::edge;
            last_i = i;
            last_j = j;
        },
        [&](const FieldReader& f) {
            if (last == Last::vertex) {
                ModelVertexStats& m = stats.vertices[last_v];
                m.centroid_stddev = f.vec(2, "centroid");
                m.intensity_stddev = f.real(3, "intensity");
                m.volume_stddev = f.real(4, "volume");
                ++vertex_sd;
            } else if (last == Last::edge) {
                ModelEdgeStats& m = stats.edges[last_i * p.n + last_j];
                m.dvec_stddev = f.vec(3, "dvec");
                m.log_vratio_stddev = f.real(4, "vratio");
                m.contrast_stddev = f.real(5, "contrast");
                ++edge_sd;
            } else {
                bad_graph(f.line, "stddev line with no preceding vertex/edge");
            }
            last = Last::none;
        });

    if (!p.is_model)
        throw Error(Errc::corrupt_header, "srg text: plain graph file; use load_graph");
    if (vertex_sd != p.n || edge_sd != p.n * (p.n - 1))
        throw Error(Errc::corrupt_header, "srg text: missing stddev lines in model file");
    for (std::size_t i = 0; i < p.n; ++i)
        for (std::size_t j = 0; j < p.n; ++j)
            if (i != j && !p.edge_seen[i * p.n + j])
                throw Error(Errc::corrupt_header, "srg text: missing edge " + std::to_string(i + 1) +
                                                      " " + std::to_string(j + 1));
    stats.sample_count = static_cast<std::uint32_t>(p.k);
    return stats;
}

namespace {

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw Error(Errc::io_failure, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out)
        throw Error(Errc::io_failure, "cannot open " + path.string() + " for writing");
    out << content;
    if (!out)
        throw Error(Errc::io_failure, "cannot write " + path.string());
}

}  // namespace

void save_graph(const Srg& graph, const std::filesystem::path& path) {
    write_text_file(path, serialize_graph(graph));
}

Srg load_graph(const std::filesystem::path& path) {
    return parse_graph(read_text_file(path));
}

void save_model(const ModelStatistics& stats, const std::filesystem::path& path) {
    write_text_file(path, serialize_model(stats));
}

ModelStatistics load_model(const std::filesystem::path& path) {
    return parse_model(read_text_file(path));
}

}  // namespace srg
