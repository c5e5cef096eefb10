#include "srg/pipeline.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "srg/error.hpp"
#include "srg/text.hpp"
#include "srg/version.hpp"
#include "srg/volume_io.hpp"

namespace srg {

namespace {

[[noreturn]] void bad_config(const std::string& what) {
    throw Error(Errc::invalid_spec, "pipeline config: " + what);
}

double number_or_fail(const std::string& value, const std::string& key) {
    double out;
    if (!text::parse_double(value, out))
        bad_config("bad number for " + key + ": '" + value + "'");
    return out;
}

void parse_weight_triple(const std::string& value, const std::string& key, double& a, double& b,
                         double& c) {
    const auto parts = text::split(value, ',');
    if (parts.size() != 3 || !text::parse_double(parts[0], a) || !text::parse_double(parts[1], b) ||
        !text::parse_double(parts[2], c))
        bad_config(key + " needs three comma-separated numbers");
}

}  // namespace

PipelineConfig parse_pipeline_config(const std::string& textdata) {
    PipelineConfig cfg;
    std::istringstream in(textdata);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = text::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            bad_config("line " + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key = text::trim(line.substr(0, eq));
        const std::string value = text::trim(line.substr(eq + 1));

        if (key == "model") {
            cfg.model_path = value;
        } else if (key == "scalar") {
            cfg.scalar_path = value;
        } else if (key == "truth") {
            cfg.truth_path = value;
        } else if (key == "out_dir") {
            cfg.out_dir = value;
        } else if (key == "min_depth") {
            cfg.min_depth = number_or_fail(value, key);
        } else if (key == "element") {
            if (value == "cross6")
                cfg.element = StructuringElement::cross6;
            else if (value == "cube26")
                cfg.element = StructuringElement::cube26;
            else
                bad_config("element must be cross6 or cube26");
        } else if (key == "alpha") {
            cfg.weights.alpha = number_or_fail(value, key);
        } else if (key == "vweights") {
            parse_weight_triple(value, key, cfg.weights.w_centroid, cfg.weights.w_intensity,
                                cfg.weights.w_volume);
        } else if (key == "eweights") {
            parse_weight_triple(value, key, cfg.weights.w_dvec, cfg.weights.w_vratio,
                                cfg.weights.w_contrast);
        } else if (key == "p_empty") {
            cfg.eval.p_empty = number_or_fail(value, key);
        } else if (key == "greedy_volume") {
            if (value == "0")
                cfg.greedy.include_volume = false;
            else if (value == "1")
                cfg.greedy.include_volume = true;
            else
                bad_config("greedy_volume must be 0 or 1");
        } else if (key == "seed") {
            if (!text::parse_u64(value, cfg.seed))
                bad_config("bad seed '" + value + "'");
        } else {
            bad_config("unknown key '" + key + "'");
        }
    }
    return cfg;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw Error(Errc::io_failure, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_pipeline_config(ss.str());
}

LabelVolume predicted_label_volume(const LabelVolume& super_labels,
                                   std::span<const std::uint32_t> assignment,
                                   std::span<const std::uint32_t> model_vertex_labels) {
    std::vector<std::uint32_t> out(super_labels.size(), 0);
    const auto src = super_labels.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const std::uint32_t region = src[i];
        if (region == 0)
            continue;
        if (region > assignment.size())
            throw Error(Errc::assignment_length_mismatch,
                        "region " + std::to_string(region) + " has no assignment entry");
        const std::uint32_t vertex = assignment[region - 1];
        if (vertex >= model_vertex_labels.size())
            throw Error(Errc::index_out_of_range, "assignment references model vertex " +
                                                      std::to_string(vertex + 1) + " of " +
                                                      std::to_string(model_vertex_labels.size()));
        out[i] = model_vertex_labels[vertex];
    }
    return {super_labels.dims(), super_labels.spacing(), std::move(out)};
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out)
        throw Error(Errc::io_failure, "cannot open " + path.string() + " for writing");
    out << content;
    if (!out)
        throw Error(Errc::io_failure, "cannot write " + path.string());
}

void require_input(const std::filesystem::path& path, const char* what) {
    if (path.empty())
        throw Error(Errc::invalid_spec, std::string("pipeline config: ") + what + " is required");
    if (!std::filesystem::exists(path))
        throw Error(Errc::io_failure, std::string(what) + " not found: " + path.string());
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config) {
    // every input is checked before the first byte of output is written, so a
    // failed run leaves no partial artifact tree behind
    require_input(config.model_path, "model");
    require_input(config.scalar_path, "scalar");
    if (!config.truth_path.empty())
        require_input(config.truth_path, "truth");
    if (config.out_dir.empty())
        throw Error(Errc::invalid_spec, "pipeline config: out_dir is required");
    config.weights.validate();

    const ModelStatistics model = load_model(config.model_path);
    const ScalarVolume scalar = load_scalar(config.scalar_path);
    std::optional<LabelVolume> truth;
    if (!config.truth_path.empty())
        truth = load_label(config.truth_path);

    std::filesystem::create_directories(config.out_dir);

    const GradientVolume gradient = morphological_gradient(scalar, config.element);
    const SupersegResult ws = watershed(gradient, config.min_depth);
    save_label(ws.labels, config.out_dir / "super.srgvol", VolumeFormat::raw);

    std::vector<std::uint32_t> region_ids(ws.n_super);
    for (std::uint32_t j = 0; j < ws.n_super; ++j)
        region_ids[j] = j + 1;
    const Srg super_graph = build_srg(scalar, ws.labels, region_ids);
    save_graph(super_graph, config.out_dir / "super.srg");

    const auto assignment = greedy_initial(super_graph, model, config.weights, config.greedy);

    PipelineResult result;
    result.n_super = ws.n_super;
    result.out_dir = config.out_dir;
    result.solution =
        evaluate(assignment, ws.labels, scalar, model, config.weights, config.eval);
    save_graph(result.solution.observation, config.out_dir / "obs.srg");
    write_text(config.out_dir / "report.txt", format_match_report(result.solution, model));

    const LabelVolume predicted =
        predicted_label_volume(ws.labels, assignment, model.vertex_labels);
    save_label(predicted, config.out_dir / "seg.srgvol", VolumeFormat::raw);

    if (truth) {
        result.dice = dice_report(predicted, *truth, model.vertex_labels);
        write_text(config.out_dir / "eval.txt", format_dice_report(*result.dice));
    }

    render_overlay(scalar, predicted, Axis::z, scalar.dims().nz / 2, {},
                   config.out_dir / "overlay.png");

    nlohmann::json manifest;
    manifest["version"] = kVersion;
    manifest["seed"] = config.seed;
    manifest["inputs"] = {{"model", config.model_path.string()},
                          {"scalar", config.scalar_path.string()}};
    if (!config.truth_path.empty())
        manifest["inputs"]["truth"] = config.truth_path.string();
    manifest["parameters"] = {
        {"min_depth", config.min_depth},
        {"element", config.element == StructuringElement::cross6 ? "cross6" : "cube26"},
        {"alpha", config.weights.alpha},
        {"vweights",
         {config.weights.w_centroid, config.weights.w_intensity, config.weights.w_volume}},
        {"eweights", {config.weights.w_dvec, config.weights.w_vratio, config.weights.w_contrast}},
        {"p_empty", config.eval.p_empty},
        {"greedy_volume", config.greedy.include_volume},
    };
    manifest["results"] = {{"n_super", ws.n_super},
                           {"cost_total", result.solution.cost.total},
                           {"cost_vertex_term", result.solution.cost.vertex_term},
                           {"cost_edge_term", result.solution.cost.edge_term}};
    if (result.dice)
        manifest["results"]["macro_dice"] = result.dice->macro_dice;
    manifest["outputs"] = {"super.srgvol", "super.srg", "seg.srgvol", "obs.srg", "report.txt",
                           "overlay.png"};
    if (truth)
        manifest["outputs"].push_back("eval.txt");
    write_text(config.out_dir / "manifest.json", manifest.dump(2) + "\n");

    return result;
}

}  // namespace srg
