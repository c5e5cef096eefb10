// srg: structural segmentation of labeled volumes via statistical-relational
// graph matching. Subcommands cover the full pipeline plus its individual
// stages; see --help per subcommand.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "srg/error.hpp"
#include "srg/evaluation.hpp"
#include "srg/graph.hpp"
#include "srg/matching.hpp"
#include "srg/phantom.hpp"
#include "srg/pipeline.hpp"
#include "srg/superseg.hpp"
#include "srg/text.hpp"
#include "srg/version.hpp"
#include "srg/volume_io.hpp"

namespace {

using srg::Errc;
using srg::Error;

// --- small shared helpers ---------------------------------------------------

void parse_triple(const std::string& value, const char* what, double& a, double& b, double& c) {
    const auto parts = srg::text::split(value, ',');
    if (parts.size() != 3 || !srg::text::parse_double(parts[0], a) ||
        !srg::text::parse_double(parts[1], b) || !srg::text::parse_double(parts[2], c))
        throw Error(Errc::invalid_spec, std::string(what) + " needs three comma-separated numbers");
}

srg::StructuringElement parse_element(const std::string& name) {
    if (name == "cross6")
        return srg::StructuringElement::cross6;
    if (name == "cube26")
        return srg::StructuringElement::cube26;
    throw Error(Errc::invalid_spec, "element must be cross6 or cube26");
}

srg::Axis parse_axis(const std::string& name) {
    if (name == "x")
        return srg::Axis::x;
    if (name == "y")
        return srg::Axis::y;
    if (name == "z")
        return srg::Axis::z;
    throw Error(Errc::invalid_spec, "axis must be x, y, or z");
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out)
        throw Error(Errc::io_failure, "cannot open " + path.string() + " for writing");
    out << content;
    if (!out)
        throw Error(Errc::io_failure, "cannot write " + path.string());
}

// Regions must be labeled 1..n for assignments to index them.
std::vector<std::uint32_t> contiguous_region_ids(const srg::LabelVolume& super) {
    const auto ids = srg::distinct_labels(super);
    for (std::size_t k = 0; k < ids.size(); ++k)
        if (ids[k] != k + 1)
            throw Error(Errc::invalid_spec,
                        "super-segmentation labels must be contiguous from 1 (found gap at " +
                            std::to_string(k + 1) + ")");
    if (ids.empty())
        throw Error(Errc::empty_volume, "super-segmentation has no regions");
    return ids;
}

// --- per-subcommand option bags ----------------------------------------------

struct PhantomArgs {
    std::string spec_path;
    std::string out_prefix;
    std::string format = "srgvol";
};

struct SupersegArgs {
    std::string in_path;
    double min_depth = 0.0;
    std::string element = "cross6";
    std::string out_path;
};

struct BuildModelArgs {
    std::vector<std::string> scalars;
    std::vector<std::string> labels;
    std::string out_path;
};

struct MatchArgs {
    std::string model_path;
    std::string scalar_path;
    std::string super_path;
    double alpha = 0.5;
    std::string vweights;
    std::string eweights;
    double p_empty = 10.0;
    bool greedy_volume = false;
    std::string out_path;
    std::string report_path;
};

struct SweepArgs {
    std::string model_path;
    std::string scalar_path;
    std::string super_path;
    std::string profiles_path;
    double alpha = 0.5;
    std::string eweights;
    double p_empty = 10.0;
    bool greedy_volume = false;
    std::string out_path;
    bool json = false;
};

struct EvalArgs {
    std::string pred_path;
    std::string truth_path;
    std::string out_path;
    bool json = false;
};

struct RenderArgs {
    std::string scalar_path;
    std::string labels_path;
    std::string axis = "z";
    std::uint32_t index = 0;
    std::string out_path;
};

srg::CostWeights weights_from(double alpha, const std::string& vweights,
                              const std::string& eweights) {
    srg::CostWeights w;
    w.alpha = alpha;
    if (!vweights.empty())
        parse_triple(vweights, "--vweights", w.w_centroid, w.w_intensity, w.w_volume);
    if (!eweights.empty())
        parse_triple(eweights, "--eweights", w.w_dvec, w.w_vratio, w.w_contrast);
    w.validate();
    return w;
}

// --- subcommand bodies --------------------------------------------------------

int run_phantom(const PhantomArgs& args) {
    if (args.format != "srgvol" && args.format != "nii")
        throw Error(Errc::invalid_spec, "--format must be srgvol or nii");
    const auto spec = srg::load_phantom_spec(args.spec_path);
    const auto [scalar, labels] = srg::generate_phantom(spec);
    const std::string ext = "." + args.format;
    const std::filesystem::path scalar_path = args.out_prefix + "_scalar" + ext;
    const std::filesystem::path labels_path = args.out_prefix + "_labels" + ext;
    srg::save_scalar(scalar, scalar_path);
    srg::save_label(labels, labels_path);
    std::cout << "wrote " << scalar_path.string() << '\n';
    std::cout << "wrote " << labels_path.string() << '\n';
    return 0;
}

int run_superseg(const SupersegArgs& args) {
    const auto vol = srg::load_scalar(args.in_path);
    const auto grad = srg::morphological_gradient(vol, parse_element(args.element));
    const auto result = srg::watershed(grad, args.min_depth);
    srg::save_label(result.labels, args.out_path);
    std::cout << "n_super=" << result.n_super << '\n';
    return 0;
}

int run_build_model(const BuildModelArgs& args) {
    if (args.scalars.empty() || args.scalars.size() != args.labels.size())
        throw Error(Errc::invalid_spec, "--scalar and --labels must be given in matching pairs");

    std::vector<srg::Srg> graphs;
    std::vector<std::uint32_t> label_map;
    for (std::size_t k = 0; k < args.scalars.size(); ++k) {
        const auto scalar = srg::load_scalar(args.scalars[k]);
        const auto labels = srg::load_label(args.labels[k]);
        const auto ids = srg::distinct_labels(labels);
        if (k == 0)
            label_map = ids;
        else if (ids != label_map)
            throw Error(Errc::inconsistent_label_maps,
                        args.labels[k] + " carries different structure labels than " +
                            args.labels[0]);
        graphs.push_back(srg::build_srg(scalar, labels, label_map));
    }
    const auto stats = srg::fit_model(graphs);
    srg::save_model(stats, args.out_path);
    std::cout << "wrote " << args.out_path << " (n=" << stats.n() << " k=" << stats.sample_count
              << ")\n";
    return 0;
}

int run_match(const MatchArgs& args) {
    const auto model = srg::load_model(args.model_path);
    const auto scalar = srg::load_scalar(args.scalar_path);
    const auto super = srg::load_label(args.super_path);
    const auto weights = weights_from(args.alpha, args.vweights, args.eweights);

    const auto region_ids = contiguous_region_ids(super);
    const auto super_graph = srg::build_srg(scalar, super, region_ids);
    const srg::GreedyOptions greedy{args.greedy_volume};
    const auto assignment = srg::greedy_initial(super_graph, model, weights, greedy);
    const srg::EvalOptions opts{args.p_empty};
    const auto solution = srg::evaluate(assignment, super, scalar, model, weights, opts);

    const auto predicted = srg::predicted_label_volume(super, assignment, model.vertex_labels);
    srg::save_label(predicted, args.out_path);
    if (!args.report_path.empty())
        write_text_file(args.report_path, srg::format_match_report(solution, model));
    std::cout << "cost=" << srg::text::g17(solution.cost.total) << '\n';
    return 0;
}

std::vector<srg::CostWeights> load_profiles(const std::string& path, const srg::CostWeights& base) {
    std::ifstream in(path);
    if (!in)
        throw Error(Errc::io_failure, "cannot open " + path);
    std::vector<srg::CostWeights> profiles;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line =
            srg::text::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty())
            continue;
        const auto tokens = srg::text::split_ws(line);
        srg::CostWeights w = base;
        w.w_volume = 0.0;
        if (tokens.size() < 2 || tokens.size() > 3 ||
            !srg::text::parse_double(tokens[0], w.w_centroid) ||
            !srg::text::parse_double(tokens[1], w.w_intensity) ||
            (tokens.size() == 3 && !srg::text::parse_double(tokens[2], w.w_volume)))
            throw Error(Errc::invalid_spec, "profiles line " + std::to_string(line_no) +
                                                ": expected 'centroid intensity [volume]'");
        w.validate();
        profiles.push_back(w);
    }
    if (profiles.empty())
        throw Error(Errc::invalid_spec, "profiles file has no profiles");
    return profiles;
}

nlohmann::json sweep_to_json(const srg::SweepResult& sweep) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : sweep.rows) {
        nlohmann::json assignment = nlohmann::json::array();
        for (std::uint32_t a : row.assignment)
            assignment.push_back(a + 1);
        rows.push_back({{"centroid_weight", row.weights.w_centroid},
                        {"intensity_weight", row.weights.w_intensity},
                        {"cost", row.cost.total},
                        {"vertex_term", row.cost.vertex_term},
                        {"edge_term", row.cost.edge_term},
                        {"assignment", assignment}});
    }
    nlohmann::json out{{"rows", rows}};
    if (sweep.plateau_start) {
        out["plateau_start_row"] = *sweep.plateau_start + 1;
        out["plateau_centroid_weight"] = sweep.rows[*sweep.plateau_start].weights.w_centroid;
    }
    return out;
}

int run_sweep(const SweepArgs& args) {
    const auto model = srg::load_model(args.model_path);
    const auto scalar = srg::load_scalar(args.scalar_path);
    const auto super = srg::load_label(args.super_path);

    srg::CostWeights base = weights_from(args.alpha, "", args.eweights);
    const auto profiles = args.profiles_path.empty()
                              ? srg::exploration_profiles(base)
                              : load_profiles(args.profiles_path, base);

    const auto region_ids = contiguous_region_ids(super);
    const auto super_graph = srg::build_srg(scalar, super, region_ids);
    const srg::GreedyOptions greedy{args.greedy_volume};
    const srg::EvalOptions opts{args.p_empty};
    const auto sweep = srg::sweep_weights(profiles, super_graph, super, scalar, model, greedy, opts);

    const std::string rendered =
        args.json ? sweep_to_json(sweep).dump(2) + "\n" : srg::format_sweep_table(sweep);
    if (args.out_path.empty())
        std::cout << rendered;
    else
        write_text_file(args.out_path, rendered);
    return 0;
}

nlohmann::json dice_to_json(const srg::SegmentationReport& report) {
    nlohmann::json labels = nlohmann::json::array();
    for (const auto& s : report.per_structure)
        labels.push_back({{"label", s.label},
                          {"dice", s.dice},
                          {"truth_voxels", s.truth_voxels},
                          {"predicted_voxels", s.predicted_voxels},
                          {"intersection_voxels", s.intersection_voxels}});
    const std::size_t m = report.per_structure.size();
    nlohmann::json confusion = nlohmann::json::array();
    for (std::size_t row = 0; row <= m; ++row) {
        nlohmann::json r = nlohmann::json::array();
        for (std::size_t col = 0; col <= m; ++col)
            r.push_back(report.confusion[row * (m + 1) + col]);
        confusion.push_back(r);
    }
    return {{"labels", labels},
            {"macro_dice", report.macro_dice},
            {"total_voxels", report.total_voxels},
            {"agreeing_voxels", report.agreeing_voxels},
            {"confusion", confusion}};
}

int run_eval(const EvalArgs& args) {
    const auto pred = srg::load_label(args.pred_path);
    const auto truth = srg::load_label(args.truth_path);
    const auto label_map = srg::distinct_labels(truth);
    const auto report = srg::dice_report(pred, truth, label_map);
    const std::string rendered =
        args.json ? dice_to_json(report).dump(2) + "\n" : srg::format_dice_report(report);
    if (args.out_path.empty())
        std::cout << rendered;
    else
        write_text_file(args.out_path, rendered);
    return 0;
}

int run_render(const RenderArgs& args) {
    const auto scalar = srg::load_scalar(args.scalar_path);
    const auto labels = srg::load_label(args.labels_path);
    srg::render_overlay(scalar, labels, parse_axis(args.axis), args.index, {}, args.out_path);
    std::cout << "wrote " << args.out_path << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"statistical-relational graph segmentation"};
    app.set_version_flag("--version", srg::kVersion);
    app.require_subcommand(1);

    // phantom
    auto* phantom_cmd = app.add_subcommand("phantom", "synthetic volume generation");
    phantom_cmd->require_subcommand(1);
    PhantomArgs phantom_args;
    auto* generate_cmd = phantom_cmd->add_subcommand("generate", "rasterize a phantom spec");
    generate_cmd->add_option("--spec", phantom_args.spec_path, "phantom spec file")->required();
    generate_cmd->add_option("--out-prefix", phantom_args.out_prefix, "output path prefix")
        ->required();
    generate_cmd->add_option("--format", phantom_args.format, "srgvol or nii");

    // superseg
    auto* superseg_cmd = app.add_subcommand("superseg", "morphological gradient + watershed");
    SupersegArgs superseg_args;
    superseg_cmd->add_option("--in", superseg_args.in_path, "input scalar volume")->required();
    superseg_cmd->add_option("--min-depth", superseg_args.min_depth, "h-minima suppression depth");
    superseg_cmd->add_option("--element", superseg_args.element, "cross6 or cube26");
    superseg_cmd->add_option("--out", superseg_args.out_path, "output label volume")->required();

    // build-model
    auto* build_cmd = app.add_subcommand("build-model", "fit a model from annotated volumes");
    BuildModelArgs build_args;
    build_cmd->add_option("--scalar", build_args.scalars, "scalar volume (repeatable)")
        ->required();
    build_cmd->add_option("--labels", build_args.labels, "label volume (repeatable)")->required();
    build_cmd->add_option("--out", build_args.out_path, "output model file")->required();

    // match
    auto* match_cmd = app.add_subcommand("match", "greedy match against a model");
    MatchArgs match_args;
    match_cmd->add_option("--model", match_args.model_path, "model file")->required();
    match_cmd->add_option("--scalar", match_args.scalar_path, "target scalar volume")->required();
    match_cmd->add_option("--super", match_args.super_path, "super-segmentation labels")
        ->required();
    match_cmd->add_option("--alpha", match_args.alpha, "vertex/edge balance");
    match_cmd->add_option("--vweights", match_args.vweights, "centroid,intensity,volume");
    match_cmd->add_option("--eweights", match_args.eweights, "dvec,vratio,contrast");
    match_cmd->add_option("--p-empty", match_args.p_empty, "penalty per EMPTY-touched term");
    match_cmd->add_flag("--greedy-volume", match_args.greedy_volume,
                        "keep the volume weight during the greedy pass");
    match_cmd->add_option("--out", match_args.out_path, "predicted label volume")->required();
    match_cmd->add_option("--report", match_args.report_path, "match report file");

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "greedy matching across weight profiles");
    SweepArgs sweep_args;
    sweep_cmd->add_option("--model", sweep_args.model_path, "model file")->required();
    sweep_cmd->add_option("--scalar", sweep_args.scalar_path, "target scalar volume")->required();
    sweep_cmd->add_option("--super", sweep_args.super_path, "super-segmentation labels")
        ->required();
    sweep_cmd->add_option("--profiles", sweep_args.profiles_path,
                          "profile file: 'centroid intensity [volume]' per line "
                          "(default: the nine exploratory pairs)");
    sweep_cmd->add_option("--alpha", sweep_args.alpha, "vertex/edge balance");
    sweep_cmd->add_option("--eweights", sweep_args.eweights, "dvec,vratio,contrast");
    sweep_cmd->add_option("--p-empty", sweep_args.p_empty, "penalty per EMPTY-touched term");
    sweep_cmd->add_flag("--greedy-volume", sweep_args.greedy_volume,
                        "keep the volume weight during the greedy pass");
    sweep_cmd->add_option("--out", sweep_args.out_path, "write the table here instead of stdout");
    sweep_cmd->add_flag("--json", sweep_args.json, "emit JSON instead of the text table");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Dice report against ground truth");
    EvalArgs eval_args;
    eval_cmd->add_option("--pred", eval_args.pred_path, "predicted label volume")->required();
    eval_cmd->add_option("--truth", eval_args.truth_path, "ground-truth label volume")->required();
    eval_cmd->add_option("--out", eval_args.out_path, "write the report here instead of stdout");
    eval_cmd->add_flag("--json", eval_args.json, "emit JSON instead of text");

    // render
    auto* render_cmd = app.add_subcommand("render", "slice overlay as PNG");
    RenderArgs render_args;
    render_cmd->add_option("--scalar", render_args.scalar_path, "scalar volume")->required();
    render_cmd->add_option("--labels", render_args.labels_path, "label volume")->required();
    render_cmd->add_option("--axis", render_args.axis, "x, y, or z");
    render_cmd->add_option("--index", render_args.index, "slice index")->required();
    render_cmd->add_option("--out", render_args.out_path, "output PNG")->required();

    // pipeline
    auto* pipeline_cmd = app.add_subcommand("pipeline", "full run: superseg, match, eval, reports");
    std::string cfg_path, model_path, scalar_path, truth_path, out_dir, element, vweights, eweights;
    double alpha = 0, min_depth = 0, p_empty = 0;
    bool greedy_volume = false;
    std::uint64_t seed = 0;
    auto* cfg_opt = pipeline_cmd->add_option("--config", cfg_path, "pipeline config file");
    auto* model_opt = pipeline_cmd->add_option("--model", model_path, "model file");
    auto* scalar_opt = pipeline_cmd->add_option("--scalar", scalar_path, "target scalar volume");
    auto* truth_opt = pipeline_cmd->add_option("--truth", truth_path, "ground-truth labels");
    auto* outdir_opt = pipeline_cmd->add_option("--out-dir", out_dir, "artifact directory");
    auto* mindepth_opt = pipeline_cmd->add_option("--min-depth", min_depth, "h-minima depth");
    auto* element_opt = pipeline_cmd->add_option("--element", element, "cross6 or cube26");
    auto* alpha_opt = pipeline_cmd->add_option("--alpha", alpha, "vertex/edge balance");
    auto* vw_opt = pipeline_cmd->add_option("--vweights", vweights, "centroid,intensity,volume");
    auto* ew_opt = pipeline_cmd->add_option("--eweights", eweights, "dvec,vratio,contrast");
    auto* pempty_opt = pipeline_cmd->add_option("--p-empty", p_empty, "EMPTY penalty");
    auto* gvol_opt = pipeline_cmd->add_flag("--greedy-volume", greedy_volume,
                                            "keep the volume weight during the greedy pass");
    auto* seed_opt = pipeline_cmd->add_option("--seed", seed, "seed recorded in the manifest");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 64;
    }

    try {
        if (generate_cmd->parsed())
            return run_phantom(phantom_args);
        if (superseg_cmd->parsed())
            return run_superseg(superseg_args);
        if (build_cmd->parsed())
            return run_build_model(build_args);
        if (match_cmd->parsed())
            return run_match(match_args);
        if (sweep_cmd->parsed())
            return run_sweep(sweep_args);
        if (eval_cmd->parsed())
            return run_eval(eval_args);
        if (render_cmd->parsed())
            return run_render(render_args);
        if (pipeline_cmd->parsed()) {
            srg::PipelineConfig cfg;
            if (cfg_opt->count())
                cfg = srg::load_pipeline_config(cfg_path);
            if (model_opt->count())
                cfg.model_path = model_path;
            if (scalar_opt->count())
                cfg.scalar_path = scalar_path;
            if (truth_opt->count())
                cfg.truth_path = truth_path;
            if (outdir_opt->count())
                cfg.out_dir = out_dir;
            if (mindepth_opt->count())
                cfg.min_depth = min_depth;
            if (element_opt->count())
                cfg.element = parse_element(element);
            if (alpha_opt->count())
                cfg.weights.alpha = alpha;
            if (vw_opt->count())
                parse_triple(vweights, "--vweights", cfg.weights.w_centroid,
                             cfg.weights.w_intensity, cfg.weights.w_volume);
            if (ew_opt->count())
                parse_triple(eweights, "--eweights", cfg.weights.w_dvec, cfg.weights.w_vratio,
                             cfg.weights.w_contrast);
            if (pempty_opt->count())
                cfg.eval.p_empty = p_empty;
            if (gvol_opt->count())
                cfg.greedy.include_volume = greedy_volume;
            if (seed_opt->count())
                cfg.seed = seed;
            const auto result = srg::run_pipeline(cfg);
            std::cout << "n_super=" << result.n_super << '\n';
            std::cout << "cost=" << srg::text::g17(result.solution.cost.total) << '\n';
            if (result.dice)
                std::cout << "macro_dice=" << srg::text::g17(result.dice->macro_dice) << '\n';
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << " [" << srg::errc_name(e.code()) << "]\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
