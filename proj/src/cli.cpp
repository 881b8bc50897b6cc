#include "tractfeat/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "tractfeat/cohort.hpp"
#include "tractfeat/config.hpp"
#include "tractfeat/connectome.hpp"
#include "tractfeat/error.hpp"
#include "tractfeat/nifti.hpp"
#include "tractfeat/odf_field.hpp"
#include "tractfeat/tables.hpp"
#include "tractfeat/tracker.hpp"
#include "tractfeat/trk.hpp"

namespace tractfeat {
namespace {

namespace fs = std::filesystem;

/// Non-fatal data problem: reported, exits 1 only under --strict.
struct Warnings {
    std::ostream& err;
    std::size_t count = 0;

    void operator()(const std::string& message) {
        err << "warning: " << message << '\n';
        ++count;
    }
};

struct TrackingOverrides {
    std::optional<double> qa_threshold, angular_threshold_deg, step_mm, smoothing, min_length_mm, max_length_mm;
    std::optional<int> tip_iterations;
    std::optional<std::size_t> max_tracts;

    void attach(CLI::App* cmd) {
        cmd->add_option("--qa-threshold", qa_threshold, "qa termination threshold");
        cmd->add_option("--angular-threshold-deg", angular_threshold_deg, "maximum turning angle per step");
        cmd->add_option("--step-mm", step_mm, "Euler step length");
        cmd->add_option("--smoothing", smoothing, "weight of the previous direction, in [0, 1]");
        cmd->add_option("--min-length-mm", min_length_mm);
        cmd->add_option("--max-length-mm", max_length_mm);
        cmd->add_option("--tip-iterations", tip_iterations, "pruning iterations");
        cmd->add_option("--max-tracts", max_tracts, "stop after this many streamlines (0 = unlimited)");
    }

    void apply(TrackingParams& p) const {
        if (qa_threshold) p.qa_threshold = *qa_threshold;
        if (angular_threshold_deg) p.angular_threshold_deg = *angular_threshold_deg;
        if (step_mm) p.step_mm = *step_mm;
        if (smoothing) p.smoothing = *smoothing;
        if (min_length_mm) p.min_length_mm = *min_length_mm;
        if (max_length_mm) p.max_length_mm = *max_length_mm;
        if (tip_iterations) p.tip_iterations = *tip_iterations;
        if (max_tracts) p.max_tracts = *max_tracts == 0 ? std::nullopt : max_tracts;
    }
};

Volume load_mask(const fs::path& path) {
    const Volume raw = load_volume(path, VolumeKind::scalar);
    std::vector<double> data(raw.data().begin(), raw.data().end());
    for (double& v : data) v = v != 0.0 ? 1.0 : 0.0;
    return Volume(raw.grid(), VolumeKind::mask, std::move(data));
}

void require_file(const fs::path& path, const char* what) {
    if (path.empty()) throw ValidationError(std::string("missing required path: ") + what);
    if (!fs::exists(path)) throw IoError(std::string(what) + " not found: " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

std::string fixed(double value, int digits = 6) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.*f", digits, value);
    return buffer;
}

std::string subject_id_from(const fs::path& path) {
    std::string name = path.filename().string();
    for (const char* suffix : {".nii.gz", ".nii"}) {
        const std::string s(suffix);
        if (name.size() > s.size() && name.compare(name.size() - s.size(), s.size(), s) == 0)
            return name.substr(0, name.size() - s.size());
    }
    return name;
}

std::string field_id(const fs::path& path) { return path.filename().string(); }

Tractogram whole_brain(const RunConfig& cfg, std::ostream& out) {
    if (!cfg.tractogram.empty()) {
        require_file(cfg.tractogram, "tractogram");
        return load_trk(cfg.tractogram);
    }
    require_file(cfg.field, "field");
    const OdfField field = load_field(cfg.field);
    Tractogram t = track_whole_brain(field, cfg.tracking, cfg.threads);
    t.field_id = field_id(cfg.field);
    out << "tracked " << t.size() << " streamlines from " << cfg.field.string() << '\n';
    return t;
}

// ---------------------------------------------------------------- phantom

struct PhantomArgs {
    std::string kind = "straight";
    std::vector<int> dims{10, 10, 10};
    std::vector<double> voxel_size{1.0, 1.0, 1.0};
    double qa = 1.0;
    std::vector<double> axis{1.0, 0.0, 0.0};
    std::optional<std::vector<double>> center;
    double radius = 20.0;
    std::vector<double> plane_normal{0.0, 0.0, 1.0};
    double tube_radius = 1.5;
    std::vector<double> second_axis{0.0, 1.0, 0.0};
    double slab_half_width = 2.0;
    std::string output;
};

Vec3 vec3(const std::vector<double>& v) { return {v[0], v[1], v[2]}; }

int cmd_phantom(const PhantomArgs& a, std::ostream& out) {
    PhantomSpec spec;
    if (a.kind == "straight")
        spec.kind = PhantomKind::straight;
    else if (a.kind == "arc")
        spec.kind = PhantomKind::arc;
    else if (a.kind == "crossing")
        spec.kind = PhantomKind::crossing;
    else
        throw ValidationError("unknown phantom kind '" + a.kind + "'");
    spec.dims = {a.dims[0], a.dims[1], a.dims[2]};
    spec.voxel_size = {a.voxel_size[0], a.voxel_size[1], a.voxel_size[2]};
    spec.qa_value = a.qa;
    spec.axis = vec3(a.axis);
    spec.radius_mm = a.radius;
    spec.plane_normal = vec3(a.plane_normal);
    spec.tube_radius_mm = a.tube_radius;
    spec.second_axis = vec3(a.second_axis);
    spec.slab_half_width_mm = a.slab_half_width;
    if (a.center) {
        spec.center_mm = vec3(*a.center);
    } else {
        for (int i = 0; i < 3; ++i) spec.center_mm[i] = (spec.dims[i] - 1) * spec.voxel_size[i] / 2.0;
    }
    const OdfField field = make_phantom(spec);
    save_field(field, a.output);

    std::size_t voxels = 0, peaks = 0;
    for (std::size_t v = 0; v < field.grid().voxel_count(); ++v) {
        voxels += field.brain_mask().data()[v] != 0.0;
        peaks += field.peaks(v).size();
    }
    out << "kind\t" << a.kind << "\nvoxels_in_mask\t" << voxels << "\npeaks\t" << peaks << "\noutput\t" << a.output
        << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- track

int cmd_track(const RunConfig& cfg, const fs::path& summary_path, std::ostream& out, Warnings& warn) {
    require_file(cfg.field, "field");
    if (cfg.output.empty()) throw ValidationError("missing required path: output");
    validate(cfg.tracking);
    const OdfField field = load_field(cfg.field);
    Tractogram result = track_whole_brain(field, cfg.tracking, cfg.threads);
    result.field_id = field_id(cfg.field);

    if (!cfg.lesion.empty()) {
        require_file(cfg.lesion, "lesion");
        const Volume roi = load_mask(cfg.lesion);
        if (std::none_of(roi.data().begin(), roi.data().end(), [](double v) { return v != 0.0; })) {
            warn("lesion ROI " + cfg.lesion.string() + " is empty; writing an empty tractogram");
            result = Tractogram{};
        } else {
            result = prune_tip(filter_roi(result, roi), roi, cfg.tracking.tip_iterations);
        }
    }
    save_trk(result, field.grid(), cfg.output);
    const std::string summary = format_summary(summarize(result));
    write_text(summary_path.empty() ? fs::path(cfg.output.string() + ".txt") : summary_path, summary);
    out << summary;
    return kExitOk;
}

// ---------------------------------------------------------------- features

int cmd_features(const RunConfig& cfg, const fs::path& matrix_dir, std::ostream& out, Warnings& warn) {
    require_file(cfg.atlas, "atlas");
    require_file(cfg.lesion_dir, "lesion directory");
    if (cfg.output.empty()) throw ValidationError("missing required path: output");
    validate(cfg.tracking);

    const Atlas atlas(load_volume(cfg.atlas, VolumeKind::label), subject_id_from(cfg.atlas));
    std::vector<fs::path> lesions;
    for (const auto& entry : fs::directory_iterator(cfg.lesion_dir)) {
        const std::string name = entry.path().filename().string();
        if (entry.is_regular_file() && (name.ends_with(".nii") || name.ends_with(".nii.gz")))
            lesions.push_back(entry.path());
    }
    std::sort(lesions.begin(), lesions.end());
    if (lesions.empty()) throw ValidationError("no NIfTI lesions in " + cfg.lesion_dir.string());

    const Tractogram whole = whole_brain(cfg, out);
    if (!matrix_dir.empty()) fs::create_directories(matrix_dir);

    std::vector<SubjectFeatures> rows;
    for (const auto& path : lesions) {
        const std::string id = subject_id_from(path);
        const Volume lesion = resample_nearest(load_mask(path), atlas.grid());
        const bool empty = std::none_of(lesion.data().begin(), lesion.data().end(), [](double v) { return v != 0.0; });

        const Tractogram tracts = empty ? Tractogram{}
                                        : prune_tip(filter_roi(whole, lesion), lesion, cfg.tracking.tip_iterations);
        const TractographicResult tract = build_tractographic(tracts, lesion, atlas);
        if (tract.degenerate) warn(id + ": " + tract.warning);
        if (!matrix_dir.empty()) write_tsv(disruption_table(tract.disruption, atlas), matrix_dir / (id + ".tsv"));

        SubjectFeatures row{id, {}};
        row.features.emplace(FeatureKind::tractographic, tract.feature);
        row.features.emplace(FeatureKind::volumetric_spatial, volumetric_spatial_feature(lesion, atlas));
        row.features.emplace(FeatureKind::volumetric, volumetric_feature(lesion));
        if (empty) {
            warn(id + ": lesion is empty on the atlas grid; spatial and morphological features set to zero");
            row.features.emplace(FeatureKind::spatial, FeatureVector{FeatureKind::spatial, Eigen::VectorXd::Zero(3)});
            row.features.emplace(FeatureKind::morphological,
                                 FeatureVector{FeatureKind::morphological, Eigen::VectorXd::Zero(6)});
        } else {
            row.features.emplace(FeatureKind::spatial, spatial_feature(lesion));
            row.features.emplace(FeatureKind::morphological, morphological_feature(lesion));
        }
        out << id << "\tstreamlines\t" << tracts.size() << "\tlesion_mm3\t"
            << fixed(row.features.at(FeatureKind::volumetric).values[0], 3) << '\n';
        rows.push_back(std::move(row));
    }
    write_tsv(feature_table(rows, atlas), cfg.output);
    out << "wrote " << rows.size() << " subjects to " << cfg.output.string() << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- evaluate

int cmd_evaluate(const RunConfig& cfg, std::ostream& out, Warnings& warn) {
    require_file(cfg.features, "features");
    require_file(cfg.clinical, "clinical table");
    if (cfg.output_dir.empty()) throw ValidationError("missing required path: output_dir");
    validate(cfg.forest);
    fs::create_directories(cfg.output_dir);

    const Table features = read_tsv(cfg.features);
    const auto clinical = read_clinical(cfg.clinical);

    Table comparison{{"feature", "subjects", "features_total", "features_selected", "accuracy", "mae_mean", "mae_std"},
                     {}};
    std::ostringstream summary;
    summary << "seed\t" << cfg.forest.rng_seed << "\ntrees\t" << cfg.forest.n_trees << "\nmax_depth\t"
            << cfg.forest.max_depth << "\nmrs_window\t" << format_real(cfg.mrs_window.min_days) << '-'
            << format_real(cfg.mrs_window.max_days) << "\n\n";

    for (FeatureKind kind : cfg.feature_kinds) {
        const std::string name(to_string(kind));
        const Dataset data = assemble_dataset(features, clinical, kind, cfg.mrs_window);
        if (data.subjects() < 2) throw ValidationError("fewer than two subjects inside the mRS window");

        PipelineResult result;
        try {
            result = run_pipeline(data, cfg.forest, cfg.threads);
        } catch (const DegenerateInputError& e) {
            warn(name + ": " + e.what() + "; skipped");
            comparison.rows.push_back({name, std::to_string(data.subjects()), std::to_string(data.features()), "0",
                                       "NA", "NA", "NA"});
            continue;
        }

        Table report{{"subject_id", "true_mRS", "predicted_mRS", "raw_prediction"}, {}};
        for (const auto& s : result.report.per_subject)
            report.rows.push_back({s.id, std::to_string(s.truth), std::to_string(s.predicted), format_real(s.raw)});
        write_tsv(report, cfg.output_dir / ("report_" + name + ".tsv"));

        Table curve{{"n_features", "loocv_mae", "features"}, {}};
        for (std::size_t k = 1; k <= result.rfe.mae_by_cardinality.size(); ++k) {
            std::string names;
            for (std::size_t c : result.rfe.subsets[k - 1])
                names += (names.empty() ? "" : ",") + data.feature_names[result.kept_after_variance[c]];
            curve.rows.push_back({std::to_string(k), format_real(result.rfe.mae_by_cardinality[k - 1]), names});
        }
        write_tsv(curve, cfg.output_dir / ("rfe_" + name + ".tsv"));

        Table importance{{"feature", "importance"}, {}};
        for (std::size_t i = 0; i < result.selected.size(); ++i)
            importance.rows.push_back(
                {data.feature_names[result.selected[i]], format_real(result.importance[static_cast<Eigen::Index>(i)])});
        write_tsv(importance, cfg.output_dir / ("importance_" + name + ".tsv"));

        const auto& r = result.report;
        comparison.rows.push_back({name, std::to_string(data.subjects()), std::to_string(data.features()),
                                   std::to_string(result.selected.size()), fixed(r.accuracy, 3), fixed(r.mae_mean, 3),
                                   fixed(r.mae_std, 3)});
        summary << name << "\taccuracy " << fixed(r.accuracy, 3) << "\tmae " << fixed(r.mae_mean, 3) << " +/- "
                << fixed(r.mae_std, 3) << "\tselected " << result.selected.size() << '/' << data.features() << '\n';
    }
    write_tsv(comparison, cfg.output_dir / "comparison.tsv");
    write_text(cfg.output_dir / "summary.txt", summary.str());
    out << summary.str();
    return kExitOk;
}

// ---------------------------------------------------------------- cohort-gen

int cmd_cohort(const RunConfig& cfg, CohortSpec spec, std::ostream& out) {
    if (cfg.output_dir.empty()) throw ValidationError("missing required path: output_dir");
    validate(cfg.tracking);
    spec.seed = cfg.forest.rng_seed;
    const Cohort cohort = generate_cohort(spec, cfg.tracking, cfg.threads);
    write_cohort(cohort, cfg.output_dir);
    std::map<int, int> histogram;
    for (const auto& s : cohort.subjects) ++histogram[s.mrs];
    out << "subjects\t" << cohort.subjects.size() << "\nregions\t" << cohort.atlas.size() << '\n';
    for (const auto& [grade, n] : histogram) out << "mRS_" << grade << '\t' << n << '\n';
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Tractographic lesion features and mRS outcome evaluation", "tractfeat"};
    app.require_subcommand(1);
    app.fallthrough();

    std::optional<std::string> config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
    bool strict = false;
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--seed", seed, "random seed for forests and cohort generation");
    app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--strict", strict, "exit 1 when degenerate data produced warnings");

    struct PathArgs {
        std::optional<std::string> field, tractogram, atlas, lesion, lesion_dir, clinical, features, output, output_dir;
    } paths;
    TrackingOverrides tracking;

    PhantomArgs phantom_args;
    auto* phantom = app.add_subcommand("phantom", "write a synthetic NPK1 peak field");
    phantom->add_option("--kind", phantom_args.kind)->check(CLI::IsMember({"straight", "arc", "crossing"}));
    phantom->add_option("--dims", phantom_args.dims)->expected(3);
    phantom->add_option("--voxel-size", phantom_args.voxel_size)->expected(3);
    phantom->add_option("--qa", phantom_args.qa);
    phantom->add_option("--axis", phantom_args.axis)->expected(3);
    phantom->add_option("--center", phantom_args.center)->expected(3);
    phantom->add_option("--radius", phantom_args.radius);
    phantom->add_option("--plane-normal", phantom_args.plane_normal)->expected(3);
    phantom->add_option("--tube-radius", phantom_args.tube_radius);
    phantom->add_option("--second-axis", phantom_args.second_axis)->expected(3);
    phantom->add_option("--slab-half-width", phantom_args.slab_half_width);
    phantom->add_option("-o,--output", paths.output, "NPK1 output");

    std::string summary_path;
    auto* track = app.add_subcommand("track", "whole-brain tracking, optionally filtered and pruned by a lesion ROI");
    track->add_option("--field", paths.field);
    track->add_option("--lesion", paths.lesion);
    track->add_option("-o,--output", paths.output, "TrackVis output");
    track->add_option("--summary", summary_path, "summary text (default: <output>.txt)");
    tracking.attach(track);

    std::string matrix_dir;
    auto* features = app.add_subcommand("features", "tractographic and first-order features per lesion");
    features->add_option("--field", paths.field);
    features->add_option("--tractogram", paths.tractogram, "precomputed whole-brain .trk instead of --field");
    features->add_option("--atlas", paths.atlas);
    features->add_option("--lesion-dir", paths.lesion_dir);
    features->add_option("-o,--output", paths.output, "feature TSV");
    features->add_option("--matrix-dir", matrix_dir, "write per-subject disruption matrices here");
    tracking.attach(features);

    std::optional<std::vector<std::string>> kinds;
    std::optional<std::vector<double>> window;
    std::optional<int> trees, depth, mtry, min_split;
    auto* evaluate = app.add_subcommand("evaluate", "RFE + leave-one-out random forest evaluation");
    evaluate->add_option("--features", paths.features);
    evaluate->add_option("--clinical", paths.clinical);
    evaluate->add_option("--output-dir", paths.output_dir);
    evaluate->add_option("--kinds", kinds, "feature kinds to evaluate");
    evaluate->add_option("--mrs-window", window, "days_to_mRS inclusion window")->expected(2);
    evaluate->add_option("--trees", trees);
    evaluate->add_option("--max-depth", depth);
    evaluate->add_option("--mtry", mtry);
    evaluate->add_option("--min-samples-split", min_split);

    CohortSpec cohort_spec;
    auto* cohort = app.add_subcommand("cohort-gen", "synthetic lesion cohort over a crossing phantom");
    cohort->add_option("--output-dir", paths.output_dir);
    cohort->add_option("--subjects", cohort_spec.subjects);
    cohort->add_option("--grid", cohort_spec.grid_size);
    cohort->add_option("--regions", cohort_spec.regions);
    cohort->add_option("--noise", cohort_spec.noise_sigma);
    cohort->add_option("--slab-half-width", cohort_spec.slab_half_width_mm);
    tracking.attach(cohort);

    std::vector<const char*> argv{"tractfeat"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    Warnings warn{err};
    try {
        RunConfig cfg;
        if (config_path) apply_config_file(cfg, *config_path);
        auto set_path = [](const std::optional<std::string>& v, fs::path& target) {
            if (v) target = *v;
        };
        set_path(paths.field, cfg.field);
        set_path(paths.tractogram, cfg.tractogram);
        set_path(paths.atlas, cfg.atlas);
        set_path(paths.lesion, cfg.lesion);
        set_path(paths.lesion_dir, cfg.lesion_dir);
        set_path(paths.clinical, cfg.clinical);
        set_path(paths.features, cfg.features);
        set_path(paths.output, cfg.output);
        set_path(paths.output_dir, cfg.output_dir);
        tracking.apply(cfg.tracking);
        if (seed) cfg.forest.rng_seed = *seed;
        if (threads) cfg.threads = *threads;
        if (strict) cfg.strict = true;
        if (kinds) {
            cfg.feature_kinds.clear();
            for (const auto& k : *kinds) cfg.feature_kinds.push_back(parse_feature_kind(k));
        }
        if (window) cfg.mrs_window = {(*window)[0], (*window)[1]};
        if (trees) cfg.forest.n_trees = *trees;
        if (depth) cfg.forest.max_depth = *depth;
        if (mtry) cfg.forest.mtry = *mtry;
        if (min_split) cfg.forest.min_samples_split = *min_split;

        int code = kExitOk;
        if (*phantom) {
            if (cfg.output.empty()) throw ValidationError("missing required path: output");
            phantom_args.output = cfg.output;
            code = cmd_phantom(phantom_args, out);
        }
        else if (*track)
            code = cmd_track(cfg, summary_path, out, warn);
        else if (*features)
            code = cmd_features(cfg, matrix_dir, out, warn);
        else if (*evaluate)
            code = cmd_evaluate(cfg, out, warn);
        else if (*cohort)
            code = cmd_cohort(cfg, cohort_spec, out);
        if (code == kExitOk && warn.count > 0 && cfg.strict) return kExitDegenerate;
        return code;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
}

}  // namespace tractfeat
