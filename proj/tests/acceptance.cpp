// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include "support.hpp"
#include "tractfeat/cli.hpp"
#include "tractfeat/connectome.hpp"
#include "tractfeat/error.hpp"
#include "tractfeat/nifti.hpp"
#include "tractfeat/odf_field.hpp"
#include "tractfeat/regression.hpp"
#include "tractfeat/tables.hpp"
#include "tractfeat/tracker.hpp"

using namespace tractfeat;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& check) {
    Outcome o;
    try {
        o = check();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s criterion %d: %s (%s)\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), o.detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* pattern, double value) {
    char buffer[128];
    std::snprintf(buffer, sizeof(buffer), pattern, value);
    return buffer;
}

int cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    return run_cli(args, out, err);
}

std::string slurp(const fs::path& path) {
    const auto bytes = testing::read_bytes(path);
    return {bytes.begin(), bytes.end()};
}

// ------------------------------------------------------------ connectome oracle

struct RandomCase {
    GridSpec grid;
    std::vector<double> labels;
    std::vector<Streamline> lines;
    std::vector<double> lesion;
};

RandomCase random_case(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> dim(2, 6), regions(2, 8), streamlines(0, 50);
    const std::array<double, 3> sizes{1.0, 1.5, 2.0};
    RandomCase c;
    c.grid = GridSpec({dim(rng), dim(rng), dim(rng)},
                      {sizes[rng() % 3], sizes[rng() % 3], sizes[rng() % 3]});
    const int n_regions = regions(rng);
    std::vector<int> pool;
    for (int l = 1; l <= 40; ++l) pool.push_back(l);
    std::shuffle(pool.begin(), pool.end(), rng);
    c.labels.resize(c.grid.voxel_count());
    for (double& l : c.labels) l = rng() % 4 == 0 ? 0.0 : pool[rng() % n_regions];
    c.labels[0] = pool[0];
    c.labels[c.labels.size() - 1] = pool[1];

    const Index3 d = c.grid.dims();
    const auto vs = c.grid.voxel_size();
    auto coord = [&](int axis) {
        // mostly inside, occasionally outside the grid
        std::uniform_real_distribution<double> u(-1.0, d[axis] + 0.2);
        return u(rng) * vs[axis];
    };
    const int n = streamlines(rng);
    for (int s = 0; s < n; ++s) {
        const Vec3 a(coord(0), coord(1), coord(2)), b(coord(0), coord(1), coord(2));
        const Vec3 mid = 0.5 * (a + b) + Vec3(0.3, -0.2, 0.1);
        c.lines.push_back({a, mid, b});
    }
    c.lesion.resize(c.grid.voxel_count());
    for (double& v : c.lesion) v = rng() % 3 == 0 ? 1.0 : 0.0;
    return c;
}

// Endpoint label by direct arithmetic on the identity-origin grid.
int oracle_label(const RandomCase& c, const Vec3& p) {
    const Index3 d = c.grid.dims();
    const auto vs = c.grid.voxel_size();
    int ijk[3];
    for (int a = 0; a < 3; ++a) {
        const double v = p[a] / vs[a];
        if (v < -0.5 || v > d[a] - 0.5) return 0;
        ijk[a] = std::clamp(static_cast<int>(std::floor(v + 0.5)), 0, d[a] - 1);
    }
    return static_cast<int>(c.labels[ijk[0] + d[0] * (ijk[1] + static_cast<std::size_t>(d[1]) * ijk[2])]);
}

struct OracleResult {
    std::vector<int> labels;
    std::vector<std::vector<std::int64_t>> counts;
    std::int64_t max = 0;
    std::vector<std::vector<double>> normalized;
    std::vector<double> load, weights, feature;
};

OracleResult oracle(const RandomCase& c) {
    OracleResult o;
    std::set<int> distinct;
    for (double l : c.labels)
        if (l != 0.0) distinct.insert(static_cast<int>(l));
    o.labels.assign(distinct.begin(), distinct.end());
    const std::size_t n = o.labels.size();
    auto index = [&](int label) {
        return static_cast<std::size_t>(std::find(o.labels.begin(), o.labels.end(), label) - o.labels.begin());
    };
    o.counts.assign(n, std::vector<std::int64_t>(n, 0));
    for (const auto& line : c.lines) {
        const int a = oracle_label(c, line.front()), b = oracle_label(c, line.back());
        if (a == 0 || b == 0) continue;
        const std::size_t i = index(a), j = index(b);
        ++o.counts[i][j];
        if (i != j) ++o.counts[j][i];
    }
    for (const auto& row : o.counts)
        for (auto v : row) o.max = std::max(o.max, v);
    o.normalized.assign(n, std::vector<double>(n, 0.0));
    o.load.assign(n, 0.0);
    if (o.max > 0)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                o.normalized[i][j] = static_cast<double>(o.counts[i][j]) / static_cast<double>(o.max);
                o.load[j] += o.normalized[i][j];
            }
    const auto vs = c.grid.voxel_size();
    o.weights.assign(n, 0.0);
    for (std::size_t v = 0; v < c.labels.size(); ++v)
        if (c.lesion[v] != 0.0 && c.labels[v] != 0.0) o.weights[index(static_cast<int>(c.labels[v]))] += vs[0] * vs[1] * vs[2];
    o.feature.resize(n);
    for (std::size_t i = 0; i < n; ++i) o.feature[i] = o.weights[i] * o.load[i];
    return o;
}

Tractogram to_tractogram(const std::vector<Streamline>& lines, int copies = 1) {
    Tractogram t;
    for (const auto& l : lines)
        for (int k = 0; k < copies; ++k) t.push_back(l);
    return t;
}

std::vector<RandomCase> random_cases() {
    std::mt19937_64 rng(2024);
    std::vector<RandomCase> cases;
    for (int i = 0; i < 100; ++i) cases.push_back(random_case(rng));
    return cases;
}

Outcome criterion_oracle(const std::vector<RandomCase>& cases) {
    const auto start = Clock::now();
    int mismatches = 0, degenerate = 0;
    for (const auto& c : cases) {
        const Atlas atlas(Volume(c.grid, VolumeKind::label, c.labels));
        const Volume lesion(c.grid, VolumeKind::mask, c.lesion);
        const OracleResult o = oracle(c);
        const DisruptionMatrix d = disruption_matrix(to_tractogram(c.lines), atlas);
        bool ok = atlas.labels() == o.labels && d.size() == o.labels.size();
        for (std::size_t i = 0; ok && i < d.size(); ++i)
            for (std::size_t j = 0; j < d.size(); ++j) ok &= d(i, j) == o.counts[i][j];
        const Eigen::VectorXd w = lesion_weights(lesion, atlas);
        for (std::size_t i = 0; ok && i < o.weights.size(); ++i) ok &= std::abs(w[i] - o.weights[i]) <= 1e-12;
        if (o.max == 0) {
            ++degenerate;
            try {
                normalize_disruption(d);
                ok = false;
            } catch (const DegenerateInputError&) {
            }
        } else if (ok) {
            const Eigen::MatrixXd n = normalize_disruption(d);
            const Eigen::VectorXd load = region_load(n);
            const Eigen::VectorXd t = tractographic_feature(w, load).values;
            for (std::size_t i = 0; i < o.labels.size(); ++i) {
                for (std::size_t j = 0; j < o.labels.size(); ++j)
                    ok &= std::abs(n(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - o.normalized[i][j]) <= 1e-12;
                ok &= std::abs(load[static_cast<Eigen::Index>(i)] - o.load[i]) <= 1e-12;
                ok &= std::abs(t[static_cast<Eigen::Index>(i)] - o.feature[i]) <= 1e-12;
            }
        }
        mismatches += !ok;
    }
    const double elapsed = seconds_since(start);
    return {mismatches == 0 && elapsed < 5.0,
            std::to_string(cases.size()) + " tractograms, " + std::to_string(mismatches) + " mismatches, " +
                std::to_string(degenerate) + " with no connections, " + fmt("%.3f s", elapsed)};
}

Outcome criterion_scale(const std::vector<RandomCase>& cases) {
    int checked = 0, broken = 0;
    for (const auto& c : cases) {
        const Atlas atlas(Volume(c.grid, VolumeKind::label, c.labels));
        const Volume lesion(c.grid, VolumeKind::mask, c.lesion);
        const TractographicResult base = build_tractographic(to_tractogram(c.lines), lesion, atlas);
        if (base.disruption.max() == 0) continue;
        const Eigen::MatrixXd n = normalize_disruption(base.disruption);
        for (int k : {2, 3, 5}) {
            const TractographicResult r = build_tractographic(to_tractogram(c.lines, k), lesion, atlas);
            broken += !(normalize_disruption(r.disruption) == n && r.load == base.load &&
                        r.feature.values == base.feature.values && r.degenerate == base.degenerate);
            ++checked;
        }
    }
    return {broken == 0 && checked > 0,
            std::to_string(checked) + " duplicated tractograms (k = 2, 3, 5), " + std::to_string(broken) + " changed"};
}

// ------------------------------------------------------------ tracking

Outcome criterion_straight() {
    const auto start = Clock::now();
    PhantomSpec spec;
    spec.kind = PhantomKind::straight;
    spec.dims = {10, 10, 10};
    const OdfField field = make_phantom(spec);
    const TrackingParams params;
    const Tractogram t = track_whole_brain(field, params);
    const double elapsed = seconds_since(start);

    std::size_t in_mask = 0;
    for (double v : field.brain_mask().data()) in_mask += v != 0.0;
    double worst_segment = 0.0, worst_end = 0.0;
    // mask is the whole grid: the box [-0.5, 9.5]^3
    auto boundary_distance = [](const Vec3& p) {
        double d = 1e9;
        for (int a = 0; a < 3; ++a) d = std::min({d, p[a] + 0.5, 9.5 - p[a]});
        return d;
    };
    for (std::size_t i = 0; i < t.size(); ++i) {
        const auto line = t[i];
        for (std::size_t k = 1; k < line.size(); ++k)
            worst_segment = std::max(worst_segment, std::abs((line[k] - line[k - 1]).norm() - params.step_mm));
        worst_end = std::max({worst_end, boundary_distance(line.front()), boundary_distance(line.back())});
    }
    const bool pass = t.size() == in_mask && worst_segment <= 1e-6 && worst_end <= params.step_mm && elapsed < 5.0;
    return {pass, std::to_string(t.size()) + " streamlines for " + std::to_string(in_mask) + " voxels, max |segment - 0.5| " +
                      fmt("%.2e", worst_segment) + ", max endpoint-to-boundary " + fmt("%.3f mm", worst_end) + ", " +
                      fmt("%.3f s", elapsed)};
}

double menger(const Vec3& a, const Vec3& b, const Vec3& c) {
    return 2.0 * (b - a).cross(c - a).norm() / ((b - a).norm() * (c - b).norm() * (c - a).norm());
}

Outcome criterion_arc() {
    PhantomSpec spec;
    spec.kind = PhantomKind::arc;
    spec.dims = {64, 64, 9};
    spec.center_mm = Vec3(31.5, 31.5, 4.0);
    spec.radius_mm = 20.0;
    const Tractogram t = track_whole_brain(make_phantom(spec), TrackingParams{}, 4);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const auto line = t[i];
        for (std::size_t k = 1; k + 1 < line.size(); ++k, ++n) sum += menger(line[k - 1], line[k], line[k + 1]);
    }
    const double mean = n ? sum / static_cast<double>(n) : 0.0;
    const double rel = std::abs(mean - 0.05) / 0.05;
    return {n > 0 && rel <= 0.05, "mean discrete curvature " + fmt("%.5f", mean) + " per mm over " +
                                      std::to_string(t.size()) + " streamlines, " + fmt("%.1f%% from 0.05", 100 * rel)};
}

// ------------------------------------------------------------ determinism

Outcome criterion_determinism(const fs::path& work, const fs::path& features, const fs::path& clinical) {
    const fs::path field = work / "arc.npk";
    if (cli({"phantom", "--kind", "arc", "--dims", "48", "48", "7", "--radius", "15", "-o", field.string()}) != 0)
        return {false, "phantom failed"};
    std::map<std::string, std::string> outputs;
    for (const char* threads : {"1", "4"})
        for (int rep = 0; rep < 2; ++rep) {
            const std::string tag = std::string(threads) + "_" + std::to_string(rep);
            const fs::path trk = work / ("arc_" + tag + ".trk");
            const fs::path eval = work / ("eval_" + tag);
            if (cli({"--seed", "5", "--threads", threads, "track", "--field", field.string(), "-o", trk.string()}) != 0)
                return {false, "track failed"};
            if (cli({"--seed", "5", "--threads", threads, "evaluate", "--features", features.string(), "--clinical",
                     clinical.string(), "--output-dir", eval.string(), "--kinds", "tractographic", "volumetric"}) != 0)
                return {false, "evaluate failed"};
            std::string all = slurp(trk) + slurp(fs::path(trk.string() + ".txt"));
            for (const char* f : {"comparison.tsv", "summary.txt", "report_tractographic.tsv", "rfe_tractographic.tsv",
                                  "importance_tractographic.tsv", "report_volumetric.tsv"})
                all += slurp(eval / f);
            outputs[tag] = all;
        }
    const std::string& reference = outputs.begin()->second;
    const bool same = std::all_of(outputs.begin(), outputs.end(), [&](const auto& kv) { return kv.second == reference; });
    return {same && !reference.empty(),
            "track + evaluate twice each with 1 and 4 threads: " + std::string(same ? "identical" : "differing") +
                " bytes (" + std::to_string(reference.size()) + " bytes compared per run)"};
}

// ------------------------------------------------------------ regression

Outcome criterion_forest() {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto sample = [&](std::size_t n, Eigen::MatrixXd& X, std::vector<double>& y) {
        X.resize(static_cast<Eigen::Index>(n), 1);
        y.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            X(static_cast<Eigen::Index>(i), 0) = u(rng);
            y[i] = X(static_cast<Eigen::Index>(i), 0) < 0.0 ? 0.0 : 4.0;
        }
    };
    Eigen::MatrixXd X, Xt;
    std::vector<double> y, yt;
    sample(200, X, y);
    sample(1000, Xt, yt);
    const RegressionForest f = rf_train(X, y, ForestSpec{.rng_seed = 1});
    double mse = 0.0;
    bool bounded = true;
    for (Eigen::Index i = 0; i < Xt.rows(); ++i) {
        const double p = rf_predict(f, Xt.row(i).transpose());
        mse += (p - yt[static_cast<std::size_t>(i)]) * (p - yt[static_cast<std::size_t>(i)]);
        bounded &= p >= 0.0 && p <= 4.0;
    }
    mse /= static_cast<double>(Xt.rows());
    for (double far : {-1e6, -3.0, 3.0, 1e6}) {
        const double p = rf_predict(f, Eigen::VectorXd::Constant(1, far));
        bounded &= p >= 0.0 && p <= 4.0;
    }
    int deepest = 0;
    for (const auto& tree : f.trees) deepest = std::max(deepest, tree.depth());
    std::uniform_real_distribution<double> raw(-20.0, 20.0);
    bool grades = true;
    for (int i = 0; i < 100000; ++i) {
        const int g = round_mrs(raw(rng));
        grades &= g >= 0 && g <= 4;
    }
    return {mse < 0.1 && deepest <= 3 && bounded && grades,
            "test MSE " + fmt("%.4f", mse) + ", deepest tree " + std::to_string(deepest) + ", predictions " +
                (bounded ? "within" : "outside") + " [0, 4], 1e5 rounded raws " + (grades ? "all" : "not all") +
                " in {0..4}"};
}

Outcome criterion_rfe() {
    int retained = 0;
    std::string picks;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::mt19937_64 rng(1000 + seed);
        std::normal_distribution<double> noise(0.0, 1.0);
        std::uniform_int_distribution<int> grade(0, 4);
        const std::size_t informative = seed % 6;
        Dataset data;
        data.X.resize(40, 6);
        for (int i = 0; i < 40; ++i) {
            data.y.push_back(grade(rng));
            data.subject_ids.push_back("subj" + std::to_string(i));
            for (int c = 0; c < 6; ++c)
                data.X(i, c) = static_cast<std::size_t>(c) == informative ? data.y.back() + 0.75 * noise(rng) : noise(rng);
        }
        for (int c = 0; c < 6; ++c) data.feature_names.push_back("f" + std::to_string(c));
        const PipelineResult r = run_pipeline(data, ForestSpec{.rng_seed = seed});
        const bool kept = std::find(r.selected.begin(), r.selected.end(), informative) != r.selected.end();
        retained += kept;
        picks += (picks.empty() ? "" : " ") + std::to_string(r.selected.size()) + (kept ? "+" : "-");
    }
    return {retained >= 8, "informative dim retained in " + std::to_string(retained) +
                               "/10 seeds (subset sizes, + = retained: " + picks + ")"};
}

Outcome criterion_metrics() {
    struct Case {
        std::vector<int> truth, predicted;
        double accuracy, mae, sd;
    };
    // hand arithmetic: mean of |errors| and population deviation
    const std::vector<Case> cases{
        {{3, 3}, {3, 2}, 0.5, 0.5, 0.5},
        {{0, 1, 2, 3, 4}, {0, 1, 2, 3, 4}, 1.0, 0.0, 0.0},
        {{0, 0, 0, 0}, {4, 4, 4, 4}, 0.0, 4.0, 0.0},
        {{1, 2, 3, 4}, {1, 3, 1, 4}, 0.5, 0.75, std::sqrt(0.6875)},  // errors 0 1 2 0
        {{2, 2, 2, 2, 2}, {2, 1, 3, 0, 2}, 0.4, 0.8, std::sqrt(0.56)},  // errors 0 1 1 2 0
    };
    int exact = 0;
    for (const auto& c : cases) {
        const Metrics m = score_predictions(c.truth, c.predicted);
        exact += m.accuracy == c.accuracy && m.mae_mean == c.mae && std::abs(m.mae_std - c.sd) <= 1e-15;
    }
    return {exact == 5, std::to_string(exact) + "/5 hand-built tables match"};
}

Outcome criterion_cohort(const fs::path& dir, double& elapsed) {
    const auto start = Clock::now();
    if (cli({"--seed", "0", "--threads", "4", "cohort-gen", "--output-dir", dir.string()}) != 0)
        return {false, "cohort-gen failed"};
    if (cli({"--threads", "4", "features", "--field", (dir / "field.npk").string(), "--atlas",
             (dir / "atlas.nii.gz").string(), "--lesion-dir", (dir / "lesions").string(), "-o",
             (dir / "features.tsv").string()}) != 0)
        return {false, "features failed"};
    if (cli({"--seed", "0", "--threads", "4", "evaluate", "--features", (dir / "features.tsv").string(), "--clinical",
             (dir / "clinical.tsv").string(), "--output-dir", (dir / "eval").string()}) != 0)
        return {false, "evaluate failed"};
    elapsed = seconds_since(start);
    const Table cmp = read_tsv(dir / "eval" / "comparison.tsv");
    std::map<std::string, std::string> accuracy;
    for (const auto& row : cmp.rows) accuracy[row[0]] = row[cmp.column("accuracy")];
    const double tract = parse_real(accuracy.at("tractographic"), "accuracy");
    const double spatial = parse_real(accuracy.at("spatial"), "accuracy");
    std::string all;
    for (const auto& [kind, acc] : accuracy) all += (all.empty() ? "" : ", ") + kind + " " + acc;
    return {tract >= 0.45 && tract >= spatial && elapsed < 600.0,
            "LOOCV accuracy " + all + "; " + fmt("%.1f s", elapsed)};
}

Outcome criterion_degenerate(const fs::path& work) {
    // straight phantom, atlas with a background top slice, lesion only there
    const GridSpec grid({10, 10, 10}, {1.0, 1.0, 1.0});
    if (cli({"phantom", "-o", (work / "s.npk").string()}) != 0) return {false, "phantom failed"};
    std::vector<double> labels(grid.voxel_count(), 0.0), lesion(grid.voxel_count(), 0.0);
    for (std::size_t v = 0; v < labels.size(); ++v) {
        const Index3 ijk = grid.unravel(v);
        if (ijk[2] < 9) labels[v] = ijk[0] < 5 ? 1.0 : 2.0;
        if (ijk[2] == 9 && ijk[0] >= 3 && ijk[0] <= 6) lesion[v] = 1.0;
    }
    save_volume(Volume(grid, VolumeKind::label, labels), work / "atlas.nii.gz");
    fs::create_directories(work / "lesions");
    save_volume(Volume(grid, VolumeKind::mask, lesion), work / "lesions" / "offatlas.nii.gz");

    const fs::path out = work / "features.tsv", log = work / "stderr.txt";
    const std::string command = std::string(TRACTFEAT_EXE) + " features --field " + (work / "s.npk").string() +
                                " --atlas " + (work / "atlas.nii.gz").string() + " --lesion-dir " +
                                (work / "lesions").string() + " -o " + out.string() + " >/dev/null 2>" + log.string();
    const int status = std::system(command.c_str());
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    const bool warned = slurp(log).find("warning:") != std::string::npos;
    const Table t = read_tsv(out);
    bool zero = t.rows.size() == 1;
    for (std::size_t c = 0; zero && c < t.header.size(); ++c)
        if (t.header[c].rfind("T_", 0) == 0) zero &= t.rows[0][c] == "0";
    const int strict = std::system((std::string(TRACTFEAT_EXE) + " --strict" + command.substr(std::string(TRACTFEAT_EXE).size())).c_str());
    const int strict_code = WIFEXITED(strict) ? WEXITSTATUS(strict) : -1;
    return {code == 0 && warned && zero, "exit " + std::to_string(code) + ", warning " + (warned ? "printed" : "missing") +
                                             ", tractographic row " + (zero ? "all zero" : "nonzero") +
                                             "; with --strict exit " + std::to_string(strict_code)};
}

Outcome criterion_performance() {
    int pipe_fd[2];
    if (pipe(pipe_fd) != 0) return {false, "pipe failed"};
    const pid_t pid = fork();
    if (pid < 0) return {false, "fork failed"};
    if (pid == 0) {
        close(pipe_fd[0]);
        PhantomSpec spec;
        spec.kind = PhantomKind::straight;
        spec.dims = {64, 64, 64};
        const OdfField field = make_phantom(spec);
        const auto start = Clock::now();
        const Tractogram t = track_whole_brain(field, TrackingParams{}, 4);
        const double elapsed = seconds_since(start);
        char buffer[128];
        const int len = std::snprintf(buffer, sizeof(buffer), "%zu %zu %.3f", t.size(), t.total_points(), elapsed);
        if (write(pipe_fd[1], buffer, static_cast<std::size_t>(len)) != len) _exit(3);
        _exit(0);
    }
    close(pipe_fd[1]);
    char buffer[128] = {};
    std::size_t got = 0;
    for (ssize_t r; (r = read(pipe_fd[0], buffer + got, sizeof(buffer) - 1 - got)) > 0;) got += static_cast<std::size_t>(r);
    close(pipe_fd[0]);
    int status = 0;
    rusage usage{};
    wait4(pid, &status, 0, &usage);
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) return {false, "tracking child failed"};
    std::size_t count = 0, points = 0;
    double elapsed = 0.0;
    std::sscanf(buffer, "%zu %zu %lf", &count, &points, &elapsed);
    const double peak_mb = static_cast<double>(usage.ru_maxrss) / 1024.0;  // ru_maxrss is in KiB on Linux
    return {count == 64u * 64u * 64u && elapsed < 60.0 && peak_mb < 2048.0,
            std::to_string(count) + " streamlines, " + std::to_string(points) + " points in " + fmt("%.2f s", elapsed) +
                " with 4 threads on " + std::to_string(std::thread::hardware_concurrency()) + " cores, peak RSS " +
                fmt("%.0f MB", peak_mb)};
}

}  // namespace

int main() {
    testing::TempDir work;
    const auto cases = random_cases();
    report(1, "disruption chain equals the brute-force oracle", [&] { return criterion_oracle(cases); });
    report(2, "duplicating streamlines leaves D^, L, T unchanged", [&] { return criterion_scale(cases); });
    report(3, "straight phantom tracking", criterion_straight);
    report(4, "arc phantom curvature", criterion_arc);

    double cohort_seconds = 0.0;
    fs::create_directories(work / "cohort");
    Outcome cohort = criterion_cohort(work / "cohort", cohort_seconds);  // shared with criterion 5

    fs::create_directories(work / "determinism");
    report(5, "track and evaluate are byte-identical across reruns and threads", [&] {
        return criterion_determinism(work / "determinism", work / "cohort" / "features.tsv",
                                     work / "cohort" / "clinical.tsv");
    });
    report(6, "forest sanity", criterion_forest);
    report(7, "RFE keeps the informative dimension", criterion_rfe);
    report(8, "metric hand checks", criterion_metrics);
    report(9, "synthetic cohort end to end", [&] { return cohort; });
    fs::create_directories(work / "degenerate");
    report(10, "lesion on background gives a zero feature and a warning", [&] { return criterion_degenerate(work / "degenerate"); });
    report(11, "64^3 whole-brain tracking time and memory", criterion_performance);

    std::printf("acceptance: %d/11 passed\n", 11 - failures);
    return failures == 0 ? 0 : 1;
}
