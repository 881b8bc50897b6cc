#include <algorithm>
#include <cmath>
#include <numeric>

#include "tractfeat/error.hpp"
#include "tractfeat/parallel.hpp"
#include "tractfeat/regression.hpp"
#include "tractfeat/rng.hpp"

namespace tractfeat {

void Dataset::validate() const {
    if (static_cast<std::size_t>(X.rows()) != y.size()) throw ShapeError("X rows and y length differ");
    if (subject_ids.size() != y.size()) throw ShapeError("subject id count differs from y length");
    if (feature_names.size() != features()) throw ShapeError("feature name count differs from X columns");
    if (y.size() < 2) throw DegenerateInputError("dataset needs at least two subjects");
    if (!X.allFinite()) throw ValidationError("feature matrix contains NaN or Inf");
    for (int grade : y)
        if (grade < kMinGrade || grade > kMaxGrade) throw ValidationError("mRS grade outside [0, 4]");
    std::vector<std::string> ids(subject_ids);
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) throw ValidationError("duplicate subject id");
}

Dataset Dataset::select_columns(std::span<const std::size_t> columns) const {
    Dataset out;
    out.X.resize(X.rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c) {
        out.X.col(static_cast<Eigen::Index>(c)) = X.col(static_cast<Eigen::Index>(columns[c]));
        out.feature_names.push_back(feature_names[columns[c]]);
    }
    out.y = y;
    out.subject_ids = subject_ids;
    return out;
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
    Dataset out;
    out.X.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.X.row(static_cast<Eigen::Index>(r)) = X.row(static_cast<Eigen::Index>(rows[r]));
        out.y.push_back(y[rows[r]]);
        out.subject_ids.push_back(subject_ids[rows[r]]);
    }
    out.feature_names = feature_names;
    return out;
}

namespace {

bool constant_column(const Eigen::MatrixXd& X, Eigen::Index c) {
    return X.rows() == 0 || (X.col(c).array() == X(0, c)).all();
}

}  // namespace

Scaler zscore_fit(const Eigen::MatrixXd& X) {
    if (X.rows() < 2) throw DegenerateInputError("z-score fit needs at least two rows");
    Scaler s;
    const double n = static_cast<double>(X.rows());
    s.mean = X.colwise().sum().transpose() / n;
    s.stddev.resize(X.cols());
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
        if (constant_column(X, c)) {
            s.mean[c] = X(0, c);
            s.stddev[c] = 0.0;
            continue;
        }
        s.stddev[c] = std::sqrt((X.col(c).array() - s.mean[c]).square().sum() / n);
    }
    return s;
}

Eigen::MatrixXd zscore_apply(const Scaler& scaler, const Eigen::MatrixXd& X) {
    if (X.cols() != scaler.mean.size()) throw ShapeError("scaler and matrix differ in column count");
    Eigen::MatrixXd out(X.rows(), X.cols());
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
        out.col(c) = X.col(c).array() - scaler.mean[c];
        if (scaler.stddev[c] > 0.0) out.col(c) /= scaler.stddev[c];
    }
    return out;
}

ColumnSelection drop_zero_variance(const Eigen::MatrixXd& X) {
    ColumnSelection out;
    for (Eigen::Index c = 0; c < X.cols(); ++c)
        if (!constant_column(X, c)) out.kept.push_back(static_cast<std::size_t>(c));
    out.X.resize(X.rows(), static_cast<Eigen::Index>(out.kept.size()));
    for (std::size_t k = 0; k < out.kept.size(); ++k)
        out.X.col(static_cast<Eigen::Index>(k)) = X.col(static_cast<Eigen::Index>(out.kept[k]));
    return out;
}

Metrics score_predictions(std::span<const int> truth, std::span<const int> predicted) {
    if (truth.size() != predicted.size()) throw ShapeError("truth and prediction lengths differ");
    if (truth.empty()) throw DegenerateInputError("no predictions to score");
    const double n = static_cast<double>(truth.size());
    std::size_t hits = 0;
    double sum = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        hits += truth[i] == predicted[i];
        sum += std::abs(truth[i] - predicted[i]);
    }
    Metrics m;
    m.accuracy = static_cast<double>(hits) / n;
    m.mae_mean = sum / n;
    double var = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double e = std::abs(truth[i] - predicted[i]) - m.mae_mean;
        var += e * e;
    }
    m.mae_std = std::sqrt(var / n);
    return m;
}

std::vector<Fold> loocv_folds(const Dataset& data, std::uint64_t seed) {
    const std::size_t m = data.subjects();
    std::vector<std::size_t> by_id(m);
    std::iota(by_id.begin(), by_id.end(), 0);
    std::sort(by_id.begin(), by_id.end(),
              [&](std::size_t a, std::size_t b) { return data.subject_ids[a] < data.subject_ids[b]; });
    std::vector<Fold> folds(m);
    for (std::size_t i = 0; i < m; ++i) {
        folds[i].held_out = i;
        folds[i].seed = mix_seed(seed, data.subject_ids[i]);
        for (std::size_t r : by_id)
            if (r != i) folds[i].training.push_back(r);
    }
    return folds;
}

namespace {

std::vector<double> as_targets(const Dataset& data, std::span<const std::size_t> rows) {
    std::vector<double> y;
    y.reserve(rows.size());
    for (std::size_t r : rows) y.push_back(data.y[r]);
    return y;
}

Eigen::MatrixXd gather(const Eigen::MatrixXd& X, std::span<const std::size_t> rows,
                       std::span<const std::size_t> cols) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < cols.size(); ++c)
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                X(static_cast<Eigen::Index>(rows[r]), static_cast<Eigen::Index>(cols[c]));
    return out;
}

// Raw (unrounded) leave-one-out MAE on a column subset.
double loocv_raw_mae(const Dataset& data, const std::vector<Fold>& folds, std::span<const std::size_t> cols,
                     const ForestSpec& spec, std::size_t threads) {
    std::vector<double> errors(folds.size());
    parallel_for(folds.size(), threads, [&](std::size_t f) {
        const Fold& fold = folds[f];
        ForestSpec fold_spec = spec;
        fold_spec.rng_seed = fold.seed;
        const auto forest = rf_train(gather(data.X, fold.training, cols), as_targets(data, fold.training), fold_spec);
        const std::size_t held[] = {fold.held_out};
        const Eigen::VectorXd x = gather(data.X, held, cols).row(0).transpose();
        errors[f] = std::abs(rf_predict(forest, x) - data.y[fold.held_out]);
    });
    // accumulate in subject-id order so the sum is independent of row order
    std::vector<std::size_t> order(folds.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return data.subject_ids[folds[a].held_out] < data.subject_ids[folds[b].held_out];
    });
    double sum = 0.0;
    for (std::size_t f : order) sum += errors[f];
    return sum / static_cast<double>(folds.size());
}

std::vector<std::size_t> rows_by_id(const Dataset& data) {
    std::vector<std::size_t> rows(data.subjects());
    std::iota(rows.begin(), rows.end(), 0);
    std::sort(rows.begin(), rows.end(),
              [&](std::size_t a, std::size_t b) { return data.subject_ids[a] < data.subject_ids[b]; });
    return rows;
}

}  // namespace

RfeResult rfe_loocv(const Dataset& data, const ForestSpec& spec, std::size_t threads) {
    data.validate();
    validate(spec);
    const std::size_t d = data.features();
    if (d == 0) throw DegenerateInputError("no features left for selection");

    const auto folds = loocv_folds(data, spec.rng_seed);
    const auto all_rows = rows_by_id(data);
    const auto all_targets = as_targets(data, all_rows);

    RfeResult result;
    result.mae_by_cardinality.assign(d, 0.0);
    result.subsets.assign(d, {});
    std::vector<std::size_t> current(d);
    std::iota(current.begin(), current.end(), 0);
    for (std::size_t k = d; k >= 1; --k) {
        result.mae_by_cardinality[k - 1] = loocv_raw_mae(data, folds, current, spec, threads);
        result.subsets[k - 1] = current;
        if (k == 1) break;

        ForestSpec full_spec = spec;
        full_spec.rng_seed = mix_seed(spec.rng_seed, "rfe-" + std::to_string(k));
        const auto forest = rf_train(gather(data.X, all_rows, current), all_targets, full_spec, threads);
        const Eigen::VectorXd importance = rf_importance(forest);
        Eigen::Index weakest = 0;
        for (Eigen::Index i = 1; i < importance.size(); ++i)
            if (importance[i] < importance[weakest]) weakest = i;
        current.erase(current.begin() + weakest);
    }

    std::size_t best = 1;
    for (std::size_t k = 2; k <= d; ++k)
        if (result.mae_by_cardinality[k - 1] < result.mae_by_cardinality[best - 1]) best = k;
    result.selected = result.subsets[best - 1];
    std::sort(result.selected.begin(), result.selected.end());
    return result;
}

EvalReport loocv_evaluate(const Dataset& data, const ForestSpec& spec, std::span<const std::size_t> selected,
                          std::size_t threads) {
    data.validate();
    validate(spec);
    if (selected.empty()) throw DegenerateInputError("no features selected for evaluation");
    for (std::size_t c : selected)
        if (c >= data.features()) throw ShapeError("selected column out of range");

    const auto folds = loocv_folds(data, spec.rng_seed);
    EvalReport report;
    report.per_subject.resize(data.subjects());
    parallel_for(folds.size(), threads, [&](std::size_t f) {
        const Fold& fold = folds[f];
        const Eigen::MatrixXd train = gather(data.X, fold.training, selected);
        const Scaler scaler = zscore_fit(train);
        ForestSpec fold_spec = spec;
        fold_spec.rng_seed = fold.seed;
        const auto forest = rf_train(zscore_apply(scaler, train), as_targets(data, fold.training), fold_spec);
        const std::size_t held[] = {fold.held_out};
        const Eigen::VectorXd x = zscore_apply(scaler, gather(data.X, held, selected)).row(0).transpose();
        const double raw = rf_predict(forest, x);
        report.per_subject[fold.held_out] = {data.subject_ids[fold.held_out], data.y[fold.held_out], round_mrs(raw), raw};
    });

    std::vector<int> truth, predicted;
    for (const auto& s : report.per_subject) {
        truth.push_back(s.truth);
        predicted.push_back(s.predicted);
    }
    const Metrics m = score_predictions(truth, predicted);
    report.accuracy = m.accuracy;
    report.mae_mean = m.mae_mean;
    report.mae_std = m.mae_std;
    return report;
}

PipelineResult run_pipeline(const Dataset& data, const ForestSpec& spec, std::size_t threads) {
    data.validate();
    PipelineResult result;
    const Eigen::MatrixXd normalized = zscore_apply(zscore_fit(data.X), data.X);
    const ColumnSelection varying = drop_zero_variance(normalized);
    if (varying.kept.empty()) throw DegenerateInputError("every feature has zero variance across subjects");
    result.kept_after_variance = varying.kept;

    Dataset reduced = data.select_columns(varying.kept);
    reduced.X = varying.X;
    result.rfe = rfe_loocv(reduced, spec, threads);
    for (std::size_t c : result.rfe.selected) result.selected.push_back(varying.kept[c]);

    result.report = loocv_evaluate(data, spec, result.selected, threads);

    const auto rows = rows_by_id(data);
    ForestSpec final_spec = spec;
    final_spec.rng_seed = mix_seed(spec.rng_seed, "final");
    const Eigen::MatrixXd train = gather(normalized, rows, result.selected);
    result.importance = rf_importance(rf_train(train, as_targets(data, rows), final_spec, threads));
    return result;
}

}  // namespace tractfeat
