#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace tractfeat {

/// Subjects x features with integer mRS targets in [0, 4].
struct Dataset {
    Eigen::MatrixXd X;
    std::vector<int> y;
    std::vector<std::string> feature_names;
    std::vector<std::string> subject_ids;

    std::size_t subjects() const { return y.size(); }
    std::size_t features() const { return static_cast<std::size_t>(X.cols()); }

    /// Throws ValidationError / ShapeError / DegenerateInputError on violation.
    void validate() const;
    Dataset select_columns(std::span<const std::size_t> columns) const;
    Dataset select_rows(std::span<const std::size_t> rows) const;
};

inline constexpr int kMinGrade = 0;
inline constexpr int kMaxGrade = 4;

struct Scaler {
    Eigen::VectorXd mean;
    Eigen::VectorXd stddev;  // population; 0 for constant columns
};

Scaler zscore_fit(const Eigen::MatrixXd& X);
/// (x - mean) / stddev per column; constant columns are only centred.
Eigen::MatrixXd zscore_apply(const Scaler& scaler, const Eigen::MatrixXd& X);

struct ColumnSelection {
    Eigen::MatrixXd X;
    std::vector<std::size_t> kept;
};

/// Drops columns whose values are all identical.
ColumnSelection drop_zero_variance(const Eigen::MatrixXd& X);

struct ForestSpec {
    int n_trees = 300;
    int max_depth = 3;
    int min_samples_split = 2;
    std::optional<int> mtry;  // default ceil(d / 3)
    std::uint64_t rng_seed = 0;

    int features_per_split(std::size_t d) const;
};

void validate(const ForestSpec& spec);

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf: mean training target
};

class RegressionTree {
public:
    std::vector<TreeNode> nodes;

    double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    int depth() const;
};

class RegressionForest {
public:
    std::vector<RegressionTree> trees;
    std::size_t n_features = 0;
    /// Per-tree impurity decrease by feature, each tree normalized to sum 1.
    std::vector<Eigen::VectorXd> tree_importance;
};

/// Bootstrap-aggregated CART regression trees split by variance reduction.
/// Deterministic in spec.rng_seed; trees are independent of `threads`.
RegressionForest rf_train(const Eigen::MatrixXd& X, std::span<const double> y, const ForestSpec& spec,
                          std::size_t threads = 1);

double rf_predict(const RegressionForest& forest, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Round half away from zero, then clamp to the mRS range.
int round_mrs(double raw);
int predict_mrs(const RegressionForest& forest, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Mean decrease in impurity, averaged over trees and normalized to sum 1
/// (all zeros when no tree split).
Eigen::VectorXd rf_importance(const RegressionForest& forest);

struct Metrics {
    double accuracy = 0.0;
    double mae_mean = 0.0;
    double mae_std = 0.0;  // population
};

Metrics score_predictions(std::span<const int> truth, std::span<const int> predicted);

struct SubjectPrediction {
    std::string id;
    int truth = 0;
    int predicted = 0;
    double raw = 0.0;
};

struct EvalReport {
    double accuracy = 0.0;
    double mae_mean = 0.0;
    double mae_std = 0.0;
    std::vector<SubjectPrediction> per_subject;  // input order
};

struct Fold {
    std::size_t held_out;                // row in the input dataset
    std::vector<std::size_t> training;   // rows sorted by subject id
    std::uint64_t seed;                  // hash(forest seed, subject id)
};

/// Leave-one-out folds. Training rows are ordered by subject id and seeds
/// are keyed by subject id, so results do not depend on input row order.
std::vector<Fold> loocv_folds(const Dataset& data, std::uint64_t seed);

struct RfeResult {
    std::vector<std::size_t> selected;          // ascending column indices
    std::vector<double> mae_by_cardinality;     // entry k-1: LOOCV MAE with k features
    std::vector<std::vector<std::size_t>> subsets;  // entry k-1: the k-feature subset
};

/// Recursive feature elimination scored by leave-one-out MAE of raw
/// forest predictions. One feature (least important) is dropped per step;
/// the subset with the lowest MAE wins, ties going to fewer features.
RfeResult rfe_loocv(const Dataset& data, const ForestSpec& spec, std::size_t threads = 1);

/// Leave-one-out evaluation on the given columns. Each fold refits the
/// z-score scaler and the forest on the remaining subjects, then rounds
/// and clamps the held-out prediction.
EvalReport loocv_evaluate(const Dataset& data, const ForestSpec& spec, std::span<const std::size_t> selected,
                          std::size_t threads = 1);

struct PipelineResult {
    std::vector<std::size_t> kept_after_variance;  // columns of the input surviving the zero-variance drop
    RfeResult rfe;                                 // indices relative to kept_after_variance
    std::vector<std::size_t> selected;             // columns of the input
    EvalReport report;
    Eigen::VectorXd importance;                    // one entry per selected column
};

/// normalize -> drop zero variance -> RFE with LOOCV -> LOOCV evaluation,
/// plus importances of a forest trained on all subjects.
PipelineResult run_pipeline(const Dataset& data, const ForestSpec& spec, std::size_t threads = 1);

}  // namespace tractfeat
