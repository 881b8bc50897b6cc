#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "tractfeat/error.hpp"
#include "tractfeat/regression.hpp"

using namespace tractfeat;

namespace {

// y = 4 when x >= 0 else 0, x uniform in [-1, 1].
void step_data(std::size_t n, std::uint64_t seed, Eigen::MatrixXd& X, std::vector<double>& y) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    X.resize(static_cast<Eigen::Index>(n), 1);
    y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        X(static_cast<Eigen::Index>(i), 0) = u(rng);
        y[i] = X(static_cast<Eigen::Index>(i), 0) >= 0.0 ? 4.0 : 0.0;
    }
}

// One informative column (index `informative`) among noise.
Dataset informative_dataset(std::size_t m, std::size_t d, std::size_t informative, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_int_distribution<int> grade(0, 4);
    Dataset data;
    data.X.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < m; ++i) {
        const int g = grade(rng);
        data.y.push_back(g);
        data.subject_ids.push_back("s" + std::to_string(100 + i));
        for (std::size_t c = 0; c < d; ++c)
            data.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
                c == informative ? g + 0.3 * noise(rng) : noise(rng);
    }
    for (std::size_t c = 0; c < d; ++c) data.feature_names.push_back("f" + std::to_string(c));
    return data;
}

ForestSpec small_forest(std::uint64_t seed, int trees = 60) {
    ForestSpec spec;
    spec.n_trees = trees;
    spec.rng_seed = seed;
    return spec;
}

}  // namespace

TEST_CASE("z-score with population deviation") {
    Eigen::MatrixXd X(3, 2);
    X << 1, 7, 2, 7, 3, 7;
    const Scaler s = zscore_fit(X);
    const Eigen::MatrixXd Z = zscore_apply(s, X);
    const double a = 1.0 / std::sqrt(2.0 / 3.0);
    CHECK(Z(0, 0) == doctest::Approx(-a).epsilon(1e-12));
    CHECK(Z(1, 0) == doctest::Approx(0.0));
    CHECK(Z(2, 0) == doctest::Approx(a).epsilon(1e-12));
    CHECK(std::abs(Z(0, 0) + 1.2247) < 1e-4);
    CHECK(s.stddev[1] == 0.0);
    CHECK((Z.col(1).array() == 0.0).all());

    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(5.0, 2.0);
    Eigen::MatrixXd R(17, 4);
    for (Eigen::Index i = 0; i < R.size(); ++i) R(i) = n(rng);
    const Eigen::MatrixXd RZ = zscore_apply(zscore_fit(R), R);
    for (Eigen::Index c = 0; c < 4; ++c) {
        CHECK(std::abs(RZ.col(c).mean()) < 1e-9);
        CHECK(std::sqrt(RZ.col(c).squaredNorm() / 17.0) == doctest::Approx(1.0));
    }

    CHECK_THROWS_AS(zscore_fit(Eigen::MatrixXd::Ones(1, 3)), DegenerateInputError);
    CHECK_THROWS_AS(zscore_apply(s, Eigen::MatrixXd::Ones(3, 3)), ShapeError);
}

TEST_CASE("zero-variance columns are dropped") {
    Eigen::MatrixXd X(3, 3);
    X << 1, 5, 0, 2, 5, 1, 3, 5, 2;
    const ColumnSelection sel = drop_zero_variance(X);
    CHECK(sel.kept == std::vector<std::size_t>{0, 2});
    CHECK(sel.X.col(1) == X.col(2));

    Eigen::MatrixXd distinct(2, 2);
    distinct << 1, 2, 3, 4;
    CHECK(drop_zero_variance(distinct).kept == std::vector<std::size_t>{0, 1});

    const ColumnSelection none = drop_zero_variance(Eigen::MatrixXd::Constant(4, 3, 2.0));
    CHECK(none.kept.empty());
    CHECK(none.X.cols() == 0);
}

TEST_CASE("dataset validation") {
    Dataset ok = informative_dataset(4, 2, 0, 1);
    CHECK_NOTHROW(ok.validate());

    Dataset bad = ok;
    bad.y[0] = 5;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = ok;
    bad.X(1, 1) = std::nan("");
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = ok;
    bad.subject_ids[1] = bad.subject_ids[0];
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = ok;
    bad.y.pop_back();
    CHECK_THROWS_AS(bad.validate(), ShapeError);
    CHECK_THROWS_AS(informative_dataset(1, 2, 0, 1).validate(), DegenerateInputError);
}

TEST_CASE("forest spec validation") {
    ForestSpec spec;
    CHECK(spec.n_trees == 300);
    CHECK(spec.max_depth == 3);
    CHECK(spec.features_per_split(116) == 39);
    CHECK(spec.features_per_split(1) == 1);
    CHECK(spec.features_per_split(6) == 2);
    spec.n_trees = 0;
    CHECK_THROWS_AS(validate(spec), ValidationError);
    spec = ForestSpec{};
    spec.max_depth = 0;
    CHECK_THROWS_AS(validate(spec), ValidationError);

    const Eigen::MatrixXd X = Eigen::MatrixXd::Zero(1, 1);
    const std::vector<double> y{1.0};
    CHECK_THROWS_AS(rf_train(X, y, ForestSpec{}), DegenerateInputError);
}

TEST_CASE("constant target gives constant predictions and no importance") {
    Eigen::MatrixXd X(10, 3);
    for (Eigen::Index i = 0; i < X.size(); ++i) X(i) = static_cast<double>(i % 7);
    const std::vector<double> y(10, 2.4);
    const RegressionForest f = rf_train(X, y, small_forest(5));
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        CHECK(rf_predict(f, X.row(i).transpose()) == doctest::Approx(2.4));
        CHECK(predict_mrs(f, X.row(i).transpose()) == 2);
    }
    CHECK(rf_importance(f).isZero());
}

TEST_CASE("step function is learned") {
    Eigen::MatrixXd X, Xt;
    std::vector<double> y, yt;
    step_data(200, 1, X, y);
    step_data(500, 2, Xt, yt);
    const RegressionForest f = rf_train(X, y, ForestSpec{.rng_seed = 9});
    CHECK(f.trees.size() == 300);
    double mse = 0.0;
    for (Eigen::Index i = 0; i < Xt.rows(); ++i) {
        const double p = rf_predict(f, Xt.row(i).transpose());
        CHECK(p >= 0.0);
        CHECK(p <= 4.0);
        mse += (p - yt[static_cast<std::size_t>(i)]) * (p - yt[static_cast<std::size_t>(i)]);
    }
    mse /= static_cast<double>(Xt.rows());
    CHECK(mse < 0.1);
    for (const auto& tree : f.trees) CHECK(tree.depth() <= 3);
}

TEST_CASE("leaves hold training-target means") {
    Eigen::MatrixXd X, unused;
    std::vector<double> y, yt;
    step_data(50, 4, X, y);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += 0.1 * static_cast<double>(i % 5);
    const RegressionForest f = rf_train(X, y, small_forest(2, 20));
    const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    for (const auto& tree : f.trees)
        for (const auto& node : tree.nodes) {
            CHECK(node.value >= *lo - 1e-12);
            CHECK(node.value <= *hi + 1e-12);
        }
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> far(-50.0, 50.0);
    for (int i = 0; i < 200; ++i) {
        const double p = rf_predict(f, Eigen::VectorXd::Constant(1, far(rng)));
        CHECK(p >= *lo);
        CHECK(p <= *hi);
    }
}

TEST_CASE("training is deterministic and thread independent") {
    const Dataset data = informative_dataset(30, 5, 2, 11);
    std::vector<double> y(data.y.begin(), data.y.end());
    const RegressionForest a = rf_train(data.X, y, small_forest(77), 1);
    const RegressionForest b = rf_train(data.X, y, small_forest(77), 4);
    const RegressionForest c = rf_train(data.X, y, small_forest(78), 1);
    bool differs = false;
    for (Eigen::Index i = 0; i < data.X.rows(); ++i) {
        const Eigen::VectorXd x = data.X.row(i).transpose();
        CHECK(rf_predict(a, x) == rf_predict(b, x));
        differs |= rf_predict(a, x) != rf_predict(c, x);
    }
    CHECK(differs);
    CHECK(rf_importance(a) == rf_importance(b));
}

TEST_CASE("rounding is half away from zero, then clamped") {
    CHECK(round_mrs(2.5) == 3);
    CHECK(round_mrs(2.4) == 2);
    CHECK(round_mrs(1.5) == 2);
    CHECK(round_mrs(0.5) == 1);
    CHECK(round_mrs(4.7) == 4);
    CHECK(round_mrs(-0.6) == 0);
    CHECK(round_mrs(-0.4) == 0);
    CHECK(round_mrs(1e9) == 4);
    CHECK_THROWS_AS(round_mrs(std::nan("")), ValidationError);
}

TEST_CASE("importance favours the informative feature") {
    const Dataset data = informative_dataset(60, 6, 3, 21);
    std::vector<double> y(data.y.begin(), data.y.end());
    const Eigen::VectorXd imp = rf_importance(rf_train(data.X, y, small_forest(4, 100)));
    CHECK(imp.size() == 6);
    CHECK(imp.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((imp.array() >= 0.0).all());
    Eigen::Index best = 0;
    imp.maxCoeff(&best);
    CHECK(best == 3);
}

TEST_CASE("metrics by hand") {
    const std::vector<int> t1{3, 3}, p1{3, 2};
    const Metrics m1 = score_predictions(t1, p1);
    CHECK(m1.accuracy == 0.5);
    CHECK(m1.mae_mean == 0.5);
    CHECK(m1.mae_std == 0.5);

    const std::vector<int> t2{0, 1, 2, 4}, p2{0, 1, 2, 4};
    const Metrics m2 = score_predictions(t2, p2);
    CHECK(m2.accuracy == 1.0);
    CHECK(m2.mae_mean == 0.0);
    CHECK(m2.mae_std == 0.0);

    // errors 4, 0, 2, 2: mean 2, population variance 2
    const std::vector<int> t3{0, 2, 1, 3}, p3{4, 2, 3, 1};
    const Metrics m3 = score_predictions(t3, p3);
    CHECK(m3.accuracy == 0.25);
    CHECK(m3.mae_mean == 2.0);
    CHECK(m3.mae_std == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));

    const std::vector<int> empty;
    CHECK_THROWS_AS(score_predictions(empty, empty), DegenerateInputError);
    CHECK_THROWS_AS(score_predictions(t1, p2), ShapeError);
}

TEST_CASE("leave-one-out folds are isolated and keyed by subject") {
    Dataset data = informative_dataset(9, 2, 0, 5);
    const auto folds = loocv_folds(data, 42);
    REQUIRE(folds.size() == 9);
    std::set<std::uint64_t> seeds;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        CHECK(folds[f].held_out == f);
        CHECK(folds[f].training.size() == 8);
        CHECK(std::find(folds[f].training.begin(), folds[f].training.end(), f) == folds[f].training.end());
        std::set<std::size_t> unique(folds[f].training.begin(), folds[f].training.end());
        CHECK(unique.size() == 8);
        CHECK(std::is_sorted(folds[f].training.begin(), folds[f].training.end(), [&](std::size_t a, std::size_t b) {
            return data.subject_ids[a] < data.subject_ids[b];
        }));
        seeds.insert(folds[f].seed);
    }
    CHECK(seeds.size() == 9);

    // Reversing rows keeps each subject's seed.
    std::vector<std::size_t> reversed(9);
    std::iota(reversed.rbegin(), reversed.rend(), 0);
    const auto flipped = loocv_folds(data.select_rows(reversed), 42);
    for (std::size_t f = 0; f < 9; ++f) CHECK(flipped[f].seed == folds[8 - f].seed);
}

TEST_CASE("evaluation is permutation invariant and thread independent") {
    const Dataset data = informative_dataset(14, 3, 1, 8);
    const std::vector<std::size_t> cols{0, 1, 2};
    const EvalReport a = loocv_evaluate(data, small_forest(3), cols, 1);
    const EvalReport b = loocv_evaluate(data, small_forest(3), cols, 4);
    CHECK(a.accuracy == b.accuracy);
    CHECK(a.mae_mean == b.mae_mean);
    for (std::size_t i = 0; i < a.per_subject.size(); ++i) CHECK(a.per_subject[i].raw == b.per_subject[i].raw);

    std::vector<std::size_t> perm(14);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(6);
    std::shuffle(perm.begin(), perm.end(), rng);
    const EvalReport c = loocv_evaluate(data.select_rows(perm), small_forest(3), cols, 1);
    CHECK(c.accuracy == a.accuracy);
    CHECK(c.mae_mean == a.mae_mean);
    CHECK(c.mae_std == a.mae_std);
    for (std::size_t i = 0; i < perm.size(); ++i) {
        CHECK(c.per_subject[i].id == a.per_subject[perm[i]].id);
        CHECK(c.per_subject[i].raw == a.per_subject[perm[i]].raw);
    }
}

TEST_CASE("report matches its per-subject rows") {
    const Dataset data = informative_dataset(12, 2, 0, 30);
    const std::vector<std::size_t> cols{0};
    const EvalReport r = loocv_evaluate(data, small_forest(1), cols);
    std::vector<int> truth, predicted;
    for (std::size_t i = 0; i < r.per_subject.size(); ++i) {
        CHECK(r.per_subject[i].id == data.subject_ids[i]);
        CHECK(r.per_subject[i].truth == data.y[i]);
        CHECK(r.per_subject[i].predicted == round_mrs(r.per_subject[i].raw));
        truth.push_back(r.per_subject[i].truth);
        predicted.push_back(r.per_subject[i].predicted);
    }
    const Metrics m = score_predictions(truth, predicted);
    CHECK(r.accuracy == m.accuracy);
    CHECK(r.mae_mean == m.mae_mean);
    CHECK(r.mae_std == m.mae_std);

    const std::vector<std::size_t> none;
    CHECK_THROWS_AS(loocv_evaluate(data, small_forest(1), none), DegenerateInputError);
}

TEST_CASE("perfectly separated grades are predicted exactly") {
    Dataset data;
    data.X.resize(20, 1);
    for (int i = 0; i < 20; ++i) {
        data.y.push_back(i % 5);
        data.X(i, 0) = 10.0 * (i % 5);
        data.subject_ids.push_back("p" + std::to_string(i));
    }
    data.feature_names = {"grade"};
    const std::vector<std::size_t> cols{0};
    const EvalReport r = loocv_evaluate(data, ForestSpec{.rng_seed = 2}, cols);
    CHECK(r.accuracy == 1.0);
    CHECK(r.mae_mean == 0.0);
    CHECK(r.mae_std == 0.0);
}

TEST_CASE("recursive elimination") {
    SUBCASE("curve shape and best subset") {
        const Dataset data = informative_dataset(20, 4, 0, 13);
        const RfeResult r = rfe_loocv(data, small_forest(5, 40));
        REQUIRE(r.mae_by_cardinality.size() == 4);
        REQUIRE(r.subsets.size() == 4);
        for (std::size_t k = 1; k <= 4; ++k) CHECK(r.subsets[k - 1].size() == k);
        // nested: each subset drops one column of the next
        for (std::size_t k = 1; k < 4; ++k)
            for (std::size_t c : r.subsets[k - 1])
                CHECK(std::find(r.subsets[k].begin(), r.subsets[k].end(), c) != r.subsets[k].end());
        const double best = *std::min_element(r.mae_by_cardinality.begin(), r.mae_by_cardinality.end());
        CHECK(r.mae_by_cardinality[r.selected.size() - 1] == best);
        // ties go to the smaller subset
        for (std::size_t k = 1; k < r.selected.size(); ++k) CHECK(r.mae_by_cardinality[k - 1] > best);
        CHECK(std::is_sorted(r.selected.begin(), r.selected.end()));
    }
    SUBCASE("single feature") {
        const Dataset data = informative_dataset(10, 1, 0, 2);
        const RfeResult r = rfe_loocv(data, small_forest(1, 20));
        CHECK(r.selected == std::vector<std::size_t>{0});
        CHECK(r.mae_by_cardinality.size() == 1);
    }
    SUBCASE("no features") {
        Dataset data = informative_dataset(10, 1, 0, 2);
        data = data.select_columns(std::vector<std::size_t>{});
        CHECK_THROWS_AS(rfe_loocv(data, small_forest(1)), DegenerateInputError);
    }
    SUBCASE("informative column survives") {
        const Dataset data = informative_dataset(40, 6, 4, 99);
        const RfeResult r = rfe_loocv(data, small_forest(7, 60));
        CHECK(std::find(r.selected.begin(), r.selected.end(), 4) != r.selected.end());
        // the last survivor is the informative one
        CHECK(r.subsets[0] == std::vector<std::size_t>{4});
    }
}

TEST_CASE("pipeline drops constant columns and maps indices back") {
    Dataset data = informative_dataset(16, 3, 2, 4);
    // insert a constant column at index 1
    Eigen::MatrixXd X(16, 4);
    X << data.X.col(0), Eigen::VectorXd::Constant(16, 3.0), data.X.col(1), data.X.col(2);
    data.X = X;
    data.feature_names = {"a", "const", "b", "good"};
    const PipelineResult r = run_pipeline(data, small_forest(6, 40));
    CHECK(r.kept_after_variance == std::vector<std::size_t>{0, 2, 3});
    CHECK(std::find(r.selected.begin(), r.selected.end(), 1) == r.selected.end());
    CHECK(std::find(r.selected.begin(), r.selected.end(), 3) != r.selected.end());
    CHECK(static_cast<std::size_t>(r.importance.size()) == r.selected.size());
    CHECK(r.report.per_subject.size() == 16);

    data.X = Eigen::MatrixXd::Constant(16, 4, 1.0);
    CHECK_THROWS_AS(run_pipeline(data, small_forest(6, 10)), DegenerateInputError);
}
