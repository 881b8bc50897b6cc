#include <algorithm>
#include <cmath>
#include <numeric>

#include "tractfeat/error.hpp"
#include "tractfeat/parallel.hpp"
#include "tractfeat/regression.hpp"
#include "tractfeat/rng.hpp"

namespace tractfeat {

int ForestSpec::features_per_split(std::size_t d) const {
    const int fallback = static_cast<int>((d + 2) / 3);
    return std::clamp(mtry.value_or(fallback), 1, static_cast<int>(std::max<std::size_t>(d, 1)));
}

void validate(const ForestSpec& spec) {
    if (spec.n_trees < 1) throw ValidationError("n_trees must be at least 1");
    if (spec.max_depth < 1) throw ValidationError("max_depth must be at least 1");
    if (spec.min_samples_split < 2) throw ValidationError("min_samples_split must be at least 2");
    if (spec.mtry && *spec.mtry < 1) throw ValidationError("mtry must be at least 1");
}

double RegressionTree::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    int node = 0;
    while (nodes[node].feature >= 0) {
        const TreeNode& n = nodes[node];
        node = x[n.feature] <= n.threshold ? n.left : n.right;
    }
    return nodes[node].value;
}

int RegressionTree::depth() const {
    // nodes are appended parent-before-child
    std::vector<int> level(nodes.size(), 0);
    int deepest = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].feature < 0) continue;
        level[nodes[i].left] = level[nodes[i].right] = level[i] + 1;
        deepest = std::max(deepest, level[i] + 1);
    }
    return deepest;
}

namespace {

struct SplitCandidate {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
    std::size_t left_count = 0;
};

class TreeBuilder {
public:
    TreeBuilder(const Eigen::MatrixXd& X, std::span<const double> y, const ForestSpec& spec, Rng& rng)
        : X_(X), y_(y), spec_(spec), rng_(rng), mtry_(spec.features_per_split(static_cast<std::size_t>(X.cols()))),
          importance_(Eigen::VectorXd::Zero(X.cols())) {
        features_.resize(static_cast<std::size_t>(X.cols()));
        std::iota(features_.begin(), features_.end(), 0);
    }

    RegressionTree build(std::vector<std::size_t> samples) {
        tree_.nodes.clear();
        grow(samples, 0);
        return std::move(tree_);
    }

    const Eigen::VectorXd& importance() const { return importance_; }

private:
    int grow(std::vector<std::size_t>& samples, int depth) {
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        double sum = 0.0;
        for (std::size_t s : samples) sum += y_[s];
        const double mean = sum / static_cast<double>(samples.size());
        tree_.nodes[id].value = mean;

        const bool pure = std::all_of(samples.begin(), samples.end(), [&](std::size_t s) { return y_[s] == y_[samples[0]]; });
        if (depth >= spec_.max_depth || static_cast<int>(samples.size()) < spec_.min_samples_split || pure) return id;

        const SplitCandidate best = find_split(samples, sum);
        if (best.feature < 0) return id;

        importance_[best.feature] += best.gain;
        std::vector<std::size_t> left, right;
        left.reserve(best.left_count);
        right.reserve(samples.size() - best.left_count);
        for (std::size_t s : samples) (X_(s, best.feature) <= best.threshold ? left : right).push_back(s);
        samples.clear();
        samples.shrink_to_fit();

        tree_.nodes[id].feature = best.feature;
        tree_.nodes[id].threshold = best.threshold;
        const int l = grow(left, depth + 1);
        const int r = grow(right, depth + 1);
        tree_.nodes[id].left = l;
        tree_.nodes[id].right = r;
        return id;
    }

    SplitCandidate find_split(const std::vector<std::size_t>& samples, double total) {
        // partial Fisher-Yates draws mtry distinct candidate features
        const std::size_t d = features_.size();
        for (std::size_t k = 0; k < static_cast<std::size_t>(mtry_); ++k) {
            const std::size_t pick = k + uniform_index(rng_, d - k);
            std::swap(features_[k], features_[pick]);
        }

        const double n = static_cast<double>(samples.size());
        const double parent = total * total / n;
        SplitCandidate best;
        order_ = samples;
        for (int k = 0; k < mtry_; ++k) {
            const int f = features_[static_cast<std::size_t>(k)];
            std::sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
                const double xa = X_(a, f), xb = X_(b, f);
                return xa < xb || (xa == xb && a < b);
            });
            double left_sum = 0.0;
            for (std::size_t i = 1; i < order_.size(); ++i) {
                left_sum += y_[order_[i - 1]];
                const double lo = X_(order_[i - 1], f);
                const double hi = X_(order_[i], f);
                if (!(lo < hi)) continue;
                const double nl = static_cast<double>(i);
                const double nr = n - nl;
                const double right_sum = total - left_sum;
                // reduction in sum of squared errors
                const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr - parent;
                if (gain > best.gain) {
                    double threshold = lo + (hi - lo) / 2.0;
                    if (threshold >= hi) threshold = lo;
                    best = {f, threshold, gain, i};
                }
            }
        }
        return best;
    }

    const Eigen::MatrixXd& X_;
    std::span<const double> y_;
    const ForestSpec& spec_;
    Rng& rng_;
    int mtry_;
    std::vector<int> features_;
    std::vector<std::size_t> order_;
    Eigen::VectorXd importance_;
    RegressionTree tree_;
};

}  // namespace

RegressionForest rf_train(const Eigen::MatrixXd& X, std::span<const double> y, const ForestSpec& spec,
                          std::size_t threads) {
    validate(spec);
    if (static_cast<std::size_t>(X.rows()) != y.size()) throw ShapeError("feature rows and targets differ in count");
    if (y.size() < 2) throw DegenerateInputError("a forest needs at least two training samples");
    if (X.cols() < 1) throw DegenerateInputError("a forest needs at least one feature");

    RegressionForest forest;
    forest.n_features = static_cast<std::size_t>(X.cols());
    forest.trees.resize(static_cast<std::size_t>(spec.n_trees));
    forest.tree_importance.resize(static_cast<std::size_t>(spec.n_trees));
    parallel_for(forest.trees.size(), threads, [&](std::size_t t) {
        Rng rng(mix_seed(spec.rng_seed, static_cast<std::uint64_t>(t)));
        std::vector<std::size_t> sample(y.size());
        for (auto& s : sample) s = uniform_index(rng, y.size());
        TreeBuilder builder(X, y, spec, rng);
        forest.trees[t] = builder.build(std::move(sample));
        Eigen::VectorXd imp = builder.importance();
        const double total = imp.sum();
        if (total > 0.0) imp /= total;
        forest.tree_importance[t] = std::move(imp);
    });
    return forest;
}

double rf_predict(const RegressionForest& forest, const Eigen::Ref<const Eigen::VectorXd>& x) {
    if (static_cast<std::size_t>(x.size()) != forest.n_features) throw ShapeError("feature vector length mismatch");
    double sum = 0.0;
    for (const auto& tree : forest.trees) sum += tree.predict(x);
    return sum / static_cast<double>(forest.trees.size());
}

int round_mrs(double raw) {
    if (std::isnan(raw)) throw ValidationError("prediction is NaN");
    const double rounded = std::round(raw);  // half away from zero
    return static_cast<int>(std::clamp(rounded, static_cast<double>(kMinGrade), static_cast<double>(kMaxGrade)));
}

int predict_mrs(const RegressionForest& forest, const Eigen::Ref<const Eigen::VectorXd>& x) {
    return round_mrs(rf_predict(forest, x));
}

Eigen::VectorXd rf_importance(const RegressionForest& forest) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(forest.n_features));
    for (const auto& imp : forest.tree_importance) mean += imp;
    const double total = mean.sum();
    if (total > 0.0) mean /= total;
    return mean;
}

}  // namespace tractfeat
