#include "tractfeat/connectome.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "tractfeat/error.hpp"
#include "tractfeat/morphology.hpp"

namespace tractfeat {

Atlas::Atlas(Volume volume, std::string name) : volume_(std::move(volume)), name_(std::move(name)) {
    std::set<int> found;
    for (double v : volume_.data())
        if (v != 0.0) found.insert(static_cast<int>(v));
    labels_.assign(found.begin(), found.end());
    build_index();
}

Atlas::Atlas(Volume volume, std::vector<int> labels, std::string name)
    : volume_(std::move(volume)), labels_(std::move(labels)), name_(std::move(name)) {
    build_index();
}

void Atlas::build_index() {
    if (volume_.kind() == VolumeKind::scalar) {
        for (double v : volume_.data())
            if (v < 0.0 || v != std::floor(v)) throw ValidationError("atlas volume must hold non-negative integers");
    }
    if (labels_.size() < 2) throw ValidationError("atlas needs at least two regions");
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i] <= 0) throw ValidationError("atlas labels must be positive");
        if (i > 0 && labels_[i] <= labels_[i - 1]) throw ValidationError("atlas labels must be sorted and distinct");
    }
    const auto data = volume_.data();
    region_index_.resize(data.size());
    for (std::size_t n = 0; n < data.size(); ++n) {
        if (data[n] == 0.0) {
            region_index_[n] = -1;
            continue;
        }
        const int label = static_cast<int>(data[n]);
        const auto it = std::lower_bound(labels_.begin(), labels_.end(), label);
        if (it == labels_.end() || *it != label)
            throw ValidationError("atlas voxel label " + std::to_string(label) + " missing from label list");
        region_index_[n] = static_cast<std::int32_t>(it - labels_.begin());
    }
}

int Atlas::region_at(const Vec3& point) const {
    Index3 ijk;
    if (!grid().containing_voxel(point, ijk)) return -1;
    return region_index_[grid().linear_index(ijk)];
}

std::int64_t DisruptionMatrix::max() const {
    return counts_.empty() ? 0 : *std::max_element(counts_.begin(), counts_.end());
}

DisruptionMatrix disruption_matrix(const Tractogram& tractogram, const Atlas& atlas) {
    DisruptionMatrix d(atlas.size());
    for (std::size_t s = 0; s < tractogram.size(); ++s) {
        const auto line = tractogram[s];
        if (line.empty()) continue;
        const int i = atlas.region_at(line.front());
        const int j = atlas.region_at(line.back());
        if (i < 0 || j < 0) continue;
        ++d(i, j);
        if (i != j) ++d(j, i);
    }
    return d;
}

Eigen::MatrixXd normalize_disruption(const DisruptionMatrix& d) {
    const std::int64_t peak = d.max();
    if (peak <= 0) throw DegenerateInputError("disruption matrix is all zero");
    const auto n = static_cast<Eigen::Index>(d.size());
    Eigen::MatrixXd out(n, n);
    const double scale = static_cast<double>(peak);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) out(i, j) = static_cast<double>(d(i, j)) / scale;
    return out;
}

Eigen::VectorXd region_load(const Eigen::MatrixXd& normalized) {
    Eigen::VectorXd load = Eigen::VectorXd::Zero(normalized.cols());
    for (Eigen::Index j = 0; j < normalized.cols(); ++j)
        for (Eigen::Index i = 0; i < normalized.rows(); ++i) load[j] += normalized(i, j);
    return load;
}

Eigen::VectorXd lesion_weights(const Volume& lesion, const Atlas& atlas) {
    if (!lesion.grid().same_grid(atlas.grid()))
        throw ShapeError("lesion and atlas must share a grid; resample the lesion first");
    std::vector<std::int64_t> counts(atlas.size(), 0);
    const auto data = lesion.data();
    for (std::size_t n = 0; n < data.size(); ++n) {
        if (data[n] == 0.0) continue;
        const int region = atlas.region_of_voxel(n);
        if (region >= 0) ++counts[region];
    }
    const double voxel_volume = lesion.grid().voxel_volume();
    Eigen::VectorXd weights(static_cast<Eigen::Index>(counts.size()));
    for (std::size_t i = 0; i < counts.size(); ++i) weights[static_cast<Eigen::Index>(i)] = counts[i] * voxel_volume;
    return weights;
}

std::string_view to_string(FeatureKind kind) {
    switch (kind) {
        case FeatureKind::tractographic: return "tractographic";
        case FeatureKind::volumetric: return "volumetric";
        case FeatureKind::spatial: return "spatial";
        case FeatureKind::morphological: return "morphological";
        case FeatureKind::volumetric_spatial: return "volumetric_spatial";
    }
    return "unknown";
}

FeatureKind parse_feature_kind(std::string_view text) {
    for (FeatureKind kind : kAllFeatureKinds)
        if (to_string(kind) == text) return kind;
    throw ValidationError("unknown feature kind '" + std::string(text) + "'");
}

FeatureVector tractographic_feature(const Eigen::VectorXd& weights, const Eigen::VectorXd& load) {
    if (weights.size() != load.size()) throw ShapeError("weight and load vectors differ in length");
    return {FeatureKind::tractographic, weights.cwiseProduct(load)};
}

TractographicResult build_tractographic(const Tractogram& lesion_tracts, const Volume& lesion, const Atlas& atlas) {
    TractographicResult r{
        .feature = {FeatureKind::tractographic, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(atlas.size()))},
        .disruption = disruption_matrix(lesion_tracts, atlas),
        .weights = lesion_weights(lesion, atlas),
        .load = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(atlas.size())),
        .degenerate = false,
        .warning = {},
    };
    if (r.weights.isZero(0.0)) {
        r.degenerate = true;
        r.warning = "lesion does not overlap any atlas region; tractographic feature set to zero";
        return r;
    }
    if (r.disruption.max() == 0) {
        r.degenerate = true;
        r.warning = "no streamline through the lesion connects two atlas regions; tractographic feature set to zero";
        return r;
    }
    r.load = region_load(normalize_disruption(r.disruption));
    r.feature = tractographic_feature(r.weights, r.load);
    return r;
}

FeatureVector volumetric_feature(const Volume& lesion) {
    std::size_t count = 0;
    for (double v : lesion.data()) count += v != 0.0;
    Eigen::VectorXd values(1);
    values[0] = static_cast<double>(count) * lesion.grid().voxel_volume();
    return {FeatureKind::volumetric, values};
}

FeatureVector spatial_feature(const Volume& lesion) {
    const GridSpec& grid = lesion.grid();
    const auto data = lesion.data();
    Vec3 sum = Vec3::Zero();
    std::size_t count = 0;
    for (std::size_t n = 0; n < data.size(); ++n) {
        if (data[n] == 0.0) continue;
        sum += grid.voxel_to_world(grid.unravel(n));
        ++count;
    }
    if (count == 0) throw DegenerateInputError("spatial feature of an empty lesion is undefined");
    return {FeatureKind::spatial, sum / static_cast<double>(count)};
}

FeatureVector morphological_feature(const Volume& lesion) {
    const LesionShape shape = measure_lesion(lesion);
    Eigen::VectorXd values(6);
    values[0] = shape.major_axis_mm;
    values[1] = shape.minor_axis_mm;
    values[2] = shape.minor_axis_mm > 0.0 ? shape.major_axis_mm / shape.minor_axis_mm : 0.0;
    values[3] = shape.hull_volume_mm3 > 0.0 ? std::min(1.0, shape.volume_mm3 / shape.hull_volume_mm3) : 1.0;
    values[4] = std::cbrt(std::numbers::pi) * std::pow(6.0 * shape.volume_mm3, 2.0 / 3.0) / shape.surface_mm2;
    values[5] = shape.surface_mm2;
    return {FeatureKind::morphological, values};
}

FeatureVector volumetric_spatial_feature(const Volume& lesion, const Atlas& atlas) {
    return {FeatureKind::volumetric_spatial, lesion_weights(lesion, atlas)};
}

std::vector<std::string> feature_column_names(FeatureKind kind, const Atlas& atlas) {
    std::vector<std::string> names;
    switch (kind) {
        case FeatureKind::tractographic:
            for (int label : atlas.labels()) names.push_back("T_" + std::to_string(label));
            break;
        case FeatureKind::volumetric_spatial:
            for (int label : atlas.labels()) names.push_back("VS_" + std::to_string(label));
            break;
        case FeatureKind::volumetric: names = {"vol"}; break;
        case FeatureKind::spatial: names = {"cx", "cy", "cz"}; break;
        case FeatureKind::morphological: names = {"maj", "min", "ratio", "solid", "round", "surf"}; break;
    }
    return names;
}

}  // namespace tractfeat
