#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "tractfeat/tracker.hpp"
#include "tractfeat/volume.hpp"

namespace tractfeat {

/// Parcellation atlas: a label volume and its ordered region labels.
class Atlas {
public:
    /// Labels are taken from the distinct nonzero voxel values.
    Atlas(Volume volume, std::string name = "atlas");
    /// Explicit label list (sorted, distinct, positive); may include labels
    /// absent from the volume, so feature dimension stays fixed.
    Atlas(Volume volume, std::vector<int> labels, std::string name);

    const Volume& volume() const { return volume_; }
    const GridSpec& grid() const { return volume_.grid(); }
    const std::vector<int>& labels() const { return labels_; }
    const std::string& name() const { return name_; }
    std::size_t size() const { return labels_.size(); }

    /// Region index of a voxel, or -1 for background.
    int region_of_voxel(std::size_t linear) const { return region_index_[linear]; }
    /// Region index of the voxel containing a world point; -1 for background or outside.
    int region_at(const Vec3& point) const;

private:
    void build_index();

    Volume volume_;
    std::vector<int> labels_;
    std::string name_;
    std::vector<std::int32_t> region_index_;
};

/// Symmetric N x N streamline counts between atlas regions.
class DisruptionMatrix {
public:
    explicit DisruptionMatrix(std::size_t n) : n_(n), counts_(n * n, 0) {}

    std::size_t size() const { return n_; }
    std::int64_t operator()(std::size_t i, std::size_t j) const { return counts_[i * n_ + j]; }
    std::int64_t& operator()(std::size_t i, std::size_t j) { return counts_[i * n_ + j]; }
    std::int64_t max() const;

    friend bool operator==(const DisruptionMatrix&, const DisruptionMatrix&) = default;

private:
    std::size_t n_;
    std::vector<std::int64_t> counts_;
};

/// End-type connectivity: both endpoints of a streamline are labelled by
/// the atlas voxel containing them. When both are nonzero regions i and j,
/// d_ij and d_ji are incremented (d_ii once for i == j).
DisruptionMatrix disruption_matrix(const Tractogram& tractogram, const Atlas& atlas);

/// D / max(D). Throws DegenerateInputError for an all-zero matrix.
Eigen::MatrixXd normalize_disruption(const DisruptionMatrix& d);

/// Column sums of the normalized matrix.
Eigen::VectorXd region_load(const Eigen::MatrixXd& normalized);

/// Lesion volume (mm^3) falling in each atlas region. Lesion and atlas must
/// share a grid.
Eigen::VectorXd lesion_weights(const Volume& lesion, const Atlas& atlas);

enum class FeatureKind { tractographic, volumetric, spatial, morphological, volumetric_spatial };

std::string_view to_string(FeatureKind kind);
FeatureKind parse_feature_kind(std::string_view text);
inline constexpr FeatureKind kAllFeatureKinds[] = {FeatureKind::tractographic, FeatureKind::volumetric,
                                                   FeatureKind::spatial, FeatureKind::morphological,
                                                   FeatureKind::volumetric_spatial};

struct FeatureVector {
    FeatureKind kind;
    Eigen::VectorXd values;
};

/// Elementwise product of lesion weights and region load.
FeatureVector tractographic_feature(const Eigen::VectorXd& weights, const Eigen::VectorXd& load);

struct TractographicResult {
    FeatureVector feature;
    DisruptionMatrix disruption;
    Eigen::VectorXd weights;
    Eigen::VectorXd load;
    /// Set when the lesion misses every region or no streamline connects
    /// two regions; the feature is then all zeros.
    bool degenerate = false;
    std::string warning;
};

/// Full chain from lesion-filtered streamlines to the tractographic feature.
TractographicResult build_tractographic(const Tractogram& lesion_tracts, const Volume& lesion, const Atlas& atlas);

FeatureVector volumetric_feature(const Volume& lesion);
/// Centroid of lesion voxel centres in world mm.
FeatureVector spatial_feature(const Volume& lesion);
/// [major axis, minor axis, major/minor, solidity, roundness, surface].
FeatureVector morphological_feature(const Volume& lesion);
FeatureVector volumetric_spatial_feature(const Volume& lesion, const Atlas& atlas);

/// Column names used in feature tables for one feature kind.
std::vector<std::string> feature_column_names(FeatureKind kind, const Atlas& atlas);

}  // namespace tractfeat
