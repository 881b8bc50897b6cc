#include "tractfeat/volume.hpp"

#include <cmath>
#include <string>

#include <Eigen/LU>

#include "tractfeat/error.hpp"

namespace tractfeat {

GridSpec::GridSpec(Index3 dims, std::array<double, 3> voxel_size)
    : dims_(dims), voxel_size_(voxel_size), affine_(Mat4::Identity()) {
    for (int a = 0; a < 3; ++a) affine_(a, a) = voxel_size[a];
    validate();
    inverse_ = affine_.inverse();
}

GridSpec::GridSpec(Index3 dims, const Mat4& affine, FromAffine) : dims_(dims), affine_(affine) {
    for (int a = 0; a < 3; ++a) voxel_size_[a] = affine.block<3, 1>(0, a).norm();
    validate();
    inverse_ = affine_.inverse();
}

void GridSpec::validate() const {
    for (int a = 0; a < 3; ++a) {
        if (dims_[a] <= 0) throw ShapeError("grid dimension " + std::to_string(a) + " must be positive");
        if (!(voxel_size_[a] > 0.0) || !std::isfinite(voxel_size_[a]))
            throw ValidationError("voxel size must be positive and finite");
    }
    if (!affine_.allFinite()) throw ValidationError("affine has non-finite entries");
    const double det = affine_.block<3, 3>(0, 0).determinant();
    if (!(std::abs(det) > 1e-12)) throw ValidationError("affine is not invertible");
}

Index3 GridSpec::unravel(std::size_t linear) const {
    const auto nx = static_cast<std::size_t>(dims_[0]);
    const auto ny = static_cast<std::size_t>(dims_[1]);
    return {static_cast<int>(linear % nx), static_cast<int>((linear / nx) % ny),
            static_cast<int>(linear / (nx * ny))};
}

Vec3 GridSpec::voxel_to_world(const Vec3& index) const {
    return affine_.block<3, 3>(0, 0) * index + affine_.block<3, 1>(0, 3);
}

Vec3 GridSpec::world_to_voxel(const Vec3& point) const {
    return inverse_.block<3, 3>(0, 0) * point + inverse_.block<3, 1>(0, 3);
}

bool GridSpec::containing_voxel(const Vec3& point, Index3& out) const {
    const Vec3 v = world_to_voxel(point);
    for (int a = 0; a < 3; ++a) {
        if (!(v[a] >= -0.5 && v[a] <= dims_[a] - 0.5)) return false;
        out[a] = std::min(static_cast<int>(std::floor(v[a] + 0.5)), dims_[a] - 1);
    }
    return true;
}

bool GridSpec::same_grid(const GridSpec& other, double tolerance) const {
    return dims_ == other.dims_ && (affine_ - other.affine_).cwiseAbs().maxCoeff() <= tolerance;
}

Volume::Volume(GridSpec grid, VolumeKind kind, std::vector<double> data)
    : grid_(std::move(grid)), kind_(kind), data_(std::move(data)) {
    if (data_.size() != grid_.voxel_count())
        throw ShapeError("volume data length " + std::to_string(data_.size()) +
                         " does not match grid voxel count " + std::to_string(grid_.voxel_count()));
    for (double v : data_) {
        if (!std::isfinite(v)) throw ValidationError("volume contains non-finite values");
        if (kind_ == VolumeKind::mask && v != 0.0 && v != 1.0)
            throw ValidationError("mask volume must contain only 0 and 1");
        if (kind_ == VolumeKind::label && (v < 0.0 || v != std::floor(v)))
            throw ValidationError("label volume must contain non-negative integers");
    }
}

double Volume::sample_nearest(const Vec3& point) const {
    Index3 ijk;
    if (!grid_.containing_voxel(point, ijk)) return 0.0;
    return at(ijk);
}

Volume resample_nearest(const Volume& src, const GridSpec& target) {
    // target voxel -> src voxel in one affine
    const Mat4 composed = src.grid().inverse_affine() * target.affine();
    const Mat3 linear = composed.block<3, 3>(0, 0);
    const Vec3 offset = composed.block<3, 1>(0, 3);
    const Index3& sd = src.grid().dims();

    std::vector<double> out(target.voxel_count(), 0.0);
    const auto span = src.data();
    for (std::size_t n = 0; n < out.size(); ++n) {
        const Index3 t = target.unravel(n);
        const Vec3 v = linear * Vec3(t[0], t[1], t[2]) + offset;
        Index3 s;
        bool inside = true;
        for (int a = 0; a < 3 && inside; ++a) {
            s[a] = static_cast<int>(std::floor(v[a] + 0.5));
            inside = s[a] >= 0 && s[a] < sd[a];
        }
        if (inside) out[n] = span[src.grid().linear_index(s)];
    }
    return Volume(target, src.kind(), std::move(out));
}

}  // namespace tractfeat
