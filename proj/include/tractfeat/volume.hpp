#pragma once

#include <array>
#include <concepts>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace tractfeat {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Index3 = std::array<int, 3>;

/// Geometry of a 3-D voxel grid: dimensions plus an affine mapping voxel
/// indices to world millimetres. The inverse is cached.
class GridSpec {
public:
    GridSpec() : GridSpec(Index3{1, 1, 1}, std::array<double, 3>{1.0, 1.0, 1.0}) {}

    /// Axis-aligned grid with voxel (0,0,0) centred at the origin.
    GridSpec(Index3 dims, std::array<double, 3> voxel_size);

    /// Voxel size is derived from the affine's column norms. A template so
    /// that braced voxel sizes never convert to a matrix.
    template <typename M>
        requires std::same_as<M, Mat4>
    GridSpec(Index3 dims, const M& affine) : GridSpec(dims, affine, FromAffine{}) {}

    const Index3& dims() const { return dims_; }
    const std::array<double, 3>& voxel_size() const { return voxel_size_; }
    const Mat4& affine() const { return affine_; }
    const Mat4& inverse_affine() const { return inverse_; }

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
    }
    double voxel_volume() const { return voxel_size_[0] * voxel_size_[1] * voxel_size_[2]; }

    std::size_t linear_index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(dims_[0]) *
                   (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims_[1]) * k);
    }
    std::size_t linear_index(const Index3& ijk) const { return linear_index(ijk[0], ijk[1], ijk[2]); }
    Index3 unravel(std::size_t linear) const;

    bool in_bounds(const Index3& ijk) const {
        return ijk[0] >= 0 && ijk[1] >= 0 && ijk[2] >= 0 && ijk[0] < dims_[0] &&
               ijk[1] < dims_[1] && ijk[2] < dims_[2];
    }

    Vec3 voxel_to_world(const Vec3& index) const;
    Vec3 voxel_to_world(const Index3& index) const {
        return voxel_to_world(Vec3(index[0], index[1], index[2]));
    }
    Vec3 world_to_voxel(const Vec3& point) const;

    /// Voxel whose extent contains the world point. Points on the outer
    /// faces of the grid belong to the edge voxel; returns false outside.
    bool containing_voxel(const Vec3& point, Index3& out) const;

    bool same_grid(const GridSpec& other, double tolerance = 1e-6) const;

private:
    struct FromAffine {};
    GridSpec(Index3 dims, const Mat4& affine, FromAffine);
    void validate() const;

    Index3 dims_;
    std::array<double, 3> voxel_size_;
    Mat4 affine_;
    Mat4 inverse_;
};

enum class VolumeKind { scalar, label, mask };

/// Immutable 3-D image with x-fastest storage.
class Volume {
public:
    Volume() = default;

    /// Validates length and kind invariants; throws ShapeError or ValidationError.
    Volume(GridSpec grid, VolumeKind kind, std::vector<double> data);

    static Volume zeros(const GridSpec& grid, VolumeKind kind) {
        return Volume(grid, kind, std::vector<double>(grid.voxel_count(), 0.0));
    }

    const GridSpec& grid() const { return grid_; }
    VolumeKind kind() const { return kind_; }
    std::span<const double> data() const { return data_; }

    double at(int i, int j, int k) const { return data_[grid_.linear_index(i, j, k)]; }
    double at(const Index3& ijk) const { return data_[grid_.linear_index(ijk)]; }

    /// Value of the voxel containing the world point, or 0 outside the grid.
    double sample_nearest(const Vec3& point) const;

    Vec3 voxel_to_world(const Index3& index) const { return grid_.voxel_to_world(index); }
    Vec3 world_to_voxel(const Vec3& point) const { return grid_.world_to_voxel(point); }

private:
    GridSpec grid_;
    VolumeKind kind_ = VolumeKind::scalar;
    std::vector<double> data_;
};

/// Nearest-neighbour resampling of src onto target; voxels mapping outside
/// src become 0. Never invents values not present in src.
Volume resample_nearest(const Volume& src, const GridSpec& target);

}  // namespace tractfeat
