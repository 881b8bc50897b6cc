#include "tractfeat/morphology.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <utility>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <Eigen/LU>

#include "tractfeat/error.hpp"

namespace tractfeat {
namespace {

std::int64_t orient(const IntPoint& a, const IntPoint& b, const IntPoint& c, const IntPoint& p) {
    const std::int64_t ux = b[0] - a[0], uy = b[1] - a[1], uz = b[2] - a[2];
    const std::int64_t vx = c[0] - a[0], vy = c[1] - a[1], vz = c[2] - a[2];
    const std::int64_t wx = p[0] - a[0], wy = p[1] - a[1], wz = p[2] - a[2];
    return ux * (vy * wz - vz * wy) - uy * (vx * wz - vz * wx) + uz * (vx * wy - vy * wx);
}

bool collinear(const IntPoint& a, const IntPoint& b, const IntPoint& c) {
    const std::int64_t ux = b[0] - a[0], uy = b[1] - a[1], uz = b[2] - a[2];
    const std::int64_t vx = c[0] - a[0], vy = c[1] - a[1], vz = c[2] - a[2];
    return uy * vz - uz * vy == 0 && uz * vx - ux * vz == 0 && ux * vy - uy * vx == 0;
}

struct Face {
    std::size_t a, b, c;
};

}  // namespace

std::int64_t convex_hull_volume6(const std::vector<IntPoint>& input) {
    std::vector<IntPoint> pts(input);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 4) return 0;

    // initial non-degenerate tetrahedron
    std::size_t i1 = 1;
    std::size_t i2 = pts.size();
    std::size_t i3 = pts.size();
    for (std::size_t i = 2; i < pts.size(); ++i)
        if (!collinear(pts[0], pts[i1], pts[i])) {
            i2 = i;
            break;
        }
    if (i2 == pts.size()) return 0;
    for (std::size_t i = 2; i < pts.size(); ++i)
        if (orient(pts[0], pts[i1], pts[i2], pts[i]) != 0) {
            i3 = i;
            break;
        }
    if (i3 == pts.size()) return 0;

    // outward faces satisfy orient(face, interior) < 0
    std::vector<Face> faces;
    if (orient(pts[0], pts[i1], pts[i2], pts[i3]) < 0)
        faces = {{0, i1, i2}, {0, i3, i1}, {0, i2, i3}, {i1, i3, i2}};
    else
        faces = {{0, i2, i1}, {0, i1, i3}, {0, i3, i2}, {i1, i2, i3}};

    std::vector<Face> kept;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    std::set<std::pair<std::size_t, std::size_t>> edge_set;
    for (std::size_t p = 1; p < pts.size(); ++p) {
        if (p == i1 || p == i2 || p == i3) continue;
        kept.clear();
        edges.clear();
        for (const Face& f : faces) {
            if (orient(pts[f.a], pts[f.b], pts[f.c], pts[p]) > 0) {
                edges.push_back({f.a, f.b});
                edges.push_back({f.b, f.c});
                edges.push_back({f.c, f.a});
            } else {
                kept.push_back(f);
            }
        }
        if (edges.empty()) continue;
        edge_set.clear();
        edge_set.insert(edges.begin(), edges.end());
        for (const auto& [a, b] : edges)
            if (!edge_set.contains({b, a})) kept.push_back({a, b, p});
        faces.swap(kept);
    }

    std::int64_t volume6 = 0;
    const IntPoint& origin = pts[0];
    for (const Face& f : faces) volume6 -= orient(pts[f.a], pts[f.b], pts[f.c], origin);
    return volume6;
}

LesionShape measure_lesion(const Volume& lesion) {
    const GridSpec& grid = lesion.grid();
    const Index3& dims = grid.dims();
    const auto data = lesion.data();
    auto inside = [&](int i, int j, int k) {
        return i >= 0 && j >= 0 && k >= 0 && i < dims[0] && j < dims[1] && k < dims[2] &&
               data[grid.linear_index(i, j, k)] != 0.0;
    };

    const Mat3 linear = grid.affine().block<3, 3>(0, 0);
    // face area perpendicular to each voxel axis
    const std::array<double, 3> face_area{linear.col(1).cross(linear.col(2)).norm(),
                                          linear.col(2).cross(linear.col(0)).norm(),
                                          linear.col(0).cross(linear.col(1)).norm()};

    std::size_t count = 0;
    double surface = 0.0;
    Vec3 sum = Vec3::Zero();
    std::vector<Vec3> centres;
    // columns along each axis: keep only the extreme voxels as hull candidates
    std::map<std::pair<int, int>, std::pair<int, int>> col_z, col_y, col_x;
    for (std::size_t n = 0; n < data.size(); ++n) {
        if (data[n] == 0.0) continue;
        const Index3 v = grid.unravel(n);
        ++count;
        const Vec3 c(v[0], v[1], v[2]);
        centres.push_back(c);
        sum += c;
        for (int a = 0; a < 3; ++a) {
            Index3 lo = v, hi = v;
            --lo[a];
            ++hi[a];
            if (!inside(lo[0], lo[1], lo[2])) surface += face_area[a];
            if (!inside(hi[0], hi[1], hi[2])) surface += face_area[a];
        }
        auto extend = [](auto& map, std::pair<int, int> key, int value) {
            auto [it, fresh] = map.try_emplace(key, value, value);
            if (!fresh) {
                it->second.first = std::min(it->second.first, value);
                it->second.second = std::max(it->second.second, value);
            }
        };
        extend(col_z, {v[0], v[1]}, v[2]);
        extend(col_y, {v[0], v[2]}, v[1]);
        extend(col_x, {v[1], v[2]}, v[0]);
    }
    if (count == 0) throw DegenerateInputError("lesion is empty");

    std::vector<IntPoint> candidates;
    auto is_extreme = [](const auto& map, std::pair<int, int> key, int value) {
        const auto& range = map.at(key);
        return value == range.first || value == range.second;
    };
    for (const auto& [key, range] : col_z) {
        for (int z : {range.first, range.second}) {
            if (is_extreme(col_y, {key.first, z}, key.second) && is_extreme(col_x, {key.second, z}, key.first))
                candidates.push_back({key.first, key.second, z});
        }
    }

    LesionShape shape;
    const double voxel_volume = std::abs(linear.determinant());
    shape.volume_mm3 = static_cast<double>(count) * voxel_volume;
    shape.surface_mm2 = surface;
    shape.hull_volume_mm3 = static_cast<double>(convex_hull_volume6(candidates)) / 6.0 * voxel_volume;

    // second moments of the solid voxel set in world mm: spread of centres
    // plus each voxel's own extent (a unit cube has variance 1/12 per axis)
    const Vec3 mean = sum / static_cast<double>(count);
    Mat3 cov = Mat3::Zero();
    for (const Vec3& c : centres) {
        const Vec3 d = c - mean;
        cov += d * d.transpose();
    }
    cov /= static_cast<double>(count);
    cov += Mat3::Identity() / 12.0;
    const Mat3 world_cov = linear * cov * linear.transpose();
    Eigen::SelfAdjointEigenSolver<Mat3> eig(world_cov, Eigen::EigenvaluesOnly);
    const Vec3 lambda = eig.eigenvalues().cwiseMax(0.0);
    shape.major_axis_mm = 4.0 * std::sqrt(lambda[2]);
    shape.minor_axis_mm = 4.0 * std::sqrt(lambda[0]);
    return shape;
}

}  // namespace tractfeat
