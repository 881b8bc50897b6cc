#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "tractfeat/volume.hpp"

namespace tractfeat {

using IntPoint = std::array<std::int64_t, 3>;

/// Six times the volume of the convex hull of integer points, computed
/// with exact integer predicates. Returns 0 for coplanar input.
std::int64_t convex_hull_volume6(const std::vector<IntPoint>& points);

struct LesionShape {
    double volume_mm3 = 0.0;
    double surface_mm2 = 0.0;
    double hull_volume_mm3 = 0.0;
    double major_axis_mm = 0.0;
    double minor_axis_mm = 0.0;
};

/// Shape measurements of the nonzero voxels of a lesion. Throws
/// DegenerateInputError when the lesion is empty.
LesionShape measure_lesion(const Volume& lesion);

}  // namespace tractfeat
