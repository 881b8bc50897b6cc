#pragma once

#include <filesystem>

#include "tractfeat/tracker.hpp"

namespace tractfeat {

/// TrackVis .trk (version 2, 1000-byte header). Points are written in the
/// "voxmm" convention of the reference grid; vox_to_ras holds the grid affine.
void save_trk(const Tractogram& tractogram, const GridSpec& reference, const std::filesystem::path& path);

/// Reads a version 1 or 2 .trk file back into world coordinates. Version 1
/// files have no vox_to_ras and are mapped with diag(voxel_size).
Tractogram load_trk(const std::filesystem::path& path, GridSpec* reference = nullptr);

}  // namespace tractfeat
