#pragma once

#include <filesystem>
#include <optional>

#include "tractfeat/volume.hpp"

namespace tractfeat {

/// Reads a 3-D NIfTI-1 image (.nii or .nii.gz; compression detected from
/// content). Data are promoted to double after scl_slope/scl_inter scaling.
/// The affine comes from the sform when sform_code > 0, else the qform, else
/// diag(pixdim). Without an explicit `kind`, the header's intent decides:
/// NIFTI_INTENT_LABEL gives a label volume, intent_name "mask" a mask.
Volume load_volume(const std::filesystem::path& path,
                   std::optional<VolumeKind> kind = std::nullopt);

/// Writes label and mask volumes as int32 and scalars as float32. A path
/// ending in ".gz" is gzip-compressed.
void save_volume(const Volume& volume, const std::filesystem::path& path);

}  // namespace tractfeat
