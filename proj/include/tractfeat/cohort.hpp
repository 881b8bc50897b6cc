#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tractfeat/connectome.hpp"
#include "tractfeat/odf_field.hpp"
#include "tractfeat/tracker.hpp"

namespace tractfeat {

/// Synthetic stroke cohort over a crossing phantom.
///
/// Two orthogonal slabs (x and y bundles) cross at the grid centre; the x
/// bundle is the critical one. The atlas splits the brain mask into angular
/// wedges around the z axis, so each bundle ends in its own pair of
/// regions. Each subject gets a spherical lesion inside the mask; severity
/// is its overlap with the critical bundle, each voxel weighted by the
/// number of critical streamlines visiting it, relative to a reference
/// lesion of radius reference_radius_mm centred on the bundle and capped at
/// 1. mRS = clamp(round(4 * severity + N(0, noise_sigma))).
struct CohortSpec {
    int subjects = 40;
    int grid_size = 32;
    int regions = 8;
    double slab_half_width_mm = 4.0;
    double lesion_radius_min_mm = 1.5;
    double lesion_radius_max_mm = 5.0;
    double reference_radius_mm = 4.0;
    double noise_sigma = 0.3;
    std::uint64_t seed = 0;
};

struct CohortSubject {
    std::string id;
    Volume lesion;
    double severity = 0.0;
    int mrs = 0;
    double days_to_mrs = 90.0;
};

struct Cohort {
    OdfField field;
    Atlas atlas;
    std::vector<CohortSubject> subjects;
};

Cohort generate_cohort(const CohortSpec& spec, const TrackingParams& params, std::size_t threads = 1);

/// Writes field.npk, atlas.nii.gz, lesions/<id>.nii.gz, clinical.tsv and
/// truth.tsv (per-subject severity) under `dir`.
void write_cohort(const Cohort& cohort, const std::filesystem::path& dir);

}  // namespace tractfeat
