#include "tractfeat/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "tractfeat/error.hpp"
#include "tractfeat/nifti.hpp"
#include "tractfeat/rng.hpp"
#include "tractfeat/tables.hpp"

namespace tractfeat {
namespace {

Volume sphere_in_mask(const OdfField& field, const Vec3& centre, double radius) {
    const GridSpec& grid = field.grid();
    std::vector<double> data(grid.voxel_count(), 0.0);
    const auto mask = field.brain_mask().data();
    for (std::size_t n = 0; n < data.size(); ++n) {
        if (mask[n] == 0.0) continue;
        if ((grid.voxel_to_world(grid.unravel(n)) - centre).norm() <= radius) data[n] = 1.0;
    }
    return Volume(grid, VolumeKind::mask, std::move(data));
}

// Number of critical streamlines visiting each voxel.
std::vector<double> streamline_density(const Tractogram& tracts, const GridSpec& grid) {
    std::vector<double> density(grid.voxel_count(), 0.0);
    std::vector<std::size_t> visited;
    for (std::size_t i = 0; i < tracts.size(); ++i) {
        visited.clear();
        for (const Vec3& p : tracts[i]) {
            Index3 ijk;
            if (grid.containing_voxel(p, ijk)) visited.push_back(grid.linear_index(ijk));
        }
        std::sort(visited.begin(), visited.end());
        visited.erase(std::unique(visited.begin(), visited.end()), visited.end());
        for (std::size_t v : visited) density[v] += 1.0;
    }
    return density;
}

double weighted_overlap(const std::vector<double>& density, const Volume& lesion) {
    double sum = 0.0;
    const auto data = lesion.data();
    for (std::size_t n = 0; n < data.size(); ++n)
        if (data[n] != 0.0) sum += density[n];
    return sum;
}

}  // namespace

Cohort generate_cohort(const CohortSpec& spec, const TrackingParams& params, std::size_t threads) {
    if (spec.subjects < 2) throw ValidationError("cohort needs at least two subjects");
    if (spec.grid_size < 8) throw ValidationError("cohort grid must be at least 8 voxels wide");
    if (spec.regions < 2) throw ValidationError("cohort atlas needs at least two regions");
    if (!(spec.lesion_radius_min_mm > 0.0 && spec.lesion_radius_min_mm <= spec.lesion_radius_max_mm))
        throw ValidationError("lesion radius range is invalid");
    if (!(spec.noise_sigma >= 0.0)) throw ValidationError("noise sigma must be non-negative");

    const double mid = (spec.grid_size - 1) / 2.0;
    PhantomSpec phantom;
    phantom.kind = PhantomKind::crossing;
    phantom.dims = {spec.grid_size, spec.grid_size, spec.grid_size};
    phantom.center_mm = Vec3(mid, mid, mid);
    phantom.axis = Vec3::UnitX();
    phantom.second_axis = Vec3::UnitY();
    phantom.slab_half_width_mm = spec.slab_half_width_mm;
    OdfField field = make_phantom(phantom);
    const GridSpec& grid = field.grid();

    // angular wedges about the z axis through the centre, restricted to the mask
    std::vector<double> labels(grid.voxel_count(), 0.0);
    const double wedge = 2.0 * std::numbers::pi / spec.regions;
    for (std::size_t n = 0; n < labels.size(); ++n) {
        if (field.brain_mask().data()[n] == 0.0) continue;
        const Vec3 p = grid.voxel_to_world(grid.unravel(n));
        double angle = std::atan2(p.y() - mid, p.x() - mid) + wedge / 2.0;
        if (angle < 0.0) angle += 2.0 * std::numbers::pi;
        labels[n] = 1.0 + std::fmod(std::floor(angle / wedge), spec.regions);
    }
    Atlas atlas(Volume(grid, VolumeKind::label, std::move(labels)), "wedges");

    const Tractogram whole = track_whole_brain(field, params, threads);
    Tractogram critical;
    for (std::size_t i = 0; i < whole.size(); ++i) {
        const auto line = whole[i];
        const Vec3 span = line.back() - line.front();
        if (span.norm() > 0.0 && std::abs(span.normalized().x()) > 0.9) critical.push_back(line);
    }
    const Vec3 reference_centre(mid + spec.grid_size / 4.0, mid, mid);
    const std::vector<double> density = streamline_density(critical, grid);
    const double reference = weighted_overlap(density, sphere_in_mask(field, reference_centre, spec.reference_radius_mm));
    if (reference == 0.0) throw DegenerateInputError("reference lesion misses the critical bundle");

    std::vector<std::size_t> mask_voxels;
    for (std::size_t n = 0; n < grid.voxel_count(); ++n)
        if (field.brain_mask().data()[n] != 0.0) mask_voxels.push_back(n);

    Rng rng(mix_seed(spec.seed, "cohort"));
    std::normal_distribution<double> noise(0.0, spec.noise_sigma);
    Cohort cohort{std::move(field), std::move(atlas), {}};
    const int width = spec.subjects >= 100 ? 3 : 2;
    for (int s = 0; s < spec.subjects; ++s) {
        char id[32];
        std::snprintf(id, sizeof(id), "sub%0*d", width, s + 1);
        const Vec3 centre = grid.voxel_to_world(grid.unravel(mask_voxels[uniform_index(rng, mask_voxels.size())]));
        const double radius =
            spec.lesion_radius_min_mm + (spec.lesion_radius_max_mm - spec.lesion_radius_min_mm) * uniform_real(rng);
        Volume lesion = sphere_in_mask(cohort.field, centre, radius);
        const double severity = std::min(1.0, weighted_overlap(density, lesion) / reference);
        const double eps = spec.noise_sigma > 0.0 ? noise(rng) : 0.0;
        const int mrs = round_mrs(4.0 * severity + eps);
        cohort.subjects.push_back({id, std::move(lesion), severity, mrs, 90.0});
    }
    return cohort;
}

void write_cohort(const Cohort& cohort, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir / "lesions");
    save_field(cohort.field, dir / "field.npk");
    save_volume(cohort.atlas.volume(), dir / "atlas.nii.gz");
    Table clinical{{"subject_id", "mRS", "days_to_mRS"}, {}};
    Table truth{{"subject_id", "severity", "mRS"}, {}};
    for (const auto& s : cohort.subjects) {
        save_volume(s.lesion, dir / "lesions" / (s.id + ".nii.gz"));
        clinical.rows.push_back({s.id, std::to_string(s.mrs), format_real(s.days_to_mrs)});
        truth.rows.push_back({s.id, format_real(s.severity), std::to_string(s.mrs)});
    }
    write_tsv(clinical, dir / "clinical.tsv");
    write_tsv(truth, dir / "truth.tsv");
}

}  // namespace tractfeat
