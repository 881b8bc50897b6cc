#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "tractfeat/volume.hpp"

namespace tractfeat {

struct Peak {
    Vec3 direction;  // unit norm; sign is arbitrary (peaks are axes)
    double qa = 0.0;
};

/// Per-voxel fiber orientation peaks with quantitative anisotropy, plus the
/// brain mask that bounds tracking. Immutable once built.
class OdfField {
public:
    OdfField() = default;

    /// `peaks[v]` lists the peaks of voxel v (x-fastest order). Each list is
    /// sorted by descending qa here; directions must already be unit norm.
    OdfField(GridSpec grid, int max_peaks, std::vector<std::vector<Peak>> peaks, Volume brain_mask);

    const GridSpec& grid() const { return grid_; }
    int max_peaks() const { return max_peaks_; }
    const Volume& brain_mask() const { return mask_; }

    std::span<const Peak> peaks(std::size_t voxel) const {
        return {peaks_.data() + voxel * max_peaks_, counts_[voxel]};
    }
    std::span<const Peak> peaks(const Index3& ijk) const { return peaks(grid_.linear_index(ijk)); }

    bool in_mask(const Index3& ijk) const { return mask_.at(ijk) != 0.0; }
    /// True when the world point lies in a voxel of the brain mask.
    bool in_mask(const Vec3& point) const;

private:
    GridSpec grid_;
    int max_peaks_ = 1;
    std::vector<std::uint8_t> counts_;
    std::vector<Peak> peaks_;  // max_peaks_ slots per voxel
    Volume mask_;
};

struct InterpolatedDirection {
    Vec3 direction;
    double qa;
};

/// Direction of the field at `point`, aligned to the hemisphere of prev_dir.
///
/// Each of the 8 voxels around the point contributes its peak most
/// aligned with prev_dir among peaks with qa >= qa_threshold, sign-flipped
/// onto prev_dir's side. Contributions are blended with trilinear weights;
/// voxels without a qualifying peak (or off the grid) contribute nothing,
/// so the blended qa fades at the edge of the supported region. Returns
/// nullopt when no voxel qualifies, the blended qa is below threshold, or
/// the turn from prev_dir exceeds angular_threshold_deg.
std::optional<InterpolatedDirection> interpolate_direction(const OdfField& field, const Vec3& point,
                                                           const Vec3& prev_dir, double qa_threshold,
                                                           double angular_threshold_deg);

enum class PhantomKind { straight, arc, crossing };

struct PhantomSpec {
    PhantomKind kind = PhantomKind::straight;
    Index3 dims{10, 10, 10};
    std::array<double, 3> voxel_size{1.0, 1.0, 1.0};
    double qa_value = 1.0;

    // straight: every voxel is in the mask and carries one peak along `axis`.
    Vec3 axis = Vec3::UnitX();

    // arc: a tube of radius tube_radius_mm around the circle of `radius_mm`
    // about `center_mm` in the plane with normal `plane_normal`. Peaks are
    // tangent to the circle through each voxel centre.
    Vec3 center_mm = Vec3::Zero();
    double radius_mm = 20.0;
    Vec3 plane_normal = Vec3::UnitZ();
    double tube_radius_mm = 1.5;

    // crossing: two slabs through center_mm running along axis and
    // second_axis, each slab_half_width_mm thick on either side of its
    // mid-plane. Overlap voxels carry both peaks.
    Vec3 second_axis = Vec3::UnitY();
    double slab_half_width_mm = 2.0;
};

/// Throws ValidationError when the phantom geometry is degenerate.
void validate(const PhantomSpec& spec);

/// Builds a synthetic field on an axis-aligned grid with voxel (0,0,0) at the origin.
OdfField make_phantom(const PhantomSpec& spec);

/// Binary peak-field format "NPK1" (little-endian, float32 payload).
void save_field(const OdfField& field, const std::filesystem::path& path);
OdfField load_field(const std::filesystem::path& path);

}  // namespace tractfeat
