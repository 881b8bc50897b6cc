#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tractfeat/odf_field.hpp"
#include "tractfeat/volume.hpp"

namespace tractfeat {

/// Deterministic tracking parameters. Defaults reproduce the published
/// configuration (qa termination, Euler streamline, voxel seeding).
struct TrackingParams {
    double qa_threshold = 0.15958;
    double angular_threshold_deg = 90.0;
    double step_mm = 0.5;
    double smoothing = 0.5;
    double min_length_mm = 3.0;
    double max_length_mm = 500.0;
    int tip_iterations = 1;
    std::optional<std::size_t> max_tracts = 2'235'858;
};

/// Throws ValidationError when an invariant of TrackingParams is broken.
void validate(const TrackingParams& params);

using Streamline = std::vector<Vec3>;

/// Streamlines stored contiguously: streamline i spans
/// points[offsets[i], offsets[i+1]).
class Tractogram {
public:
    Tractogram() : offsets_{0} {}

    std::size_t size() const { return offsets_.size() - 1; }
    bool empty() const { return size() == 0; }
    std::span<const Vec3> operator[](std::size_t i) const {
        return {points_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
    }
    std::size_t total_points() const { return points_.size(); }

    void push_back(std::span<const Vec3> streamline) {
        points_.insert(points_.end(), streamline.begin(), streamline.end());
        offsets_.push_back(points_.size());
    }
    void reserve(std::size_t streamlines, std::size_t points) {
        offsets_.reserve(streamlines + 1);
        points_.reserve(points);
    }

    TrackingParams params;
    std::string field_id;

private:
    std::vector<Vec3> points_;
    std::vector<std::size_t> offsets_;
};

double polyline_length(std::span<const Vec3> points);

/// Bidirectional Euler integration from a seed. The backward leg is
/// reversed and joined to the forward leg with the seed shared once. Each
/// step blends the interpolated direction with the previous step:
/// d = normalize((1 - s) * d_new + s * d_prev). A leg stops on interpolation
/// failure, on leaving the brain mask, or when the total length would exceed
/// max_length_mm. Streamlines shorter than min_length_mm are rejected.
std::optional<Streamline> propagate(const OdfField& field, const Vec3& seed, const Vec3& init_dir,
                                    const TrackingParams& params);

/// Seeds every in-mask voxel centre in x-fastest order, one attempt per
/// qualifying peak. Output order and the max_tracts cut-off follow that
/// enumeration regardless of `threads`.
Tractogram track_whole_brain(const OdfField& field, const TrackingParams& params, std::size_t threads = 1);

/// Streamlines with at least one point inside a nonzero ROI voxel, in order.
Tractogram filter_roi(const Tractogram& tractogram, const Volume& roi);

/// Simplified topology-informed pruning on the ROI grid. Each iteration
/// counts how many streamlines visit each voxel and drops any streamline
/// owning a voxel no other streamline visits, unless that voxel is in the
/// ROI. Stops early at a fixed point.
Tractogram prune_tip(const Tractogram& tractogram, const Volume& roi, int iterations);

struct TractogramSummary {
    std::size_t count = 0;
    std::size_t points = 0;
    double length_min = 0.0;
    double length_max = 0.0;
    double length_mean = 0.0;
    double length_std = 0.0;
};

TractogramSummary summarize(const Tractogram& tractogram);
std::string format_summary(const TractogramSummary& summary);

}  // namespace tractfeat
