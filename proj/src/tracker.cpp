#include "tractfeat/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "tractfeat/error.hpp"
#include "tractfeat/parallel.hpp"

namespace tractfeat {

void validate(const TrackingParams& p) {
    const bool finite = std::isfinite(p.qa_threshold) && std::isfinite(p.angular_threshold_deg) &&
                        std::isfinite(p.step_mm) && std::isfinite(p.smoothing) &&
                        std::isfinite(p.min_length_mm) && std::isfinite(p.max_length_mm);
    if (!finite) throw ValidationError("tracking parameters must be finite");
    if (!(p.step_mm > 0.0)) throw ValidationError("step_mm must be positive");
    if (!(p.smoothing >= 0.0 && p.smoothing <= 1.0)) throw ValidationError("smoothing must lie in [0, 1]");
    if (!(p.min_length_mm < p.max_length_mm)) throw ValidationError("min_length_mm must be below max_length_mm");
    if (p.tip_iterations < 0) throw ValidationError("tip_iterations must be non-negative");
}

double polyline_length(std::span<const Vec3> points) {
    double length = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) length += (points[i] - points[i - 1]).norm();
    return length;
}

namespace {

// Points after the seed along one direction; the seed itself is excluded.
std::vector<Vec3> integrate_leg(const OdfField& field, const Vec3& seed, const Vec3& init_dir,
                                const TrackingParams& params, double budget_mm) {
    std::vector<Vec3> points;
    Vec3 pos = seed;
    Vec3 prev = init_dir;
    double length = 0.0;
    const double s = params.smoothing;
    for (;;) {
        if (length + params.step_mm > budget_mm + 1e-9) break;
        const auto next_dir =
            interpolate_direction(field, pos, prev, params.qa_threshold, params.angular_threshold_deg);
        if (!next_dir) break;
        Vec3 dir = (1.0 - s) * next_dir->direction + s * prev;
        const double norm = dir.norm();
        if (!(norm > 1e-12)) break;
        dir /= norm;
        const Vec3 next = pos + params.step_mm * dir;
        if (!field.in_mask(next)) break;
        points.push_back(next);
        length += params.step_mm;
        prev = dir;
        pos = next;
    }
    return points;
}

}  // namespace

std::optional<Streamline> propagate(const OdfField& field, const Vec3& seed, const Vec3& init_dir,
                                    const TrackingParams& params) {
    if (!field.in_mask(seed)) return std::nullopt;
    const Vec3 dir = init_dir.normalized();
    const auto forward = integrate_leg(field, seed, dir, params, params.max_length_mm);
    const double used = params.step_mm * static_cast<double>(forward.size());
    const auto backward = integrate_leg(field, seed, -dir, params, params.max_length_mm - used);

    const std::size_t steps = forward.size() + backward.size();
    if (steps == 0) return std::nullopt;
    if (params.step_mm * static_cast<double>(steps) < params.min_length_mm) return std::nullopt;

    Streamline line;
    line.reserve(steps + 1);
    line.insert(line.end(), backward.rbegin(), backward.rend());
    line.push_back(seed);
    line.insert(line.end(), forward.begin(), forward.end());
    return line;
}

Tractogram track_whole_brain(const OdfField& field, const TrackingParams& params, std::size_t threads) {
    validate(params);
    const GridSpec& grid = field.grid();
    std::vector<std::size_t> seeds;
    for (std::size_t v = 0; v < grid.voxel_count(); ++v)
        if (field.brain_mask().data()[v] != 0.0) seeds.push_back(v);

    Tractogram out;
    out.params = params;
    const std::size_t cap = params.max_tracts.value_or(SIZE_MAX);
    if (cap == 0) return out;

    constexpr std::size_t kBlock = 2048;
    std::vector<std::vector<Streamline>> results;
    for (std::size_t begin = 0; begin < seeds.size(); begin += kBlock) {
        const std::size_t end = std::min(seeds.size(), begin + kBlock);
        results.assign(end - begin, {});
        parallel_for(end - begin, threads, [&](std::size_t i) {
            const std::size_t voxel = seeds[begin + i];
            const Vec3 seed = grid.voxel_to_world(grid.unravel(voxel));
            for (const Peak& peak : field.peaks(voxel)) {
                if (peak.qa < params.qa_threshold) continue;
                if (auto line = propagate(field, seed, peak.direction, params)) results[i].push_back(std::move(*line));
            }
        });
        for (const auto& per_seed : results) {
            for (const auto& line : per_seed) {
                out.push_back(line);
                if (out.size() == cap) return out;
            }
        }
    }
    return out;
}

Tractogram filter_roi(const Tractogram& tractogram, const Volume& roi) {
    Tractogram out;
    out.params = tractogram.params;
    out.field_id = tractogram.field_id;
    for (std::size_t i = 0; i < tractogram.size(); ++i) {
        const auto line = tractogram[i];
        const bool hit = std::any_of(line.begin(), line.end(),
                                     [&](const Vec3& p) { return roi.sample_nearest(p) != 0.0; });
        if (hit) out.push_back(line);
    }
    return out;
}

Tractogram prune_tip(const Tractogram& tractogram, const Volume& roi, int iterations) {
    if (iterations < 0) throw ValidationError("prune iterations must be non-negative");
    const GridSpec& grid = roi.grid();

    // distinct voxels visited by each streamline
    std::vector<std::vector<std::size_t>> visits(tractogram.size());
    for (std::size_t i = 0; i < tractogram.size(); ++i) {
        auto& cells = visits[i];
        Index3 ijk;
        for (const Vec3& p : tractogram[i])
            if (grid.containing_voxel(p, ijk)) cells.push_back(grid.linear_index(ijk));
        std::sort(cells.begin(), cells.end());
        cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    }

    std::vector<std::size_t> alive(tractogram.size());
    for (std::size_t i = 0; i < alive.size(); ++i) alive[i] = i;
    std::vector<std::uint32_t> counts(grid.voxel_count());
    const auto roi_data = roi.data();
    for (int it = 0; it < iterations; ++it) {
        std::fill(counts.begin(), counts.end(), 0u);
        for (std::size_t i : alive)
            for (std::size_t v : visits[i]) ++counts[v];
        std::vector<std::size_t> kept;
        kept.reserve(alive.size());
        for (std::size_t i : alive) {
            const bool stray = std::any_of(visits[i].begin(), visits[i].end(),
                                           [&](std::size_t v) { return counts[v] == 1 && roi_data[v] == 0.0; });
            if (!stray) kept.push_back(i);
        }
        if (kept.size() == alive.size()) break;
        alive = std::move(kept);
    }

    Tractogram out;
    out.params = tractogram.params;
    out.field_id = tractogram.field_id;
    for (std::size_t i : alive) out.push_back(tractogram[i]);
    return out;
}

TractogramSummary summarize(const Tractogram& tractogram) {
    TractogramSummary s;
    s.count = tractogram.size();
    s.points = tractogram.total_points();
    if (s.count == 0) return s;
    std::vector<double> lengths(s.count);
    for (std::size_t i = 0; i < s.count; ++i) lengths[i] = polyline_length(tractogram[i]);
    s.length_min = *std::min_element(lengths.begin(), lengths.end());
    s.length_max = *std::max_element(lengths.begin(), lengths.end());
    double sum = 0.0;
    for (double l : lengths) sum += l;
    s.length_mean = sum / static_cast<double>(s.count);
    double var = 0.0;
    for (double l : lengths) var += (l - s.length_mean) * (l - s.length_mean);
    s.length_std = std::sqrt(var / static_cast<double>(s.count));
    return s;
}

std::string format_summary(const TractogramSummary& s) {
    char buffer[512];
    std::snprintf(buffer, sizeof(buffer),
                  "streamlines\t%zu\npoints\t%zu\nlength_min_mm\t%.6f\nlength_max_mm\t%.6f\n"
                  "length_mean_mm\t%.6f\nlength_std_mm\t%.6f\n",
                  s.count, s.points, s.length_min, s.length_max, s.length_mean, s.length_std);
    return buffer;
}

}  // namespace tractfeat
