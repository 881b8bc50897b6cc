#include "tractfeat/odf_field.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <string>

#include <Eigen/Geometry>

#include "byte_io.hpp"
#include "tractfeat/error.hpp"

namespace tractfeat {

OdfField::OdfField(GridSpec grid, int max_peaks, std::vector<std::vector<Peak>> peaks, Volume brain_mask)
    : grid_(std::move(grid)), max_peaks_(max_peaks), mask_(std::move(brain_mask)) {
    if (max_peaks_ < 1 || max_peaks_ > 255) throw ValidationError("max_peaks must be in [1, 255]");
    if (peaks.size() != grid_.voxel_count()) throw ShapeError("peak list count does not match grid");
    if (mask_.kind() != VolumeKind::mask) throw ValidationError("brain mask must be a mask volume");
    if (!mask_.grid().same_grid(grid_)) throw ShapeError("brain mask grid differs from field grid");

    counts_.assign(grid_.voxel_count(), 0);
    peaks_.assign(grid_.voxel_count() * max_peaks_, Peak{Vec3::Zero(), 0.0});
    for (std::size_t v = 0; v < peaks.size(); ++v) {
        auto& list = peaks[v];
        if (list.size() > static_cast<std::size_t>(max_peaks_))
            throw ValidationError("voxel holds more peaks than max_peaks");
        for (const Peak& p : list) {
            if (std::abs(p.direction.norm() - 1.0) > 1e-6) throw ValidationError("peak direction is not unit norm");
            if (!(p.qa >= 0.0) || !std::isfinite(p.qa)) throw ValidationError("peak qa must be finite and >= 0");
        }
        std::stable_sort(list.begin(), list.end(), [](const Peak& a, const Peak& b) { return a.qa > b.qa; });
        counts_[v] = static_cast<std::uint8_t>(list.size());
        std::copy(list.begin(), list.end(), peaks_.begin() + static_cast<std::ptrdiff_t>(v * max_peaks_));
    }
}

bool OdfField::in_mask(const Vec3& point) const {
    Index3 ijk;
    return grid_.containing_voxel(point, ijk) && in_mask(ijk);
}

std::optional<InterpolatedDirection> interpolate_direction(const OdfField& field, const Vec3& point,
                                                           const Vec3& prev_dir, double qa_threshold,
                                                           double angular_threshold_deg) {
    const GridSpec& grid = field.grid();
    const Vec3 v = grid.world_to_voxel(point);
    const Index3& dims = grid.dims();
    Index3 base;
    double frac[3];
    for (int a = 0; a < 3; ++a) {
        if (!(v[a] >= -0.5 && v[a] <= dims[a] - 0.5)) return std::nullopt;
        const double f = std::floor(v[a]);
        base[a] = static_cast<int>(f);
        frac[a] = v[a] - f;
    }

    Vec3 blended = Vec3::Zero();
    double qa = 0.0;
    double weight_sum = 0.0;
    int contributors = 0;
    Vec3 single = Vec3::Zero();
    for (int corner = 0; corner < 8; ++corner) {
        Index3 ijk;
        double w = 1.0;
        for (int a = 0; a < 3; ++a) {
            const int bit = (corner >> a) & 1;
            ijk[a] = base[a] + bit;
            w *= bit ? frac[a] : 1.0 - frac[a];
        }
        if (w == 0.0 || !grid.in_bounds(ijk)) continue;

        const Peak* best = nullptr;
        double best_dot = -1.0;
        for (const Peak& p : field.peaks(ijk)) {
            if (p.qa < qa_threshold) continue;
            const double d = std::abs(p.direction.dot(prev_dir));
            if (d > best_dot) {
                best_dot = d;
                best = &p;
            }
        }
        if (best == nullptr) continue;
        const Vec3 aligned = best->direction.dot(prev_dir) < 0.0 ? Vec3(-best->direction) : best->direction;
        blended += w * aligned;
        qa += w * best->qa;
        weight_sum += w;
        single = aligned;
        ++contributors;
    }
    if (contributors == 0 || qa < qa_threshold) return std::nullopt;

    Vec3 direction;
    if (contributors == 1 && weight_sum == 1.0) {
        direction = single;
    } else {
        const double norm = blended.norm();
        if (!(norm > 1e-12)) return std::nullopt;
        direction = blended / norm;
    }
    const double cos_limit = std::cos(angular_threshold_deg * std::numbers::pi / 180.0);
    if (direction.dot(prev_dir) < cos_limit - 1e-12) return std::nullopt;
    return InterpolatedDirection{direction, qa};
}

void validate(const PhantomSpec& spec) {
    for (int a = 0; a < 3; ++a) {
        if (spec.dims[a] <= 0) throw ValidationError("phantom dims must be positive");
        if (!(spec.voxel_size[a] > 0.0)) throw ValidationError("phantom voxel size must be positive");
    }
    if (!(spec.qa_value > 0.0) || !std::isfinite(spec.qa_value))
        throw ValidationError("phantom qa_value must be positive");
    const double max_voxel = *std::max_element(spec.voxel_size.begin(), spec.voxel_size.end());
    switch (spec.kind) {
        case PhantomKind::straight:
            if (!(spec.axis.norm() > 0.0)) throw ValidationError("straight phantom axis must be non-zero");
            break;
        case PhantomKind::arc:
            if (!(spec.radius_mm > max_voxel))
                throw ValidationError("arc radius must exceed the voxel size");
            if (!(spec.tube_radius_mm > 0.0)) throw ValidationError("arc tube radius must be positive");
            if (!(spec.plane_normal.norm() > 0.0)) throw ValidationError("arc plane normal must be non-zero");
            break;
        case PhantomKind::crossing: {
            if (!(spec.axis.norm() > 0.0) || !(spec.second_axis.norm() > 0.0))
                throw ValidationError("crossing axes must be non-zero");
            const double s = spec.axis.normalized().cross(spec.second_axis.normalized()).norm();
            if (!(s > 1e-6)) throw ValidationError("crossing axes must not be parallel");
            if (!(spec.slab_half_width_mm > 0.0)) throw ValidationError("slab half width must be positive");
            break;
        }
    }
}

OdfField make_phantom(const PhantomSpec& spec) {
    validate(spec);
    const GridSpec grid(spec.dims, spec.voxel_size);
    const std::size_t n = grid.voxel_count();
    std::vector<std::vector<Peak>> peaks(n);
    std::vector<double> mask(n, 0.0);
    int max_peaks = 1;

    const Vec3 axis = spec.axis.normalized();
    const Vec3 normal = spec.plane_normal.normalized();
    const Vec3 second = spec.second_axis.normalized();
    // slab thickness directions: the in-plane normal of each axis
    const Vec3 thin1 = (second - second.dot(axis) * axis).normalized();
    const Vec3 thin2 = (axis - axis.dot(second) * second).normalized();

    for (std::size_t v = 0; v < n; ++v) {
        const Vec3 p = grid.voxel_to_world(grid.unravel(v));
        switch (spec.kind) {
            case PhantomKind::straight:
                peaks[v].push_back({axis, spec.qa_value});
                break;
            case PhantomKind::arc: {
                const Vec3 rel = p - spec.center_mm;
                const double height = rel.dot(normal);
                const Vec3 in_plane = rel - height * normal;
                const double r = in_plane.norm();
                if (r <= 0.0) break;
                if (std::hypot(r - spec.radius_mm, height) > spec.tube_radius_mm) break;
                peaks[v].push_back({normal.cross(in_plane / r).normalized(), spec.qa_value});
                break;
            }
            case PhantomKind::crossing: {
                const Vec3 rel = p - spec.center_mm;
                if (std::abs(rel.dot(thin1)) <= spec.slab_half_width_mm) peaks[v].push_back({axis, spec.qa_value});
                if (std::abs(rel.dot(thin2)) <= spec.slab_half_width_mm)
                    peaks[v].push_back({second, spec.qa_value});
                max_peaks = 2;
                break;
            }
        }
        if (!peaks[v].empty()) mask[v] = 1.0;
    }
    return OdfField(grid, max_peaks, std::move(peaks), Volume(grid, VolumeKind::mask, std::move(mask)));
}

namespace {
constexpr char kMagic[4] = {'N', 'P', 'K', '1'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_field(const OdfField& field, const std::filesystem::path& path) {
    const GridSpec& grid = field.grid();
    detail::ByteWriter w;
    w.put_bytes(kMagic, 4);
    w.put(kVersion);
    for (int a = 0; a < 3; ++a) w.put(static_cast<std::uint32_t>(grid.dims()[a]));
    for (int a = 0; a < 3; ++a) w.put(static_cast<float>(grid.voxel_size()[a]));
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) w.put(grid.affine()(r, c));
    const int k = field.max_peaks();
    w.put(static_cast<std::uint32_t>(k));
    for (std::size_t v = 0; v < grid.voxel_count(); ++v) {
        const auto list = field.peaks(v);
        w.put(static_cast<std::uint8_t>(list.size()));
        for (int slot = 0; slot < k; ++slot) {
            if (slot < static_cast<int>(list.size())) {
                const Peak& p = list[slot];
                for (int a = 0; a < 3; ++a) w.put(static_cast<float>(p.direction[a]));
                w.put(static_cast<float>(p.qa));
            } else {
                for (int a = 0; a < 4; ++a) w.put(0.0f);
            }
        }
    }
    for (double m : field.brain_mask().data()) w.put(static_cast<std::uint8_t>(m != 0.0));
    detail::write_file_bytes(path, w.bytes(), detail::has_gz_suffix(path));
}

OdfField load_field(const std::filesystem::path& path) {
    const auto bytes = detail::read_file_bytes(path);
    const std::string name = path.string();
    detail::ByteReader r(bytes, name);
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw FormatError(name + ": not an NPK1 peak field");
    r.skip(4);
    if (r.get<std::uint32_t>() != kVersion) throw FormatError(name + ": unsupported NPK1 version");
    Index3 dims;
    for (int a = 0; a < 3; ++a) {
        const auto d = r.get<std::uint32_t>();
        if (d == 0 || d > (1u << 16)) throw FormatError(name + ": invalid dimension");
        dims[a] = static_cast<int>(d);
    }
    std::array<float, 3> voxel_size;
    for (auto& s : voxel_size) s = r.get<float>();
    Mat4 affine;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) affine(i, j) = r.get<double>();
    const auto k = r.get<std::uint32_t>();
    if (k == 0 || k > 255) throw FormatError(name + ": invalid peak slot count");

    GridSpec grid(dims, affine);
    for (int a = 0; a < 3; ++a)
        if (std::abs(grid.voxel_size()[a] - voxel_size[a]) > 1e-4 * grid.voxel_size()[a])
            throw FormatError(name + ": voxel size disagrees with affine");

    const std::size_t n = grid.voxel_count();
    r.require(n * (1 + 16 * static_cast<std::size_t>(k)) + n);
    std::vector<std::vector<Peak>> peaks(n);
    for (std::size_t v = 0; v < n; ++v) {
        const auto count = r.get<std::uint8_t>();
        if (count > k) throw FormatError(name + ": voxel peak count exceeds slot count");
        for (std::uint32_t slot = 0; slot < k; ++slot) {
            Vec3 dir;
            for (int a = 0; a < 3; ++a) dir[a] = r.get<float>();
            const double qa = r.get<float>();
            if (slot >= count) continue;
            const double norm = dir.norm();
            if (!(std::abs(norm - 1.0) <= 1e-3))
                throw ValidationError(name + ": peak direction in voxel " + std::to_string(v) + " is not unit norm");
            if (!(qa >= 0.0)) throw ValidationError(name + ": negative qa in voxel " + std::to_string(v));
            peaks[v].push_back({dir / norm, qa});
        }
    }
    std::vector<double> mask(n);
    for (auto& m : mask) {
        const auto b = r.get<std::uint8_t>();
        if (b > 1) throw FormatError(name + ": brain mask byte must be 0 or 1");
        m = b;
    }
    return OdfField(grid, static_cast<int>(k), std::move(peaks), Volume(grid, VolumeKind::mask, std::move(mask)));
}

}  // namespace tractfeat
