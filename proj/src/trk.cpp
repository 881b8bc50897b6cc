#include "tractfeat/trk.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "byte_io.hpp"
#include "tractfeat/error.hpp"

namespace tractfeat {
namespace {

constexpr int kHeaderSize = 1000;

namespace off {
constexpr int id_string = 0;
constexpr int dim = 6;
constexpr int voxel_size = 12;
constexpr int n_scalars = 36;
constexpr int n_properties = 238;
constexpr int vox_to_ras = 440;
constexpr int voxel_order = 948;
constexpr int n_count = 988;
constexpr int version = 992;
constexpr int hdr_size = 996;
}  // namespace off

std::string orientation_code(const Mat4& affine) {
    static constexpr char kPositive[3] = {'R', 'A', 'S'};
    static constexpr char kNegative[3] = {'L', 'P', 'I'};
    std::string code(3, '?');
    for (int c = 0; c < 3; ++c) {
        int best = 0;
        for (int r = 1; r < 3; ++r)
            if (std::abs(affine(r, c)) > std::abs(affine(best, c))) best = r;
        code[c] = affine(best, c) >= 0.0 ? kPositive[best] : kNegative[best];
    }
    return code;
}

template <typename T>
T read_at(const std::vector<std::uint8_t>& bytes, int offset) {
    T value;
    std::memcpy(&value, bytes.data() + offset, sizeof(T));
    return value;
}

}  // namespace

void save_trk(const Tractogram& tractogram, const GridSpec& reference, const std::filesystem::path& path) {
    detail::ByteWriter w;
    w.pad_to(kHeaderSize);
    auto& b = w.bytes();
    auto put = [&b](int offset, auto value) { std::memcpy(b.data() + offset, &value, sizeof(value)); };

    std::memcpy(b.data() + off::id_string, "TRACK", 6);
    for (int a = 0; a < 3; ++a) {
        put(off::dim + 2 * a, static_cast<std::int16_t>(reference.dims()[a]));
        put(off::voxel_size + 4 * a, static_cast<float>(reference.voxel_size()[a]));
    }
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) put(off::vox_to_ras + 4 * (4 * r + c), static_cast<float>(reference.affine()(r, c)));
    const std::string order = orientation_code(reference.affine());
    std::memcpy(b.data() + off::voxel_order, order.data(), 3);
    put(off::n_count, static_cast<std::int32_t>(tractogram.size()));
    put(off::version, std::int32_t{2});
    put(off::hdr_size, std::int32_t{kHeaderSize});

    const auto& vs = reference.voxel_size();
    for (std::size_t i = 0; i < tractogram.size(); ++i) {
        const auto line = tractogram[i];
        w.put(static_cast<std::int32_t>(line.size()));
        for (const Vec3& p : line) {
            const Vec3 ijk = reference.world_to_voxel(p);
            for (int a = 0; a < 3; ++a) w.put(static_cast<float>((ijk[a] + 0.5) * vs[a]));
        }
    }
    detail::write_file_bytes(path, w.bytes(), detail::has_gz_suffix(path));
}

Tractogram load_trk(const std::filesystem::path& path, GridSpec* reference) {
    const auto bytes = detail::read_file_bytes(path);
    const std::string name = path.string();
    if (bytes.size() < kHeaderSize || std::memcmp(bytes.data(), "TRACK", 5) != 0)
        throw FormatError(name + ": not a TrackVis file");
    if (read_at<std::int32_t>(bytes, off::hdr_size) != kHeaderSize)
        throw FormatError(name + ": unexpected header size (big-endian files are not supported)");
    const auto version = read_at<std::int32_t>(bytes, off::version);
    if (version != 1 && version != 2) throw UnsupportedError(name + ": unsupported TrackVis version");

    Index3 dims;
    std::array<double, 3> vs;
    for (int a = 0; a < 3; ++a) {
        dims[a] = std::max<int>(1, read_at<std::int16_t>(bytes, off::dim + 2 * a));
        vs[a] = read_at<float>(bytes, off::voxel_size + 4 * a);
        if (!(vs[a] > 0.0)) vs[a] = 1.0;
    }
    Mat4 affine = Mat4::Zero();
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) affine(r, c) = read_at<float>(bytes, off::vox_to_ras + 4 * (4 * r + c));
    const GridSpec grid = (version == 2 && affine(3, 3) != 0.0) ? GridSpec(dims, affine) : GridSpec(dims, vs);
    if (reference) *reference = grid;

    const auto n_scalars = read_at<std::int16_t>(bytes, off::n_scalars);
    const auto n_properties = read_at<std::int16_t>(bytes, off::n_properties);
    if (n_scalars < 0 || n_properties < 0) throw FormatError(name + ": negative scalar/property count");
    const auto n_count = read_at<std::int32_t>(bytes, off::n_count);

    detail::ByteReader r(bytes, name);
    r.skip(kHeaderSize);
    Tractogram out;
    std::vector<Vec3> line;
    while (r.remaining() > 0 && (n_count <= 0 || out.size() < static_cast<std::size_t>(n_count))) {
        const auto n = r.get<std::int32_t>();
        if (n < 0) throw FormatError(name + ": negative point count");
        line.clear();
        for (std::int32_t k = 0; k < n; ++k) {
            Vec3 ijk;
            for (int a = 0; a < 3; ++a) ijk[a] = r.get<float>() / vs[a] - 0.5;
            r.skip(4 * static_cast<std::size_t>(n_scalars));
            line.push_back(grid.voxel_to_world(ijk));
        }
        r.skip(4 * static_cast<std::size_t>(n_properties));
        out.push_back(line);
    }
    if (n_count > 0 && out.size() != static_cast<std::size_t>(n_count))
        throw FormatError(name + ": fewer streamlines than n_count");
    return out;
}

}  // namespace tractfeat
