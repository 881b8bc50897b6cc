#include "tractfeat/nifti.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <string>

#include "byte_io.hpp"
#include "tractfeat/error.hpp"

namespace tractfeat {
namespace {

constexpr int kHeaderSize = 348;
constexpr int kVoxOffset = 352;
constexpr short kIntentLabel = 1002;

enum DataType : short {
    DT_UINT8 = 2,
    DT_INT16 = 4,
    DT_INT32 = 8,
    DT_FLOAT32 = 16,
    DT_FLOAT64 = 64,
};

// Byte offsets of the NIfTI-1 header fields used here.
namespace off {
constexpr int sizeof_hdr = 0;
constexpr int dim = 40;
constexpr int intent_code = 68;
constexpr int datatype = 70;
constexpr int bitpix = 72;
constexpr int pixdim = 76;
constexpr int vox_offset = 108;
constexpr int scl_slope = 112;
constexpr int scl_inter = 116;
constexpr int xyzt_units = 123;
constexpr int descrip = 148;
constexpr int qform_code = 252;
constexpr int sform_code = 254;
constexpr int quatern_b = 256;
constexpr int qoffset_x = 268;
constexpr int srow_x = 280;
constexpr int intent_name = 328;
constexpr int magic = 344;
}  // namespace off

class HeaderView {
public:
    HeaderView(const std::uint8_t* bytes, bool swap) : bytes_(bytes), swap_(swap) {}

    template <typename T>
    T get(int offset) const {
        T value;
        std::memcpy(&value, bytes_ + offset, sizeof(T));
        if (swap_) value = byteswap_value(value);
        return value;
    }

    template <typename T>
    static T byteswap_value(T value) {
        std::uint8_t raw[sizeof(T)];
        std::memcpy(raw, &value, sizeof(T));
        std::reverse(raw, raw + sizeof(T));
        std::memcpy(&value, raw, sizeof(T));
        return value;
    }

private:
    const std::uint8_t* bytes_;
    bool swap_;
};

Mat4 qform_affine(const HeaderView& h, const std::array<double, 3>& pixdim, double qfac) {
    const double b = h.get<float>(off::quatern_b);
    const double c = h.get<float>(off::quatern_b + 4);
    const double d = h.get<float>(off::quatern_b + 8);
    const double a = std::sqrt(std::max(0.0, 1.0 - (b * b + c * c + d * d)));
    Mat3 r;
    r << a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c),  //
        2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b),   //
        2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - c * c - b * b;
    Mat4 m = Mat4::Identity();
    m.block<3, 1>(0, 0) = r.col(0) * pixdim[0];
    m.block<3, 1>(0, 1) = r.col(1) * pixdim[1];
    m.block<3, 1>(0, 2) = r.col(2) * pixdim[2] * qfac;
    for (int i = 0; i < 3; ++i) m(i, 3) = h.get<float>(off::qoffset_x + 4 * i);
    return m;
}

template <typename T>
void decode(const std::uint8_t* src, std::size_t count, bool swap, std::vector<double>& out) {
    out.resize(count);
    for (std::size_t n = 0; n < count; ++n) {
        T value;
        std::memcpy(&value, src + n * sizeof(T), sizeof(T));
        if (swap) value = HeaderView::byteswap_value(value);
        out[n] = static_cast<double>(value);
    }
}

}  // namespace

Volume load_volume(const std::filesystem::path& path, std::optional<VolumeKind> kind) {
    const auto bytes = detail::read_file_bytes(path);
    const std::string name = path.string();
    if (bytes.size() < kHeaderSize) throw FormatError(name + ": file shorter than a NIfTI-1 header");

    std::int32_t sizeof_hdr;
    std::memcpy(&sizeof_hdr, bytes.data() + off::sizeof_hdr, 4);
    bool swap = false;
    if (sizeof_hdr != kHeaderSize) {
        if (HeaderView::byteswap_value(sizeof_hdr) != kHeaderSize)
            throw FormatError(name + ": sizeof_hdr is not 348");
        swap = true;
    }
    if (std::memcmp(bytes.data() + off::magic, "n+1\0", 4) != 0)
        throw FormatError(name + ": missing single-file NIfTI-1 magic");

    const HeaderView h(bytes.data(), swap);
    const auto ndim = h.get<std::int16_t>(off::dim);
    if (ndim < 1 || ndim > 7) throw FormatError(name + ": invalid dim[0]");
    if (ndim != 3) throw ShapeError(name + ": expected a 3-D image, dim[0] = " + std::to_string(ndim));
    Index3 dims;
    for (int a = 0; a < 3; ++a) {
        dims[a] = h.get<std::int16_t>(off::dim + 2 * (a + 1));
        if (dims[a] <= 0) throw FormatError(name + ": non-positive dimension");
    }

    std::array<double, 3> pixdim;
    for (int a = 0; a < 3; ++a) {
        pixdim[a] = std::abs(h.get<float>(off::pixdim + 4 * (a + 1)));
        if (!(pixdim[a] > 0.0)) pixdim[a] = 1.0;
    }
    const double qfac = h.get<float>(off::pixdim) < 0.0f ? -1.0 : 1.0;

    Mat4 affine = Mat4::Identity();
    if (h.get<std::int16_t>(off::sform_code) > 0) {
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 4; ++c) affine(r, c) = h.get<float>(off::srow_x + 16 * r + 4 * c);
    } else if (h.get<std::int16_t>(off::qform_code) > 0) {
        affine = qform_affine(h, pixdim, qfac);
    } else {
        for (int a = 0; a < 3; ++a) affine(a, a) = pixdim[a];
    }

    const auto datatype = h.get<std::int16_t>(off::datatype);
    std::size_t width = 0;
    switch (datatype) {
        case DT_UINT8: width = 1; break;
        case DT_INT16: width = 2; break;
        case DT_INT32: width = 4; break;
        case DT_FLOAT32: width = 4; break;
        case DT_FLOAT64: width = 8; break;
        default: throw UnsupportedError(name + ": unsupported datatype " + std::to_string(datatype));
    }

    const auto vox_offset = static_cast<std::size_t>(h.get<float>(off::vox_offset));
    if (vox_offset < kHeaderSize) throw FormatError(name + ": vox_offset inside header");
    const std::size_t count = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
    if (vox_offset + count * width > bytes.size()) throw FormatError(name + ": truncated voxel data");

    std::vector<double> data;
    const std::uint8_t* src = bytes.data() + vox_offset;
    switch (datatype) {
        case DT_UINT8: decode<std::uint8_t>(src, count, swap, data); break;
        case DT_INT16: decode<std::int16_t>(src, count, swap, data); break;
        case DT_INT32: decode<std::int32_t>(src, count, swap, data); break;
        case DT_FLOAT32: decode<float>(src, count, swap, data); break;
        case DT_FLOAT64: decode<double>(src, count, swap, data); break;
        default: break;
    }

    const double slope = h.get<float>(off::scl_slope);
    const double inter = h.get<float>(off::scl_inter);
    if (slope != 0.0 && std::isfinite(slope) && std::isfinite(inter) && !(slope == 1.0 && inter == 0.0)) {
        for (double& v : data) v = v * slope + inter;
    }

    if (!kind) {
        char intent_name[17] = {};
        std::memcpy(intent_name, bytes.data() + off::intent_name, 16);
        if (h.get<std::int16_t>(off::intent_code) == kIntentLabel)
            kind = VolumeKind::label;
        else if (std::string(intent_name) == "mask")
            kind = VolumeKind::mask;
        else
            kind = VolumeKind::scalar;
    }
    return Volume(GridSpec(dims, affine), *kind, std::move(data));
}

void save_volume(const Volume& volume, const std::filesystem::path& path) {
    const auto& grid = volume.grid();
    for (int a = 0; a < 3; ++a)
        if (grid.dims()[a] > 32767) throw UnsupportedError("dimension exceeds NIfTI-1 int16 range");

    const bool integral = volume.kind() != VolumeKind::scalar;
    detail::ByteWriter w;
    w.pad_to(kVoxOffset);
    auto& b = w.bytes();
    auto put = [&b](int offset, auto value) { std::memcpy(b.data() + offset, &value, sizeof(value)); };

    put(off::sizeof_hdr, std::int32_t{kHeaderSize});
    put(off::dim, std::int16_t{3});
    for (int a = 0; a < 3; ++a) put(off::dim + 2 * (a + 1), static_cast<std::int16_t>(grid.dims()[a]));
    for (int a = 4; a < 8; ++a) put(off::dim + 2 * a, std::int16_t{1});
    put(off::datatype, integral ? std::int16_t{DT_INT32} : std::int16_t{DT_FLOAT32});
    put(off::bitpix, std::int16_t{32});
    put(off::pixdim, 1.0f);
    for (int a = 0; a < 3; ++a) put(off::pixdim + 4 * (a + 1), static_cast<float>(grid.voxel_size()[a]));
    put(off::vox_offset, static_cast<float>(kVoxOffset));
    put(off::scl_slope, 1.0f);
    put(off::scl_inter, 0.0f);
    put(off::xyzt_units, std::uint8_t{2});  // mm
    const char descrip[] = "tractfeat";
    std::memcpy(b.data() + off::descrip, descrip, sizeof(descrip));
    put(off::qform_code, std::int16_t{0});
    put(off::sform_code, std::int16_t{2});
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 4; ++c) put(off::srow_x + 16 * r + 4 * c, static_cast<float>(grid.affine()(r, c)));
    if (volume.kind() == VolumeKind::label) put(off::intent_code, kIntentLabel);
    if (volume.kind() == VolumeKind::mask) std::memcpy(b.data() + off::intent_name, "mask", 4);
    std::memcpy(b.data() + off::magic, "n+1\0", 4);

    for (double v : volume.data()) {
        if (integral)
            w.put(static_cast<std::int32_t>(std::lround(v)));
        else
            w.put(static_cast<float>(v));
    }
    detail::write_file_bytes(path, w.bytes(), detail::has_gz_suffix(path));
}

}  // namespace tractfeat
