#include "byte_io.hpp"

#include <fstream>

#include <zlib.h>

#include "tractfeat/error.hpp"

namespace tractfeat::detail {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    gzFile file = gzopen(path.c_str(), "rb");
    if (file == nullptr) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes;
    std::uint8_t chunk[1 << 16];
    for (;;) {
        const int n = gzread(file, chunk, sizeof(chunk));
        if (n < 0) {
            gzclose(file);
            throw FormatError("corrupt compressed stream in " + path.string());
        }
        if (n == 0) break;
        bytes.insert(bytes.end(), chunk, chunk + n);
    }
    gzclose(file);
    return bytes;
}

bool has_gz_suffix(const std::filesystem::path& path) { return path.extension() == ".gz"; }

void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes,
                      bool compress) {
    if (compress) {
        // mtime is not stored by gzwrite, so output is reproducible
        gzFile file = gzopen(path.c_str(), "wb6");
        if (file == nullptr) throw IoError("cannot write " + path.string());
        std::size_t offset = 0;
        while (offset < bytes.size()) {
            const auto n = static_cast<unsigned>(std::min<std::size_t>(bytes.size() - offset, 1u << 20));
            if (gzwrite(file, bytes.data() + offset, n) != static_cast<int>(n)) {
                gzclose(file);
                throw IoError("write failed for " + path.string());
            }
            offset += n;
        }
        if (gzclose(file) != Z_OK) throw IoError("write failed for " + path.string());
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

void ByteReader::require(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw FormatError(what_ + ": unexpected end of data");
}

}  // namespace tractfeat::detail
