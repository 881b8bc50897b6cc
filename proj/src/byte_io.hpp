#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

namespace tractfeat::detail {

/// Whole-file read; gzip content is inflated transparently.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

/// Whole-file write; gzip-compressed when `compress` is set.
void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes,
                      bool compress);

bool has_gz_suffix(const std::filesystem::path& path);

/// Little-endian append/read helpers. The library targets little-endian hosts.
class ByteWriter {
public:
    template <typename T>
    void put(T value) {
        const auto offset = bytes_.size();
        bytes_.resize(offset + sizeof(T));
        std::memcpy(bytes_.data() + offset, &value, sizeof(T));
    }
    void put_bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const std::uint8_t*>(data);
        bytes_.insert(bytes_.end(), p, p + n);
    }
    void pad_to(std::size_t size) { bytes_.resize(std::max(bytes_.size(), size), 0); }
    std::vector<std::uint8_t>& bytes() { return bytes_; }

private:
    std::vector<std::uint8_t> bytes_;
};

class ByteReader {
public:
    ByteReader(const std::vector<std::uint8_t>& bytes, std::string what)
        : bytes_(bytes), what_(std::move(what)) {}

    template <typename T>
    T get() {
        require(sizeof(T));
        T value;
        std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }
    void skip(std::size_t n) {
        require(n);
        pos_ += n;
    }
    std::size_t position() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }
    void require(std::size_t n) const;

private:
    const std::vector<std::uint8_t>& bytes_;
    std::string what_;
    std::size_t pos_ = 0;
};

}  // namespace tractfeat::detail
