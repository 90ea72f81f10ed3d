#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rapidlog::io {

std::uint32_t crc32c(std::span<const std::uint8_t> bytes);

// Little-endian append-only byte buffer.
class ByteWriter {
  public:
    void put_bytes(std::string_view s);
    void put_u32(std::uint32_t v);
    void put_u64(std::uint64_t v);
    void put_f32(float v);
    void put_f32s(std::span<const float> values);

    // Appends the CRC32C of everything written so far.
    void seal();

    const std::vector<std::uint8_t>& bytes() const noexcept { return buf_; }

  private:
    std::vector<std::uint8_t> buf_;
};

// Bounds-checked little-endian reader. Every read past the end raises
// TruncationError carrying the offset where the read started.
class ByteReader {
  public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::string get_bytes(std::size_t n, const char* what);
    std::uint32_t get_u32(const char* what);
    std::uint64_t get_u64(const char* what);
    void get_f32s(std::span<float> out, const char* what);

    std::size_t offset() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

  private:
    void need(std::size_t n, const char* what) const;

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

// Sealed container: magic, u32 version, payload, trailing CRC32C of all
// preceding bytes. open_sealed checks magic and version and returns a reader
// over the payload (the last four bytes are held back as the CRC). After the
// payload has been parsed, close_sealed rejects trailing bytes and checks the
// CRC. Parsing before checksumming lets a cut-off file report where it ends.
ByteReader open_sealed(std::span<const std::uint8_t> bytes, std::string_view magic,
                       std::uint32_t version);
void close_sealed(std::span<const std::uint8_t> bytes, const ByteReader& payload);

}  // namespace rapidlog::io
