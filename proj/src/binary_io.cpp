#include "rapidlog/binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <boost/crc.hpp>

#include "rapidlog/errors.hpp"

namespace rapidlog::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace {
constexpr std::size_t kCrcBytes = 4;
}

std::uint32_t crc32c(std::span<const std::uint8_t> bytes) {
    boost::crc_optimal<32, 0x1EDC6F41, 0xFFFFFFFF, 0xFFFFFFFF, true, true> crc;
    crc.process_bytes(bytes.data(), bytes.size());
    return crc.checksum();
}

void ByteWriter::put_bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }

void ByteWriter::put_u32(std::uint32_t v) {
    std::uint8_t raw[4];
    std::memcpy(raw, &v, 4);
    buf_.insert(buf_.end(), raw, raw + 4);
}

void ByteWriter::put_u64(std::uint64_t v) {
    std::uint8_t raw[8];
    std::memcpy(raw, &v, 8);
    buf_.insert(buf_.end(), raw, raw + 8);
}

void ByteWriter::put_f32(float v) { put_u32(std::bit_cast<std::uint32_t>(v)); }

void ByteWriter::put_f32s(std::span<const float> values) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(values.data());
    buf_.insert(buf_.end(), p, p + values.size_bytes());
}

void ByteWriter::seal() { put_u32(crc32c(buf_)); }

void ByteReader::need(std::size_t n, const char* what) const {
    if (n > remaining()) {
        throw TruncationError(pos_, std::string("reading ") + what);
    }
}

std::string ByteReader::get_bytes(std::size_t n, const char* what) {
    need(n, what);
    std::string out(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return out;
}

std::uint32_t ByteReader::get_u32(const char* what) {
    need(4, what);
    std::uint32_t v;
    std::memcpy(&v, bytes_.data() + pos_, 4);
    pos_ += 4;
    return v;
}

std::uint64_t ByteReader::get_u64(const char* what) {
    need(8, what);
    std::uint64_t v;
    std::memcpy(&v, bytes_.data() + pos_, 8);
    pos_ += 8;
    return v;
}

void ByteReader::get_f32s(std::span<float> out, const char* what) {
    need(out.size_bytes(), what);
    std::memcpy(out.data(), bytes_.data() + pos_, out.size_bytes());
    pos_ += out.size_bytes();
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot open " + path.string() + " for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw Error("write failed: " + path.string());
    }
}

ByteReader open_sealed(std::span<const std::uint8_t> bytes, std::string_view magic,
                       std::uint32_t version) {
    ByteReader header(bytes);
    if (bytes.size() < magic.size() ||
        std::memcmp(bytes.data(), magic.data(), magic.size()) != 0) {
        throw FormatError("bad magic, expected \"" + std::string(magic) + "\"");
    }
    header.get_bytes(magic.size(), "magic");
    const std::uint32_t found = header.get_u32("version");
    if (found != version) {
        throw VersionError("unsupported version " + std::to_string(found) + ", expected " +
                           std::to_string(version));
    }
    if (bytes.size() < header.offset() + kCrcBytes) {
        throw TruncationError(bytes.size(), "missing checksum");
    }
    ByteReader payload(bytes.first(bytes.size() - kCrcBytes));
    payload.get_bytes(header.offset(), "header");
    return payload;
}

void close_sealed(std::span<const std::uint8_t> bytes, const ByteReader& payload) {
    if (payload.remaining() != 0) {
        throw FormatError(std::to_string(payload.remaining()) + " unexpected trailing bytes at offset " +
                          std::to_string(payload.offset()));
    }
    const std::size_t body = bytes.size() - kCrcBytes;
    std::uint32_t stored;
    std::memcpy(&stored, bytes.data() + body, kCrcBytes);
    if (stored != crc32c(bytes.first(body))) {
        throw ChecksumError("CRC32C mismatch");
    }
}

}  // namespace rapidlog::io
