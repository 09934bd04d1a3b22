#include "alucell/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>

#include "alucell/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "binary artifact format assumes a little-endian host");

namespace alucell {

std::uint64_t checksum_bytes(std::span<const std::byte> bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (std::byte b : bytes) {
        h ^= static_cast<std::uint64_t>(b);
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::uint64_t checksum_doubles(std::span<const double> values) {
    return checksum_bytes(std::as_bytes(values));
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string out;
    in.seekg(0, std::ios::end);
    out.resize(static_cast<std::size_t>(in.tellg()));
    in.seekg(0);
    in.read(out.data(), static_cast<std::streamsize>(out.size()));
    if (!in) throw IoError("short read on " + path.string());
    return out;
}

void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot create " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw IoError("short write on " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void BinaryWriter::u32(std::uint32_t v) {
    buf_.append(reinterpret_cast<const char*>(&v), sizeof v);
}
void BinaryWriter::u64(std::uint64_t v) {
    buf_.append(reinterpret_cast<const char*>(&v), sizeof v);
}
void BinaryWriter::f64(double v) {
    buf_.append(reinterpret_cast<const char*>(&v), sizeof v);
}
void BinaryWriter::f64_span(std::span<const double> v) {
    buf_.append(reinterpret_cast<const char*>(v.data()), v.size_bytes());
}
void BinaryWriter::magic(const char tag[8]) { buf_.append(tag, 8); }

void BinaryReader::need(std::size_t n, const char* what) {
    if (pos_ + n > buf_.size())
        throw IoError(std::string("truncated data while reading ") + what);
}
std::uint32_t BinaryReader::u32() {
    need(4, "u32");
    std::uint32_t v;
    std::memcpy(&v, buf_.data() + pos_, 4);
    pos_ += 4;
    return v;
}
std::uint64_t BinaryReader::u64() {
    need(8, "u64");
    std::uint64_t v;
    std::memcpy(&v, buf_.data() + pos_, 8);
    pos_ += 8;
    return v;
}
double BinaryReader::f64() {
    need(8, "f64");
    double v;
    std::memcpy(&v, buf_.data() + pos_, 8);
    pos_ += 8;
    return v;
}
void BinaryReader::f64_span(std::span<double> out) {
    need(out.size_bytes(), "f64 block");
    std::memcpy(out.data(), buf_.data() + pos_, out.size_bytes());
    pos_ += out.size_bytes();
}
void BinaryReader::expect_magic(const char tag[8], const std::string& what) {
    need(8, "magic");
    if (std::memcmp(buf_.data() + pos_, tag, 8) != 0)
        throw IoError("bad magic in " + what);
    pos_ += 8;
}

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace alucell
