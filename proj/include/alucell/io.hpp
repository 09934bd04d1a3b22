#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace alucell {

// FNV-1a over raw bytes; used as the integrity checksum in binary artifacts.
std::uint64_t checksum_bytes(std::span<const std::byte> bytes);
std::uint64_t checksum_doubles(std::span<const double> values);

// Whole-file helpers.  write_file_atomic writes to <path>.tmp then renames,
// so partially written artifacts never shadow valid ones.
std::string read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents);

// Little-endian binary writer/reader used by the .traj / dataset blobs.
class BinaryWriter {
public:
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void f64(double v);
    void f64_span(std::span<const double> v);
    void magic(const char tag[8]);
    const std::string& bytes() const { return buf_; }

private:
    std::string buf_;
};

class BinaryReader {
public:
    explicit BinaryReader(std::string bytes) : buf_(std::move(bytes)) {}
    std::uint32_t u32();
    std::uint64_t u64();
    double f64();
    void f64_span(std::span<double> out);
    void expect_magic(const char tag[8], const std::string& what);
    bool at_end() const { return pos_ == buf_.size(); }
    std::size_t remaining() const { return buf_.size() - pos_; }

private:
    void need(std::size_t n, const char* what);
    std::string buf_;
    std::size_t pos_ = 0;
};

// Shortest lossless decimal rendering of a double (round-trips exactly);
// used for CSV output so reruns are byte-identical.
std::string format_double(double v);

}  // namespace alucell
