#pragma once

// Internal helpers for the .pqds / .pqnn containers: little-endian scalar
// reads and writes over iostreams, with byte-offset-aware error reporting.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace pq::io {

class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " (byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

static_assert(std::endian::native == std::endian::little,
              "on-disk formats are little-endian; big-endian hosts need byte swaps");

template <typename T>
void write_scalar(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

inline void write_f64_array(std::ostream& out, const double* data, std::size_t n) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
}

/// Tracks how many bytes were consumed so format errors can name the offset
/// where the stream fell short or held an unexpected value.
class Reader {
 public:
  Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  template <typename T>
  T read_scalar(const char* field) {
    static_assert(std::is_trivially_copyable_v<T>);
    T value{};
    in_.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in_ || in_.gcount() != static_cast<std::streamsize>(sizeof(T))) {
      fail(std::string("truncated while reading ") + field);
    }
    offset_ += sizeof(T);
    return value;
  }

  void read_f64_array(double* data, std::size_t n, const char* field) {
    const auto bytes = static_cast<std::streamsize>(n * sizeof(double));
    in_.read(reinterpret_cast<char*>(data), bytes);
    if (!in_ || in_.gcount() != bytes) {
      fail(std::string("truncated while reading ") + field);
    }
    offset_ += static_cast<std::uint64_t>(bytes);
  }

  void read_bytes(char* data, std::size_t n, const char* field) {
    in_.read(data, static_cast<std::streamsize>(n));
    if (!in_ || in_.gcount() != static_cast<std::streamsize>(n)) {
      fail(std::string("truncated while reading ") + field);
    }
    offset_ += n;
  }

  void expect_eof() {
    if (in_.peek() != std::char_traits<char>::eof()) {
      fail("trailing bytes after final record");
    }
  }

  std::uint64_t offset() const { return offset_; }

  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError(source_ + ": " + what, offset_);
  }

 private:
  std::istream& in_;
  std::string source_;
  std::uint64_t offset_ = 0;
};

}  // namespace pq::io
