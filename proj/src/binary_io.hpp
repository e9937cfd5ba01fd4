#pragma once

// Little-endian primitive readers/writers shared by the SQIX, SQEM and SQCK
// formats. Values are assembled byte by byte so host endianness never leaks
// into a file.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "squid/common.hpp"

namespace squid::detail {

class LeWriter {
 public:
  explicit LeWriter(std::ostream& out) : out_(out) {}

  void bytes(std::string_view s) { out_.write(s.data(), static_cast<std::streamsize>(s.size())); }

  template <std::unsigned_integral T>
  void uint(T v) {
    std::array<char, sizeof(T)> buf;
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out_.write(buf.data(), buf.size());
  }

  void u32(std::uint32_t v) { uint(v); }
  void u64(std::uint64_t v) { uint(v); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s);
  }

 private:
  std::ostream& out_;
};

class LeReader {
 public:
  LeReader(std::istream& in, std::string what) : in_(in), what_(std::move(what)) {}

  std::string bytes(std::size_t n) {
    std::string s(n, '\0');
    in_.read(s.data(), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) truncated();
    return s;
  }

  template <std::unsigned_integral T>
  T uint() {
    std::array<unsigned char, sizeof(T)> buf;
    in_.read(reinterpret_cast<char*>(buf.data()), buf.size());
    if (static_cast<std::size_t>(in_.gcount()) != buf.size()) truncated();
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
    return v;
  }

  std::uint32_t u32() { return uint<std::uint32_t>(); }
  std::uint64_t u64() { return uint<std::uint64_t>(); }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() { return bytes(u32()); }

  void expect_magic(std::string_view magic) {
    if (bytes(magic.size()) != magic) {
      throw ValidationError(what_ + ": bad magic, expected \"" + std::string(magic) + "\"");
    }
  }

  [[noreturn]] void truncated() const { throw ValidationError(what_ + ": truncated file"); }

 private:
  std::istream& in_;
  std::string what_;
};

}  // namespace squid::detail
