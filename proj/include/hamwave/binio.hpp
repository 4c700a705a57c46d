// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "hamwave/error.hpp"

// Little-endian binary file helpers for the dataset and checkpoint formats.

namespace hamwave {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; byte swapping is not implemented");

class BinWriter {
public:
  explicit BinWriter(const std::string& path) : out_(path, std::ios::binary), path_(path) {
    if (!out_) fail_io("cannot open for writing: " + path);
  }

  void magic(const char tag[4]) { out_.write(tag, 4); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void i32(std::int32_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void f64_array(std::span<const double> v) { raw(v.data(), v.size() * sizeof(double)); }

  void close() {
    out_.close();
    if (!out_) fail_io("write failed: " + path_);
  }

private:
  void raw(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!out_) fail_io("write failed: " + path_);
  }
  std::ofstream out_;
  std::string path_;
};

class BinReader {
public:
  explicit BinReader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) fail_io("cannot open for reading: " + path);
  }

  void expect_magic(const char tag[4], const char* what) {
    char buf[4];
    raw(buf, 4);
    if (std::memcmp(buf, tag, 4) != 0)
      fail_io(std::string(path_) + ": not a " + what + " file (bad magic)");
  }
  std::uint32_t u32() { std::uint32_t v; raw(&v, sizeof v); return v; }
  std::uint64_t u64() { std::uint64_t v; raw(&v, sizeof v); return v; }
  std::int32_t i32() { std::int32_t v; raw(&v, sizeof v); return v; }
  double f64() { double v; raw(&v, sizeof v); return v; }
  void f64_array(std::span<double> v) { raw(v.data(), v.size() * sizeof(double)); }
  std::vector<double> f64_vector(std::size_t n) {
    std::vector<double> v(n);
    f64_array({v.data(), v.size()});
    return v;
  }

private:
  void raw(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n)) fail_io("unexpected end of file: " + path_);
  }
  std::ifstream in_;
  std::string path_;
};

}  // namespace hamwave
