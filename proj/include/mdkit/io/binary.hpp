#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

namespace mdkit::io {

// Little-endian primitive writer for the MD* file family.
class BinaryWriter {
 public:
  explicit BinaryWriter(const std::filesystem::path& path);

  void magic(std::string_view four_cc);
  void u32(std::uint32_t v);
  void f32(float v);
  void f64(double v);
  void f32_array(const float* data, std::size_t count);
  void bytes(const void* data, std::size_t size);
  void close();

 private:
  template <typename T>
  void put(T v);

  std::filesystem::path path_;
  std::ofstream out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::filesystem::path& path);

  void expect_magic(std::string_view four_cc);
  std::uint32_t u32();
  float f32();
  double f64();
  void f32_array(float* data, std::size_t count);
  std::string string(std::size_t size);
  void expect_end();

 private:
  template <typename T>
  T get();

  std::filesystem::path path_;
  std::ifstream in_;
};

} // namespace mdkit::io
