#include "mdkit/io/binary.hpp"

#include "mdkit/error.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>

namespace mdkit::io {

namespace {

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::array<unsigned char, sizeof(T)> raw;
    std::memcpy(raw.data(), &v, sizeof(T));
    std::reverse(raw.begin(), raw.end());
    std::memcpy(&v, raw.data(), sizeof(T));
    return v;
  }
}

} // namespace

BinaryWriter::BinaryWriter(const std::filesystem::path& path)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) fail(ErrorCode::IoError, "cannot write " + path.string());
}

template <typename T>
void BinaryWriter::put(T v) {
  v = to_little(v);
  out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

void BinaryWriter::magic(std::string_view four_cc) { out_.write(four_cc.data(), 4); }
void BinaryWriter::u32(std::uint32_t v) { put(v); }
void BinaryWriter::f32(float v) { put(v); }
void BinaryWriter::f64(double v) { put(v); }
void BinaryWriter::f32_array(const float* data, std::size_t count) {
  if constexpr (std::endian::native == std::endian::little) {
    bytes(data, count * sizeof(float));
  } else {
    for (std::size_t i = 0; i < count; ++i) put(data[i]);
  }
}
void BinaryWriter::bytes(const void* data, std::size_t size) {
  out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
}

void BinaryWriter::close() {
  out_.close();
  if (!out_) fail(ErrorCode::IoError, "failed writing " + path_.string());
}

BinaryReader::BinaryReader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
  if (!in_) fail(ErrorCode::IoError, "cannot open " + path.string());
}

template <typename T>
T BinaryReader::get() {
  T v;
  in_.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in_) fail(ErrorCode::FormatError, path_.string() + ": unexpected end of file");
  return to_little(v);
}

void BinaryReader::expect_magic(std::string_view four_cc) {
  char buf[4] = {};
  in_.read(buf, 4);
  if (!in_ || std::string_view(buf, 4) != four_cc) {
    fail(ErrorCode::FormatError, path_.string() + ": expected magic " + std::string(four_cc));
  }
}

std::uint32_t BinaryReader::u32() { return get<std::uint32_t>(); }
float BinaryReader::f32() { return get<float>(); }
double BinaryReader::f64() { return get<double>(); }

void BinaryReader::f32_array(float* data, std::size_t count) {
  in_.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(float)));
  if (!in_) fail(ErrorCode::FormatError, path_.string() + ": unexpected end of file");
  for (std::size_t i = 0; i < count; ++i) data[i] = to_little(data[i]);
}

std::string BinaryReader::string(std::size_t size) {
  std::string s(size, '\0');
  in_.read(s.data(), static_cast<std::streamsize>(size));
  if (!in_) fail(ErrorCode::FormatError, path_.string() + ": unexpected end of file");
  return s;
}

void BinaryReader::expect_end() {
  if (in_.peek() != std::char_traits<char>::eof()) {
    fail(ErrorCode::FormatError, path_.string() + ": trailing bytes");
  }
}

} // namespace mdkit::io
