#pragma once

// Little-endian encoders/decoders shared by all on-disk formats.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace proxyhash {

class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class ByteWriter {
 public:
  void magic(std::string_view tag);
  void u8(std::uint8_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f32(float v);
  void f64(double v);
  void bytes(const std::vector<std::uint8_t>& data);

  const std::vector<std::uint8_t>& buffer() const noexcept { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::vector<std::uint8_t> data, std::size_t start = 0)
      : data_(std::move(data)), pos_(start) {}

  void expect_magic(std::string_view tag);
  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  float f32();
  double f64();

  std::size_t position() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  const std::vector<std::uint8_t>& data() const noexcept { return data_; }
  void skip(std::size_t n);
  void expect_end() const;

 private:
  void need(std::size_t n, const char* what) const;

  std::vector<std::uint8_t> data_;
  std::size_t pos_;
};

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

// Writes to a sibling temporary and renames, so a failure never leaves a
// partial file behind.
void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& data);
void write_text_atomic(const std::filesystem::path& path, std::string_view text);

}  // namespace proxyhash
