#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace qll {

/// Writes `bytes` to a sibling temp file and renames it over `path`, so a
/// reader never observes a partially written file. Creates parent
/// directories. Throws std::runtime_error on I/O failure.
void atomic_write_file(const std::filesystem::path& path, std::string_view bytes);

/// Whole-file read. Throws std::runtime_error if the file cannot be opened.
std::string read_file(const std::filesystem::path& path);

/// Little-endian append-only byte writer.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f32(float v);
  void raw(std::string_view bytes) { buf_.append(bytes); }

  const std::string& bytes() const noexcept { return buf_; }
  std::string take() noexcept { return std::move(buf_); }

 private:
  std::string buf_;
};

/// Little-endian reader over a byte buffer. Throws qll::FormatError when a
/// read would run past the end.
class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  float f32();
  std::string_view raw(std::size_t n);

  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  std::uint64_t unsigned_le(std::size_t n);

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace qll
