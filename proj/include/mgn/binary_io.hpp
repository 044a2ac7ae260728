#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mgn {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::uint32_t crc32(std::string_view bytes);

/// Container layout shared by trajectory and checkpoint files (little-endian):
///   magic[8] | u64 header_length | header (JSON text) | body | u32 CRC-32
/// The checksum covers every byte before it.
struct Container {
  std::string header;
  std::string body;
};

void write_container(const std::filesystem::path& path, std::string_view magic, const Container& c);
Container read_container(const std::filesystem::path& path, std::string_view magic);

void append_doubles(std::string& body, std::span<const double> values);

/// Sequential reader over a container body.
class BodyReader {
 public:
  explicit BodyReader(std::string_view body) : body_(body) {}
  void read_doubles(std::span<double> out);
  bool done() const { return pos_ == body_.size(); }

 private:
  std::string_view body_;
  std::size_t pos_ = 0;
};

}  // namespace mgn
