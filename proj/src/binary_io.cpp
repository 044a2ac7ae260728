#include "mgn/binary_io.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace mgn {

static_assert(std::endian::native == std::endian::little, "file formats assume a little-endian host");

std::uint32_t crc32(std::string_view bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  const auto* data = reinterpret_cast<const Bytef*>(bytes.data());
  std::size_t left = bytes.size();
  while (left > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(left, 1u << 30));
    crc = ::crc32(crc, data, chunk);
    data += chunk;
    left -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

void write_container(const std::filesystem::path& path, std::string_view magic, const Container& c) {
  std::string out;
  out.reserve(8 + 8 + c.header.size() + c.body.size() + 4);
  out.append(magic);
  const std::uint64_t len = c.header.size();
  out.append(reinterpret_cast<const char*>(&len), sizeof len);
  out.append(c.header);
  out.append(c.body);
  const std::uint32_t crc = crc32(out);
  out.append(reinterpret_cast<const char*>(&crc), sizeof crc);

  // Write to a sibling temp file first so an interrupted write never leaves a
  // file that looks complete.
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    os.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!os) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Container read_container(const std::filesystem::path& path, std::string_view magic) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  const std::string data = std::move(ss).str();
  const std::string name = path.string();
  if (data.size() < magic.size() + 8 + 4) throw FormatError(name + ": truncated file");
  if (std::string_view(data).substr(0, magic.size()) != magic) throw FormatError(name + ": bad magic number");
  std::uint32_t stored = 0;
  std::memcpy(&stored, data.data() + data.size() - 4, 4);
  if (crc32(std::string_view(data).substr(0, data.size() - 4)) != stored) {
    throw FormatError(name + ": checksum mismatch");
  }
  std::uint64_t len = 0;
  std::memcpy(&len, data.data() + magic.size(), 8);
  const std::size_t start = magic.size() + 8;
  if (len > data.size() - start - 4) throw FormatError(name + ": header length exceeds file size");
  Container c;
  c.header = data.substr(start, len);
  c.body = data.substr(start + len, data.size() - start - len - 4);
  return c;
}

void append_doubles(std::string& body, std::span<const double> values) {
  body.append(reinterpret_cast<const char*>(values.data()), values.size_bytes());
}

void BodyReader::read_doubles(std::span<double> out) {
  if (body_.size() - pos_ < out.size_bytes()) throw FormatError("truncated body");
  std::memcpy(out.data(), body_.data() + pos_, out.size_bytes());
  pos_ += out.size_bytes();
}

}  // namespace mgn
