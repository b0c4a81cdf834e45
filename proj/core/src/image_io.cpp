#include "maskfuse/image_io.hpp"

#include <png.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>

#include "maskfuse/error.hpp"

namespace maskfuse {

namespace fs = std::filesystem;

namespace {

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};

std::uint32_t be32(const unsigned char* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
         (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}

void check_image(const Image8& image) {
  if (image.width < 1 || image.height < 1) {
    fail(ErrorKind::kInvalidArgument, "image must be at least 1x1");
  }
  if (image.channels != 1 && image.channels != 3) {
    fail(ErrorKind::kInvalidArgument, "only 1- and 3-channel images are supported");
  }
  const auto expected = static_cast<std::size_t>(image.width) *
                        static_cast<std::size_t>(image.height) *
                        static_cast<std::size_t>(image.channels);
  if (image.pixels.size() != expected) {
    fail(ErrorKind::kDimensionMismatch, "pixel buffer does not match image size");
  }
}

// Minimal PNM header tokenizer: whitespace separated, '#' comments.
class PnmHeader {
 public:
  PnmHeader(std::string_view bytes, const std::string& source)
      : bytes_(bytes), source_(source) {}

  std::string token() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() &&
           !std::isspace(static_cast<unsigned char>(bytes_[pos_])) &&
           bytes_[pos_] != '#') {
      ++pos_;
    }
    if (start == pos_) throw ParseError(source_, 0, "truncated PNM header");
    return std::string(bytes_.substr(start, pos_ - start));
  }

  long number() {
    const std::string t = token();
    if (t.size() > 9 || !std::all_of(t.begin(), t.end(), [](char c) {
          return std::isdigit(static_cast<unsigned char>(c));
        })) {
      throw ParseError(source_, 0, "bad PNM header field '" + t + "'");
    }
    return std::stol(t);
  }

  // Exactly one whitespace byte separates the header from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size() ||
        !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw ParseError(source_, 0, "truncated PNM header");
    }
    return pos_ + 1;
  }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view bytes_;
  const std::string& source_;
  std::size_t pos_ = 0;
};

}  // namespace

RasterFormat raster_format_for(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") return RasterFormat::kPng;
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return RasterFormat::kPnm;
  fail(ErrorKind::kInvalidArgument,
       "unsupported raster extension '" + ext + "' for " + path.string());
}

std::string encode_png(const Image8& image) {
  check_image(image);
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = image.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, image.pixels.data(), 0,
                                 nullptr)) {
    fail(ErrorKind::kIo, std::string("png encode failed: ") + img.message);
  }
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, image.pixels.data(),
                                 0, nullptr)) {
    fail(ErrorKind::kIo, std::string("png encode failed: ") + img.message);
  }
  out.resize(size);
  return out;
}

Image8 decode_png(std::string_view bytes, int channels,
                  const std::string& source) {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 33 || std::memcmp(p, kPngSignature, 8) != 0 ||
      std::memcmp(p + 12, "IHDR", 4) != 0) {
    throw ParseError(source, 0, "not a PNG file");
  }
  const int bit_depth = p[24];
  const int color_type = p[25];
  const int expected_type = channels == 1 ? 0 : 2;
  if (bit_depth != 8) {
    throw ParseError(source, 0,
                     "expected 8-bit PNG, got bit depth " + std::to_string(bit_depth));
  }
  if (color_type != expected_type) {
    throw ParseError(source, 0,
                     "expected " + std::to_string(channels) +
                         "-channel PNG, got color type " + std::to_string(color_type));
  }
  const std::uint32_t w = be32(p + 16);
  const std::uint32_t h = be32(p + 20);
  if (w == 0 || h == 0 || w > (1u << 16) || h > (1u << 16)) {
    throw ParseError(source, 0, "unsupported PNG dimensions");
  }

  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    throw ParseError(source, 0, std::string("png decode failed: ") + img.message);
  }
  img.format = channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  Image8 out;
  out.width = static_cast<std::int32_t>(img.width);
  out.height = static_cast<std::int32_t>(img.height);
  out.channels = channels;
  out.pixels.resize(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw ParseError(source, 0, "png decode failed: " + msg);
  }
  return out;
}

std::string encode_pnm(const Image8& image) {
  check_image(image);
  std::string out = (image.channels == 1 ? "P5\n" : "P6\n") +
                    std::to_string(image.width) + " " +
                    std::to_string(image.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(image.pixels.data()),
             image.pixels.size());
  return out;
}

Image8 decode_pnm(std::string_view bytes, int channels,
                  const std::string& source) {
  PnmHeader header(bytes, source);
  const std::string magic = header.token();
  const std::string expected = channels == 1 ? "P5" : "P6";
  if (magic != expected) {
    throw ParseError(source, 0, "expected " + expected + " image, got '" + magic + "'");
  }
  const long w = header.number();
  const long h = header.number();
  const long maxval = header.number();
  if (w < 1 || h < 1 || w > (1 << 16) || h > (1 << 16)) {
    throw ParseError(source, 0, "unsupported PNM dimensions");
  }
  if (maxval != 255) {
    throw ParseError(source, 0, "expected 8-bit PNM (maxval 255), got " +
                                    std::to_string(maxval));
  }
  const std::size_t offset = header.raster_offset();
  const std::size_t size = static_cast<std::size_t>(w) *
                           static_cast<std::size_t>(h) *
                           static_cast<std::size_t>(channels);
  if (bytes.size() - offset != size) {
    throw ParseError(source, 0, "PNM raster has " +
                                    std::to_string(bytes.size() - offset) +
                                    " bytes, expected " + std::to_string(size));
  }
  Image8 out;
  out.width = static_cast<std::int32_t>(w);
  out.height = static_cast<std::int32_t>(h);
  out.channels = channels;
  const auto* p = reinterpret_cast<const std::uint8_t*>(bytes.data()) + offset;
  out.pixels.assign(p, p + size);
  return out;
}

Image8 read_image(const fs::path& path, int channels) {
  const auto format = raster_format_for(path);
  const std::string bytes = read_file(path);
  return format == RasterFormat::kPng
             ? decode_png(bytes, channels, path.string())
             : decode_pnm(bytes, channels, path.string());
}

void write_image(const Image8& image, const fs::path& path) {
  const auto format = raster_format_for(path);
  write_file_atomic(path, format == RasterFormat::kPng ? encode_png(image)
                                                       : encode_pnm(image));
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kNotFound, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) fail(ErrorKind::kIo, "read failed for " + path.string());
  return std::move(ss).str();
}

void write_file_atomic(const fs::path& path, std::string_view bytes) {
  static std::atomic<std::uint64_t> counter{0};
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." +
         std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::kIo, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::kIo, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    fail(ErrorKind::kIo, "cannot rename into " + path.string() + ": " + ec.message());
  }
}

}  // namespace maskfuse
