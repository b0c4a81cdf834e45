#pragma once

// 8-bit raster files and small file helpers. PNG (grayscale or RGB, 8 bits
// per channel) and binary PGM/PPM are supported; the format follows the file
// extension.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace maskfuse {

struct Image8 {
  std::int32_t width = 0;
  std::int32_t height = 0;
  int channels = 1;  // 1 = gray, 3 = RGB
  std::vector<std::uint8_t> pixels;

  bool operator==(const Image8&) const = default;
};

enum class RasterFormat { kPng, kPnm };

// From the extension: .png, .pgm/.ppm. Throws kInvalidArgument otherwise.
RasterFormat raster_format_for(const std::filesystem::path& path);

std::string encode_png(const Image8& image);
std::string encode_pnm(const Image8& image);
// Rejects anything that is not 8-bit with exactly `channels` channels.
Image8 decode_png(std::string_view bytes, int channels,
                  const std::string& source = {});
Image8 decode_pnm(std::string_view bytes, int channels,
                  const std::string& source = {});

Image8 read_image(const std::filesystem::path& path, int channels);
void write_image(const Image8& image, const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it over `path`, creating
// parent directories as needed.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view bytes);

}  // namespace maskfuse
