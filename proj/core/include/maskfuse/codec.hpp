#pragma once

// On-disk formats.
//
// Detections: JSON Lines, one object per line
//   {"image_id":"img1","category":"ship","bbox":[2,2,7,5],"score":1.0}
//   "category" may be a registry name or a numeric class id.
//
// Binary masks, by extension:
//   .png/.pgm  8-bit single channel, 0 = background, 255 = foreground
//   .json      {"size":[h,w],"runs":[...]} with canonical row-major runs
//
// Semantic maps: .png/.pgm 8-bit single channel holding class ids.
//
// Reports: CSV (row_label, one IoU column per class, mIoU, mF1, extras) with
// percentages at 2 decimals, or JSON mirroring MetricsReport.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "maskfuse/core.hpp"
#include "maskfuse/image_io.hpp"
#include "maskfuse/metrics.hpp"

namespace maskfuse {

// ---- detections -----------------------------------------------------------

Detection parse_detection_line(std::string_view line,
                               const ClassRegistry& registry,
                               const std::string& source = {},
                               std::size_t line_no = 0);
std::string format_detection_line(const Detection& det,
                                  const ClassRegistry& registry);

std::vector<Detection> parse_detections(std::string_view text,
                                        const ClassRegistry& registry,
                                        const std::string& source = {});
std::vector<Detection> read_detections(const std::filesystem::path& path,
                                       const ClassRegistry& registry);
void write_detections(std::span<const Detection> dets,
                      const std::filesystem::path& path,
                      const ClassRegistry& registry);

// ---- masks ----------------------------------------------------------------

BinaryMask parse_rle_json(std::string_view text, const std::string& source = {});
std::string format_rle_json(const BinaryMask& mask);

// Rejects pixel values other than 0 and 255.
BinaryMask mask_from_image(const Image8& image, const std::string& source = {});
Image8 mask_to_image(const BinaryMask& mask);

BinaryMask read_mask(const std::filesystem::path& path);
void write_mask(const BinaryMask& mask, const std::filesystem::path& path);

// ---- semantic maps ----------------------------------------------------------

SemanticMap read_semantic(const std::filesystem::path& path,
                          const ClassRegistry& registry);
void write_semantic(const SemanticMap& map, const std::filesystem::path& path);

using Rgb = std::array<std::uint8_t, 3>;

// Display colors indexed by class id.
struct Palette {
  std::vector<Rgb> colors;
};

// JSON object mapping class names to [r,g,b]; every registry class needed.
Palette parse_palette(std::string_view text, const ClassRegistry& registry,
                      const std::string& source = {});
Palette read_palette(const std::filesystem::path& path,
                     const ClassRegistry& registry);
// Evenly spread hues, background black.
Palette default_palette(const ClassRegistry& registry);
// .png or .ppm, 3 channels.
void write_colorized(const SemanticMap& map, const Palette& palette,
                     const std::filesystem::path& path);

// ---- reports --------------------------------------------------------------

enum class ReportFormat { kCsv, kJson };

ReportFormat parse_report_format(std::string_view text);
std::string_view extension(ReportFormat format);

struct ReportRow {
  std::string label;
  MetricsReport metrics;
  // Extra columns, e.g. surviving detection count or equivalence class.
  std::vector<std::pair<std::string, std::string>> extra;
  // Row-major cells, empty when not recorded.
  std::vector<std::uint64_t> confusion;

  bool operator==(const ReportRow&) const = default;
};

struct ReportTable {
  std::vector<std::string> class_names;
  std::vector<ReportRow> rows;
  std::map<std::string, std::string> metadata;
  std::vector<std::string> skipped_images;

  bool operator==(const ReportTable&) const = default;
};

// "96.05"; undefined values render as "n/a".
std::string format_percent(std::optional<double> fraction);

std::string format_report_csv(const ReportTable& table);
std::string format_report_json(const ReportTable& table);
ReportTable parse_report_json(std::string_view text,
                              const std::string& source = {});
void write_report(const ReportTable& table, const std::filesystem::path& path,
                  ReportFormat format);

}  // namespace maskfuse
