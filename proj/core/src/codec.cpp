#include "maskfuse/codec.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "json.hpp"

#include "maskfuse/error.hpp"

namespace maskfuse {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename F>
auto with_source(const std::string& source, std::size_t line, F&& f) {
  try {
    return f();
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(source, line, e.what());
  } catch (const json::exception& e) {
    throw ParseError(source, line, e.what());
  }
}

[[noreturn]] void bad(const std::string& what) {
  fail(ErrorKind::kParse, what);
}

void expect_keys(const json& obj, std::initializer_list<std::string_view> keys) {
  if (!obj.is_object()) bad("expected a JSON object");
  for (const auto& [k, _] : obj.items()) {
    bool known = false;
    for (const auto key : keys) known = known || k == key;
    if (!known) bad("unexpected key '" + k + "'");
  }
  for (const auto key : keys) {
    if (!obj.contains(key)) bad("missing key '" + std::string(key) + "'");
  }
}

std::int64_t as_int(const json& v, std::int64_t lo, std::int64_t hi,
                    const char* what) {
  if (!v.is_number_integer()) bad(std::string(what) + " must be an integer");
  const bool is_unsigned = v.is_number_unsigned();
  if (is_unsigned && v.get<std::uint64_t>() > static_cast<std::uint64_t>(hi)) {
    bad(std::string(what) + " out of range");
  }
  const auto x = is_unsigned ? static_cast<std::int64_t>(v.get<std::uint64_t>())
                             : v.get<std::int64_t>();
  if (x < lo || x > hi) bad(std::string(what) + " out of range");
  return x;
}

std::optional<double> opt_double(const json& v) {
  if (v.is_null()) return std::nullopt;
  if (!v.is_number()) bad("expected a number or null");
  return v.get<double>();
}

json opt_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

// ---------------------------------------------------------------------------
// detections

Detection parse_detection_line(std::string_view line,
                               const ClassRegistry& registry,
                               const std::string& source, std::size_t line_no) {
  return with_source(source, line_no, [&] {
    const json obj = json::parse(line);
    expect_keys(obj, {"image_id", "category", "bbox", "score"});
    Detection d;
    if (!obj["image_id"].is_string() || obj["image_id"].get<std::string>().empty()) {
      bad("image_id must be a non-empty string");
    }
    d.image_id = obj["image_id"].get<std::string>();
    const json& cat = obj["category"];
    if (cat.is_string()) {
      const auto found = registry.find(cat.get<std::string>());
      if (!found) bad("unknown category '" + cat.get<std::string>() + "'");
      d.category = *found;
    } else {
      d.category = static_cast<ClassId>(
          as_int(cat, 0, static_cast<std::int64_t>(registry.size()) - 1, "category"));
    }
    const json& box = obj["bbox"];
    if (!box.is_array() || box.size() != 4) bad("bbox must be [x0,y0,x1,y1]");
    constexpr auto kMax = std::numeric_limits<std::int32_t>::max();
    d.bbox.x0 = static_cast<std::int32_t>(as_int(box[0], 0, kMax, "bbox"));
    d.bbox.y0 = static_cast<std::int32_t>(as_int(box[1], 0, kMax, "bbox"));
    d.bbox.x1 = static_cast<std::int32_t>(as_int(box[2], 0, kMax, "bbox"));
    d.bbox.y1 = static_cast<std::int32_t>(as_int(box[3], 0, kMax, "bbox"));
    if (!obj["score"].is_number()) bad("score must be a number");
    d.score = obj["score"].get<double>();
    validate(d, registry);
    return d;
  });
}

std::string format_detection_line(const Detection& det,
                                  const ClassRegistry& registry) {
  json obj = json::object();
  obj["image_id"] = det.image_id;
  obj["category"] = registry.name(det.category);
  obj["bbox"] = {det.bbox.x0, det.bbox.y0, det.bbox.x1, det.bbox.y1};
  obj["score"] = det.score;
  // nlohmann orders keys alphabetically; keep the documented field order.
  return "{\"image_id\":" + obj["image_id"].dump() +
         ",\"category\":" + obj["category"].dump() +
         ",\"bbox\":" + obj["bbox"].dump() + ",\"score\":" + obj["score"].dump() +
         "}";
}

std::vector<Detection> parse_detections(std::string_view text,
                                        const ClassRegistry& registry,
                                        const std::string& source) {
  std::vector<Detection> dets;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    const auto end = nl == std::string_view::npos ? text.size() : nl;
    ++line_no;
    auto line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") != std::string_view::npos) {
      dets.push_back(parse_detection_line(line, registry, source, line_no));
    }
    pos = end + 1;
  }
  return dets;
}

std::vector<Detection> read_detections(const fs::path& path,
                                       const ClassRegistry& registry) {
  return parse_detections(read_file(path), registry, path.string());
}

void write_detections(std::span<const Detection> dets, const fs::path& path,
                      const ClassRegistry& registry) {
  std::string out;
  for (const auto& d : dets) {
    validate(d, registry);
    out += format_detection_line(d, registry);
    out += '\n';
  }
  write_file_atomic(path, out);
}

// ---------------------------------------------------------------------------
// masks

BinaryMask parse_rle_json(std::string_view text, const std::string& source) {
  return with_source(source, 0, [&] {
    const json obj = json::parse(text);
    expect_keys(obj, {"size", "runs"});
    const json& size = obj["size"];
    if (!size.is_array() || size.size() != 2) bad("size must be [h,w]");
    const auto h = as_int(size[0], 1, 1 << 16, "size");
    const auto w = as_int(size[1], 1, 1 << 16, "size");
    const json& runs_json = obj["runs"];
    if (!runs_json.is_array()) bad("runs must be an array");
    std::vector<std::uint32_t> runs;
    runs.reserve(runs_json.size());
    for (const auto& r : runs_json) {
      runs.push_back(static_cast<std::uint32_t>(as_int(r, 0, UINT32_MAX, "run")));
    }
    return BinaryMask::from_runs(
        {static_cast<std::int32_t>(w), static_cast<std::int32_t>(h)},
        std::move(runs));
  });
}

std::string format_rle_json(const BinaryMask& mask) {
  return "{\"size\":" + json({mask.height(), mask.width()}).dump() +
         ",\"runs\":" + json(mask.runs()).dump() + "}\n";
}

BinaryMask mask_from_image(const Image8& image, const std::string& source) {
  if (image.channels != 1) throw ParseError(source, 0, "mask image must be single-channel");
  std::vector<std::uint8_t> bits(image.pixels.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    const auto v = image.pixels[i];
    if (v != 0 && v != 255) {
      throw ParseError(source, 0,
                       "mask pixel " + std::to_string(i) + " has value " +
                           std::to_string(v) + " (expected 0 or 255)");
    }
    bits[i] = v != 0;
  }
  return BinaryMask::encode(bits, {image.width, image.height});
}

Image8 mask_to_image(const BinaryMask& mask) {
  Image8 img{mask.width(), mask.height(), 1, mask.decode()};
  for (auto& p : img.pixels) p = p ? 255 : 0;
  return img;
}

BinaryMask read_mask(const fs::path& path) {
  if (path.extension() == ".json") {
    return parse_rle_json(read_file(path), path.string());
  }
  return mask_from_image(read_image(path, 1), path.string());
}

void write_mask(const BinaryMask& mask, const fs::path& path) {
  if (path.extension() == ".json") {
    write_file_atomic(path, format_rle_json(mask));
    return;
  }
  write_image(mask_to_image(mask), path);
}

// ---------------------------------------------------------------------------
// semantic maps

SemanticMap read_semantic(const fs::path& path, const ClassRegistry& registry) {
  Image8 img = read_image(path, 1);
  SemanticMap map({img.width, img.height}, std::move(img.pixels));
  with_source(path.string(), 0, [&] {
    map.validate(registry);
    return 0;
  });
  return map;
}

void write_semantic(const SemanticMap& map, const fs::path& path) {
  const auto labels = map.labels();
  write_image(Image8{map.width(), map.height(), 1, {labels.begin(), labels.end()}},
              path);
}

Palette parse_palette(std::string_view text, const ClassRegistry& registry,
                      const std::string& source) {
  return with_source(source, 0, [&] {
    const json obj = json::parse(text);
    if (!obj.is_object()) bad("palette must be an object of name -> [r,g,b]");
    Palette p;
    p.colors.resize(registry.size());
    for (std::size_t c = 0; c < registry.size(); ++c) {
      const auto& name = registry.name(static_cast<ClassId>(c));
      if (!obj.contains(name)) bad("palette has no color for '" + name + "'");
      const json& rgb = obj[name];
      if (!rgb.is_array() || rgb.size() != 3) bad("color must be [r,g,b]");
      for (int k = 0; k < 3; ++k) {
        p.colors[c][k] = static_cast<std::uint8_t>(as_int(rgb[k], 0, 255, "color"));
      }
    }
    return p;
  });
}

Palette read_palette(const fs::path& path, const ClassRegistry& registry) {
  return parse_palette(read_file(path), registry, path.string());
}

Palette default_palette(const ClassRegistry& registry) {
  static constexpr Rgb kBase[] = {{0, 0, 0},     {0, 255, 255}, {255, 0, 0},
                                  {153, 76, 0},  {0, 153, 0},   {255, 255, 0},
                                  {255, 0, 255}, {0, 0, 255}};
  Palette p;
  for (std::size_t c = 0; c < registry.size(); ++c) {
    if (c < std::size(kBase)) {
      p.colors.push_back(kBase[c]);
    } else {
      const auto v = static_cast<std::uint8_t>((c * 97) % 256);
      p.colors.push_back({v, static_cast<std::uint8_t>(255 - v),
                          static_cast<std::uint8_t>((c * 53) % 256)});
    }
  }
  return p;
}

void write_colorized(const SemanticMap& map, const Palette& palette,
                     const fs::path& path) {
  Image8 img{map.width(), map.height(), 3, {}};
  img.pixels.reserve(map.canvas().pixels() * 3);
  for (const ClassId id : map.labels()) {
    if (id >= palette.colors.size()) {
      fail(ErrorKind::kInvalidArgument, "palette has no color for id " + std::to_string(id));
    }
    const auto& c = palette.colors[id];
    img.pixels.insert(img.pixels.end(), c.begin(), c.end());
  }
  write_image(img, path);
}

// ---------------------------------------------------------------------------
// reports

ReportFormat parse_report_format(std::string_view text) {
  if (text == "csv") return ReportFormat::kCsv;
  if (text == "json") return ReportFormat::kJson;
  fail(ErrorKind::kInvalidArgument, "unknown report format '" + std::string(text) + "'");
}

std::string_view extension(ReportFormat format) {
  return format == ReportFormat::kCsv ? ".csv" : ".json";
}

std::string format_percent(std::optional<double> fraction) {
  if (!fraction) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *fraction * 100.0);
  return buf;
}

std::string format_report_csv(const ReportTable& table) {
  std::vector<std::string> extra_keys;
  for (const auto& row : table.rows) {
    for (const auto& [k, _] : row.extra) {
      if (std::find(extra_keys.begin(), extra_keys.end(), k) == extra_keys.end()) {
        extra_keys.push_back(k);
      }
    }
  }
  std::string out = "row_label";
  for (const auto& n : table.class_names) out += "," + csv_field(n);
  out += ",mIoU,mF1";
  for (const auto& k : extra_keys) out += "," + csv_field(k);
  out += '\n';
  for (const auto& row : table.rows) {
    out += csv_field(row.label);
    for (std::size_t c = 0; c < table.class_names.size(); ++c) {
      out += ",";
      out += format_percent(c < row.metrics.per_class_iou.size()
                                ? row.metrics.per_class_iou[c]
                                : std::nullopt);
    }
    out += "," + format_percent(row.metrics.miou) + "," +
           format_percent(row.metrics.mf1);
    for (const auto& k : extra_keys) {
      out += ",";
      for (const auto& [ek, ev] : row.extra) {
        if (ek == k) {
          out += csv_field(ev);
          break;
        }
      }
    }
    out += '\n';
  }
  return out;
}

std::string format_report_json(const ReportTable& table) {
  json doc = json::object();
  doc["classes"] = table.class_names;
  doc["metadata"] = table.metadata;
  doc["skipped_images"] = table.skipped_images;
  json rows = json::array();
  for (const auto& row : table.rows) {
    const auto& m = row.metrics;
    json r = json::object();
    r["label"] = row.label;
    json iou = json::array(), f1 = json::array();
    for (const auto& v : m.per_class_iou) iou.push_back(opt_json(v));
    for (const auto& v : m.per_class_f1) f1.push_back(opt_json(v));
    r["per_class_iou"] = std::move(iou);
    r["per_class_f1"] = std::move(f1);
    r["miou"] = m.miou;
    r["mf1"] = m.mf1;
    r["miou_absent_as_zero"] = m.miou_absent_as_zero;
    r["zero_union_policy"] = m.zero_union_policy;
    json evaluated = json::array();
    for (const auto c : m.evaluated_classes) evaluated.push_back(static_cast<int>(c));
    r["evaluated_classes"] = std::move(evaluated);
    json extra = json::array();
    for (const auto& [k, v] : row.extra) extra.push_back({k, v});
    r["extra"] = std::move(extra);
    r["confusion"] = row.confusion;
    rows.push_back(std::move(r));
  }
  doc["rows"] = std::move(rows);
  return doc.dump(2) + "\n";
}

ReportTable parse_report_json(std::string_view text, const std::string& source) {
  return with_source(source, 0, [&] {
    const json doc = json::parse(text);
    expect_keys(doc, {"classes", "metadata", "skipped_images", "rows"});
    ReportTable t;
    t.class_names = doc["classes"].get<std::vector<std::string>>();
    t.metadata = doc["metadata"].get<std::map<std::string, std::string>>();
    t.skipped_images = doc["skipped_images"].get<std::vector<std::string>>();
    if (!doc["rows"].is_array()) bad("rows must be an array");
    for (const auto& r : doc["rows"]) {
      expect_keys(r, {"label", "per_class_iou", "per_class_f1", "miou", "mf1",
                      "miou_absent_as_zero", "zero_union_policy",
                      "evaluated_classes", "extra", "confusion"});
      ReportRow row;
      row.label = r["label"].get<std::string>();
      auto& m = row.metrics;
      if (!r["per_class_iou"].is_array() || !r["per_class_f1"].is_array()) {
        bad("per-class values must be arrays");
      }
      for (const auto& v : r["per_class_iou"]) m.per_class_iou.push_back(opt_double(v));
      for (const auto& v : r["per_class_f1"]) m.per_class_f1.push_back(opt_double(v));
      m.miou = r["miou"].get<double>();
      m.mf1 = r["mf1"].get<double>();
      m.miou_absent_as_zero = r["miou_absent_as_zero"].get<double>();
      m.zero_union_policy = r["zero_union_policy"].get<std::string>();
      for (const auto& c : r["evaluated_classes"]) {
        m.evaluated_classes.push_back(static_cast<ClassId>(as_int(c, 0, 255, "class id")));
      }
      if (!r["extra"].is_array()) bad("extra must be an array");
      for (const auto& kv : r["extra"]) {
        if (!kv.is_array() || kv.size() != 2) bad("extra entries must be [key, value]");
        row.extra.emplace_back(kv[0].get<std::string>(), kv[1].get<std::string>());
      }
      row.confusion = r["confusion"].get<std::vector<std::uint64_t>>();
      t.rows.push_back(std::move(row));
    }
    return t;
  });
}

void write_report(const ReportTable& table, const fs::path& path,
                  ReportFormat format) {
  write_file_atomic(path, format == ReportFormat::kCsv ? format_report_csv(table)
                                                       : format_report_json(table));
}

}  // namespace maskfuse
