#include "maskfuse/manifest.hpp"

#include <set>

#include "json.hpp"

#include "maskfuse/error.hpp"
#include "maskfuse/image_io.hpp"

namespace maskfuse {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_relative(const std::string& p, const char* what) {
  if (p.empty()) return;
  const fs::path path(p);
  if (path.is_absolute()) {
    fail(ErrorKind::kInvalidArgument,
         std::string(what) + " path must be relative: " + p);
  }
  for (const auto& part : path) {
    if (part == "..") {
      fail(ErrorKind::kInvalidArgument,
           std::string(what) + " path must stay inside the dataset: " + p);
    }
  }
}

}  // namespace

fs::path DatasetManifest::resolve(std::string_view relative) const {
  return root / fs::path(relative);
}

fs::path DatasetManifest::mask_path(std::string_view image_id,
                                    std::size_t index) const {
  return resolve(mask_dir) / mask_file_name(image_id, index, mask_ext);
}

std::string mask_file_name(std::string_view image_id, std::size_t index,
                           std::string_view ext) {
  return std::string(image_id) + "__" + std::to_string(index) + "." +
         std::string(ext);
}

bool is_safe_image_id(std::string_view id) {
  if (id.empty() || id == "." || id == "..") return false;
  for (const char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

void DatasetManifest::validate() const {
  if (mask_ext != "png" && mask_ext != "pgm" && mask_ext != "json") {
    fail(ErrorKind::kInvalidArgument,
         "mask_ext must be png, pgm or json, got '" + mask_ext + "'");
  }
  check_relative(detections, "detections");
  check_relative(mask_dir, "mask_dir");
  std::set<std::string> ids;
  std::set<std::string> gts;
  for (const auto& img : images) {
    if (!is_safe_image_id(img.ref.image_id)) {
      fail(ErrorKind::kInvalidArgument,
           "image id '" + img.ref.image_id + "' is not file-name safe");
    }
    if (!ids.insert(img.ref.image_id).second) {
      fail(ErrorKind::kInvalidArgument,
           "duplicate image id '" + img.ref.image_id + "'");
    }
    if (img.ref.width < 1 || img.ref.height < 1) {
      fail(ErrorKind::kInvalidArgument,
           "image '" + img.ref.image_id + "' has empty dimensions");
    }
    check_relative(img.gt, "gt");
    if (!img.gt.empty() && !gts.insert(img.gt).second) {
      fail(ErrorKind::kInvalidArgument, "gt path '" + img.gt + "' is used twice");
    }
  }
}

DatasetManifest parse_manifest(std::string_view text, const fs::path& root,
                               const std::string& source) {
  try {
    const json doc = json::parse(text);
    if (!doc.is_object()) throw ParseError(source, 0, "manifest must be an object");
    if (doc.value("format", std::string{}) != kManifestFormat) {
      throw ParseError(source, 0, "unsupported manifest format, expected \"" +
                                      std::string(kManifestFormat) + "\"");
    }
    DatasetManifest m;
    m.root = root;
    const auto classes = doc.at("classes").get<std::vector<std::string>>();
    m.registry = ClassRegistry::make(classes, doc.at("background").get<std::string>());
    m.detections = doc.value("detections", m.detections);
    m.mask_dir = doc.value("mask_dir", m.mask_dir);
    m.mask_ext = doc.value("mask_ext", m.mask_ext);
    for (const auto& img : doc.at("images")) {
      ManifestImage mi;
      mi.ref.image_id = img.at("image_id").get<std::string>();
      mi.ref.width = img.at("width").get<std::int32_t>();
      mi.ref.height = img.at("height").get<std::int32_t>();
      mi.gt = img.value("gt", std::string{});
      m.images.push_back(std::move(mi));
    }
    m.validate();
    return m;
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(source, 0, e.what());
  } catch (const json::exception& e) {
    throw ParseError(source, 0, e.what());
  }
}

std::string format_manifest(const DatasetManifest& m) {
  m.validate();
  json doc = json::object();
  doc["format"] = kManifestFormat;
  doc["classes"] = m.registry.names();
  doc["background"] = m.registry.name(kBackgroundId);
  doc["detections"] = m.detections;
  doc["mask_dir"] = m.mask_dir;
  doc["mask_ext"] = m.mask_ext;
  json images = json::array();
  for (const auto& img : m.images) {
    json j = json::object();
    j["image_id"] = img.ref.image_id;
    j["width"] = img.ref.width;
    j["height"] = img.ref.height;
    if (!img.gt.empty()) j["gt"] = img.gt;
    images.push_back(std::move(j));
  }
  doc["images"] = std::move(images);
  return doc.dump(2) + "\n";
}

DatasetManifest read_manifest(const fs::path& path) {
  return parse_manifest(read_file(path), path.parent_path(), path.string());
}

void write_manifest(const DatasetManifest& manifest, const fs::path& path) {
  write_file_atomic(path, format_manifest(manifest));
}

}  // namespace maskfuse
