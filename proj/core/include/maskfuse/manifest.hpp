#pragma once

// Dataset manifest: one JSON document, all paths relative to its directory.
//
//   {
//     "format": "maskfuse-manifest/1",
//     "classes": ["sea_surface", "oil_spill", "look_alike", "ship", "land"],
//     "background": "sea_surface",
//     "detections": "detections.jsonl",
//     "mask_dir": "masks",
//     "mask_ext": "png",
//     "images": [
//       {"image_id": "img0", "width": 64, "height": 64, "gt": "gt/img0.png"}
//     ]
//   }
//
// The mask for the k-th detection of an image (in file order) lives at
// <mask_dir>/<image_id>__<k>.<mask_ext>. "gt" may be omitted or empty.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "maskfuse/core.hpp"

namespace maskfuse {

inline constexpr std::string_view kManifestFormat = "maskfuse-manifest/1";

struct ManifestImage {
  ImageRef ref;
  std::string gt;  // relative path, empty when absent

  bool operator==(const ManifestImage&) const = default;
};

struct DatasetManifest {
  ClassRegistry registry = ClassRegistry::m4d();
  std::vector<ManifestImage> images;
  std::string detections = "detections.jsonl";
  std::string mask_dir = "masks";
  std::string mask_ext = "png";
  // Directory the relative paths resolve against; not serialized.
  std::filesystem::path root;

  std::filesystem::path resolve(std::string_view relative) const;
  std::filesystem::path detections_path() const { return resolve(detections); }
  std::filesystem::path mask_path(std::string_view image_id,
                                  std::size_t index) const;

  // Throws on duplicate image ids or gt paths, unsafe ids, absolute paths or
  // empty images.
  void validate() const;

  bool operator==(const DatasetManifest& o) const {
    return registry == o.registry && images == o.images &&
           detections == o.detections && mask_dir == o.mask_dir &&
           mask_ext == o.mask_ext;
  }
};

// "<image_id>__<index>.<ext>"
std::string mask_file_name(std::string_view image_id, std::size_t index,
                           std::string_view ext);

// Image ids are used in file names: [A-Za-z0-9._-]+, not "." or "..".
bool is_safe_image_id(std::string_view id);

DatasetManifest parse_manifest(std::string_view text,
                               const std::filesystem::path& root,
                               const std::string& source = {});
std::string format_manifest(const DatasetManifest& manifest);

DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest,
                    const std::filesystem::path& path);

}  // namespace maskfuse
