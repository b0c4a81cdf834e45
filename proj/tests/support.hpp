#pragma once

// Test-only reference implementations. These are deliberately naive: they
// work on dense per-pixel sets and never call the library routine they are
// used to check.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

#include "maskfuse/core.hpp"
#include "maskfuse/fusion.hpp"

namespace maskfuse::testing {

inline BinaryMask mask_from_pixels(Canvas canvas,
                                   const std::vector<std::pair<int, int>>& xy) {
  std::vector<std::uint8_t> bits(canvas.pixels(), 0);
  for (const auto& [x, y] : xy) bits[static_cast<std::size_t>(y) * canvas.width + x] = 1;
  return BinaryMask::encode(bits, canvas);
}

// Per pixel: the category with the best rank among masks that cover it.
inline SemanticMap priority_oracle(const std::vector<LabeledMask>& masks,
                                   const FusionOrder& order, Canvas canvas) {
  std::vector<std::vector<std::uint8_t>> dense;
  for (const auto& m : masks) dense.push_back(m.mask.decode());
  SemanticMap out(canvas);
  for (std::int32_t y = 0; y < canvas.height; ++y) {
    for (std::int32_t x = 0; x < canvas.width; ++x) {
      const auto p = static_cast<std::size_t>(y) * canvas.width + x;
      ClassId best = kBackgroundId;
      std::size_t best_rank = 1000;
      for (std::size_t k = 0; k < masks.size(); ++k) {
        if (dense[k][p] && order.rank(masks[k].category) < best_rank) {
          best_rank = order.rank(masks[k].category);
          best = masks[k].category;
        }
      }
      out.set(x, y, best);
    }
  }
  return out;
}

// |{p : gt=c and pred=c}| / |{p : gt=c or pred=c}| by explicit pixel sets.
inline std::optional<double> set_iou(const SemanticMap& pred, const SemanticMap& gt,
                                     ClassId c) {
  std::set<std::size_t> a;
  std::set<std::size_t> b;
  for (std::size_t i = 0; i < gt.labels().size(); ++i) {
    if (gt.labels()[i] == c) a.insert(i);
    if (pred.labels()[i] == c) b.insert(i);
  }
  std::vector<std::size_t> inter;
  std::vector<std::size_t> uni;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(inter));
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(uni));
  if (uni.empty()) return std::nullopt;
  return static_cast<double>(inter.size()) / static_cast<double>(uni.size());
}

// A random set of labeled masks: rectangles with a sprinkle of loose pixels.
inline std::vector<LabeledMask> random_masks(std::mt19937_64& gen, Canvas canvas,
                                             int max_masks,
                                             const std::vector<ClassId>& classes) {
  std::uniform_int_distribution<int> count(0, max_masks);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(classes.size()) - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = count(gen);
  std::vector<LabeledMask> out;
  for (int k = 0; k < n; ++k) {
    std::vector<std::uint8_t> bits(canvas.pixels(), 0);
    std::uniform_int_distribution<int> xs(0, canvas.width - 1);
    std::uniform_int_distribution<int> ys(0, canvas.height - 1);
    int x0 = xs(gen), x1 = xs(gen), y0 = ys(gen), y1 = ys(gen);
    if (x0 > x1) std::swap(x0, x1);
    if (y0 > y1) std::swap(y0, y1);
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) bits[static_cast<std::size_t>(y) * canvas.width + x] = 1;
    }
    for (int s = 0; s < 5; ++s) {
      bits[static_cast<std::size_t>(ys(gen)) * canvas.width + xs(gen)] ^= 1;
    }
    out.push_back({BinaryMask::encode(bits, canvas), classes[pick(gen)], unit(gen),
                   static_cast<std::size_t>(k)});
  }
  return out;
}

inline SemanticMap random_map(std::mt19937_64& gen, Canvas canvas, int n_classes) {
  std::uniform_int_distribution<int> label(0, n_classes - 1);
  SemanticMap m(canvas);
  for (auto& v : m.labels()) v = static_cast<ClassId>(label(gen));
  return m;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("maskfuse_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace maskfuse::testing
