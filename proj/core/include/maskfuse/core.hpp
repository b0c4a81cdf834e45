#pragma once

// Value types shared by every maskfuse module. Everything here is immutable
// after construction and has no I/O.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace maskfuse {

using ClassId = std::uint8_t;
inline constexpr ClassId kBackgroundId = 0;

// Ordered class table. Ids are contiguous from 0 and id 0 is background.
class ClassRegistry {
 public:
  // Background gets id 0, the remaining names get 1..n in the given order.
  static ClassRegistry make(std::span<const std::string> names,
                            std::string_view background_name);

  // sea_surface, oil_spill, look_alike, ship, land.
  static ClassRegistry m4d();

  std::size_t size() const noexcept { return names_.size(); }
  bool contains(std::size_t id) const noexcept { return id < names_.size(); }
  bool is_foreground(std::size_t id) const noexcept {
    return id != kBackgroundId && contains(id);
  }

  const std::string& name(ClassId id) const;
  std::optional<ClassId> find(std::string_view name) const;
  ClassId id(std::string_view name) const;

  const std::vector<std::string>& names() const noexcept { return names_; }
  std::vector<ClassId> foreground_ids() const;

  bool operator==(const ClassRegistry&) const = default;

 private:
  explicit ClassRegistry(std::vector<std::string> names)
      : names_(std::move(names)) {}

  std::vector<std::string> names_;
};

struct Canvas {
  std::int32_t width = 0;
  std::int32_t height = 0;

  std::size_t pixels() const noexcept {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  bool operator==(const Canvas&) const = default;
};

struct ImageRef {
  std::string image_id;
  std::int32_t width = 0;
  std::int32_t height = 0;

  Canvas canvas() const noexcept { return {width, height}; }
  bool operator==(const ImageRef&) const = default;
};

// Half-open pixel box [x0, x1) x [y0, y1).
struct BoundingBox {
  std::int32_t x0 = 0;
  std::int32_t y0 = 0;
  std::int32_t x1 = 0;
  std::int32_t y1 = 0;

  std::int32_t width() const noexcept { return x1 - x0; }
  std::int32_t height() const noexcept { return y1 - y0; }
  std::int64_t area() const noexcept {
    return static_cast<std::int64_t>(width()) * height();
  }
  bool contains(std::int32_t x, std::int32_t y) const noexcept {
    return x >= x0 && x < x1 && y >= y0 && y < y1;
  }
  // Non-empty and inside a width x height image.
  bool valid_in(Canvas canvas) const noexcept {
    return 0 <= x0 && x0 < x1 && x1 <= canvas.width && 0 <= y0 && y0 < y1 &&
           y1 <= canvas.height;
  }
  bool operator==(const BoundingBox&) const = default;
};

struct Detection {
  std::string image_id;
  ClassId category = 0;
  BoundingBox bbox;
  double score = 0.0;

  bool operator==(const Detection&) const = default;
};

// Throws if the detection's category is background or unknown, or the score
// is outside [0, 1]. Box bounds are checked against `canvas` when given.
void validate(const Detection& det, const ClassRegistry& registry,
              std::optional<Canvas> canvas = std::nullopt);

// Run-length encoded binary mask. Runs alternate background/foreground in
// row-major order, starting with background. Stored runs are always
// canonical: only the leading run may be 0, so two masks are pixel-equal iff
// their runs are equal.
class BinaryMask {
 public:
  BinaryMask() = default;

  static BinaryMask empty(Canvas canvas);
  static BinaryMask full(Canvas canvas);

  // Strict: rejects runs that are not in canonical form.
  static BinaryMask from_runs(Canvas canvas, std::vector<std::uint32_t> runs);

  // Any nonzero byte is foreground. bits.size() must equal the pixel count.
  static BinaryMask encode(std::span<const std::uint8_t> bits, Canvas canvas);

  // One byte per pixel, 0 or 1.
  std::vector<std::uint8_t> decode() const;

  Canvas canvas() const noexcept { return canvas_; }
  std::int32_t width() const noexcept { return canvas_.width; }
  std::int32_t height() const noexcept { return canvas_.height; }
  const std::vector<std::uint32_t>& runs() const noexcept { return runs_; }

  std::uint64_t area() const noexcept;
  bool empty_foreground() const noexcept { return runs_.size() < 2; }

  // Calls f(begin, end) for every foreground run, as flat pixel offsets.
  template <typename F>
  void for_each_foreground_run(F&& f) const {
    std::size_t pos = 0;
    for (std::size_t i = 0; i < runs_.size(); ++i) {
      const std::size_t next = pos + runs_[i];
      if (i % 2 == 1) f(pos, next);
      pos = next;
    }
  }

  bool operator==(const BinaryMask&) const = default;

 private:
  Canvas canvas_{};
  std::vector<std::uint32_t> runs_;
};

// Merges zero-length interior runs and drops a trailing zero run. Does not
// check the run sum.
std::vector<std::uint32_t> canonicalize_runs(
    std::span<const std::uint32_t> runs);

// Lenient decode: accepts non-canonical runs, only the sum is checked.
std::vector<std::uint8_t> decode_runs(std::span<const std::uint32_t> runs,
                                      Canvas canvas);

struct LabeledMask {
  BinaryMask mask;
  ClassId category = 0;
  double score = 0.0;
  std::size_t source_index = 0;
};

// Dense per-pixel class ids, row-major.
class SemanticMap {
 public:
  SemanticMap() = default;
  explicit SemanticMap(Canvas canvas);
  SemanticMap(Canvas canvas, std::vector<ClassId> labels);

  Canvas canvas() const noexcept { return canvas_; }
  std::int32_t width() const noexcept { return canvas_.width; }
  std::int32_t height() const noexcept { return canvas_.height; }

  ClassId at(std::int32_t x, std::int32_t y) const {
    return labels_[index(x, y)];
  }
  void set(std::int32_t x, std::int32_t y, ClassId id) {
    labels_[index(x, y)] = id;
  }
  std::span<const ClassId> labels() const noexcept { return labels_; }
  std::span<ClassId> labels() noexcept { return labels_; }

  // Throws if any label is not a registry id.
  void validate(const ClassRegistry& registry) const;

  bool operator==(const SemanticMap&) const = default;

 private:
  std::size_t index(std::int32_t x, std::int32_t y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(canvas_.width) +
           static_cast<std::size_t>(x);
  }

  Canvas canvas_{};
  std::vector<ClassId> labels_;
};

// Priority permutation over the registry's foreground ids, highest first.
class FusionOrder {
 public:
  static constexpr std::size_t kUnranked = 0xff;

  static FusionOrder make(std::vector<ClassId> priority,
                          const ClassRegistry& registry);
  static FusionOrder from_names(std::span<const std::string> names,
                                const ClassRegistry& registry);
  // "ship,land,oil_spill,look_alike"
  static FusionOrder parse(std::string_view comma_list,
                           const ClassRegistry& registry);
  // Every permutation of the foreground ids, lexicographic by id.
  static std::vector<FusionOrder> all_permutations(
      const ClassRegistry& registry);

  const std::vector<ClassId>& priority() const noexcept { return priority_; }

  // Position in the priority list, kUnranked for ids not in the order.
  std::size_t rank(ClassId id) const noexcept { return rank_[id]; }
  bool precedes(ClassId a, ClassId b) const noexcept {
    return rank_[a] < rank_[b];
  }

  std::string to_string(const ClassRegistry& registry) const;

  bool operator==(const FusionOrder& other) const {
    return priority_ == other.priority_;
  }

 private:
  explicit FusionOrder(std::vector<ClassId> priority);

  std::vector<ClassId> priority_;
  std::array<std::uint8_t, 256> rank_{};
};

}  // namespace maskfuse
