#include "maskfuse/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "maskfuse/error.hpp"

namespace maskfuse {

namespace {

constexpr std::size_t kMaxClasses = 256;

void check_canvas(Canvas canvas) {
  if (canvas.width < 1 || canvas.height < 1) {
    fail(ErrorKind::kInvalidArgument,
         "canvas must be at least 1x1, got " + std::to_string(canvas.width) +
             "x" + std::to_string(canvas.height));
  }
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

// ---------------------------------------------------------------------------
// ClassRegistry

ClassRegistry ClassRegistry::make(std::span<const std::string> names,
                                  std::string_view background_name) {
  std::unordered_set<std::string_view> seen;
  for (const auto& n : names) {
    if (n.empty()) fail(ErrorKind::kInvalidArgument, "empty class name");
    if (!seen.insert(n).second) {
      fail(ErrorKind::kInvalidArgument, "duplicate class name '" + n + "'");
    }
  }
  if (!seen.contains(background_name)) {
    fail(ErrorKind::kInvalidArgument,
         "background class '" + std::string(background_name) +
             "' is not among the class names");
  }
  if (names.size() > kMaxClasses) {
    fail(ErrorKind::kInvalidArgument, "at most 256 classes are supported");
  }
  std::vector<std::string> ordered;
  ordered.reserve(names.size());
  ordered.emplace_back(background_name);
  for (const auto& n : names) {
    if (n != background_name) ordered.push_back(n);
  }
  return ClassRegistry(std::move(ordered));
}

ClassRegistry ClassRegistry::m4d() {
  static const std::vector<std::string> kNames = {
      "sea_surface", "oil_spill", "look_alike", "ship", "land"};
  return make(kNames, "sea_surface");
}

const std::string& ClassRegistry::name(ClassId id) const {
  if (!contains(id)) {
    fail(ErrorKind::kNotFound, "class id " + std::to_string(id) +
                                   " is not in the registry");
  }
  return names_[id];
}

std::optional<ClassId> ClassRegistry::find(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return static_cast<ClassId>(i);
  }
  return std::nullopt;
}

ClassId ClassRegistry::id(std::string_view name) const {
  if (auto found = find(name)) return *found;
  fail(ErrorKind::kNotFound, "unknown class '" + std::string(name) + "'");
}

std::vector<ClassId> ClassRegistry::foreground_ids() const {
  std::vector<ClassId> ids;
  for (std::size_t i = 1; i < names_.size(); ++i) {
    ids.push_back(static_cast<ClassId>(i));
  }
  return ids;
}

void validate(const Detection& det, const ClassRegistry& registry,
              std::optional<Canvas> canvas) {
  if (!registry.is_foreground(det.category)) {
    fail(ErrorKind::kInvalidArgument,
         "detection category " + std::to_string(det.category) +
             " is not a foreground class");
  }
  if (!(det.score >= 0.0 && det.score <= 1.0)) {
    fail(ErrorKind::kInvalidArgument, "detection score outside [0, 1]");
  }
  const auto& b = det.bbox;
  const bool ok = canvas ? b.valid_in(*canvas)
                         : (0 <= b.x0 && b.x0 < b.x1 && 0 <= b.y0 && b.y0 < b.y1);
  if (!ok) {
    fail(ErrorKind::kInvalidArgument,
         "invalid box [" + std::to_string(b.x0) + "," + std::to_string(b.y0) +
             "," + std::to_string(b.x1) + "," + std::to_string(b.y1) + "]");
  }
}

// ---------------------------------------------------------------------------
// BinaryMask

std::vector<std::uint32_t> canonicalize_runs(
    std::span<const std::uint32_t> runs) {
  std::vector<std::uint32_t> out;
  out.reserve(runs.size());
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const std::uint32_t len = runs[i];
    if (len == 0) continue;
    const bool value = i % 2 == 1;
    if (out.empty()) {
      if (value) out.push_back(0);
      out.push_back(len);
    } else if (((out.size() - 1) % 2 == 1) == value) {
      out.back() += len;
    } else {
      out.push_back(len);
    }
  }
  if (out.empty()) out.push_back(0);
  return out;
}

std::vector<std::uint8_t> decode_runs(std::span<const std::uint32_t> runs,
                                      Canvas canvas) {
  check_canvas(canvas);
  const std::uint64_t total =
      std::accumulate(runs.begin(), runs.end(), std::uint64_t{0});
  if (total != canvas.pixels()) {
    fail(ErrorKind::kDimensionMismatch,
         "run lengths sum to " + std::to_string(total) + ", expected " +
             std::to_string(canvas.pixels()));
  }
  std::vector<std::uint8_t> bits(canvas.pixels(), 0);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (i % 2 == 1) std::fill_n(bits.begin() + pos, runs[i], std::uint8_t{1});
    pos += runs[i];
  }
  return bits;
}

BinaryMask BinaryMask::empty(Canvas canvas) {
  check_canvas(canvas);
  BinaryMask m;
  m.canvas_ = canvas;
  m.runs_ = {static_cast<std::uint32_t>(canvas.pixels())};
  return m;
}

BinaryMask BinaryMask::full(Canvas canvas) {
  check_canvas(canvas);
  BinaryMask m;
  m.canvas_ = canvas;
  m.runs_ = {0, static_cast<std::uint32_t>(canvas.pixels())};
  return m;
}

BinaryMask BinaryMask::from_runs(Canvas canvas,
                                 std::vector<std::uint32_t> runs) {
  check_canvas(canvas);
  if (canvas.pixels() > UINT32_MAX) {
    fail(ErrorKind::kInvalidArgument, "mask too large for 32-bit runs");
  }
  if (runs.empty()) fail(ErrorKind::kInvalidArgument, "empty run list");
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (i > 0 && runs[i] == 0) {
      fail(ErrorKind::kInvalidArgument,
           "run " + std::to_string(i) + " has zero length (non-canonical)");
    }
    total += runs[i];
  }
  if (runs.size() == 1 && runs[0] == 0) {
    fail(ErrorKind::kInvalidArgument, "run list covers no pixels");
  }
  if (total != canvas.pixels()) {
    fail(ErrorKind::kDimensionMismatch,
         "run lengths sum to " + std::to_string(total) + ", expected " +
             std::to_string(canvas.pixels()));
  }
  BinaryMask m;
  m.canvas_ = canvas;
  m.runs_ = std::move(runs);
  return m;
}

BinaryMask BinaryMask::encode(std::span<const std::uint8_t> bits,
                              Canvas canvas) {
  check_canvas(canvas);
  if (bits.size() != canvas.pixels()) {
    fail(ErrorKind::kDimensionMismatch,
         "bitmap has " + std::to_string(bits.size()) + " pixels, expected " +
             std::to_string(canvas.pixels()));
  }
  if (canvas.pixels() > UINT32_MAX) {
    fail(ErrorKind::kInvalidArgument, "mask too large for 32-bit runs");
  }
  BinaryMask m;
  m.canvas_ = canvas;
  bool value = false;
  std::uint32_t count = 0;
  for (const std::uint8_t b : bits) {
    const bool v = b != 0;
    if (v != value) {
      m.runs_.push_back(count);
      count = 0;
      value = v;
    }
    ++count;
  }
  m.runs_.push_back(count);
  return m;
}

std::vector<std::uint8_t> BinaryMask::decode() const {
  return decode_runs(runs_, canvas_);
}

std::uint64_t BinaryMask::area() const noexcept {
  std::uint64_t a = 0;
  for (std::size_t i = 1; i < runs_.size(); i += 2) a += runs_[i];
  return a;
}

// ---------------------------------------------------------------------------
// SemanticMap

SemanticMap::SemanticMap(Canvas canvas)
    : canvas_(canvas), labels_(canvas.pixels(), kBackgroundId) {
  check_canvas(canvas);
}

SemanticMap::SemanticMap(Canvas canvas, std::vector<ClassId> labels)
    : canvas_(canvas), labels_(std::move(labels)) {
  check_canvas(canvas);
  if (labels_.size() != canvas.pixels()) {
    fail(ErrorKind::kDimensionMismatch,
         "label grid has " + std::to_string(labels_.size()) +
             " entries, expected " + std::to_string(canvas.pixels()));
  }
}

void SemanticMap::validate(const ClassRegistry& registry) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!registry.contains(labels_[i])) {
      fail(ErrorKind::kInvalidArgument,
           "label " + std::to_string(labels_[i]) + " at pixel " +
               std::to_string(i) + " is not a registry class id");
    }
  }
}

// ---------------------------------------------------------------------------
// FusionOrder

FusionOrder::FusionOrder(std::vector<ClassId> priority)
    : priority_(std::move(priority)) {
  rank_.fill(static_cast<std::uint8_t>(kUnranked));
  for (std::size_t i = 0; i < priority_.size(); ++i) {
    rank_[priority_[i]] = static_cast<std::uint8_t>(i);
  }
}

FusionOrder FusionOrder::make(std::vector<ClassId> priority,
                              const ClassRegistry& registry) {
  const std::size_t n_fg = registry.size() - 1;
  if (priority.size() != n_fg) {
    fail(ErrorKind::kInvalidArgument,
         "fusion order lists " + std::to_string(priority.size()) +
             " classes, registry has " + std::to_string(n_fg) +
             " foreground classes");
  }
  std::vector<bool> seen(registry.size(), false);
  for (const ClassId id : priority) {
    if (!registry.is_foreground(id)) {
      fail(ErrorKind::kInvalidArgument,
           "fusion order contains non-foreground id " + std::to_string(id));
    }
    if (seen[id]) {
      fail(ErrorKind::kInvalidArgument,
           "fusion order repeats class '" + registry.name(id) + "'");
    }
    seen[id] = true;
  }
  return FusionOrder(std::move(priority));
}

FusionOrder FusionOrder::from_names(std::span<const std::string> names,
                                    const ClassRegistry& registry) {
  std::vector<ClassId> ids;
  ids.reserve(names.size());
  for (const auto& n : names) ids.push_back(registry.id(n));
  return make(std::move(ids), registry);
}

FusionOrder FusionOrder::parse(std::string_view comma_list,
                               const ClassRegistry& registry) {
  std::vector<std::string> names;
  std::size_t start = 0;
  while (true) {
    const auto comma = comma_list.find(',', start);
    names.push_back(trim(comma_list.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (names.size() == 1 && names[0].empty()) names.clear();
  return from_names(names, registry);
}

std::vector<FusionOrder> FusionOrder::all_permutations(
    const ClassRegistry& registry) {
  std::vector<ClassId> ids = registry.foreground_ids();
  std::vector<FusionOrder> out;
  do {
    out.push_back(FusionOrder(ids));
  } while (std::next_permutation(ids.begin(), ids.end()));
  return out;
}

std::string FusionOrder::to_string(const ClassRegistry& registry) const {
  std::string s;
  for (std::size_t i = 0; i < priority_.size(); ++i) {
    if (i > 0) s += ',';
    s += registry.name(priority_[i]);
  }
  return s;
}

}  // namespace maskfuse
