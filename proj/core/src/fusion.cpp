#include "maskfuse/fusion.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>

#include "maskfuse/error.hpp"
#include "maskfuse/rng.hpp"

namespace maskfuse {

namespace {

void check_masks(std::span<const LabeledMask> masks, Canvas canvas) {
  for (const auto& m : masks) {
    if (m.mask.canvas() != canvas) {
      fail(ErrorKind::kDimensionMismatch,
           "mask " + std::to_string(m.source_index) + " is " +
               std::to_string(m.mask.width()) + "x" +
               std::to_string(m.mask.height()) + ", canvas is " +
               std::to_string(canvas.width) + "x" +
               std::to_string(canvas.height));
    }
    if (m.category == kBackgroundId) {
      fail(ErrorKind::kInvalidArgument,
           "mask " + std::to_string(m.source_index) +
               " is labeled as background");
    }
  }
}

using Interval = std::pair<std::size_t, std::size_t>;

std::vector<Interval> foreground_intervals(const BinaryMask& m) {
  std::vector<Interval> out;
  m.for_each_foreground_run(
      [&](std::size_t b, std::size_t e) { out.emplace_back(b, e); });
  return out;
}

bool overlaps(std::span<const Interval> a, std::span<const Interval> b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].second <= b[j].first) {
      ++i;
    } else if (b[j].second <= a[i].first) {
      ++j;
    } else {
      return true;
    }
  }
  return false;
}

}  // namespace

void FilterConfig::validate() const {
  if (!(score_threshold >= 0.0 && score_threshold <= 1.0)) {
    fail(ErrorKind::kInvalidArgument, "score threshold must be in [0, 1]");
  }
}

FusionStrategy parse_strategy(std::string_view text,
                              const ClassRegistry& registry) {
  const auto colon = text.find(':');
  const auto kind = text.substr(0, colon);
  const auto arg = colon == std::string_view::npos ? std::string_view{}
                                                   : text.substr(colon + 1);
  if (kind == "ordered") {
    return OrderedStrategy{FusionOrder::parse(arg, registry)};
  }
  if (kind == "random") {
    std::uint64_t seed = 0;
    const auto [ptr, ec] =
        std::from_chars(arg.data(), arg.data() + arg.size(), seed);
    if (arg.empty() || ec != std::errc{} || ptr != arg.data() + arg.size()) {
      fail(ErrorKind::kInvalidArgument,
           "random strategy needs an unsigned seed, got '" + std::string(arg) +
               "'");
    }
    return RandomStrategy{seed};
  }
  fail(ErrorKind::kInvalidArgument,
       "unknown strategy '" + std::string(text) +
           "' (expected ordered:<classes> or random:<seed>)");
}

std::string to_string(const FusionStrategy& strategy,
                      const ClassRegistry& registry) {
  if (const auto* o = std::get_if<OrderedStrategy>(&strategy)) {
    return "ordered:" + o->order.to_string(registry);
  }
  return "random:" + std::to_string(std::get<RandomStrategy>(strategy).seed);
}

std::uint64_t image_seed(std::uint64_t run_seed, std::string_view image_id) {
  return hash_combine(splitmix64(run_seed), fnv1a64(image_id));
}

FusionStrategy for_image(const FusionStrategy& strategy,
                         std::string_view image_id) {
  if (const auto* r = std::get_if<RandomStrategy>(&strategy)) {
    return RandomStrategy{image_seed(r->seed, image_id)};
  }
  return strategy;
}

std::vector<std::size_t> surviving_indices(std::span<const Detection> dets,
                                           const FilterConfig& cfg) {
  cfg.validate();
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (dets[i].score > cfg.score_threshold) out.push_back(i);
  }
  return out;
}

std::vector<Detection> filter_detections(std::span<const Detection> dets,
                                         const FilterConfig& cfg) {
  std::vector<Detection> out;
  for (const auto i : surviving_indices(dets, cfg)) out.push_back(dets[i]);
  return out;
}

SemanticMap first_wins_fill(std::span<const LabeledMask* const> sequence,
                            Canvas canvas) {
  SemanticMap result(canvas);
  auto labels = result.labels();
  for (const LabeledMask* m : sequence) {
    const ClassId category = m->category;
    m->mask.for_each_foreground_run([&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        if (labels[i] == kBackgroundId) labels[i] = category;
      }
    });
  }
  return result;
}

SemanticMap ordered_mask_fusion(std::span<const LabeledMask> masks,
                                const FusionOrder& order, Canvas canvas) {
  check_masks(masks, canvas);
  std::vector<const LabeledMask*> seq;
  seq.reserve(masks.size());
  for (const auto& m : masks) {
    if (order.rank(m.category) == FusionOrder::kUnranked) {
      fail(ErrorKind::kInvalidArgument,
           "fusion order does not rank category " +
               std::to_string(m.category));
    }
    seq.push_back(&m);
  }
  std::stable_sort(seq.begin(), seq.end(),
                   [&](const LabeledMask* a, const LabeledMask* b) {
                     const auto ra = order.rank(a->category);
                     const auto rb = order.rank(b->category);
                     if (ra != rb) return ra < rb;
                     if (a->score != b->score) return a->score > b->score;
                     return a->source_index < b->source_index;
                   });
  return first_wins_fill(seq, canvas);
}

SemanticMap random_mask_fusion(std::span<const LabeledMask> masks,
                               std::uint64_t seed, Canvas canvas) {
  check_masks(masks, canvas);
  std::vector<const LabeledMask*> seq;
  seq.reserve(masks.size());
  for (const auto& m : masks) seq.push_back(&m);
  Rng rng(seed);
  rng.shuffle(std::span(seq));
  return first_wins_fill(seq, canvas);
}

SemanticMap fuse(std::span<const LabeledMask> masks,
                 const FusionStrategy& strategy, Canvas canvas) {
  if (const auto* o = std::get_if<OrderedStrategy>(&strategy)) {
    return ordered_mask_fusion(masks, o->order, canvas);
  }
  return random_mask_fusion(masks, std::get<RandomStrategy>(strategy).seed,
                            canvas);
}

std::set<CategoryPair> contending_pairs(std::span<const LabeledMask> masks) {
  std::set<CategoryPair> pairs;
  std::vector<std::vector<Interval>> intervals;
  intervals.reserve(masks.size());
  for (const auto& m : masks) intervals.push_back(foreground_intervals(m.mask));
  for (std::size_t i = 0; i < masks.size(); ++i) {
    for (std::size_t j = i + 1; j < masks.size(); ++j) {
      ClassId a = masks[i].category;
      ClassId b = masks[j].category;
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      if (pairs.contains({a, b})) continue;
      if (overlaps(intervals[i], intervals[j])) pairs.insert({a, b});
    }
  }
  return pairs;
}

BinaryMask clip_to_box(const BinaryMask& mask, const BoundingBox& box) {
  auto bits = mask.decode();
  const auto w = mask.width();
  for (std::int32_t y = 0; y < mask.height(); ++y) {
    for (std::int32_t x = 0; x < w; ++x) {
      if (!box.contains(x, y)) {
        bits[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
             static_cast<std::size_t>(x)] = 0;
      }
    }
  }
  return BinaryMask::encode(bits, mask.canvas());
}

SemanticMap fuse_pipeline(std::span<const Detection> dets,
                          const MasksByDetection& masks,
                          const PipelineOptions& options, Canvas canvas) {
  std::vector<LabeledMask> labeled;
  for (const auto i : surviving_indices(dets, options.filter)) {
    const auto it = masks.find(i);
    if (it == masks.end()) {
      fail(ErrorKind::kNotFound,
           "no mask for surviving detection " + std::to_string(i));
    }
    LabeledMask lm;
    lm.mask = options.clip_to_box ? clip_to_box(it->second, dets[i].bbox)
                                  : it->second;
    lm.category = dets[i].category;
    lm.score = dets[i].score;
    lm.source_index = i;
    labeled.push_back(std::move(lm));
  }
  return fuse(labeled, options.strategy, canvas);
}

}  // namespace maskfuse
