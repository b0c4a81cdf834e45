#pragma once

// Detection filtering and instance-to-semantic mask fusion.
//
// Both fusion strategies share one fill rule: start from an all-background
// canvas and let each mask, in sequence, claim the pixels that are still
// background. They differ only in how the sequence is chosen:
//
//   ordered  sort by category priority (then score desc, source index asc)
//   random   seeded Fisher-Yates shuffle of the input order

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "maskfuse/core.hpp"

namespace maskfuse {

struct FilterConfig {
  double score_threshold = 0.0;

  void validate() const;
};

struct OrderedStrategy {
  FusionOrder order;
};

struct RandomStrategy {
  std::uint64_t seed = 0;
};

using FusionStrategy = std::variant<OrderedStrategy, RandomStrategy>;

// "ordered:ship,land,oil_spill,look_alike" or "random:42".
FusionStrategy parse_strategy(std::string_view text,
                              const ClassRegistry& registry);
std::string to_string(const FusionStrategy& strategy,
                      const ClassRegistry& registry);

// Per-image seed for the random strategy: stable hash of (run seed, image id).
std::uint64_t image_seed(std::uint64_t run_seed, std::string_view image_id);

// Returns the strategy to use for one image. Random strategies get their
// per-image seed; ordered strategies are returned unchanged.
FusionStrategy for_image(const FusionStrategy& strategy,
                         std::string_view image_id);

// Keeps detections with score strictly greater than the threshold, in input
// order.
std::vector<Detection> filter_detections(std::span<const Detection> dets,
                                         const FilterConfig& cfg);
std::vector<std::size_t> surviving_indices(std::span<const Detection> dets,
                                           const FilterConfig& cfg);

// Each pixel gets the category of the highest-priority mask covering it.
SemanticMap ordered_mask_fusion(std::span<const LabeledMask> masks,
                                const FusionOrder& order, Canvas canvas);

SemanticMap random_mask_fusion(std::span<const LabeledMask> masks,
                               std::uint64_t seed, Canvas canvas);

// The shared first-wins fill over an explicit sequence.
SemanticMap first_wins_fill(std::span<const LabeledMask* const> sequence,
                            Canvas canvas);

SemanticMap fuse(std::span<const LabeledMask> masks,
                 const FusionStrategy& strategy, Canvas canvas);

// Unordered category pairs (a < b) that claim at least one common pixel.
using CategoryPair = std::pair<ClassId, ClassId>;
std::set<CategoryPair> contending_pairs(std::span<const LabeledMask> masks);

// Masks keyed by the index of their detection in the input list.
using MasksByDetection = std::map<std::size_t, BinaryMask>;

struct PipelineOptions {
  FilterConfig filter;
  FusionStrategy strategy = RandomStrategy{0};
  bool clip_to_box = false;
};

// Filter, pair every surviving detection with its mask, fuse. Throws
// kNotFound if a surviving detection has no mask.
SemanticMap fuse_pipeline(std::span<const Detection> dets,
                          const MasksByDetection& masks,
                          const PipelineOptions& options, Canvas canvas);

// Mask restricted to the box.
BinaryMask clip_to_box(const BinaryMask& mask, const BoundingBox& box);

}  // namespace maskfuse
