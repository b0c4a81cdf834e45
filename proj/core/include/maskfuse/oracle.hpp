#pragma once

// Synthetic stand-ins for the neural parts of a detect-then-segment
// pipeline: ground-truth scene generation, ground-truth box extraction, an
// oracle box-prompted segmenter with controllable noise, and detector noise.
// All randomness comes from explicit seeds.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "maskfuse/core.hpp"

namespace maskfuse {

enum class ShapeKind { kRectangle, kEllipse };

struct SceneSpec {
  std::int32_t width = 64;
  std::int32_t height = 64;
  // Indexed by class id; entry 0 (background) must be 0.
  std::vector<int> shapes_per_class;
  std::vector<ShapeKind> kinds = {ShapeKind::kRectangle, ShapeKind::kEllipse};
  // 0 places shapes uniformly; larger values pull new shapes onto existing
  // ones with probability bias / (1 + bias).
  double overlap_bias = 0.0;
  // Optional per-class multiplier on shape extents, indexed by class id.
  std::vector<double> size_scale;
  std::uint64_t seed = 0;

  void validate(const ClassRegistry& registry) const;
};

struct NoiseSpec {
  // Negative erodes, positive dilates, square structuring element.
  int morph_radius = 0;
  double boundary_flip_prob = 0.0;
  double box_jitter_sigma = 0.0;
  double score_noise_sigma = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Paints shapes class by class in id order; later shapes overwrite earlier
// ones. Throws kInvalidArgument if a requested class cannot be made visible
// after a bounded number of regenerations.
SemanticMap generate_scene(const SceneSpec& spec,
                           const ClassRegistry& registry);

struct Component {
  ClassId category = 0;
  BoundingBox bbox;
  std::int64_t area = 0;
};

struct ComponentLabels {
  std::vector<std::int32_t> labels;  // per pixel, -1 for background
  std::vector<Component> components;
};

// 8-connected components of same-class foreground pixels.
ComponentLabels label_components(const SemanticMap& map);

// One score-1.0 detection per component with area >= min_area, tight box,
// sorted by (class, y0, x0).
std::vector<Detection> extract_gt_boxes(const SemanticMap& gt,
                                        const ClassRegistry& registry,
                                        std::string_view image_id,
                                        std::int64_t min_area = 1);

BinaryMask dilate(const BinaryMask& mask, int radius);
BinaryMask erode(const BinaryMask& mask, int radius);

// Ground-truth pixels of det.category inside det.bbox, then morphology, then
// seeded boundary flips. Zero noise returns the base mask.
BinaryMask oracle_segment(const SemanticMap& gt, const Detection& det,
                          const NoiseSpec& noise);

// Gaussian edge jitter (clamped to a non-empty box inside the canvas) and
// Gaussian score noise (clamped to [0, 1]). Zero sigmas return the input.
std::vector<Detection> perturb_detections(std::span<const Detection> dets,
                                          const NoiseSpec& noise,
                                          Canvas canvas);

// Score model for a synthetic detector: every ground-truth component is
// detected, and some get an extra "confuser" detection with a wrong
// category and a low score.
struct DetectorModel {
  double true_score_mean = 0.6;
  double true_score_sigma = 0.2;
  double confuser_rate = 0.5;
  double confuser_score_mean = 0.1;
  double confuser_score_sigma = 0.08;
};

struct SimulatedDetections {
  std::vector<Detection> detections;
  std::vector<BinaryMask> masks;  // parallel to detections
};

// Detections plus oracle masks for one image. Masks come from the object
// actually under the box, so confusers carry a correct mask with a wrong
// label.
SimulatedDetections simulate_detector(const SemanticMap& gt,
                                      const ClassRegistry& registry,
                                      std::string_view image_id,
                                      const NoiseSpec& noise,
                                      const DetectorModel& model,
                                      std::int64_t min_area = 1);

}  // namespace maskfuse
