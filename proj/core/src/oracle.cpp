#include "maskfuse/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "maskfuse/error.hpp"
#include "maskfuse/rng.hpp"

namespace maskfuse {

namespace {

constexpr int kSceneAttempts = 32;

struct Shape {
  ShapeKind kind;
  ClassId category;
  double cx, cy, hx, hy;
};

void paint(const Shape& s, SemanticMap& map) {
  const auto x_lo = std::max(0, static_cast<int>(std::floor(s.cx - s.hx)));
  const auto x_hi = std::min(map.width(), static_cast<int>(std::ceil(s.cx + s.hx)));
  const auto y_lo = std::max(0, static_cast<int>(std::floor(s.cy - s.hy)));
  const auto y_hi = std::min(map.height(), static_cast<int>(std::ceil(s.cy + s.hy)));
  for (int y = y_lo; y < y_hi; ++y) {
    for (int x = x_lo; x < x_hi; ++x) {
      if (s.kind == ShapeKind::kEllipse) {
        const double dx = (x + 0.5 - s.cx) / s.hx;
        const double dy = (y + 0.5 - s.cy) / s.hy;
        if (dx * dx + dy * dy > 1.0) continue;
      }
      map.set(x, y, s.category);
    }
  }
}

SemanticMap try_generate(const SceneSpec& spec, const ClassRegistry& registry,
                         std::uint64_t seed) {
  Rng rng(seed);
  const Canvas canvas{spec.width, spec.height};
  SemanticMap map(canvas);
  const double min_dim = std::min(spec.width, spec.height);
  const double lo = std::max(1.0, min_dim / 16.0);
  const double hi = std::max(lo, min_dim / 6.0);
  const double p_overlap = spec.overlap_bias / (1.0 + spec.overlap_bias);

  std::vector<Shape> shapes;
  for (std::size_t c = 1; c < registry.size(); ++c) {
    const double scale = spec.size_scale.empty() ? 1.0 : spec.size_scale[c];
    for (int k = 0; k < spec.shapes_per_class[c]; ++k) {
      Shape s{};
      s.category = static_cast<ClassId>(c);
      s.kind = spec.kinds[rng.below(spec.kinds.size())];
      s.hx = std::max(1.0, rng.uniform(lo, hi) * scale);
      s.hy = std::max(1.0, rng.uniform(lo, hi) * scale);
      const bool anchor = !shapes.empty() && rng.bernoulli(p_overlap);
      if (anchor) {
        const Shape& a = shapes[rng.below(shapes.size())];
        s.cx = a.cx + rng.uniform(-a.hx, a.hx);
        s.cy = a.cy + rng.uniform(-a.hy, a.hy);
      } else {
        s.cx = rng.uniform(0.0, spec.width);
        s.cy = rng.uniform(0.0, spec.height);
      }
      s.cx = std::clamp(s.cx, 0.5, spec.width - 0.5);
      s.cy = std::clamp(s.cy, 0.5, spec.height - 0.5);
      shapes.push_back(s);
      paint(s, map);
    }
  }
  return map;
}

// Separable sliding max/min over a (2r+1) window restricted to in-bounds
// pixels. `dilating` selects OR (dilation) vs AND (erosion).
std::vector<std::uint8_t> morph_pass(const std::vector<std::uint8_t>& in,
                                     Canvas canvas, int r, bool horizontal,
                                     bool dilating) {
  const int w = canvas.width;
  const int h = canvas.height;
  std::vector<std::uint8_t> out(in.size(), 0);
  const int lines = horizontal ? h : w;
  const int len = horizontal ? w : h;
  std::vector<int> prefix(static_cast<std::size_t>(len) + 1);
  for (int line = 0; line < lines; ++line) {
    auto at = [&](int i) -> std::size_t {
      return horizontal ? static_cast<std::size_t>(line) * w + i
                        : static_cast<std::size_t>(i) * w + line;
    };
    prefix[0] = 0;
    for (int i = 0; i < len; ++i) prefix[i + 1] = prefix[i] + (in[at(i)] ? 1 : 0);
    for (int i = 0; i < len; ++i) {
      const int a = std::max(0, i - r);
      const int b = std::min(len, i + r + 1);
      const int ones = prefix[b] - prefix[a];
      out[at(i)] = dilating ? (ones > 0) : (ones == b - a);
    }
  }
  return out;
}

BinaryMask morph(const BinaryMask& mask, int radius, bool dilating) {
  if (radius < 0) fail(ErrorKind::kInvalidArgument, "negative morphology radius");
  if (radius == 0) return mask;
  auto bits = mask.decode();
  bits = morph_pass(bits, mask.canvas(), radius, true, dilating);
  bits = morph_pass(bits, mask.canvas(), radius, false, dilating);
  return BinaryMask::encode(bits, mask.canvas());
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

void SceneSpec::validate(const ClassRegistry& registry) const {
  if (width < 8 || height < 8) {
    fail(ErrorKind::kInvalidArgument, "scene must be at least 8x8");
  }
  if (shapes_per_class.size() != registry.size()) {
    fail(ErrorKind::kInvalidArgument,
         "shapes_per_class needs one entry per registry class");
  }
  if (shapes_per_class[0] != 0) {
    fail(ErrorKind::kInvalidArgument, "background cannot have shapes");
  }
  for (const int n : shapes_per_class) {
    if (n < 0) fail(ErrorKind::kInvalidArgument, "negative shape count");
  }
  if (kinds.empty()) fail(ErrorKind::kInvalidArgument, "no shape kinds");
  if (!(overlap_bias >= 0.0)) {
    fail(ErrorKind::kInvalidArgument, "overlap_bias must be >= 0");
  }
  if (!size_scale.empty()) {
    if (size_scale.size() != registry.size()) {
      fail(ErrorKind::kInvalidArgument,
           "size_scale needs one entry per registry class");
    }
    for (const double s : size_scale) {
      if (!(s > 0.0)) fail(ErrorKind::kInvalidArgument, "size_scale must be > 0");
    }
  }
}

void NoiseSpec::validate() const {
  if (!(boundary_flip_prob >= 0.0 && boundary_flip_prob <= 1.0)) {
    fail(ErrorKind::kInvalidArgument, "boundary_flip_prob must be in [0, 1]");
  }
  if (!(box_jitter_sigma >= 0.0) || !(score_noise_sigma >= 0.0)) {
    fail(ErrorKind::kInvalidArgument, "noise sigmas must be >= 0");
  }
}

SemanticMap generate_scene(const SceneSpec& spec,
                           const ClassRegistry& registry) {
  spec.validate(registry);
  for (int attempt = 0; attempt < kSceneAttempts; ++attempt) {
    const std::uint64_t seed =
        attempt == 0 ? spec.seed
                     : hash_combine(spec.seed, static_cast<std::uint64_t>(attempt));
    SemanticMap map = try_generate(spec, registry, seed);
    std::vector<bool> present(registry.size(), false);
    for (const ClassId id : map.labels()) present[id] = true;
    bool ok = true;
    for (std::size_t c = 1; c < registry.size(); ++c) {
      if (spec.shapes_per_class[c] > 0 && !present[c]) ok = false;
    }
    if (ok) return map;
  }
  fail(ErrorKind::kInvalidArgument,
       "could not place the requested shapes on a " +
           std::to_string(spec.width) + "x" + std::to_string(spec.height) +
           " canvas");
}

ComponentLabels label_components(const SemanticMap& map) {
  const int w = map.width();
  const int h = map.height();
  ComponentLabels out;
  out.labels.assign(map.canvas().pixels(), -1);
  const auto labels = map.labels();
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * w + x;
      if (labels[idx] == kBackgroundId || out.labels[idx] >= 0) continue;
      const auto id = static_cast<std::int32_t>(out.components.size());
      Component comp{labels[idx], {x, y, x + 1, y + 1}, 0};
      out.labels[idx] = id;
      stack.assign(1, {x, y});
      while (!stack.empty()) {
        const auto [cx, cy] = stack.back();
        stack.pop_back();
        ++comp.area;
        comp.bbox.x0 = std::min(comp.bbox.x0, cx);
        comp.bbox.y0 = std::min(comp.bbox.y0, cy);
        comp.bbox.x1 = std::max(comp.bbox.x1, cx + 1);
        comp.bbox.y1 = std::max(comp.bbox.y1, cy + 1);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx;
            const int ny = cy + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            const std::size_t n = static_cast<std::size_t>(ny) * w + nx;
            if (out.labels[n] >= 0 || labels[n] != comp.category) continue;
            out.labels[n] = id;
            stack.emplace_back(nx, ny);
          }
        }
      }
      out.components.push_back(comp);
    }
  }
  return out;
}

std::vector<Detection> extract_gt_boxes(const SemanticMap& gt,
                                        const ClassRegistry& registry,
                                        std::string_view image_id,
                                        std::int64_t min_area) {
  gt.validate(registry);
  std::vector<Detection> dets;
  for (const auto& c : label_components(gt).components) {
    if (c.area < min_area) continue;
    dets.push_back(Detection{std::string(image_id), c.category, c.bbox, 1.0});
  }
  std::sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
    return std::tie(a.category, a.bbox.y0, a.bbox.x0, a.bbox.y1, a.bbox.x1) <
           std::tie(b.category, b.bbox.y0, b.bbox.x0, b.bbox.y1, b.bbox.x1);
  });
  return dets;
}

BinaryMask dilate(const BinaryMask& mask, int radius) {
  return morph(mask, radius, true);
}

BinaryMask erode(const BinaryMask& mask, int radius) {
  return morph(mask, radius, false);
}

BinaryMask oracle_segment(const SemanticMap& gt, const Detection& det,
                          const NoiseSpec& noise) {
  noise.validate();
  const Canvas canvas = gt.canvas();
  if (!det.bbox.valid_in(canvas)) {
    fail(ErrorKind::kInvalidArgument, "detection box outside the image");
  }
  std::vector<std::uint8_t> bits(canvas.pixels(), 0);
  const auto& b = det.bbox;
  for (int y = b.y0; y < b.y1; ++y) {
    for (int x = b.x0; x < b.x1; ++x) {
      if (gt.at(x, y) == det.category) {
        bits[static_cast<std::size_t>(y) * canvas.width + x] = 1;
      }
    }
  }
  BinaryMask mask = BinaryMask::encode(bits, canvas);
  if (noise.morph_radius > 0) mask = dilate(mask, noise.morph_radius);
  if (noise.morph_radius < 0) mask = erode(mask, -noise.morph_radius);
  if (noise.boundary_flip_prob <= 0.0) return mask;

  std::uint64_t seed = hash_combine(noise.seed, fnv1a64(det.image_id));
  for (const auto v : {b.x0, b.y0, b.x1, b.y1, static_cast<int>(det.category)}) {
    seed = hash_combine(seed, static_cast<std::uint64_t>(v));
  }
  Rng rng(seed);
  bits = mask.decode();
  auto flipped = bits;
  const int w = canvas.width;
  const int h = canvas.height;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const bool boundary =
          (x > 0 && bits[i - 1] != bits[i]) ||
          (x + 1 < w && bits[i + 1] != bits[i]) ||
          (y > 0 && bits[i - w] != bits[i]) ||
          (y + 1 < h && bits[i + w] != bits[i]);
      if (boundary && rng.bernoulli(noise.boundary_flip_prob)) {
        flipped[i] = !bits[i];
      }
    }
  }
  return BinaryMask::encode(flipped, canvas);
}

std::vector<Detection> perturb_detections(std::span<const Detection> dets,
                                          const NoiseSpec& noise,
                                          Canvas canvas) {
  noise.validate();
  Rng rng(noise.seed);
  std::vector<Detection> out(dets.begin(), dets.end());
  const auto jitter = [&](std::int32_t v) {
    const double n = rng.normal();
    return static_cast<std::int32_t>(std::lround(v + noise.box_jitter_sigma * n));
  };
  for (auto& d : out) {
    auto& b = d.bbox;
    const std::int32_t x0 = jitter(b.x0);
    const std::int32_t y0 = jitter(b.y0);
    const std::int32_t x1 = jitter(b.x1);
    const std::int32_t y1 = jitter(b.y1);
    const double dscore = rng.normal() * noise.score_noise_sigma;
    if (noise.box_jitter_sigma > 0.0) {
      b.x0 = std::clamp(x0, 0, canvas.width - 1);
      b.y0 = std::clamp(y0, 0, canvas.height - 1);
      b.x1 = std::clamp(x1, b.x0 + 1, canvas.width);
      b.y1 = std::clamp(y1, b.y0 + 1, canvas.height);
    }
    if (noise.score_noise_sigma > 0.0) d.score = clamp01(d.score + dscore);
  }
  return out;
}

SimulatedDetections simulate_detector(const SemanticMap& gt,
                                      const ClassRegistry& registry,
                                      std::string_view image_id,
                                      const NoiseSpec& noise,
                                      const DetectorModel& model,
                                      std::int64_t min_area) {
  noise.validate();
  const auto truth = extract_gt_boxes(gt, registry, image_id, min_area);
  const auto fg = registry.foreground_ids();
  Rng rng(hash_combine(noise.seed, fnv1a64(image_id)));

  std::vector<Detection> dets;
  std::vector<ClassId> object_class;  // class of the object under each box
  for (const auto& t : truth) {
    Detection d = t;
    d.score = clamp01(rng.normal(model.true_score_mean, model.true_score_sigma));
    dets.push_back(d);
    object_class.push_back(t.category);
    if (fg.size() > 1 && rng.bernoulli(model.confuser_rate)) {
      Detection c = t;
      // Uniform over the other foreground classes (fg is sorted).
      auto k = static_cast<std::size_t>(rng.below(fg.size() - 1));
      if (fg[k] >= t.category) ++k;
      c.category = fg[k];
      c.score = clamp01(
          rng.normal(model.confuser_score_mean, model.confuser_score_sigma));
      dets.push_back(c);
      object_class.push_back(t.category);
    }
  }

  NoiseSpec per_image = noise;
  per_image.seed = hash_combine(noise.seed ^ 0x5bd1e995ULL, fnv1a64(image_id));
  SimulatedDetections out;
  out.detections = perturb_detections(dets, per_image, gt.canvas());
  out.masks.reserve(dets.size());
  for (std::size_t i = 0; i < out.detections.size(); ++i) {
    Detection prompt = out.detections[i];
    prompt.category = object_class[i];
    out.masks.push_back(oracle_segment(gt, prompt, per_image));
  }
  return out;
}

}  // namespace maskfuse
