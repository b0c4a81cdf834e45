#include "maskfuse/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <ostream>
#include <thread>

#include "json.hpp"

#include "maskfuse/error.hpp"
#include "maskfuse/rng.hpp"

namespace maskfuse {

namespace fs = std::filesystem;
using nlohmann::json;

int default_jobs() {
  if (const char* env = std::getenv("MASKFUSE_JOBS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0 && v <= 1024) return static_cast<int>(v);
  }
  return 1;
}

void parallel_for(std::size_t n, int jobs,
                  const std::function<void(std::size_t)>& f) {
  if (n == 0) return;
  const auto workers =
      static_cast<std::size_t>(std::clamp<long>(jobs, 1, static_cast<long>(n)));
  std::vector<std::exception_ptr> errors(n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            f(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace {

std::string fixed(double v, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

using DetectionsByImage = std::map<std::string, std::vector<Detection>>;

DetectionsByImage group_detections(std::vector<Detection> dets) {
  DetectionsByImage out;
  for (auto& d : dets) out[d.image_id].push_back(std::move(d));
  return out;
}

const std::vector<Detection>& detections_for(const DetectionsByImage& all,
                                             const std::string& id) {
  static const std::vector<Detection> kNone;
  const auto it = all.find(id);
  return it == all.end() ? kNone : it->second;
}

void check_boxes(const std::vector<Detection>& dets, const ImageRef& ref,
                 const ClassRegistry& registry) {
  for (std::size_t i = 0; i < dets.size(); ++i) {
    try {
      validate(dets[i], registry, ref.canvas());
    } catch (const Error& e) {
      fail(ErrorKind::kInvalidArgument,
           "detection " + std::to_string(i) + ": " + e.what());
    }
  }
}

BinaryMask load_mask(const DatasetManifest& m, const ImageRef& ref,
                     std::size_t index) {
  const auto path = m.mask_path(ref.image_id, index);
  if (!fs::exists(path)) {
    fail(ErrorKind::kNotFound, "missing mask " + path.string());
  }
  BinaryMask mask = read_mask(path);
  if (mask.canvas() != ref.canvas()) {
    fail(ErrorKind::kDimensionMismatch,
         "mask " + path.string() + " does not match the image size");
  }
  return mask;
}

SemanticMap load_gt(const DatasetManifest& m, const ManifestImage& img) {
  if (img.gt.empty()) {
    fail(ErrorKind::kNotFound, "no ground truth listed for " + img.ref.image_id);
  }
  SemanticMap gt = read_semantic(m.resolve(img.gt), m.registry);
  if (gt.canvas() != img.ref.canvas()) {
    fail(ErrorKind::kDimensionMismatch,
         "ground truth for " + img.ref.image_id + " does not match the image size");
  }
  return gt;
}

std::optional<Palette> load_palette(const RunConfig& config,
                                    const ClassRegistry& registry) {
  if (config.palette.empty()) return std::nullopt;
  if (config.palette == "default") return default_palette(registry);
  return read_palette(config.palette, registry);
}

ReportRow make_row(std::string label, const SweepPoint& p) {
  ReportRow row;
  row.label = std::move(label);
  row.metrics = p.metrics;
  row.confusion = p.confusion.cells();
  return row;
}

void write_table(const ReportTable& table, const RunConfig& config,
                 std::string_view stem) {
  write_report(table, config.out / (std::string(stem) + std::string(extension(config.format))),
               config.format);
}

}  // namespace

// ---------------------------------------------------------------------------
// fuse

FuseSummary cmd_fuse(const RunConfig& config, std::ostream& log) {
  const DatasetManifest manifest = read_manifest(config.manifest);
  const auto& registry = manifest.registry;
  const FusionStrategy strategy = parse_strategy(config.strategy, registry);
  PipelineOptions options;
  options.filter.score_threshold = config.score_threshold;
  options.filter.validate();
  options.clip_to_box = config.clip_to_box;
  const auto palette = load_palette(config, registry);

  FuseSummary summary;
  summary.images = manifest.images.size();

  DetectionsByImage by_image;
  std::string detections_error;
  try {
    if (!manifest.images.empty() || fs::exists(manifest.detections_path())) {
      by_image = group_detections(read_detections(manifest.detections_path(), registry));
    }
  } catch (const Error& e) {
    detections_error = e.what();
  }
  for (const auto& [id, _] : by_image) {
    const bool known = std::any_of(
        manifest.images.begin(), manifest.images.end(),
        [&](const ManifestImage& img) { return img.ref.image_id == id; });
    if (!known) {
      summary.failures.push_back({id, "detections reference an image not in the manifest"});
    }
  }

  std::vector<std::optional<std::string>> errors(manifest.images.size());
  parallel_for(manifest.images.size(), config.jobs, [&](std::size_t i) {
    const auto& img = manifest.images[i];
    try {
      if (!detections_error.empty()) fail(ErrorKind::kParse, detections_error);
      const auto& dets = detections_for(by_image, img.ref.image_id);
      check_boxes(dets, img.ref, registry);
      MasksByDetection masks;
      for (const auto k : surviving_indices(dets, options.filter)) {
        masks.emplace(k, load_mask(manifest, img.ref, k));
      }
      PipelineOptions per_image = options;
      per_image.strategy = for_image(strategy, img.ref.image_id);
      const SemanticMap map =
          fuse_pipeline(dets, masks, per_image, img.ref.canvas());
      write_semantic(map, config.out / (img.ref.image_id + ".png"));
      if (palette) {
        write_colorized(map, *palette,
                        config.out / "color" / (img.ref.image_id + ".png"));
      }
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });

  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (errors[i]) {
      summary.failures.push_back({manifest.images[i].ref.image_id, *errors[i]});
      log << "warning: " << manifest.images[i].ref.image_id << ": " << *errors[i]
          << "\n";
    } else {
      ++summary.fused;
    }
  }
  summary.code = summary.failures.empty() ? ExitCode::kOk : ExitCode::kPartialFailure;

  json doc = json::object();
  doc["images"] = summary.images;
  doc["fused"] = summary.fused;
  doc["strategy"] = to_string(strategy, registry);
  doc["threshold"] = config.score_threshold;
  doc["clip_to_box"] = config.clip_to_box;
  json failures = json::array();
  for (const auto& f : summary.failures) {
    failures.push_back({{"image_id", f.image_id}, {"error", f.error}});
  }
  doc["failures"] = std::move(failures);
  write_file_atomic(config.out / "fuse_summary.json", doc.dump(2) + "\n");
  log << "fused " << summary.fused << "/" << summary.images << " images ("
      << to_string(strategy, registry) << ", threshold "
      << fixed(config.score_threshold, 2) << ")\n";
  return summary;
}

// ---------------------------------------------------------------------------
// eval

EvalOutcome cmd_eval(const RunConfig& config, const fs::path& pred_dir,
                     std::ostream& log) {
  const DatasetManifest manifest = read_manifest(config.manifest);
  const auto& registry = manifest.registry;
  const std::size_t n = manifest.images.size();

  std::vector<std::optional<ConfusionMatrix>> per_image(n);
  std::vector<std::string> errors(n);
  parallel_for(n, config.jobs, [&](std::size_t i) {
    const auto& img = manifest.images[i];
    try {
      fs::path pred_path = pred_dir / (img.ref.image_id + ".png");
      if (!fs::exists(pred_path)) pred_path.replace_extension(".pgm");
      if (!fs::exists(pred_path)) fail(ErrorKind::kNotFound, "missing prediction");
      const SemanticMap pred = read_semantic(pred_path, registry);
      const SemanticMap gt = load_gt(manifest, img);
      ConfusionMatrix cm(registry.size());
      cm.accumulate(pred, gt);
      per_image[i] = std::move(cm);
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });

  EvalOutcome outcome;
  outcome.confusion = ConfusionMatrix(registry.size());
  outcome.table.class_names = registry.names();
  std::size_t evaluated = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (per_image[i]) {
      outcome.confusion += *per_image[i];
      ++evaluated;
    } else {
      outcome.table.skipped_images.push_back(manifest.images[i].ref.image_id);
      log << "warning: skipping " << manifest.images[i].ref.image_id << ": "
          << errors[i] << "\n";
    }
  }
  outcome.table.metadata["images"] = std::to_string(n);
  outcome.table.metadata["evaluated"] = std::to_string(evaluated);
  outcome.table.metadata["aggregation"] = "dataset confusion matrix";
  outcome.table.metadata["zero_union_policy"] = kZeroUnionExcluded;

  if (outcome.confusion.total() == 0) {
    outcome.table.metadata["error"] = "no data";
    outcome.code = ExitCode::kPartialFailure;
    log << "error: no pixels evaluated\n";
  } else {
    SweepPoint p{summarize(outcome.confusion, registry), outcome.confusion, 0};
    outcome.table.rows.push_back(make_row("predictions", p));
    outcome.code = outcome.table.skipped_images.empty() ? ExitCode::kOk
                                                        : ExitCode::kPartialFailure;
    log << "mIoU " << format_percent(p.metrics.miou) << "  mF1 "
        << format_percent(p.metrics.mf1) << " over " << evaluated << " images\n";
  }
  write_report(outcome.table, config.out / "report.csv", ReportFormat::kCsv);
  write_report(outcome.table, config.out / "report.json", ReportFormat::kJson);
  return outcome;
}

// ---------------------------------------------------------------------------
// sweeps

LoadedDataset load_dataset(const fs::path& manifest_path, bool clip, int jobs) {
  LoadedDataset data;
  data.manifest = read_manifest(manifest_path);
  const auto& m = data.manifest;
  DetectionsByImage by_image;
  if (fs::exists(m.detections_path()) || !m.images.empty()) {
    by_image = group_detections(read_detections(m.detections_path(), m.registry));
  }
  for (const auto& [id, _] : by_image) {
    const bool known = std::any_of(m.images.begin(), m.images.end(),
                                   [&](const auto& img) { return img.ref.image_id == id; });
    if (!known) {
      fail(ErrorKind::kInvalidArgument,
           "detections reference image '" + id + "' which is not in the manifest");
    }
  }
  data.images.resize(m.images.size());
  parallel_for(m.images.size(), jobs, [&](std::size_t i) {
    auto& in = data.images[i];
    in.image = m.images[i];
    in.detections = detections_for(by_image, in.image.ref.image_id);
    check_boxes(in.detections, in.image.ref, m.registry);
    std::uint64_t digest = fnv1a64(in.image.ref.image_id);
    for (std::size_t k = 0; k < in.detections.size(); ++k) {
      const auto& d = in.detections[k];
      digest = fnv1a64(format_detection_line(d, m.registry), digest);
      BinaryMask mask = load_mask(m, in.image.ref, k);
      if (clip) mask = clip_to_box(mask, d.bbox);
      for (const auto r : mask.runs()) digest = hash_combine(digest, r);
      in.masks.push_back(LabeledMask{std::move(mask), d.category, d.score, k});
    }
    in.digest = digest;
    in.contention = contending_pairs(in.masks);
    in.gt = load_gt(m, in.image);
  });
  return data;
}

std::shared_ptr<const SemanticMap> FusionCache::find(const std::string& key) const {
  std::lock_guard lock(mu_);
  const auto it = maps_.find(key);
  if (it == maps_.end()) {
    ++misses_;
    return nullptr;
  }
  ++hits_;
  return it->second;
}

void FusionCache::insert(const std::string& key,
                         std::shared_ptr<const SemanticMap> map) {
  std::lock_guard lock(mu_);
  maps_.emplace(key, std::move(map));
}

SweepEngine::SweepEngine(LoadedDataset data, int jobs)
    : data_(std::move(data)), jobs_(jobs) {}

std::string SweepEngine::cache_key(const ImageInputs& image,
                                   std::span<const std::size_t> surviving,
                                   const FusionStrategy& strategy) {
  std::string key = image.image.ref.image_id + "|" + std::to_string(image.digest) + "|";
  for (const auto i : surviving) key += std::to_string(i) + ",";
  key += "|";
  if (const auto* o = std::get_if<OrderedStrategy>(&strategy)) {
    key += "o:";
    for (const auto& [a, b] : image.contention) {
      key += o->order.precedes(a, b) ? '<' : '>';
    }
  } else {
    key += "r:" + std::to_string(std::get<RandomStrategy>(strategy).seed);
  }
  return key;
}

SweepPoint SweepEngine::run(const FusionStrategy& strategy, double threshold) {
  const FilterConfig filter{threshold};
  filter.validate();
  const auto& registry = data_.manifest.registry;
  const std::size_t n = data_.images.size();
  std::vector<ConfusionMatrix> per_image(n, ConfusionMatrix(registry.size()));
  std::vector<std::size_t> surviving(n, 0);
  parallel_for(n, jobs_, [&](std::size_t i) {
    const auto& in = data_.images[i];
    const auto keep = surviving_indices(in.detections, filter);
    surviving[i] = keep.size();
    const FusionStrategy local = for_image(strategy, in.image.ref.image_id);
    const std::string key = cache_key(in, keep, local);
    auto map = cache_.find(key);
    if (!map) {
      std::vector<LabeledMask> subset;
      subset.reserve(keep.size());
      for (const auto k : keep) subset.push_back(in.masks[k]);
      map = std::make_shared<const SemanticMap>(
          fuse(subset, local, in.image.ref.canvas()));
      cache_.insert(key, map);
    }
    per_image[i].accumulate(*map, in.gt);
  });
  SweepPoint p;
  p.confusion = ConfusionMatrix(registry.size());
  for (std::size_t i = 0; i < n; ++i) {
    p.confusion += per_image[i];
    p.surviving += surviving[i];
  }
  p.metrics = summarize(p.confusion, registry);
  return p;
}

ReportTable cmd_sweep_order(const RunConfig& config,
                            const std::vector<std::string>& orders,
                            std::ostream& log) {
  SweepEngine engine(load_dataset(config.manifest, config.clip_to_box, config.jobs),
                     config.jobs);
  const auto& registry = engine.data().manifest.registry;

  std::vector<FusionStrategy> strategies;
  const bool all = orders.empty() || (orders.size() == 1 && orders[0] == "all");
  if (all) {
    for (auto& o : FusionOrder::all_permutations(registry)) {
      strategies.push_back(OrderedStrategy{std::move(o)});
    }
    strategies.push_back(RandomStrategy{config.seed});
  } else {
    std::set<std::string> seen;
    for (const auto& text : orders) {
      FusionStrategy s = text.starts_with("random:") || text.starts_with("ordered:")
                             ? parse_strategy(text, registry)
                             : FusionStrategy{OrderedStrategy{FusionOrder::parse(text, registry)}};
      if (!seen.insert(to_string(s, registry)).second) {
        fail(ErrorKind::kInvalidArgument, "duplicate order '" + text + "'");
      }
      strategies.push_back(std::move(s));
    }
  }

  ReportTable table;
  table.class_names = registry.names();
  table.metadata["threshold"] = fixed(config.score_threshold, 2);
  table.metadata["strategies"] = std::to_string(strategies.size());
  for (const auto& s : strategies) {
    const SweepPoint p = engine.run(s, config.score_threshold);
    ReportRow row = make_row(to_string(s, registry), p);
    row.extra.emplace_back("detections", std::to_string(p.surviving));
    table.rows.push_back(std::move(row));
  }
  std::stable_sort(table.rows.begin(), table.rows.end(),
                   [](const ReportRow& a, const ReportRow& b) {
                     return a.metrics.miou > b.metrics.miou;
                   });
  // Equivalence classes over identical confusion matrices, numbered in row order.
  std::vector<std::vector<std::uint64_t>> classes;
  for (auto& row : table.rows) {
    auto it = std::find(classes.begin(), classes.end(), row.confusion);
    if (it == classes.end()) {
      classes.push_back(row.confusion);
      it = classes.end() - 1;
    }
    row.extra.emplace_back("equiv_class",
                           "E" + std::to_string(it - classes.begin() + 1));
  }
  table.metadata["equivalence_classes"] = std::to_string(classes.size());
  table.metadata["cache_hits"] = std::to_string(engine.cache().hits());
  write_table(table, config, "sweep_order");
  log << strategies.size() << " strategies, " << classes.size()
      << " distinct outcomes; best " << table.rows.front().label << " mIoU "
      << format_percent(table.rows.front().metrics.miou) << "\n";
  return table;
}

std::vector<double> default_threshold_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 9; ++i) grid.push_back(i / 10.0);
  return grid;
}

ReportTable cmd_sweep_threshold(const RunConfig& config,
                                std::vector<double> thresholds,
                                std::ostream& log) {
  if (thresholds.empty()) thresholds = default_threshold_grid();
  for (const double t : thresholds) FilterConfig{t}.validate();
  SweepEngine engine(load_dataset(config.manifest, config.clip_to_box, config.jobs),
                     config.jobs);
  const auto& registry = engine.data().manifest.registry;
  const FusionStrategy strategy = parse_strategy(config.strategy, registry);

  ReportTable table;
  table.class_names = registry.names();
  table.metadata["strategy"] = to_string(strategy, registry);
  std::vector<std::pair<double, std::size_t>> counts;
  for (const double t : thresholds) {
    const SweepPoint p = engine.run(strategy, t);
    ReportRow row = make_row("t=" + fixed(t, 2), p);
    row.extra.emplace_back("threshold", fixed(t, 2));
    row.extra.emplace_back("detections", std::to_string(p.surviving));
    row.extra.emplace_back("reference",
                           std::abs(t - kReferenceThreshold) < 1e-9 ? "yes" : "");
    table.rows.push_back(std::move(row));
    counts.emplace_back(t, p.surviving);
  }
  std::sort(counts.begin(), counts.end());
  for (std::size_t i = 1; i < counts.size(); ++i) {
    if (counts[i].second > counts[i - 1].second) {
      fail(ErrorKind::kInvalidArgument,
           "surviving detection count increased with the threshold");
    }
  }
  const auto best = std::max_element(
      table.rows.begin(), table.rows.end(),
      [](const ReportRow& a, const ReportRow& b) { return a.metrics.miou < b.metrics.miou; });
  table.metadata["peak"] = best->label;
  write_table(table, config, "sweep_threshold");
  log << "peak mIoU " << format_percent(best->metrics.miou) << " at " << best->label
      << "\n";
  return table;
}

ReportTable cmd_gtbox_study(const RunConfig& config, const GtBoxStudyConfig& study,
                            std::ostream& log) {
  const DatasetManifest manifest = read_manifest(config.manifest);
  const auto& registry = manifest.registry;
  const FusionStrategy strategy = parse_strategy(config.strategy, registry);
  const std::size_t n = manifest.images.size();

  std::vector<SemanticMap> gts(n);
  parallel_for(n, config.jobs,
               [&](std::size_t i) { gts[i] = load_gt(manifest, manifest.images[i]); });

  ReportTable table;
  table.class_names = registry.names();
  table.metadata["strategy"] = to_string(strategy, registry);
  table.metadata["morph_radius"] = std::to_string(study.morph_radius);
  table.metadata["boundary_flip_prob"] = fixed(study.boundary_flip_prob, 3);
  table.metadata["min_area"] = std::to_string(config.min_area);

  std::optional<double> exact_miou;
  bool dominates = true;
  for (const double sigma : study.sigmas) {
    std::vector<ConfusionMatrix> per_image(n, ConfusionMatrix(registry.size()));
    std::vector<std::size_t> boxes(n, 0);
    parallel_for(n, config.jobs, [&](std::size_t i) {
      const auto& id = manifest.images[i].ref.image_id;
      NoiseSpec noise;
      noise.morph_radius = study.morph_radius;
      noise.boundary_flip_prob = study.boundary_flip_prob;
      noise.box_jitter_sigma = sigma;
      noise.seed = image_seed(config.seed, id);
      const auto truth = extract_gt_boxes(gts[i], registry, id, config.min_area);
      const auto dets = perturb_detections(truth, noise, gts[i].canvas());
      std::vector<LabeledMask> masks;
      for (std::size_t k = 0; k < dets.size(); ++k) {
        masks.push_back({oracle_segment(gts[i], dets[k], noise), dets[k].category,
                         dets[k].score, k});
      }
      boxes[i] = dets.size();
      per_image[i].accumulate(fuse(masks, for_image(strategy, id), gts[i].canvas()),
                              gts[i]);
    });
    SweepPoint p;
    p.confusion = ConfusionMatrix(registry.size());
    for (std::size_t i = 0; i < n; ++i) {
      p.confusion += per_image[i];
      p.surviving += boxes[i];
    }
    p.metrics = summarize(p.confusion, registry);
    const std::string label =
        sigma == 0.0 ? "gt_box (exact)" : "gt_box jitter sigma=" + fixed(sigma, 1);
    ReportRow row = make_row(label, p);
    row.extra.emplace_back("sigma", fixed(sigma, 2));
    row.extra.emplace_back("detections", std::to_string(p.surviving));
    table.rows.push_back(std::move(row));
    if (sigma == 0.0) exact_miou = p.metrics.miou;
  }
  if (exact_miou) {
    for (const auto& row : table.rows) {
      if (row.label != "gt_box (exact)" && row.metrics.miou >= *exact_miou) {
        dominates = false;
      }
    }
    table.metadata["exact_dominates"] = dominates ? "yes" : "no";
    if (!dominates) log << "warning: a jittered row matched or beat exact boxes\n";
  }
  write_table(table, config, "gtbox_study");
  for (const auto& row : table.rows) {
    log << row.label << ": mIoU " << format_percent(row.metrics.miou) << "\n";
  }
  return table;
}

// ---------------------------------------------------------------------------
// synth

SynthConfig synth_preset(std::string_view name) {
  SynthConfig c;
  if (name == "clean") return c;
  if (name == "disjoint") {
    c.shapes = {1, 1, 1, 1};
    c.kinds = {ShapeKind::kRectangle};
    return c;
  }
  if (name == "noisy") {
    c.overlap_bias = 1.0;
    c.noise.morph_radius = 1;
    c.noise.boundary_flip_prob = 0.05;
    c.noise.box_jitter_sigma = 1.0;
    c.detector = DetectorModel{};
    return c;
  }
  if (name == "contested") {
    c.shapes = {2, 3, 2, 1};
    c.size_scale = {0.8, 2.2, 0.6, 1.0};
    c.overlap_bias = 3.0;
    c.noise.morph_radius = 2;
    return c;
  }
  fail(ErrorKind::kInvalidArgument,
       "unknown preset '" + std::string(name) +
           "' (expected clean, disjoint, noisy or contested)");
}

DatasetManifest cmd_synth(const SynthConfig& config, std::ostream& log) {
  const ClassRegistry registry = ClassRegistry::m4d();
  const auto n_fg = registry.size() - 1;
  if (config.images < 0) fail(ErrorKind::kInvalidArgument, "negative image count");
  if (config.shapes.size() != n_fg) {
    fail(ErrorKind::kInvalidArgument,
         "need one shape count per foreground class (" + std::to_string(n_fg) + ")");
  }
  if (!config.size_scale.empty() && config.size_scale.size() != n_fg) {
    fail(ErrorKind::kInvalidArgument, "need one size scale per foreground class");
  }
  SceneSpec base;
  base.width = config.width;
  base.height = config.height;
  base.shapes_per_class.assign(1, 0);
  base.shapes_per_class.insert(base.shapes_per_class.end(), config.shapes.begin(),
                               config.shapes.end());
  base.kinds = config.kinds;
  base.overlap_bias = config.overlap_bias;
  if (!config.size_scale.empty()) {
    base.size_scale.assign(1, 1.0);
    base.size_scale.insert(base.size_scale.end(), config.size_scale.begin(),
                           config.size_scale.end());
  }
  base.validate(registry);
  config.noise.validate();

  DatasetManifest manifest;
  manifest.registry = registry;
  manifest.root = config.out;
  manifest.mask_ext = config.mask_ext;
  const auto count = static_cast<std::size_t>(config.images);
  for (std::size_t i = 0; i < count; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "scene_%04zu", i);
    manifest.images.push_back(
        {{id, config.width, config.height}, "gt/" + std::string(id) + ".png"});
  }
  manifest.validate();

  std::vector<std::vector<Detection>> dets(count);
  parallel_for(count, config.jobs, [&](std::size_t i) {
    const auto& img = manifest.images[i];
    SceneSpec spec = base;
    spec.seed = hash_combine(config.seed, i);
    const SemanticMap gt = generate_scene(spec, registry);
    NoiseSpec noise = config.noise;
    noise.seed = hash_combine(config.seed ^ 0x6e6f697365ULL, config.noise.seed);
    const auto sim = simulate_detector(gt, registry, img.ref.image_id, noise,
                                       config.detector, config.min_area);
    write_semantic(gt, manifest.resolve(img.gt));
    for (std::size_t k = 0; k < sim.masks.size(); ++k) {
      write_mask(sim.masks[k], manifest.mask_path(img.ref.image_id, k));
    }
    dets[i] = sim.detections;
  });
  std::vector<Detection> all;
  for (auto& d : dets) all.insert(all.end(), d.begin(), d.end());
  write_detections(all, manifest.detections_path(), registry);
  write_manifest(manifest, config.out / "manifest.json");
  log << "wrote " << count << " scenes and " << all.size() << " detections to "
      << config.out.string() << "\n";
  return manifest;
}

}  // namespace maskfuse
