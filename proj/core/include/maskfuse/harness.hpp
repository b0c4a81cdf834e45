#pragma once

// Experiment harness behind the `maskfuse` command line tool: fuse a
// dataset, evaluate predictions, and the order / threshold / gt-box sweeps.
// Every command is deterministic for fixed flags and seeds, whatever the
// number of worker threads.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "maskfuse/codec.hpp"
#include "maskfuse/fusion.hpp"
#include "maskfuse/manifest.hpp"
#include "maskfuse/metrics.hpp"
#include "maskfuse/oracle.hpp"

namespace maskfuse {

enum class ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kConfigError = 2,
  kPartialFailure = 3,
};

inline constexpr std::string_view kDefaultOrder = "ship,land,oil_spill,look_alike";
inline constexpr double kReferenceThreshold = 0.2;

struct RunConfig {
  std::filesystem::path manifest;
  std::string strategy = "ordered:" + std::string(kDefaultOrder);
  double score_threshold = kReferenceThreshold;
  bool clip_to_box = false;
  std::filesystem::path out = "out";
  int jobs = 1;
  ReportFormat format = ReportFormat::kCsv;
  std::uint64_t seed = 42;
  std::int64_t min_area = 1;
  // Colorized exports from `fuse`: empty = none, "default" = built-in colors,
  // otherwise a palette JSON path.
  std::string palette;
};

// MASKFUSE_JOBS when set to a positive integer, else 1.
int default_jobs();

// Runs f(0..n-1) on up to `jobs` threads. Rethrows the exception of the
// lowest failing index after all work has finished.
void parallel_for(std::size_t n, int jobs,
                  const std::function<void(std::size_t)>& f);

// ---- fuse -----------------------------------------------------------------

struct ImageFailure {
  std::string image_id;
  std::string error;
};

struct FuseSummary {
  std::size_t images = 0;
  std::size_t fused = 0;
  std::vector<ImageFailure> failures;
  ExitCode code = ExitCode::kOk;
};

// Writes <out>/<image_id>.png per image and <out>/fuse_summary.json.
FuseSummary cmd_fuse(const RunConfig& config, std::ostream& log);

// ---- eval -----------------------------------------------------------------

struct EvalOutcome {
  ReportTable table;
  ConfusionMatrix confusion;
  ExitCode code = ExitCode::kOk;
};

// Reads <pred_dir>/<image_id>.png (or .pgm) and the manifest's gt maps.
// Writes <out>/report.csv and <out>/report.json.
EvalOutcome cmd_eval(const RunConfig& config,
                     const std::filesystem::path& pred_dir, std::ostream& log);

// ---- in-memory sweeps -----------------------------------------------------

struct ImageInputs {
  ManifestImage image;
  std::vector<Detection> detections;
  std::vector<LabeledMask> masks;  // one per detection, same order
  std::set<CategoryPair> contention;
  std::uint64_t digest = 0;
  SemanticMap gt;
};

struct LoadedDataset {
  DatasetManifest manifest;
  std::vector<ImageInputs> images;
};

// Loads detections, every mask and every gt map. Throws on any missing or
// malformed input; sweeps need a complete dataset.
LoadedDataset load_dataset(const std::filesystem::path& manifest_path,
                           bool clip_to_box, int jobs);

// Fused maps addressed by (input digest, surviving detections, strategy key).
// Ordered strategies are keyed by their ranking of the category pairs that
// actually contend in the image, so orders that agree there share a map.
class FusionCache {
 public:
  std::shared_ptr<const SemanticMap> find(const std::string& key) const;
  void insert(const std::string& key, std::shared_ptr<const SemanticMap> map);

  std::size_t hits() const noexcept { return hits_; }
  std::size_t misses() const noexcept { return misses_; }

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<const SemanticMap>> maps_;
  mutable std::atomic<std::size_t> hits_{0};
  mutable std::atomic<std::size_t> misses_{0};
};

struct SweepPoint {
  MetricsReport metrics;
  ConfusionMatrix confusion;
  std::size_t surviving = 0;
};

class SweepEngine {
 public:
  SweepEngine(LoadedDataset data, int jobs);

  SweepPoint run(const FusionStrategy& strategy, double threshold);

  const LoadedDataset& data() const noexcept { return data_; }
  const FusionCache& cache() const noexcept { return cache_; }

  static std::string cache_key(const ImageInputs& image,
                               std::span<const std::size_t> surviving,
                               const FusionStrategy& strategy);

 private:
  LoadedDataset data_;
  int jobs_;
  FusionCache cache_;
};

// "all" (or an empty list) means every permutation plus random:<seed>.
// Entries are comma lists of class names or "random:<seed>". Rows sorted by
// mIoU descending; rows with identical confusion matrices share an
// equivalence class.
ReportTable cmd_sweep_order(const RunConfig& config,
                            const std::vector<std::string>& orders,
                            std::ostream& log);

// 0.0 .. 0.9 step 0.1
std::vector<double> default_threshold_grid();

ReportTable cmd_sweep_threshold(const RunConfig& config,
                                std::vector<double> thresholds,
                                std::ostream& log);

struct GtBoxStudyConfig {
  std::vector<double> sigmas = {0.0, 1.0, 2.0, 5.0};
  int morph_radius = 0;
  double boundary_flip_prob = 0.0;
};

// Needs only the manifest's gt maps.
ReportTable cmd_gtbox_study(const RunConfig& config,
                            const GtBoxStudyConfig& study, std::ostream& log);

// ---- synthetic datasets ---------------------------------------------------

struct SynthConfig {
  std::filesystem::path out = "synth";
  int images = 20;
  std::int32_t width = 64;
  std::int32_t height = 64;
  std::uint64_t seed = 42;
  // Per foreground class in registry order (index 0 = first foreground).
  std::vector<int> shapes = {2, 2, 1, 1};
  std::vector<ShapeKind> kinds = {ShapeKind::kRectangle, ShapeKind::kEllipse};
  double overlap_bias = 0.0;
  std::vector<double> size_scale;  // per foreground class, empty = 1
  NoiseSpec noise;
  DetectorModel detector{1.0, 0.0, 0.0, 0.0, 0.0};
  std::string mask_ext = "png";
  std::int64_t min_area = 1;
  int jobs = 1;
};

// Named starting points: "clean", "noisy", "contested", "disjoint".
SynthConfig synth_preset(std::string_view name);

// Writes gt maps, detections, masks and manifest.json under config.out.
DatasetManifest cmd_synth(const SynthConfig& config, std::ostream& log);

}  // namespace maskfuse
