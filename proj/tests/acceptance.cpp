// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "maskfuse/codec.hpp"
#include "maskfuse/error.hpp"
#include "maskfuse/harness.hpp"
#include "maskfuse/image_io.hpp"
#include "support.hpp"

namespace {

using namespace maskfuse;
namespace fs = std::filesystem;

const ClassRegistry kReg = ClassRegistry::m4d();

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& why) {
    if (!ok && pass) {
      pass = false;
      detail = why;
    }
  }
};

Outcome f1_identity() {
  struct Row {
    const char* name;
    double iou[5];
    double mf1;
  };
  const Row rows[] = {
      {"U-Net", {92.21, 43.92, 31.04, 21.07, 90.74}, 66.86},
      {"PSPNet", {96.80, 44.37, 59.77, 27.61, 92.78}, 74.84},
      {"UPerNet", {96.51, 48.67, 58.17, 31.38, 93.89}, 76.37},
      {"DeepLabV3+", {97.01, 49.09, 61.79, 36.99, 93.06}, 78.22},
      {"OCRNet", {97.03, 50.07, 63.53, 32.65, 94.11}, 77.82},
      {"YOLOv8-SAM", {94.34, 41.84, 48.15, 52.48, 87.65}, 76.67},
      {"YOLOv8-SAM+OMF+Adapter", {96.05, 51.60, 55.60, 52.55, 91.81}, 80.43},
  };
  Outcome o;
  double worst = 0.0;
  for (const auto& r : rows) {
    std::vector<std::optional<double>> ious;
    for (const double v : r.iou) ious.emplace_back(v / 100.0);
    const double diff = std::abs(report_from_ious(ious).mf1 * 100.0 - r.mf1);
    worst = std::max(worst, diff);
    o.require(diff <= 0.02, std::string(r.name) + " off by " + std::to_string(diff));
  }
  if (o.pass) o.detail = "7 rows, max |diff| " + std::to_string(worst) + " pp";
  return o;
}

Outcome omf_oracle() {
  Outcome o;
  std::mt19937_64 gen(1);
  const auto perms = FusionOrder::all_permutations(kReg);
  int scenes = 0;
  for (; scenes < 250; ++scenes) {
    const Canvas c{static_cast<std::int32_t>(gen() % 64 + 1),
                   static_cast<std::int32_t>(gen() % 64 + 1)};
    const auto masks = testing::random_masks(gen, c, 10, kReg.foreground_ids());
    for (const auto& order : perms) {
      o.require(ordered_mask_fusion(masks, order, c) ==
                    testing::priority_oracle(masks, order, c),
                "scene " + std::to_string(scenes) + " order " + order.to_string(kReg));
    }
  }
  if (o.pass) o.detail = std::to_string(scenes) + " scenes x 24 orders";
  return o;
}

fs::path synth(const fs::path& dir, const std::string& preset, int images,
               std::uint64_t seed = 42) {
  SynthConfig c = synth_preset(preset);
  c.out = dir;
  c.images = images;
  c.seed = seed;
  std::ostringstream log;
  cmd_synth(c, log);
  return dir / "manifest.json";
}

RunConfig run_config(const fs::path& manifest, const fs::path& out, int jobs = 1) {
  RunConfig c;
  c.manifest = manifest;
  c.out = out;
  c.jobs = jobs;
  return c;
}

Outcome restriction_equivalence(const fs::path& work) {
  Outcome o;
  std::mt19937_64 gen(2);
  const auto perms = FusionOrder::all_permutations(kReg);
  std::size_t agreeing_pairs = 0;
  for (int scene = 0; scene < 100; ++scene) {
    const Canvas c{16, 16};
    const auto masks = testing::random_masks(gen, c, 6, kReg.foreground_ids());
    const auto pairs = contending_pairs(masks);
    const auto gt = testing::random_map(gen, c, 5);
    for (std::size_t i = 0; i < perms.size(); ++i) {
      for (std::size_t j = i + 1; j < perms.size(); ++j) {
        bool agree = true;
        for (const auto& [a, b] : pairs) {
          agree = agree && perms[i].precedes(a, b) == perms[j].precedes(a, b);
        }
        if (!agree) continue;
        ++agreeing_pairs;
        const auto mi = ordered_mask_fusion(masks, perms[i], c);
        const auto mj = ordered_mask_fusion(masks, perms[j], c);
        ConfusionMatrix ci(5), cj(5);
        ci.accumulate(mi, gt);
        cj.accumulate(mj, gt);
        o.require(mi == mj && summarize(ci, kReg) == summarize(cj, kReg),
                  "scene " + std::to_string(scene));
      }
    }
  }
  std::ostringstream log;
  const auto table =
      cmd_sweep_order(run_config(synth(work / "disjoint", "disjoint", 10), work / "so"),
                      {"all"}, log);
  o.require(table.rows.size() == 25, "sweep produced " + std::to_string(table.rows.size()));
  for (const auto& row : table.rows) {
    o.require(row.metrics == table.rows[0].metrics, "row " + row.label + " differs");
  }
  if (o.pass) {
    o.detail = std::to_string(agreeing_pairs) +
               " agreeing order pairs; 25 identical rows on disjoint data";
  }
  return o;
}

Outcome oracle_closure(const fs::path& work) {
  Outcome o;
  const auto manifest = synth(work / "closure", "noisy", 24);
  GtBoxStudyConfig study;
  study.sigmas = {0.0, 5.0};
  std::ostringstream log;
  auto config = run_config(manifest, work / "gb");
  config.min_area = 1;
  const auto table = cmd_gtbox_study(config, study, log);
  const double exact = table.rows.at(0).metrics.miou;
  const double jitter = table.rows.at(1).metrics.miou;
  o.require(format_percent(exact) == "100.00", "exact mIoU " + format_percent(exact));
  o.require(jitter < exact, "jittered mIoU " + format_percent(jitter) + " not below exact");
  if (o.pass) {
    o.detail = "24 scenes: exact " + format_percent(exact) + ", sigma 5 " +
               format_percent(jitter);
  }
  return o;
}

Outcome filter_semantics() {
  Outcome o;
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int iter = 0; iter < 1000; ++iter) {
    std::vector<Detection> dets(gen() % 25);
    for (auto& d : dets) {
      d = {"img", 1, {0, 0, 1, 1}, gen() % 3 == 0 ? (gen() % 11) / 10.0 : unit(gen)};
    }
    double t1 = gen() % 2 ? unit(gen) : (gen() % 11) / 10.0;
    double t2 = gen() % 2 ? unit(gen) : (gen() % 11) / 10.0;
    if (t1 > t2) std::swap(t1, t2);
    const auto s1 = surviving_indices(dets, {t1});
    const auto s2 = surviving_indices(dets, {t2});
    std::size_t expected = 0;
    for (const auto& d : dets) expected += d.score > t1;
    o.require(s1.size() == expected, "strictness");
    o.require(std::includes(s1.begin(), s1.end(), s2.begin(), s2.end()), "nesting");
    o.require(s2.size() <= s1.size(), "monotone counts");
    o.require(filter_detections(dets, {t2}).size() == s2.size(), "filter/indices agree");
  }
  if (o.pass) o.detail = "1000 random lists";
  return o;
}

Outcome metrics_brute_force() {
  Outcome o;
  std::mt19937_64 gen(4);
  double worst = 0.0;
  for (int iter = 0; iter < 500; ++iter) {
    const Canvas c{static_cast<std::int32_t>(gen() % 16 + 1),
                   static_cast<std::int32_t>(gen() % 16 + 1)};
    const auto gt = testing::random_map(gen, c, 5);
    const auto pred = testing::random_map(gen, c, 5);
    ConfusionMatrix cm(5);
    cm.accumulate(pred, gt);
    const auto iou = iou_per_class(cm);
    for (ClassId k = 0; k < 5; ++k) {
      const auto ref = testing::set_iou(pred, gt, k);
      o.require(ref.has_value() == iou[k].has_value(), "definedness");
      if (ref && iou[k]) {
        worst = std::max(worst, std::abs(*ref - *iou[k]));
        o.require(std::abs(*ref - *iou[k]) <= 1e-12, "IoU mismatch");
      }
    }
  }
  if (o.pass) o.detail = "500 map pairs, max |diff| " + std::to_string(worst);
  return o;
}

Outcome codec_round_trips() {
  Outcome o;
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int iter = 0; iter < 1000; ++iter) {
    const Canvas c{static_cast<std::int32_t>(gen() % 16 + 1),
                   static_cast<std::int32_t>(gen() % 16 + 1)};
    std::vector<std::uint8_t> bits(c.pixels());
    for (auto& b : bits) b = gen() % 2;
    const auto mask = BinaryMask::encode(bits, c);
    o.require(mask.decode() == bits, "bitmap");
    o.require(parse_rle_json(format_rle_json(mask)) == mask, "rle json");
    o.require(mask_from_image(decode_png(encode_png(mask_to_image(mask)), 1)) == mask,
              "mask png");

    const auto map = testing::random_map(gen, c, 5);
    const Image8 raster{c.width, c.height, 1, {map.labels().begin(), map.labels().end()}};
    o.require(decode_png(encode_png(raster), 1) == raster, "semantic png");
    o.require(decode_pnm(encode_pnm(raster), 1) == raster, "semantic pgm");

    Detection d{"img" + std::to_string(iter), static_cast<ClassId>(gen() % 4 + 1),
                {0, 0, 1, 1}, unit(gen)};
    d.bbox.x0 = static_cast<std::int32_t>(gen() % 200);
    d.bbox.y0 = static_cast<std::int32_t>(gen() % 200);
    d.bbox.x1 = d.bbox.x0 + 1 + static_cast<std::int32_t>(gen() % 200);
    d.bbox.y1 = d.bbox.y0 + 1 + static_cast<std::int32_t>(gen() % 200);
    o.require(parse_detection_line(format_detection_line(d, kReg), kReg) == d, "detection");

    ReportTable t;
    t.class_names = kReg.names();
    std::vector<std::optional<double>> ious(5);
    for (auto& v : ious) {
      if (gen() % 6) v = unit(gen);
    }
    ReportRow row{"r", report_from_ious(ious), {{"k", std::to_string(iter)}}, {}};
    t.rows.push_back(row);
    const auto json = format_report_json(t);
    o.require(parse_report_json(json) == t && format_report_json(parse_report_json(json)) == json,
              "report json");
  }

  const std::string valid[] = {
      format_rle_json(BinaryMask::full({3, 2})),
      format_detection_line({"a", 2, {0, 0, 3, 2}, 0.5}, kReg),
      encode_png(mask_to_image(BinaryMask::full({3, 2}))),
      format_report_json(ReportTable{kReg.names(), {}, {}, {}}),
  };
  int structured = 0;
  for (int iter = 0; iter < 1000; ++iter) {
    std::string s = valid[iter % 4];
    for (int e = 0; e < 3 && !s.empty(); ++e) {
      const auto pos = gen() % s.size();
      if (gen() % 2) {
        s[pos] = static_cast<char>(gen());
      } else {
        s.erase(pos, 1);
      }
    }
    try {
      switch (iter % 4) {
        case 0: parse_rle_json(s); break;
        case 1: parse_detection_line(s, kReg); break;
        case 2: mask_from_image(decode_png(s, 1)); break;
        default: parse_report_json(s); break;
      }
    } catch (const Error&) {
      ++structured;
    } catch (const std::exception& e) {
      o.require(false, std::string("unstructured error: ") + e.what());
    }
  }
  if (o.pass) {
    o.detail = "1000 valid instances; " + std::to_string(structured) +
               "/1000 corrupted inputs rejected with structured errors";
  }
  return o;
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = read_file(e.path());
  }
  return files;
}

Outcome parallel_determinism(const fs::path& work) {
  Outcome o;
  const auto manifest = synth(work / "det", "noisy", 50);
  std::ostringstream log;
  for (const std::string& strategy : {std::string("ordered:ship,land,oil_spill,look_alike"),
                                     std::string("random:42")}) {
    std::map<std::string, std::string> trees[2];
    for (const int jobs : {1, 8}) {
      const auto tag = std::to_string(jobs) + strategy.substr(0, 6);
      auto config = run_config(manifest, work / ("fuse" + tag), jobs);
      config.strategy = strategy;
      cmd_fuse(config, log);
      const auto pred = config.out;
      config.out = work / ("eval" + tag);
      cmd_eval(config, pred, log);
      auto tree = read_tree(pred);
      for (auto& [k, v] : read_tree(config.out)) tree["eval/" + k] = v;
      trees[jobs == 1 ? 0 : 1] = std::move(tree);
    }
    o.require(trees[0].size() == 53, "unexpected file count");
    o.require(trees[0] == trees[1], strategy + " outputs differ");
  }
  if (o.pass) o.detail = "50 images, ordered and random, fuse + eval byte-identical";
  return o;
}

}  // namespace

int main() {
  testing::TempDir work("acceptance");
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"reference-row mF1 identity", f1_identity},
      {"OMF equals per-pixel priority oracle", omf_oracle},
      {"restriction equivalence", [&] { return restriction_equivalence(work.path()); }},
      {"oracle closure", [&] { return oracle_closure(work.path()); }},
      {"filter semantics", filter_semantics},
      {"metrics brute force", metrics_brute_force},
      {"codec round-trips", codec_round_trips},
      {"determinism under parallelism", [&] { return parallel_determinism(work.path()); }},
  };
  int failed = 0;
  int index = 1;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] %d. %s: %s\n", o.pass ? "PASS" : "FAIL", index++, name,
                o.detail.c_str());
    failed += !o.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed,
              std::size(criteria));
  return failed == 0 ? 0 : 1;
}
