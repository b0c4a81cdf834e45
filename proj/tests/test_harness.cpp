#include <gtest/gtest.h>

#include <cstdlib>
#include <map>
#include <sstream>

#include "maskfuse/error.hpp"
#include "maskfuse/harness.hpp"
#include "maskfuse/image_io.hpp"
#include "support.hpp"

namespace maskfuse {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

fs::path make_dataset(const fs::path& dir, const std::string& preset, int images,
                      std::uint64_t seed = 42) {
  SynthConfig c = synth_preset(preset);
  c.out = dir;
  c.images = images;
  c.seed = seed;
  std::ostringstream log;
  cmd_synth(c, log);
  return dir / "manifest.json";
}

RunConfig run_config(const fs::path& manifest, const fs::path& out) {
  RunConfig c;
  c.manifest = manifest;
  c.out = out;
  return c;
}

const std::string* extra(const ReportRow& row, const std::string& key) {
  for (const auto& [k, v] : row.extra) {
    if (k == key) return &v;
  }
  return nullptr;
}

TEST(Jobs, EnvironmentDefault) {
  ::setenv("MASKFUSE_JOBS", "6", 1);
  EXPECT_EQ(default_jobs(), 6);
  ::setenv("MASKFUSE_JOBS", "zero", 1);
  EXPECT_EQ(default_jobs(), 1);
  ::unsetenv("MASKFUSE_JOBS");
  EXPECT_EQ(default_jobs(), 1);
}

TEST(Jobs, ParallelForRethrowsLowestIndex) {
  std::vector<int> hit(100, 0);
  parallel_for(hit.size(), 4, [&](std::size_t i) { hit[i] = 1; });
  EXPECT_EQ(std::count(hit.begin(), hit.end(), 1), 100);
  try {
    parallel_for(50, 4, [](std::size_t i) {
      if (i == 7 || i == 30) fail(ErrorKind::kIo, "item " + std::to_string(i));
    });
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "item 7");
  }
}

TEST(Synth, WritesConsistentDataset) {
  TempDir dir("synth");
  const auto manifest_path = make_dataset(dir.path() / "ds", "noisy", 4);
  const auto m = read_manifest(manifest_path);
  ASSERT_EQ(m.images.size(), 4u);
  const auto dets = read_detections(m.detections_path(), m.registry);
  std::map<std::string, std::size_t> per_image;
  for (const auto& d : dets) {
    EXPECT_TRUE(fs::exists(m.mask_path(d.image_id, per_image[d.image_id]++)));
  }
  EXPECT_THROW(synth_preset("bogus"), Error);
}

TEST(Fuse, ThenEvalMatchesSweep) {
  TempDir dir("fuse");
  const auto manifest = make_dataset(dir.path() / "ds", "noisy", 6);
  auto config = run_config(manifest, dir.path() / "pred");
  config.palette = "default";
  std::ostringstream log;
  const auto summary = cmd_fuse(config, log);
  EXPECT_EQ(summary.code, ExitCode::kOk);
  EXPECT_EQ(summary.fused, 6u);
  EXPECT_TRUE(fs::exists(dir.path() / "pred" / "fuse_summary.json"));
  EXPECT_TRUE(fs::exists(dir.path() / "pred" / "color" / "scene_0000.png"));

  config.out = dir.path() / "eval";
  const auto outcome = cmd_eval(config, dir.path() / "pred", log);
  EXPECT_EQ(outcome.code, ExitCode::kOk);
  ASSERT_EQ(outcome.table.rows.size(), 1u);
  EXPECT_TRUE(fs::exists(dir.path() / "eval" / "report.csv"));
  EXPECT_TRUE(fs::exists(dir.path() / "eval" / "report.json"));

  SweepEngine engine(load_dataset(manifest, false, 1), 1);
  const auto point = engine.run(parse_strategy(config.strategy, engine.data().manifest.registry),
                                config.score_threshold);
  EXPECT_EQ(point.confusion, outcome.confusion);
}

TEST(Fuse, MissingMaskIsPartialFailure) {
  TempDir dir("partial");
  const auto manifest = make_dataset(dir.path() / "ds", "clean", 3);
  const auto m = read_manifest(manifest);
  fs::remove(m.mask_path("scene_0001", 0));
  std::ostringstream log;
  const auto summary = cmd_fuse(run_config(manifest, dir.path() / "out"), log);
  EXPECT_EQ(summary.code, ExitCode::kPartialFailure);
  EXPECT_EQ(summary.fused, 2u);
  ASSERT_EQ(summary.failures.size(), 1u);
  EXPECT_EQ(summary.failures[0].image_id, "scene_0001");

  // Evaluation skips the missing prediction and says so.
  auto config = run_config(manifest, dir.path() / "eval");
  const auto outcome = cmd_eval(config, dir.path() / "out", log);
  EXPECT_EQ(outcome.code, ExitCode::kPartialFailure);
  EXPECT_EQ(outcome.table.skipped_images, (std::vector<std::string>{"scene_0001"}));
  EXPECT_THROW(load_dataset(manifest, false, 1), Error);
}

TEST(Fuse, BadConfigThrows) {
  TempDir dir("badcfg");
  const auto manifest = make_dataset(dir.path() / "ds", "clean", 1);
  std::ostringstream log;
  auto config = run_config(manifest, dir.path() / "out");
  config.strategy = "ordered:ship,land";
  EXPECT_THROW(cmd_fuse(config, log), Error);
  config = run_config(manifest, dir.path() / "out");
  config.score_threshold = 2.0;
  EXPECT_THROW(cmd_fuse(config, log), Error);
  config = run_config(dir.path() / "nope.json", dir.path() / "out");
  EXPECT_THROW(cmd_fuse(config, log), Error);
}

TEST(SweepOrder, AllGivesTwentyFiveRowsAndSharedClasses) {
  TempDir dir("order");
  const auto manifest = make_dataset(dir.path() / "ds", "contested", 8);
  std::ostringstream log;
  const auto table = cmd_sweep_order(run_config(manifest, dir.path() / "out"), {"all"}, log);
  ASSERT_EQ(table.rows.size(), 25u);
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    EXPECT_GE(table.rows[i - 1].metrics.miou, table.rows[i].metrics.miou);
  }
  for (const auto& a : table.rows) {
    for (const auto& b : table.rows) {
      EXPECT_EQ(*extra(a, "equiv_class") == *extra(b, "equiv_class"),
                a.confusion == b.confusion);
    }
  }
  EXPECT_TRUE(fs::exists(dir.path() / "out" / "sweep_order.csv"));
  EXPECT_THROW(cmd_sweep_order(run_config(manifest, dir.path() / "out"),
                               {"ship,land,oil_spill,look_alike",
                                "ship,land,oil_spill,look_alike"},
                               log),
               Error);
}

TEST(SweepOrder, DisjointMasksMakeEveryStrategyEqual) {
  TempDir dir("disjoint");
  const auto manifest = make_dataset(dir.path() / "ds", "disjoint", 6);
  std::ostringstream log;
  const auto table = cmd_sweep_order(run_config(manifest, dir.path() / "out"), {}, log);
  ASSERT_EQ(table.rows.size(), 25u);
  for (const auto& row : table.rows) {
    EXPECT_EQ(row.metrics, table.rows[0].metrics);
    EXPECT_EQ(*extra(row, "equiv_class"), "E1");
  }
}

// Look-alike shapes generated largest and most overlapping: ranking them
// first should be the worst choice and ship or land first the best.
TEST(SweepOrder, LookAlikeFirstIsWorstOnContestedData) {
  TempDir dir("directional");
  const auto manifest = make_dataset(dir.path() / "ds", "contested", 30);
  std::ostringstream log;
  const auto table = cmd_sweep_order(run_config(manifest, dir.path() / "out"), {"all"}, log);
  std::map<std::string, std::vector<double>> by_first;
  for (const auto& row : table.rows) {
    if (!row.label.starts_with("ordered:")) continue;
    const auto first = row.label.substr(8, row.label.find(',') - 8);
    by_first[first].push_back(row.metrics.miou);
  }
  std::map<std::string, double> mean;
  for (const auto& [k, v] : by_first) {
    double s = 0;
    for (const double x : v) s += x;
    mean[k] = s / static_cast<double>(v.size());
  }
  for (const auto& [k, m] : mean) {
    if (k != "look_alike") {
      EXPECT_LT(mean["look_alike"], m) << k;
    }
  }
  EXPECT_GT(std::max(mean["ship"], mean["land"]),
            std::max(mean["oil_spill"], mean["look_alike"]));
}

TEST(SweepThreshold, CountsMonotoneAndReferenceFlagged) {
  TempDir dir("threshold");
  const auto manifest = make_dataset(dir.path() / "ds", "noisy", 8);
  std::ostringstream log;
  const auto table = cmd_sweep_threshold(run_config(manifest, dir.path() / "out"),
                                         {0.0, 0.2, 0.5, 1.0}, log);
  ASSERT_EQ(table.rows.size(), 4u);
  std::size_t previous = SIZE_MAX;
  int references = 0;
  for (const auto& row : table.rows) {
    const auto count = std::stoul(*extra(row, "detections"));
    EXPECT_LE(count, previous);
    previous = count;
    if (*extra(row, "reference") == "yes") {
      ++references;
      EXPECT_EQ(row.label, "t=0.20");
    }
  }
  EXPECT_EQ(references, 1);
  EXPECT_EQ(*extra(table.rows.back(), "detections"), "0");
  EXPECT_EQ(default_threshold_grid().size(), 10u);
}

TEST(GtBoxStudy, ExactBoxesScorePerfectly) {
  TempDir dir("gtbox");
  const auto manifest = make_dataset(dir.path() / "ds", "noisy", 20);
  std::ostringstream log;
  GtBoxStudyConfig study;
  study.sigmas = {0.0, 5.0};
  const auto table = cmd_gtbox_study(run_config(manifest, dir.path() / "out"), study, log);
  ASSERT_EQ(table.rows.size(), 2u);
  EXPECT_EQ(format_percent(table.rows[0].metrics.miou), "100.00");
  EXPECT_LT(table.rows[1].metrics.miou, table.rows[0].metrics.miou);
  EXPECT_EQ(table.metadata.at("exact_dominates"), "yes");
}

TEST(Cache, OrdersAgreeingOnContentionShareEntries) {
  TempDir dir("cache");
  const auto manifest = make_dataset(dir.path() / "ds", "disjoint", 3);
  SweepEngine engine(load_dataset(manifest, false, 1), 1);
  const auto& reg = engine.data().manifest.registry;
  for (const auto& o : FusionOrder::all_permutations(reg)) {
    engine.run(OrderedStrategy{o}, 0.2);
  }
  EXPECT_EQ(engine.cache().misses(), 3u);
  EXPECT_EQ(engine.cache().hits(), 23u * 3u);
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) {
      files[fs::relative(e.path(), root).string()] = read_file(e.path());
    }
  }
  return files;
}

TEST(Determinism, JobsDoNotChangeOutputs) {
  TempDir dir("det");
  const auto manifest = make_dataset(dir.path() / "ds", "noisy", 12);
  std::ostringstream log;
  for (const std::string& strategy :
       {std::string("ordered:ship,land,oil_spill,look_alike"), std::string("random:7")}) {
    std::map<std::string, std::string> trees[2];
    int slot = 0;
    for (const int jobs : {1, 8}) {
      auto config = run_config(manifest, dir.path() / ("fuse" + std::to_string(jobs)));
      config.jobs = jobs;
      config.strategy = strategy;
      cmd_fuse(config, log);
      const auto pred = config.out;
      config.out = dir.path() / ("eval" + std::to_string(jobs));
      cmd_eval(config, pred, log);
      auto tree = read_tree(pred);
      for (auto& [k, v] : read_tree(config.out)) tree["eval/" + k] = v;
      trees[slot++] = std::move(tree);
    }
    EXPECT_EQ(trees[0], trees[1]) << strategy;
  }
}

}  // namespace
}  // namespace maskfuse
