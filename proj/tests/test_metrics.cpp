#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "maskfuse/error.hpp"
#include "maskfuse/metrics.hpp"
#include "support.hpp"

namespace maskfuse {
namespace {

TEST(Confusion, TwoByTwoExample) {
  const Canvas c{2, 2};
  const SemanticMap gt(c, {0, 0, 1, 1});
  const SemanticMap pred(c, {0, 1, 1, 1});
  ConfusionMatrix cm(2);
  cm.accumulate(pred, gt);
  EXPECT_EQ(cm.at(0, 0), 1u);
  EXPECT_EQ(cm.at(0, 1), 1u);
  EXPECT_EQ(cm.at(1, 0), 0u);
  EXPECT_EQ(cm.at(1, 1), 2u);
  const auto iou = iou_per_class(cm);
  EXPECT_DOUBLE_EQ(*iou[0], 1.0 / 2.0);
  EXPECT_DOUBLE_EQ(*iou[1], 2.0 / 3.0);
  const std::vector<std::string> names{"bg", "fg"};
  const auto report = summarize(cm, ClassRegistry::make(names, "bg"));
  EXPECT_DOUBLE_EQ(report.miou, 7.0 / 12.0);
  EXPECT_DOUBLE_EQ(report.mf1, (2.0 / 3.0 + 0.8) / 2.0);
}

TEST(Confusion, RejectsMismatch) {
  ConfusionMatrix cm(2);
  EXPECT_THROW(cm.accumulate(SemanticMap({2, 2}), SemanticMap({2, 3})), Error);
  EXPECT_THROW(cm.accumulate(SemanticMap({1, 1}, {2}), SemanticMap({1, 1})), Error);
  EXPECT_THROW(summarize(ConfusionMatrix(5), ClassRegistry::m4d()), Error);
  EXPECT_THROW(summarize(ConfusionMatrix(3), ClassRegistry::m4d()), Error);
}

TEST(Confusion, IouMatchesPixelSets) {
  std::mt19937_64 gen(17);
  for (int iter = 0; iter < 500; ++iter) {
    const Canvas c{static_cast<std::int32_t>(gen() % 16 + 1),
                   static_cast<std::int32_t>(gen() % 16 + 1)};
    const int k = static_cast<int>(gen() % 5 + 1);
    const auto gt = testing::random_map(gen, c, k);
    const auto pred = testing::random_map(gen, c, k);
    ConfusionMatrix cm(static_cast<std::size_t>(k));
    cm.accumulate(pred, gt);
    ASSERT_EQ(cm.total(), c.pixels());
    const auto iou = iou_per_class(cm);
    for (int cls = 0; cls < k; ++cls) {
      const auto expected = testing::set_iou(pred, gt, static_cast<ClassId>(cls));
      ASSERT_EQ(iou[cls].has_value(), expected.has_value());
      if (expected) {
        ASSERT_NEAR(*iou[cls], *expected, 1e-12);
      }
    }
  }
}

TEST(Confusion, AggregationOrderInvariant) {
  std::mt19937_64 gen(23);
  std::vector<std::pair<SemanticMap, SemanticMap>> pairs;
  for (int i = 0; i < 10; ++i) {
    pairs.emplace_back(testing::random_map(gen, {7, 5}, 5), testing::random_map(gen, {7, 5}, 5));
  }
  ConfusionMatrix forward(5), backward(5);
  for (const auto& [p, g] : pairs) forward.accumulate(p, g);
  for (auto it = pairs.rbegin(); it != pairs.rend(); ++it) {
    backward = confusion_accumulate(it->first, it->second, backward);
  }
  EXPECT_EQ(forward, backward);
}

TEST(Summary, ZeroUnionClassIsExcluded) {
  // Classes 0 and 1 present, 2 never appears in either map.
  const auto cm = ConfusionMatrix::from_cells(3, {3, 1, 0, 0, 4, 0, 0, 0, 0});
  const std::vector<std::string> names{"bg", "a", "b"};
  const auto r = summarize(cm, ClassRegistry::make(names, "bg"));
  EXPECT_FALSE(r.per_class_iou[2].has_value());
  EXPECT_EQ(r.evaluated_classes, (std::vector<ClassId>{0, 1}));
  EXPECT_DOUBLE_EQ(r.miou, (0.75 + 0.8) / 2.0);
  EXPECT_DOUBLE_EQ(r.miou_absent_as_zero, (0.75 + 0.8) / 3.0);
  EXPECT_EQ(r.zero_union_policy, "excluded");
}

TEST(Summary, F1FromIou) {
  EXPECT_DOUBLE_EQ(f1_from_iou(0.0), 0.0);
  EXPECT_DOUBLE_EQ(f1_from_iou(1.0), 1.0);
  EXPECT_DOUBLE_EQ(f1_from_iou(0.5), 2.0 / 3.0);
}

// Reference rows: per-class IoU with the mIoU and mF1 reported next to them.
struct ReferenceRow {
  const char* name;
  double iou[5];
  double miou;
  double mf1;
};

constexpr ReferenceRow kReferenceRows[] = {
    {"U-Net", {92.21, 43.92, 31.04, 21.07, 90.74}, 55.79, 66.86},
    {"PSPNet", {96.80, 44.37, 59.77, 27.61, 92.78}, 64.27, 74.84},
    {"UPerNet", {96.51, 48.67, 58.17, 31.38, 93.89}, 65.72, 76.37},
    {"DeepLabV3+", {97.01, 49.09, 61.79, 36.99, 93.06}, 67.59, 78.22},
    {"OCRNet", {97.03, 50.07, 63.53, 32.65, 94.11}, 67.48, 77.82},
    {"YOLOv8-SAM", {94.34, 41.84, 48.15, 52.48, 87.65}, 64.89, 76.67},
    {"YOLOv8-SAM+OMF+Adapter", {96.05, 51.60, 55.60, 52.55, 91.81}, 69.52, 80.43},
};

TEST(Summary, ReferenceRowsF1Identity) {
  for (const auto& row : kReferenceRows) {
    std::vector<std::optional<double>> ious;
    double f1_sum = 0.0;
    for (const double v : row.iou) {
      ious.emplace_back(v / 100.0);
      f1_sum += 2.0 * (v / 100.0) / (1.0 + v / 100.0);
    }
    const auto r = report_from_ious(ious);
    EXPECT_NEAR(r.mf1 * 100.0, f1_sum / 5.0 * 100.0, 1e-9) << row.name;
    EXPECT_NEAR(r.mf1 * 100.0, row.mf1, 0.02) << row.name;
    EXPECT_NEAR(r.miou * 100.0, row.miou, 0.01) << row.name;
  }
}

}  // namespace
}  // namespace maskfuse
