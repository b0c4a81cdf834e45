#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "maskfuse/core.hpp"

namespace maskfuse {

// cells[gt][pred] pixel counts. Accumulation is cellwise addition, so any
// reduction order over images gives the same matrix.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t n_classes = 0);

  static ConfusionMatrix from_cells(std::size_t n_classes,
                                    std::vector<std::uint64_t> cells);

  std::size_t n_classes() const noexcept { return n_; }
  std::uint64_t at(std::size_t gt, std::size_t pred) const {
    return cells_[gt * n_ + pred];
  }
  const std::vector<std::uint64_t>& cells() const noexcept { return cells_; }

  std::uint64_t total() const noexcept;
  std::uint64_t true_positives(std::size_t c) const { return at(c, c); }
  std::uint64_t false_positives(std::size_t c) const;  // column minus diagonal
  std::uint64_t false_negatives(std::size_t c) const;  // row minus diagonal

  void accumulate(const SemanticMap& pred, const SemanticMap& gt);
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint64_t> cells_;
};

ConfusionMatrix confusion_accumulate(const SemanticMap& pred,
                                     const SemanticMap& gt,
                                     ConfusionMatrix acc);

// TP / (TP + FP + FN); nullopt when the class has an empty union.
std::vector<std::optional<double>> iou_per_class(const ConfusionMatrix& cm);

// Dice/F1 from IoU: 2 iou / (1 + iou).
double f1_from_iou(double iou);

inline constexpr const char* kZeroUnionExcluded = "excluded";

struct MetricsReport {
  std::vector<std::optional<double>> per_class_iou;  // index = class id
  std::vector<std::optional<double>> per_class_f1;
  double miou = 0.0;
  double mf1 = 0.0;
  std::vector<ClassId> evaluated_classes;
  // Classes with an empty union are left out of the means above. This is
  // the mean IoU when they are scored as 0 instead, for comparison.
  double miou_absent_as_zero = 0.0;
  std::string zero_union_policy = kZeroUnionExcluded;

  bool operator==(const MetricsReport&) const = default;
};

// Means over the classes with a defined IoU, background included. Throws
// kNoData for an empty matrix.
MetricsReport summarize(const ConfusionMatrix& cm,
                        const ClassRegistry& registry);

// Same derivation starting from per-class IoUs, for rebuilding a report
// from externally reported numbers.
MetricsReport report_from_ious(std::span<const std::optional<double>> ious);

}  // namespace maskfuse
