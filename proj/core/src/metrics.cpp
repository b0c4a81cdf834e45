#include "maskfuse/metrics.hpp"

#include <numeric>

#include "maskfuse/error.hpp"

namespace maskfuse {

ConfusionMatrix::ConfusionMatrix(std::size_t n_classes)
    : n_(n_classes), cells_(n_classes * n_classes, 0) {}

ConfusionMatrix ConfusionMatrix::from_cells(std::size_t n_classes,
                                            std::vector<std::uint64_t> cells) {
  if (cells.size() != n_classes * n_classes) {
    fail(ErrorKind::kDimensionMismatch,
         "confusion matrix needs " + std::to_string(n_classes * n_classes) +
             " cells, got " + std::to_string(cells.size()));
  }
  ConfusionMatrix cm;
  cm.n_ = n_classes;
  cm.cells_ = std::move(cells);
  return cm;
}

std::uint64_t ConfusionMatrix::total() const noexcept {
  return std::accumulate(cells_.begin(), cells_.end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::false_positives(std::size_t c) const {
  std::uint64_t s = 0;
  for (std::size_t g = 0; g < n_; ++g) {
    if (g != c) s += at(g, c);
  }
  return s;
}

std::uint64_t ConfusionMatrix::false_negatives(std::size_t c) const {
  std::uint64_t s = 0;
  for (std::size_t p = 0; p < n_; ++p) {
    if (p != c) s += at(c, p);
  }
  return s;
}

void ConfusionMatrix::accumulate(const SemanticMap& pred,
                                 const SemanticMap& gt) {
  if (pred.canvas() != gt.canvas()) {
    fail(ErrorKind::kDimensionMismatch,
         "prediction is " + std::to_string(pred.width()) + "x" +
             std::to_string(pred.height()) + ", ground truth is " +
             std::to_string(gt.width()) + "x" + std::to_string(gt.height()));
  }
  const auto p = pred.labels();
  const auto g = gt.labels();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] >= n_ || g[i] >= n_) {
      fail(ErrorKind::kInvalidArgument,
           "label out of range at pixel " + std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < p.size(); ++i) ++cells_[g[i] * n_ + p[i]];
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.n_ != n_) {
    fail(ErrorKind::kDimensionMismatch,
         "cannot merge confusion matrices of different class counts");
  }
  for (std::size_t i = 0; i < cells_.size(); ++i) cells_[i] += other.cells_[i];
  return *this;
}

ConfusionMatrix confusion_accumulate(const SemanticMap& pred,
                                     const SemanticMap& gt,
                                     ConfusionMatrix acc) {
  acc.accumulate(pred, gt);
  return acc;
}

std::vector<std::optional<double>> iou_per_class(const ConfusionMatrix& cm) {
  std::vector<std::optional<double>> out(cm.n_classes());
  for (std::size_t c = 0; c < cm.n_classes(); ++c) {
    const std::uint64_t tp = cm.true_positives(c);
    const std::uint64_t uni = tp + cm.false_positives(c) + cm.false_negatives(c);
    if (uni > 0) out[c] = static_cast<double>(tp) / static_cast<double>(uni);
  }
  return out;
}

double f1_from_iou(double iou) { return 2.0 * iou / (1.0 + iou); }

MetricsReport report_from_ious(std::span<const std::optional<double>> ious) {
  MetricsReport r;
  r.per_class_iou.assign(ious.begin(), ious.end());
  r.per_class_f1.resize(ious.size());
  double iou_sum = 0.0;
  double f1_sum = 0.0;
  for (std::size_t c = 0; c < ious.size(); ++c) {
    if (!ious[c]) continue;
    r.per_class_f1[c] = f1_from_iou(*ious[c]);
    r.evaluated_classes.push_back(static_cast<ClassId>(c));
    iou_sum += *ious[c];
    f1_sum += *r.per_class_f1[c];
  }
  if (!r.evaluated_classes.empty()) {
    const auto n = static_cast<double>(r.evaluated_classes.size());
    r.miou = iou_sum / n;
    r.mf1 = f1_sum / n;
  }
  if (!ious.empty()) {
    r.miou_absent_as_zero = iou_sum / static_cast<double>(ious.size());
  }
  return r;
}

MetricsReport summarize(const ConfusionMatrix& cm,
                        const ClassRegistry& registry) {
  if (cm.n_classes() != registry.size()) {
    fail(ErrorKind::kDimensionMismatch,
         "confusion matrix has " + std::to_string(cm.n_classes()) +
             " classes, registry has " + std::to_string(registry.size()));
  }
  if (cm.total() == 0) fail(ErrorKind::kNoData, "no data: empty confusion matrix");
  return report_from_ious(iou_per_class(cm));
}

}  // namespace maskfuse
