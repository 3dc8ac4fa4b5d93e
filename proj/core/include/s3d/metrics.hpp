#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "s3d/image.hpp"

namespace s3d {

/// (k + 1) x (k + 1) pixel counts; rows are ground truth, columns are
/// predictions, index 0 is void.
///
/// The averaged metrics run over "present" classes, those with a nonzero
/// ground-truth row. A void row only exists when void truth was accumulated.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t num_classes);

  std::size_t num_classes() const { return k_; }
  std::uint64_t at(std::size_t truth, std::size_t pred) const {
    return counts_[truth * (k_ + 1) + pred];
  }
  std::uint64_t total() const;
  std::uint64_t row_sum(std::size_t truth) const;
  std::uint64_t col_sum(std::size_t pred) const;
  bool present(std::size_t cls) const { return row_sum(cls) > 0; }

  /// Adds one count per pixel at (truth, pred); with `ignore_void_truth`,
  /// pixels whose truth is 0 are skipped. Throws on size mismatch or labels
  /// above k (before touching any count).
  void accumulate(const LabelMap& truth, const LabelMap& pred,
                  bool ignore_void_truth);

  void add(std::size_t truth, std::size_t pred, std::uint64_t n = 1);

  /// Elementwise sum; k must agree.
  void merge(const ConfusionMatrix& other);

  friend bool operator==(const ConfusionMatrix&,
                         const ConfusionMatrix&) = default;

 private:
  std::size_t k_;
  std::vector<std::uint64_t> counts_;
};

/// sum_i p_ii / sum_ij p_ij; 0 for an empty matrix.
double global_accuracy(const ConfusionMatrix& cm);

/// Mean recall over present classes; 0 when none is present.
double class_average_accuracy(const ConfusionMatrix& cm);

/// p_ii / (row_i + col_i - p_ii); 0 for an absent class.
double class_iou(const ConfusionMatrix& cm, std::size_t cls);
double class_recall(const ConfusionMatrix& cm, std::size_t cls);

/// Mean IoU over present classes; 0 when none is present.
double mean_iou(const ConfusionMatrix& cm);

/// "metric<TAB>value" lines for the three metrics, then "iou.<name><TAB>value"
/// for every present class. `names[c]` names class c (index 0 = void).
std::string metric_report(const ConfusionMatrix& cm,
                          const std::vector<std::string>& names);

}  // namespace s3d
