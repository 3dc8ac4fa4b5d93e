#include "s3d/metrics.hpp"

#include <cstdio>
#include <stdexcept>
#include <string>

namespace s3d {

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes)
    : k_(num_classes), counts_((num_classes + 1) * (num_classes + 1), 0) {}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t n = 0;
  for (auto c : counts_) n += c;
  return n;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t truth) const {
  std::uint64_t n = 0;
  for (std::size_t j = 0; j <= k_; ++j) n += at(truth, j);
  return n;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t pred) const {
  std::uint64_t n = 0;
  for (std::size_t i = 0; i <= k_; ++i) n += at(i, pred);
  return n;
}

void ConfusionMatrix::accumulate(const LabelMap& truth, const LabelMap& pred,
                                 bool ignore_void_truth) {
  if (!truth.same_size(pred) || truth.channels != pred.channels) {
    throw std::invalid_argument(
        "confusion matrix: truth " + std::to_string(truth.width) + "x" +
        std::to_string(truth.height) + " vs prediction " +
        std::to_string(pred.width) + "x" + std::to_string(pred.height));
  }
  for (std::size_t i = 0; i < truth.data.size(); ++i) {
    if (truth.data[i] > k_ || pred.data[i] > k_) {
      throw std::invalid_argument("confusion matrix: label out of range at "
                                  "pixel " + std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < truth.data.size(); ++i) {
    if (ignore_void_truth && truth.data[i] == 0) continue;
    ++counts_[truth.data[i] * (k_ + 1) + pred.data[i]];
  }
}

void ConfusionMatrix::add(std::size_t truth, std::size_t pred,
                          std::uint64_t n) {
  if (truth > k_ || pred > k_) {
    throw std::invalid_argument("confusion matrix: label out of range");
  }
  counts_[truth * (k_ + 1) + pred] += n;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.k_ != k_) {
    throw std::invalid_argument("cannot merge confusion matrices with k=" +
                                std::to_string(k_) + " and k=" +
                                std::to_string(other.k_));
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

double global_accuracy(const ConfusionMatrix& cm) {
  const std::uint64_t total = cm.total();
  if (total == 0) return 0.0;
  std::uint64_t diag = 0;
  for (std::size_t i = 0; i <= cm.num_classes(); ++i) diag += cm.at(i, i);
  return static_cast<double>(diag) / static_cast<double>(total);
}

double class_recall(const ConfusionMatrix& cm, std::size_t cls) {
  const std::uint64_t row = cm.row_sum(cls);
  if (row == 0) return 0.0;
  return static_cast<double>(cm.at(cls, cls)) / static_cast<double>(row);
}

double class_iou(const ConfusionMatrix& cm, std::size_t cls) {
  const std::uint64_t tp = cm.at(cls, cls);
  const std::uint64_t uni = cm.row_sum(cls) + cm.col_sum(cls) - tp;
  if (uni == 0) return 0.0;
  return static_cast<double>(tp) / static_cast<double>(uni);
}

namespace {

template <typename PerClass>
double present_mean(const ConfusionMatrix& cm, PerClass per_class) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t c = 0; c <= cm.num_classes(); ++c) {
    if (!cm.present(c)) continue;
    sum += per_class(cm, c);
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

}  // namespace

double class_average_accuracy(const ConfusionMatrix& cm) {
  return present_mean(cm, class_recall);
}

double mean_iou(const ConfusionMatrix& cm) { return present_mean(cm, class_iou); }

std::string metric_report(const ConfusionMatrix& cm,
                          const std::vector<std::string>& names) {
  auto line = [](const std::string& key, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "\t%.6f\n", v);
    return key + buf;
  };
  std::string out;
  out += line("global_accuracy", global_accuracy(cm));
  out += line("class_average_accuracy", class_average_accuracy(cm));
  out += line("mean_iou", mean_iou(cm));
  for (std::size_t c = 0; c <= cm.num_classes(); ++c) {
    if (!cm.present(c)) continue;
    const std::string name =
        c < names.size() ? names[c] : "class" + std::to_string(c);
    out += line("iou." + name, class_iou(cm, c));
  }
  return out;
}

}  // namespace s3d
