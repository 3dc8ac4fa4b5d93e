#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "s3d/metrics.hpp"

using namespace s3d;

namespace {

// The 2-class hand example: truth 1 -> {3, 1}, truth 2 -> {2, 4}.
ConfusionMatrix hand_example() {
  ConfusionMatrix cm(2);
  cm.add(1, 1, 3);
  cm.add(1, 2, 1);
  cm.add(2, 1, 2);
  cm.add(2, 2, 4);
  return cm;
}

LabelMap random_labels(std::mt19937_64& rng, std::size_t w, std::size_t h,
                       std::size_t k) {
  LabelMap m(w, h);
  for (auto& v : m.data) v = static_cast<std::uint16_t>(oracle::pick(rng, 0, k));
  return m;
}

}  // namespace

TEST(ConfusionMatrix, SinglePixelAndEmptyImage) {
  ConfusionMatrix cm(4);
  LabelMap one(1, 1);
  one.data[0] = 3;
  cm.accumulate(one, one, true);
  EXPECT_EQ(cm.at(3, 3), 1u);
  EXPECT_EQ(cm.total(), 1u);

  const ConfusionMatrix before = cm;
  cm.accumulate(LabelMap(0, 0), LabelMap(0, 0), true);
  EXPECT_EQ(cm, before);
}

TEST(ConfusionMatrix, MatchesCountingOracle) {
  std::mt19937_64 rng(51);
  for (int t = 0; t < 60; ++t) {
    const std::size_t k = oracle::pick(rng, 1, 6);
    const std::size_t w = oracle::pick(rng, 1, 20), h = oracle::pick(rng, 1, 20);
    const LabelMap truth = random_labels(rng, w, h, k);
    const LabelMap pred = random_labels(rng, w, h, k);
    const bool ignore = t % 2 == 0;
    ConfusionMatrix cm(k);
    cm.accumulate(truth, pred, ignore);
    const auto counts = oracle::count_pairs(truth, pred, ignore);
    std::uint64_t total = 0;
    for (std::size_t i = 0; i <= k; ++i) {
      for (std::size_t j = 0; j <= k; ++j) {
        const auto it = counts.find({static_cast<std::uint16_t>(i),
                                     static_cast<std::uint16_t>(j)});
        const std::uint64_t want = it == counts.end() ? 0 : it->second;
        ASSERT_EQ(cm.at(i, j), want) << i << "," << j;
        total += want;
      }
    }
    EXPECT_EQ(cm.total(), total);
  }
}

TEST(ConfusionMatrix, RejectsBadInputsWithoutSideEffects) {
  ConfusionMatrix cm(2);
  LabelMap a(2, 2), b(2, 3);
  EXPECT_THROW(cm.accumulate(a, b, false), std::invalid_argument);
  LabelMap c(2, 2);
  c.data[3] = 3;
  EXPECT_THROW(cm.accumulate(a, c, false), std::invalid_argument);
  EXPECT_EQ(cm.total(), 0u);
  EXPECT_THROW(cm.merge(ConfusionMatrix(3)), std::invalid_argument);
}

TEST(Metrics, HandExample) {
  const ConfusionMatrix cm = hand_example();
  EXPECT_DOUBLE_EQ(global_accuracy(cm), 0.7);
  EXPECT_NEAR(class_average_accuracy(cm), (0.75 + 4.0 / 6.0) / 2.0, 1e-15);
  EXPECT_NEAR(class_average_accuracy(cm), 0.708333333333, 1e-9);
  EXPECT_NEAR(mean_iou(cm), (0.5 + 4.0 / 7.0) / 2.0, 1e-15);
  EXPECT_NEAR(mean_iou(cm), 0.535714285714, 1e-9);
}

TEST(Metrics, DiagonalAndAllWrong) {
  ConfusionMatrix diag(3);
  diag.add(1, 1, 5);
  diag.add(3, 3, 2);
  EXPECT_EQ(global_accuracy(diag), 1.0);
  EXPECT_EQ(class_average_accuracy(diag), 1.0);
  EXPECT_EQ(mean_iou(diag), 1.0);

  ConfusionMatrix wrong(2);
  wrong.add(1, 2, 4);
  wrong.add(2, 1, 3);
  EXPECT_EQ(global_accuracy(wrong), 0.0);
  EXPECT_EQ(class_average_accuracy(wrong), 0.0);
  EXPECT_EQ(mean_iou(wrong), 0.0);

  const ConfusionMatrix empty(4);
  EXPECT_EQ(global_accuracy(empty), 0.0);
  EXPECT_EQ(mean_iou(empty), 0.0);
}

TEST(Metrics, AbsentClassDoesNotMoveTheMeans) {
  ConfusionMatrix cm(3);  // class 3 never appears in truth
  cm.add(1, 1, 3);
  cm.add(1, 2, 1);
  cm.add(2, 1, 2);
  cm.add(2, 2, 4);
  const ConfusionMatrix ref = hand_example();
  EXPECT_DOUBLE_EQ(class_average_accuracy(cm), class_average_accuracy(ref));
  EXPECT_DOUBLE_EQ(mean_iou(cm), mean_iou(ref));
  EXPECT_FALSE(cm.present(3));
  EXPECT_EQ(class_iou(cm, 3), 0.0);
}

TEST(Metrics, IouBoundedByRecallAndPermutationInvariant) {
  std::mt19937_64 rng(52);
  for (int t = 0; t < 50; ++t) {
    const std::size_t k = oracle::pick(rng, 2, 6);
    const LabelMap truth = random_labels(rng, 9, 7, k);
    const LabelMap pred = random_labels(rng, 9, 7, k);
    ConfusionMatrix cm(k);
    cm.accumulate(truth, pred, true);
    for (std::size_t c = 1; c <= k; ++c) {
      EXPECT_LE(class_iou(cm, c), class_recall(cm, c));
    }

    // Relabel classes 1..k with one permutation on both sides; void stays.
    std::vector<std::uint16_t> perm(k + 1);
    std::iota(perm.begin(), perm.end(), std::uint16_t{0});
    std::shuffle(perm.begin() + 1, perm.end(), rng);
    LabelMap pt = truth, pp = pred;
    for (auto& v : pt.data) v = perm[v];
    for (auto& v : pp.data) v = perm[v];
    ConfusionMatrix cp(k);
    cp.accumulate(pt, pp, true);
    EXPECT_EQ(global_accuracy(cp), global_accuracy(cm));
    EXPECT_NEAR(class_average_accuracy(cp), class_average_accuracy(cm), 1e-15);
    EXPECT_NEAR(mean_iou(cp), mean_iou(cm), 1e-15);
  }
}

TEST(Metrics, MergeIsAssociativeAndCommutative) {
  std::mt19937_64 rng(53);
  std::vector<ConfusionMatrix> parts;
  ConfusionMatrix whole(3);
  for (int i = 0; i < 3; ++i) {
    const LabelMap t = random_labels(rng, 6, 5, 3), p = random_labels(rng, 6, 5, 3);
    parts.emplace_back(3);
    parts.back().accumulate(t, p, false);
    whole.accumulate(t, p, false);
  }
  ConfusionMatrix left = parts[0];
  left.merge(parts[1]);
  left.merge(parts[2]);
  ConfusionMatrix right = parts[1];
  right.merge(parts[2]);
  ConfusionMatrix right_all = parts[0];
  right_all.merge(right);
  ConfusionMatrix reversed = parts[2];
  reversed.merge(parts[1]);
  reversed.merge(parts[0]);
  EXPECT_EQ(left, whole);
  EXPECT_EQ(right_all, whole);
  EXPECT_EQ(reversed, whole);
}

TEST(Metrics, ReportFormat) {
  ConfusionMatrix cm(3);
  cm.add(1, 1, 3);
  cm.add(1, 2, 1);
  cm.add(2, 1, 2);
  cm.add(2, 2, 4);
  const std::string r = metric_report(cm, {"void", "road", "car", "sky"});
  EXPECT_NE(r.find("global_accuracy\t0.7"), std::string::npos) << r;
  EXPECT_NE(r.find("iou.road\t0.5"), std::string::npos) << r;
  EXPECT_NE(r.find("iou.car\t0.57"), std::string::npos) << r;
  EXPECT_EQ(r.find("iou.sky"), std::string::npos) << r;
  EXPECT_EQ(std::count(r.begin(), r.end(), '\n'), 5);
}
