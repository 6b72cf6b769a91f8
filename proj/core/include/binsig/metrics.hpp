#pragma once

#include <cstdint>
#include <vector>

namespace binsig {

// Rows are true classes, columns predicted. Merging shards is elementwise
// integer addition, so parallel evaluation is exact.
struct ConfusionMatrix {
  int classes = 0;
  std::vector<std::int64_t> counts;  // classes x classes, row-major

  explicit ConfusionMatrix(int c = 0) : classes(c), counts(static_cast<std::size_t>(c) * c, 0) {}
  void add(int truth, int predicted, std::int64_t n = 1);
  void merge(const ConfusionMatrix& other);
  std::int64_t at(int truth, int predicted) const {
    return counts[static_cast<std::size_t>(truth) * classes + predicted];
  }
  std::int64_t total() const;
};

struct MacroScores {
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

// Per-class P/R/F1 with the 0/0 -> 0 convention, unweighted mean over classes.
MacroScores macro_scores(const ConfusionMatrix& cm);

struct PRPoint {
  double recall = 0.0;
  double precision = 0.0;
  double threshold = 0.0;
};

// One point per distinct threshold, swept descending; recall is
// non-decreasing along the sweep.
struct PRCurve {
  std::vector<PRPoint> points;
  int positive_class = 1;
};

// scores: positive-class probability per sample; labels: 0/1.
PRCurve pr_curve(const std::vector<double>& scores, const std::vector<int>& labels);

// Trapezoidal area of precision over recall restricted to [recall_min, 1],
// linearly interpolating at the recall_min boundary.
double partial_auc(const PRCurve& curve, double recall_min);

}  // namespace binsig
