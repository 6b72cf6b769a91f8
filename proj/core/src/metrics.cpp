#include "binsig/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace binsig {

void ConfusionMatrix::add(int truth, int predicted, std::int64_t n) {
  if (truth < 0 || truth >= classes || predicted < 0 || predicted >= classes) {
    throw std::out_of_range("confusion matrix: class index out of range");
  }
  counts[static_cast<std::size_t>(truth) * classes + predicted] += n;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.classes != classes) throw std::invalid_argument("confusion matrix: class mismatch");
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
}

std::int64_t ConfusionMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

MacroScores macro_scores(const ConfusionMatrix& cm) {
  if (cm.classes == 0 || cm.total() == 0) {
    throw std::invalid_argument("macro_scores: empty confusion matrix");
  }
  double f1_sum = 0.0, p_sum = 0.0, r_sum = 0.0;
  for (int c = 0; c < cm.classes; ++c) {
    std::int64_t tp = cm.at(c, c);
    std::int64_t fp = 0, fn = 0;
    for (int o = 0; o < cm.classes; ++o) {
      if (o == c) continue;
      fp += cm.at(o, c);
      fn += cm.at(c, o);
    }
    const double p = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    const double r = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    const double f1 = (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    p_sum += p;
    r_sum += r;
    f1_sum += f1;
  }
  const double n = static_cast<double>(cm.classes);
  return {f1_sum / n, p_sum / n, r_sum / n};
}

PRCurve pr_curve(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw std::invalid_argument("pr_curve: scores/labels size mismatch or empty");
  }
  std::int64_t positives = 0;
  for (const int l : labels) positives += (l == 1);
  if (positives == 0) throw std::invalid_argument("pr_curve: no positive labels");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  PRCurve curve;
  std::int64_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double threshold = scores[order[i]];
    // consume the whole tie group: every sample with score >= threshold
    // is predicted positive at this operating point
    while (i < order.size() && scores[order[i]] == threshold) {
      if (labels[order[i]] == 1) {
        ++tp;
      } else {
        ++fp;
      }
      ++i;
    }
    PRPoint pt;
    pt.threshold = threshold;
    pt.recall = static_cast<double>(tp) / static_cast<double>(positives);
    pt.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    curve.points.push_back(pt);
  }
  return curve;
}

double partial_auc(const PRCurve& curve, double recall_min) {
  if (curve.points.empty()) throw std::invalid_argument("partial_auc: empty curve");
  if (curve.points.front().recall > recall_min) {
    throw std::invalid_argument("partial_auc: curve does not reach recall_min");
  }
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < curve.points.size(); ++i) {
    double r0 = curve.points[i].recall, p0 = curve.points[i].precision;
    const double r1 = curve.points[i + 1].recall, p1 = curve.points[i + 1].precision;
    if (r1 <= recall_min || r1 <= r0) continue;
    if (r0 < recall_min) {
      // clip the segment at the window boundary
      p0 = p0 + (p1 - p0) * (recall_min - r0) / (r1 - r0);
      r0 = recall_min;
    }
    area += (r1 - r0) * 0.5 * (p0 + p1);
  }
  return area;
}

}  // namespace binsig
