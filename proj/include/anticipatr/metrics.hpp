#pragma once

#include <cstdint>
#include <vector>

#include "anticipatr/series.hpp"
#include "anticipatr/tensor.hpp"

namespace anticipatr {

// Decision score of a video: peak probability before (and including) the
// accident frame for positives, peak over all frames for negatives.
double decision_score(const ProbabilitySeries& series);

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
  double threshold = 0.0;  // a video is predicted positive when its score >= threshold
};

// One point per distinct decision score, sorted by descending threshold.
// Requires at least one positive and one negative video.
std::vector<PrPoint> pr_points(const std::vector<ProbabilitySeries>& videos);

// Trapezoidal area over recall after prepending (R=0, P=first precision).
double average_precision(const std::vector<PrPoint>& points);

struct RecallOperatingPoint {
  double precision = 0.0;
  double threshold = 0.0;
};

// Precision at the smallest-recall point with R >= target (the highest
// threshold achieving the target recall).
RecallOperatingPoint precision_at_recall(const std::vector<PrPoint>& points, double target = 0.8);

struct TtaResult {
  double seconds = 0.0;
  bool missed = false;  // probability never exceeded the bar before tau
};

// (tau - t_first)/fps where t_first is the earliest t <= tau with prob > bar.
TtaResult tta(const std::vector<double>& probs, std::size_t tau, double fps, double bar);

// Mean of TTA over the uniform threshold grid {0.01, ..., 0.99}: per grid
// point the mean over positives with a crossing, then the mean over grid
// points having at least one crossing. Missed positives are excluded.
double mtta(const std::vector<ProbabilitySeries>& videos);

// Mean standardized saliency value at fixated pixels. Requires at least one
// fixation and non-degenerate saliency.
double nss(const Tensor& saliency, const Tensor& fixations);

// ROC area treating the saliency map as a fixation classifier, thresholds at
// the fixated-pixel values, trapezoidal with (0,0) and (1,1) endpoints.
double auc_judd(const Tensor& saliency, const Tensor& fixations);

// Borji variant: per split, as many random non-fixated pixels as there are
// fixations form the negative set; result is the mean AUC over splits.
double auc_borji(const Tensor& saliency, const Tensor& fixations, std::size_t n_splits = 100,
                 std::uint64_t seed = 0);

// Sum-normalizes both maps and returns sum F_i * log(eps + F_i/(eps + S_i)).
double kl_div(const Tensor& saliency, const Tensor& fixations, double eps = 1e-7);

struct AnticipationReport {
  double ap = 0.0;
  double mtta_s = 0.0;
  double p_at_80r = 0.0;
  double tta_80r_s = 0.0;
  double threshold_80r = 0.0;
  std::size_t n_pos = 0, n_neg = 0;
  std::size_t missed_at_80r = 0;  // positives with no crossing at the 80R bar
};

AnticipationReport anticipation_report(const std::vector<ProbabilitySeries>& videos);

}  // namespace anticipatr
