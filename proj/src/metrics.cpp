#include "anticipatr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "anticipatr/errors.hpp"

namespace anticipatr {

namespace {

void check_probs(const ProbabilitySeries& s) {
  for (double p : s.probs) {
    if (!(p > 0.0 && p < 1.0)) {
      throw MetricError("probability " + std::to_string(p) + " in video " + s.video_id +
                        " outside (0,1)");
    }
  }
}

// Trapezoidal ROC area from positive/negative score samples, with exact tie
// handling: thresholds sweep the positive values with both > and >= counts,
// which traces the full step curve.
double roc_auc(const std::vector<double>& pos, const std::vector<double>& neg) {
  std::vector<double> sorted_neg = neg;
  std::sort(sorted_neg.begin(), sorted_neg.end());
  std::vector<double> sorted_pos = pos;
  std::sort(sorted_pos.begin(), sorted_pos.end());
  std::vector<double> thresholds = sorted_pos;
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  auto frac_pos = [&](double th, bool strict) {
    auto it = strict ? std::upper_bound(sorted_pos.begin(), sorted_pos.end(), th)
                     : std::lower_bound(sorted_pos.begin(), sorted_pos.end(), th);
    return double(sorted_pos.end() - it) / double(sorted_pos.size());
  };
  auto frac_neg = [&](double th, bool strict) {
    auto it = strict ? std::upper_bound(sorted_neg.begin(), sorted_neg.end(), th)
                     : std::lower_bound(sorted_neg.begin(), sorted_neg.end(), th);
    return double(sorted_neg.end() - it) / double(sorted_neg.size());
  };

  std::vector<std::pair<double, double>> points;  // (fpr, tpr)
  points.emplace_back(0.0, 0.0);
  points.emplace_back(1.0, 1.0);
  for (double th : thresholds) {
    points.emplace_back(frac_neg(th, true), frac_pos(th, true));
    points.emplace_back(frac_neg(th, false), frac_pos(th, false));
  }
  std::sort(points.begin(), points.end());
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    area += (points[i].first - points[i - 1].first) *
            (points[i].second + points[i - 1].second) / 2.0;
  }
  return area;
}

void split_by_fixation(const Tensor& saliency, const Tensor& fixations, std::vector<double>& pos,
                       std::vector<double>& neg) {
  if (!saliency.same_shape(fixations)) {
    throw MetricError("saliency " + shape_str(saliency.shape) + " and fixation map " +
                      shape_str(fixations.shape) + " differ in shape");
  }
  for (std::size_t i = 0; i < saliency.size(); ++i) {
    if (fixations.data[i] != 0.0) {
      pos.push_back(saliency.data[i]);
    } else {
      neg.push_back(saliency.data[i]);
    }
  }
  if (pos.empty()) throw MetricError("no fixations");
}

}  // namespace

double decision_score(const ProbabilitySeries& series) {
  check_probs(series);
  if (series.probs.empty()) throw MetricError("empty probability series for " + series.video_id);
  std::size_t last = series.probs.size() - 1;
  if (series.label != 0) {
    if (!series.tau.has_value()) {
      throw MetricError("positive video " + series.video_id + " lacks an accident frame");
    }
    last = std::min(last, *series.tau);
  }
  double peak = 0.0;
  for (std::size_t t = 0; t <= last; ++t) peak = std::max(peak, series.probs[t]);
  return peak;
}

std::vector<PrPoint> pr_points(const std::vector<ProbabilitySeries>& videos) {
  std::size_t n_pos = 0, n_neg = 0;
  std::vector<std::pair<double, int>> scored;  // (score, label)
  for (const ProbabilitySeries& v : videos) {
    scored.emplace_back(decision_score(v), v.label);
    (v.label != 0 ? n_pos : n_neg) += 1;
  }
  if (n_pos == 0 || n_neg == 0) {
    throw MetricError("precision-recall needs both classes (" + std::to_string(n_pos) +
                      " positive, " + std::to_string(n_neg) + " negative)");
  }
  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  std::vector<PrPoint> points;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    (scored[i].second != 0 ? tp : fp) += 1;
    bool last_of_score = i + 1 == scored.size() || scored[i + 1].first != scored[i].first;
    if (!last_of_score) continue;
    PrPoint p;
    p.threshold = scored[i].first;
    p.recall = double(tp) / double(n_pos);
    p.precision = double(tp) / double(tp + fp);
    points.push_back(p);
  }
  return points;
}

double average_precision(const std::vector<PrPoint>& points) {
  if (points.empty()) throw MetricError("average_precision: empty curve");
  double area = 0.0;
  double prev_r = 0.0, prev_p = points.front().precision;
  for (const PrPoint& pt : points) {
    area += (pt.recall - prev_r) * (pt.precision + prev_p) / 2.0;
    prev_r = pt.recall;
    prev_p = pt.precision;
  }
  return area;
}

RecallOperatingPoint precision_at_recall(const std::vector<PrPoint>& points, double target) {
  for (const PrPoint& pt : points) {  // ascending recall
    if (pt.recall >= target) return {pt.precision, pt.threshold};
  }
  throw MetricError("precision_at_recall: curve never reaches recall " + std::to_string(target));
}

TtaResult tta(const std::vector<double>& probs, std::size_t tau, double fps, double bar) {
  if (fps <= 0.0) throw ContractError("tta: fps must be positive");
  if (!(bar > 0.0 && bar < 1.0)) throw ContractError("tta: threshold must lie in (0,1)");
  std::size_t last = std::min(tau, probs.empty() ? 0 : probs.size() - 1);
  for (std::size_t t = 0; t <= last && t < probs.size(); ++t) {
    if (probs[t] > bar) return {(double(tau) - double(t)) / fps, false};
  }
  return {0.0, true};
}

double mtta(const std::vector<ProbabilitySeries>& videos) {
  std::vector<const ProbabilitySeries*> positives;
  for (const ProbabilitySeries& v : videos) {
    if (v.label != 0) {
      check_probs(v);
      positives.push_back(&v);
    }
  }
  if (positives.empty()) throw MetricError("mtta: no positive videos");
  double grid_sum = 0.0;
  std::size_t grid_n = 0;
  for (int i = 1; i <= 99; ++i) {
    double bar = double(i) / 100.0;
    double sum = 0.0;
    std::size_t n = 0;
    for (const ProbabilitySeries* v : positives) {
      TtaResult r = tta(v->probs, *v->tau, v->fps, bar);
      if (!r.missed) {
        sum += r.seconds;
        n += 1;
      }
    }
    if (n > 0) {
      grid_sum += sum / double(n);
      grid_n += 1;
    }
  }
  if (grid_n == 0) throw MetricError("mtta: no positive crosses any threshold");
  return grid_sum / double(grid_n);
}

double nss(const Tensor& saliency, const Tensor& fixations) {
  std::vector<double> pos, neg;
  split_by_fixation(saliency, fixations, pos, neg);
  double mean = 0.0;
  for (double v : saliency.data) mean += v;
  mean /= double(saliency.size());
  double var = 0.0;
  for (double v : saliency.data) var += (v - mean) * (v - mean);
  var /= double(saliency.size());
  double sd = std::sqrt(var);
  if (sd == 0.0) throw MetricError("degenerate saliency");
  double acc = 0.0;
  for (double v : pos) acc += (v - mean) / sd;
  return acc / double(pos.size());
}

double auc_judd(const Tensor& saliency, const Tensor& fixations) {
  std::vector<double> pos, neg;
  split_by_fixation(saliency, fixations, pos, neg);
  if (neg.empty()) throw MetricError("auc_judd: every pixel is fixated");
  return roc_auc(pos, neg);
}

double auc_borji(const Tensor& saliency, const Tensor& fixations, std::size_t n_splits,
                 std::uint64_t seed) {
  if (n_splits == 0) throw ContractError("auc_borji: n_splits must be >= 1");
  std::vector<double> pos, neg;
  split_by_fixation(saliency, fixations, pos, neg);
  if (neg.empty()) throw MetricError("auc_borji: every pixel is fixated");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, neg.size() - 1);
  double acc = 0.0;
  for (std::size_t s = 0; s < n_splits; ++s) {
    std::vector<double> sampled(pos.size());
    for (double& v : sampled) v = neg[pick(rng)];
    acc += roc_auc(pos, sampled);
  }
  return acc / double(n_splits);
}

double kl_div(const Tensor& saliency, const Tensor& fixations, double eps) {
  if (!saliency.same_shape(fixations)) {
    throw MetricError("kl_div: shape mismatch " + shape_str(saliency.shape) + " vs " +
                      shape_str(fixations.shape));
  }
  double s_sum = 0.0, f_sum = 0.0;
  for (double v : saliency.data) s_sum += v;
  for (double v : fixations.data) f_sum += v;
  double acc = 0.0;
  for (std::size_t i = 0; i < saliency.size(); ++i) {
    double fi = f_sum > 0.0 ? fixations.data[i] / f_sum : 0.0;
    if (fi == 0.0) continue;
    double si = s_sum > 0.0 ? saliency.data[i] / s_sum : 0.0;
    acc += fi * std::log(eps + fi / (eps + si));
  }
  return acc;
}

AnticipationReport anticipation_report(const std::vector<ProbabilitySeries>& videos) {
  AnticipationReport rep;
  std::vector<PrPoint> curve = pr_points(videos);
  rep.ap = average_precision(curve);
  rep.mtta_s = mtta(videos);
  RecallOperatingPoint op = precision_at_recall(curve, 0.8);
  rep.p_at_80r = op.precision;
  rep.threshold_80r = op.threshold;

  // the curve counts a video as positive at score >= threshold; tta uses a
  // strict crossing, so step just below the operating threshold
  double bar = std::nextafter(op.threshold, -std::numeric_limits<double>::infinity());
  bar = std::clamp(bar, std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0));
  double tta_sum = 0.0;
  std::size_t tta_n = 0;
  for (const ProbabilitySeries& v : videos) {
    if (v.label != 0) {
      rep.n_pos += 1;
      TtaResult r = tta(v.probs, *v.tau, v.fps, bar);
      if (r.missed) {
        rep.missed_at_80r += 1;
      } else {
        tta_sum += r.seconds;
        tta_n += 1;
      }
    } else {
      rep.n_neg += 1;
    }
  }
  rep.tta_80r_s = tta_n > 0 ? tta_sum / double(tta_n) : 0.0;
  return rep;
}

}  // namespace anticipatr
