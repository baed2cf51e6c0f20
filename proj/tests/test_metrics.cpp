#include <algorithm>
#include <cmath>
#include <random>

#include "anticipatr/metrics.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace anticipatr;

namespace {

ProbabilitySeries make_series(std::string id, std::vector<double> probs, int label,
                              std::optional<std::size_t> tau = std::nullopt, double fps = 10.0) {
  ProbabilitySeries s;
  s.video_id = std::move(id);
  s.probs = std::move(probs);
  s.label = label;
  s.tau = tau;
  s.fps = fps;
  return s;
}

std::vector<ProbabilitySeries> random_videos(std::mt19937_64& rng, std::size_t n,
                                             std::size_t frames = 8) {
  std::uniform_real_distribution<double> dist(0.01, 0.99);
  std::vector<ProbabilitySeries> out;
  bool have_pos = false, have_neg = false;
  for (std::size_t i = 0; i < n; ++i) {
    int label = int(rng() % 2);
    if (i == n - 2 && !have_pos) label = 1;
    if (i == n - 1 && !have_neg) label = 0;
    (label ? have_pos : have_neg) = true;
    std::vector<double> probs(frames);
    // quantized probabilities so score ties actually occur
    for (double& p : probs) p = std::round(dist(rng) * 8.0) / 8.0 * 0.9 + 0.05;
    out.push_back(make_series("v" + std::to_string(i), probs, label,
                              label ? std::optional<std::size_t>(4 + rng() % 3) : std::nullopt));
  }
  return out;
}

}  // namespace

TEST_CASE("decision_score semantics") {
  // negatives peak over all frames; positives only up to tau
  ProbabilitySeries neg = make_series("n", {0.1, 0.9, 0.2}, 0);
  CHECK(decision_score(neg) == 0.9);
  ProbabilitySeries pos = make_series("p", {0.1, 0.3, 0.95}, 1, 1);
  CHECK(decision_score(pos) == 0.3);
  ProbabilitySeries no_tau = make_series("q", {0.5}, 1);
  CHECK_THROWS_AS(decision_score(no_tau), MetricError);
  ProbabilitySeries bad = make_series("b", {1.0}, 0);
  CHECK_THROWS_AS(decision_score(bad), MetricError);
}

TEST_CASE("pr_points fixtures") {
  // perfectly separated: curve reaches (1,1)
  std::vector<ProbabilitySeries> sep = {
      make_series("p1", {0.9}, 1, 0), make_series("p2", {0.8}, 1, 0),
      make_series("n1", {0.2}, 0), make_series("n2", {0.1}, 0)};
  std::vector<PrPoint> pts = pr_points(sep);
  bool perfect = false;
  for (const PrPoint& p : pts) {
    if (p.recall == 1.0 && p.precision == 1.0) perfect = true;
  }
  CHECK(perfect);
  CHECK(average_precision(pts) == 1.0);

  // all scores equal: single point, P = positive fraction, R = 1
  std::vector<ProbabilitySeries> tied = {
      make_series("p", {0.5}, 1, 0), make_series("n1", {0.5}, 0),
      make_series("n2", {0.5}, 0), make_series("n3", {0.5}, 0)};
  std::vector<PrPoint> tp = pr_points(tied);
  REQUIRE(tp.size() == 1);
  CHECK(tp[0].recall == 1.0);
  CHECK(tp[0].precision == 0.25);

  // single-class input rejected
  std::vector<ProbabilitySeries> pos_only = {make_series("p", {0.5}, 1, 0)};
  CHECK_THROWS_AS(pr_points(pos_only), MetricError);
}

TEST_CASE("pr_points and precision_at_recall match brute force on random sets") {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<ProbabilitySeries> vids = random_videos(rng, 10);
    std::vector<oracle::Pred> preds;
    for (const ProbabilitySeries& v : vids) preds.push_back({decision_score(v), v.label});

    std::vector<PrPoint> got = pr_points(vids);
    auto want = oracle::pr_ref(preds);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].threshold == want[i][2]);
      CHECK(got[i].recall == doctest::Approx(want[i][0]).epsilon(1e-15));
      CHECK(got[i].precision == doctest::Approx(want[i][1]).epsilon(1e-15));
    }
    CHECK(average_precision(got) == doctest::Approx(oracle::ap_ref(want)).epsilon(1e-13));

    // P@80R against a brute-force scan of the same enumerated curve
    double best_p = -1.0, best_th = 0.0;
    for (auto it = want.rbegin(); it != want.rend(); ++it) {
      if ((*it)[0] >= 0.8) {
        best_p = (*it)[1];
        best_th = (*it)[2];
      }
    }
    if (best_p >= 0.0) {
      RecallOperatingPoint op = precision_at_recall(got, 0.8);
      CHECK(op.precision == best_p);
      CHECK(op.threshold == best_th);
    } else {
      CHECK_THROWS_AS(precision_at_recall(got, 0.8), MetricError);
    }
  }
}

TEST_CASE("average_precision hand curve") {
  std::vector<PrPoint> pts = {{0.5, 1.0, 0.9}, {1.0, 0.5, 0.4}};
  CHECK(average_precision(pts) == doctest::Approx(0.875).epsilon(1e-15));
}

TEST_CASE("tta fixtures") {
  // tau=50 impossible with a short series; use tau within range: crossing at
  // t=18 of a tau=50 video sampled at 10 fps gives 3.2 s
  std::vector<double> probs(60, 0.1);
  for (std::size_t t = 18; t < 60; ++t) probs[t] = 0.9;
  TtaResult r = tta(probs, 50, 10.0, 0.5);
  CHECK(!r.missed);
  CHECK(r.seconds == doctest::Approx(3.2).epsilon(1e-15));

  TtaResult missed = tta(std::vector<double>(10, 0.2), 8, 10.0, 0.5);
  CHECK(missed.missed);
  CHECK(missed.seconds == 0.0);

  CHECK_THROWS_AS(tta(probs, 5, 0.0, 0.5), ContractError);
  CHECK_THROWS_AS(tta(probs, 5, 10.0, 1.5), ContractError);

  // nonincreasing in the threshold
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(0.01, 0.99);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> ps(12);
    for (double& p : ps) p = dist(rng);
    double prev = 1e9;
    for (double bar : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      TtaResult t1 = tta(ps, 9, 10.0, bar);
      double val = t1.missed ? -1.0 : t1.seconds;
      CHECK(val <= prev + 1e-15);
      prev = val;
    }
  }
}

TEST_CASE("mtta fixtures and oracle") {
  // constant high probability from t=0, tau=40: TTA = 4 s at every bar
  std::vector<ProbabilitySeries> vids = {
      make_series("p", std::vector<double>(50, 0.999), 1, 40)};
  CHECK(mtta(vids) == doctest::Approx(4.0).epsilon(1e-12));

  // crossings only below 0.5 average over those grid points alone
  std::vector<double> low(50, 0.4);
  std::vector<ProbabilitySeries> lows = {make_series("p", low, 1, 40)};
  CHECK(mtta(lows) == doctest::Approx(4.0).epsilon(1e-12));  // bars .01..
  // no positives -> error
  CHECK_THROWS_AS(mtta({make_series("n", {0.5}, 0)}), MetricError);
  // never crossing -> error
  CHECK_THROWS_AS(mtta({make_series("p", std::vector<double>(5, 0.005), 1, 4)}), MetricError);

  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ProbabilitySeries> rv = random_videos(rng, 6);
    std::vector<oracle::SeriesRef> refs;
    for (const ProbabilitySeries& v : rv) {
      if (v.label) refs.push_back({v.probs, *v.tau, v.fps});
    }
    CHECK(mtta(rv) == doctest::Approx(oracle::mtta_ref(refs)).epsilon(1e-13));
  }
}

TEST_CASE("nss fixtures and oracle") {
  // fixation at the unique max -> positive; at the mean -> 0
  Tensor s({2, 2}, {0.0, 0.0, 0.0, 1.0});
  Tensor f({2, 2}, {0.0, 0.0, 0.0, 1.0});
  CHECK(nss(s, f) > 0.0);

  Tensor s2({1, 3}, {0.0, 0.5, 1.0});
  Tensor f2({1, 3}, {0.0, 1.0, 0.0});  // fixated value equals the mean
  CHECK(nss(s2, f2) == doctest::Approx(0.0));

  CHECK_THROWS_WITH_AS(nss(s, Tensor::zeros({2, 2})), doctest::Contains("no fixations"),
                       MetricError);
  CHECK_THROWS_WITH_AS(nss(Tensor::full({2, 2}, 0.3), f),
                       doctest::Contains("degenerate saliency"), MetricError);

  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    Tensor rs = oracle::random_tensor(rng, {6, 6}, 0.0, 1.0);
    Tensor rf = Tensor::zeros({6, 6});
    for (int i = 0; i < 5; ++i) rf.data[rng() % 36] = 1.0;
    CHECK(nss(rs, rf) == doctest::Approx(oracle::nss_ref(rs.data, rf.data)).epsilon(1e-12));
  }

  // invariant to positive affine transforms
  Tensor base = oracle::random_tensor(rng, {5, 5}, 0.0, 1.0);
  Tensor fix = Tensor::zeros({5, 5});
  fix.data[7] = fix.data[19] = 1.0;
  Tensor scaled = base;
  for (double& v : scaled.data) v = 3.7 * v + 11.0;
  CHECK(std::abs(nss(base, fix) - nss(scaled, fix)) < 1e-12);
}

TEST_CASE("auc_judd fixtures and rank oracle") {
  std::mt19937_64 rng(88);
  Tensor f = Tensor::zeros({6, 6});
  for (int i = 0; i < 8; ++i) f.data[rng() % 36] = 1.0;
  CHECK(auc_judd(f, f) == 1.0);  // saliency equals the indicator

  Tensor anti = f;
  for (double& v : anti.data) v = 1.0 - v;
  CHECK(auc_judd(anti, f) == doctest::Approx(0.0).epsilon(1e-12));

  for (int trial = 0; trial < 100; ++trial) {
    Tensor s = oracle::random_tensor(rng, {8, 8}, 0.0, 1.0);
    // quantize to force ties through the tie-handling path
    for (double& v : s.data) v = std::round(v * 6.0) / 6.0;
    Tensor rf = Tensor::zeros({8, 8});
    for (int i = 0; i < 6; ++i) rf.data[rng() % 64] = 1.0;
    std::vector<double> pos, neg;
    for (std::size_t i = 0; i < 64; ++i) (rf.data[i] != 0.0 ? pos : neg).push_back(s.data[i]);
    CHECK(auc_judd(s, rf) == doctest::Approx(oracle::auc_rank_ref(pos, neg)).epsilon(1e-12));
  }

  // invariant under strictly monotone transforms
  Tensor s = oracle::random_tensor(rng, {7, 7}, 0.0, 1.0);
  Tensor rf = Tensor::zeros({7, 7});
  for (int i = 0; i < 5; ++i) rf.data[rng() % 49] = 1.0;
  Tensor warped = s;
  for (double& v : warped.data) v = std::exp(3.0 * v);
  CHECK(std::abs(auc_judd(s, rf) - auc_judd(warped, rf)) < 1e-12);

  CHECK_THROWS_AS(auc_judd(s, Tensor::zeros({7, 7})), MetricError);
}

TEST_CASE("auc_borji determinism and agreement with auc_judd") {
  std::mt19937_64 rng(99);
  Tensor f = Tensor::zeros({10, 10});
  for (int i = 0; i < 10; ++i) f.data[rng() % 100] = 1.0;
  CHECK(auc_borji(f, f, 50, 7) == 1.0);

  Tensor s = oracle::random_tensor(rng, {10, 10}, 0.0, 1.0);
  CHECK(auc_borji(s, f, 100, 42) == auc_borji(s, f, 100, 42));
  CHECK(auc_borji(s, f, 100, 42) != auc_borji(s, f, 100, 43));

  // unstructured maps: Borji stays close to Judd in expectation
  double diff_sum = 0.0;
  int n = 20;
  for (int i = 0; i < n; ++i) {
    Tensor rs = oracle::random_tensor(rng, {12, 12}, 0.0, 1.0);
    Tensor rf = Tensor::zeros({12, 12});
    for (int j = 0; j < 12; ++j) rf.data[rng() % 144] = 1.0;
    diff_sum += auc_borji(rs, rf, 100, rng()) - auc_judd(rs, rf);
  }
  CHECK(std::abs(diff_sum / n) < 0.02);
}

TEST_CASE("kl_div fixtures and oracle") {
  Tensor f({2, 2}, {0.0, 1.0, 0.0, 1.0});
  CHECK(kl_div(f, f) < 1e-6);  // self-divergence collapses to the epsilon term

  // all mass on a pixel where saliency is ~0
  Tensor s({1, 2}, {1.0, 0.0});
  Tensor g({1, 2}, {0.0, 1.0});
  CHECK(kl_div(s, g) == doctest::Approx(std::log(1.0 / 1e-7)).epsilon(1e-3));

  std::mt19937_64 rng(111);
  for (int trial = 0; trial < 100; ++trial) {
    Tensor rs = oracle::random_tensor(rng, {5, 5}, 0.0, 1.0);
    Tensor rf = Tensor::zeros({5, 5});
    for (int i = 0; i < 4; ++i) rf.data[rng() % 25] = 1.0;
    CHECK(kl_div(rs, rf) == doctest::Approx(oracle::kl_ref(rs.data, rf.data)).epsilon(1e-12));
  }

  CHECK_THROWS_AS(kl_div(Tensor::zeros({2, 2}), Tensor::zeros({3, 3})), MetricError);
}

TEST_CASE("anticipation_report wires the pieces together") {
  std::vector<ProbabilitySeries> vids;
  // two clean positives crossing early, two negatives staying low
  std::vector<double> up(20, 0.05);
  for (std::size_t t = 5; t < 20; ++t) up[t] = 0.9;
  vids.push_back(make_series("p1", up, 1, 15));
  vids.push_back(make_series("p2", up, 1, 18));
  vids.push_back(make_series("n1", std::vector<double>(20, 0.1), 0));
  vids.push_back(make_series("n2", std::vector<double>(20, 0.2), 0));

  AnticipationReport rep = anticipation_report(vids);
  CHECK(rep.ap == 1.0);
  CHECK(rep.p_at_80r == 1.0);
  CHECK(rep.n_pos == 2);
  CHECK(rep.n_neg == 2);
  CHECK(rep.missed_at_80r == 0);
  // crossing at frame 5: TTA = (15-5)/10 and (18-5)/10
  CHECK(rep.tta_80r_s == doctest::Approx((1.0 + 1.3) / 2.0).epsilon(1e-12));
  CHECK(rep.mtta_s > 0.5);

  // deterministic across calls
  AnticipationReport rep2 = anticipation_report(vids);
  CHECK(rep.ap == rep2.ap);
  CHECK(rep.mtta_s == rep2.mtta_s);
  CHECK(rep.tta_80r_s == rep2.tta_80r_s);
}
