#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "anticipatr/gaze.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace anticipatr;
namespace fs = std::filesystem;

namespace {

fs::path write_csv(const char* tag, const std::string& body) {
  fs::path p = fs::temp_directory_path() / (std::string("anticipatr_gaze_") + tag + ".csv");
  std::ofstream(p) << body;
  return p;
}

}  // namespace

TEST_CASE("gaze csv parsing") {
  fs::path p = write_csv("ok",
                         "participant_id,video_id,frame_index,timestamp_ms,x,y,kind\n"
                         "p1,v0,3,120.5,10,20,fixation\n"
                         "p2,v0,3,121.0,11,21,saccade\n"
                         "p1,v1,0,0,5,6,\n");
  std::vector<GazePoint> pts = load_gaze_csv(p);
  REQUIRE(pts.size() == 3);
  CHECK(pts[0].participant == "p1");
  CHECK(pts[0].video == "v0");
  CHECK(pts[0].frame == 3);
  CHECK(pts[0].timestamp_ms == 120.5);
  CHECK(pts[0].x == 10);
  CHECK(pts[0].y == 20);
  CHECK(pts[0].kind == GazeKind::fixation);
  CHECK(pts[1].kind == GazeKind::saccade);
  CHECK(pts[2].kind == GazeKind::unknown);  // blank defaults to unknown
  fs::remove(p);

  fs::path noheader = write_csv("nohdr", "p1,v0,3,120.5,10,20,fixation\n");
  CHECK_THROWS_AS(load_gaze_csv(noheader), DataError);
  fs::remove(noheader);

  CHECK_THROWS_AS(load_gaze_csv("/nonexistent/gaze.csv"), DataError);
}

TEST_CASE("accumulate_gaze counts and filters") {
  std::vector<GazePoint> pts;
  CHECK(accumulate_gaze(pts, 4, 4).data == Tensor::zeros({4, 4}).data);

  GazePoint g;
  g.video = "v";
  g.x = 2;
  g.y = 1;
  g.kind = GazeKind::fixation;
  pts = {g, g, g};
  Tensor counts = accumulate_gaze(pts, 4, 4);
  CHECK(counts.at2(1, 2) == 3.0);
  double total = 0.0;
  for (double v : counts.data) total += v;
  CHECK(total == 3.0);

  GazePoint s = g;
  s.kind = GazeKind::saccade;
  s.x = 0;
  s.y = 0;
  pts.push_back(s);
  Tensor fix_only = accumulate_gaze(pts, 4, 4, GazeKind::fixation);
  CHECK(fix_only.at2(0, 0) == 0.0);
  CHECK(fix_only.at2(1, 2) == 3.0);
  Tensor all = accumulate_gaze(pts, 4, 4);
  CHECK(all.at2(0, 0) == 1.0);

  GazePoint bad = g;
  bad.x = 4;  // out of bounds for W=4
  CHECK_THROWS_AS(accumulate_gaze(std::vector<GazePoint>{bad}, 4, 4), DataError);
}

TEST_CASE("gaussian kernel normalization and symmetry") {
  for (std::size_t size : {3u, 7u, 30u}) {
    Tensor k = gaussian_kernel(size, 5.0);
    CHECK(k.shape == std::vector<std::size_t>{size, size});
    double sum = 0.0;
    for (double v : k.data) sum += v;
    CHECK(std::abs(sum - 1.0) < 1e-12);
    // symmetric under 180-degree rotation
    for (std::size_t i = 0; i < k.size(); ++i) {
      CHECK(k.data[i] == doctest::Approx(k.data[k.size() - 1 - i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("attention map of a single delta is the centered kernel") {
  Tensor counts = Tensor::zeros({41, 41});
  counts.at2(20, 20) = 1.0;
  Tensor attention = attention_map(counts, 15, 3.0);
  Tensor kernel = gaussian_kernel(15, 3.0);
  double kmax = *std::max_element(kernel.data.begin(), kernel.data.end());
  for (std::size_t dr = 0; dr < 15; ++dr) {
    for (std::size_t dc = 0; dc < 15; ++dc) {
      double expected = kernel.at2(dr, dc) / kmax;
      CHECK(attention.at2(20 - 7 + dr, 20 - 7 + dc) ==
            doctest::Approx(expected).epsilon(1e-12));
    }
  }
  CHECK(attention.at2(0, 0) == 0.0);  // outside the kernel support
}

TEST_CASE("blur is linear and mass-conserving in the interior") {
  std::mt19937_64 rng(3);
  Tensor a = Tensor::zeros({40, 40});
  Tensor b = Tensor::zeros({40, 40});
  // interior-supported random counts
  for (int i = 0; i < 30; ++i) {
    a.at2(12 + rng() % 16, 12 + rng() % 16) += 1.0;
    b.at2(12 + rng() % 16, 12 + rng() % 16) += 1.0;
  }
  Tensor ba = blur_counts(a, 9, 2.0);
  Tensor bb = blur_counts(b, 9, 2.0);
  Tensor mix = Tensor::zeros({40, 40});
  for (std::size_t i = 0; i < mix.size(); ++i) mix.data[i] = 2.0 * a.data[i] + 3.0 * b.data[i];
  Tensor bmix = blur_counts(mix, 9, 2.0);
  for (std::size_t i = 0; i < mix.size(); ++i) {
    CHECK(std::abs(bmix.data[i] - (2.0 * ba.data[i] + 3.0 * bb.data[i])) < 1e-12);
  }

  double in_mass = 0.0, out_mass = 0.0;
  for (double v : a.data) in_mass += v;
  for (double v : ba.data) out_mass += v;
  CHECK(std::abs(in_mass - out_mass) < 1e-9);

  // two deltas superpose before normalization
  Tensor d1 = Tensor::zeros({30, 30});
  d1.at2(10, 10) = 1.0;
  Tensor d2 = Tensor::zeros({30, 30});
  d2.at2(18, 20) = 1.0;
  Tensor both = Tensor::zeros({30, 30});
  both.at2(10, 10) = 1.0;
  both.at2(18, 20) = 1.0;
  Tensor blur_both = blur_counts(both, 9, 2.0);
  Tensor b1 = blur_counts(d1, 9, 2.0);
  Tensor b2 = blur_counts(d2, 9, 2.0);
  for (std::size_t i = 0; i < blur_both.size(); ++i) {
    CHECK(std::abs(blur_both.data[i] - (b1.data[i] + b2.data[i])) < 1e-14);
  }
}

TEST_CASE("attention map normalization") {
  Tensor zero = Tensor::zeros({10, 10});
  Tensor att = attention_map(zero, 5, 2.0);
  for (double v : att.data) CHECK(v == 0.0);

  Tensor counts = Tensor::zeros({20, 20});
  counts.at2(10, 10) = 5.0;
  counts.at2(3, 3) = 1.0;
  Tensor a = attention_map(counts, 7, 2.0);
  double mx = *std::max_element(a.data.begin(), a.data.end());
  CHECK(mx == 1.0);
  for (double v : a.data) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("fixation map thresholding") {
  Tensor att({1, 2}, {0.05, 0.2});
  Tensor f = fixation_map(att, 0.1);
  CHECK(f.data == std::vector<double>{0.0, 1.0});

  // threshold near 1 keeps only the maximum
  Tensor att2({1, 3}, {0.3, 1.0, 0.99});
  Tensor top = fixation_map(att2, 0.999);
  CHECK(top.data == std::vector<double>{0.0, 1.0, 0.0});

  // monotone: raising the threshold never adds pixels
  std::mt19937_64 rng(5);
  Tensor r = oracle::random_tensor(rng, {8, 8}, 0.0, 1.0);
  Tensor lo = fixation_map(r, 0.2);
  Tensor hi = fixation_map(r, 0.7);
  for (std::size_t i = 0; i < r.size(); ++i) CHECK(hi.data[i] <= lo.data[i]);

  Tensor zero = fixation_map(Tensor::zeros({3, 3}), 0.1);
  for (double v : zero.data) CHECK(v == 0.0);

  CHECK_THROWS_AS(fixation_map(att, 0.0), ContractError);
  CHECK_THROWS_AS(fixation_map(att, 1.0), ContractError);
}
