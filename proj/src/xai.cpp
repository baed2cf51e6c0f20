#include "anticipatr/xai.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "anticipatr/image_io.hpp"

namespace anticipatr {

namespace {

Tensor relu_grid(Tensor grid) {
  for (double& v : grid.data) v = v > 0.0 ? v : 0.0;
  return grid;
}

SaliencyMap finish(Tensor low, std::size_t frame, ClassId cls, CamMethod method,
                   std::size_t out_h, std::size_t out_w) {
  SaliencyMap map;
  map.low = relu_grid(std::move(low));
  map.up = bilinear_resize(map.low, out_h, out_w);
  map.frame = frame;
  map.cls = cls;
  map.method = method;
  return map;
}

// Weighted channel sum over a flattened K x (U*V) activation tensor.
Tensor weighted_sum(const Tensor& a, const std::vector<double>& weights, std::size_t u,
                    std::size_t v) {
  std::size_t plane = u * v;
  Tensor grid = Tensor::zeros({u, v});
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] == 0.0) continue;
    const double* ak = a.data.data() + k * plane;
    for (std::size_t i = 0; i < plane; ++i) grid.data[i] += weights[k] * ak[i];
  }
  return grid;
}

// Principal eigenvector of a symmetric matrix via cyclic Jacobi rotations.
std::vector<double> principal_eigvec(std::vector<double> a, std::size_t n) {
  std::vector<double> vecs(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) vecs[i * n + i] = 1.0;
  for (int sweep = 0; sweep < 60; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
    }
    if (off < 1e-24) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double apq = a[p * n + q];
        if (apq == 0.0) continue;
        double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
        double t = (theta >= 0.0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (std::size_t i = 0; i < n; ++i) {
          double aip = a[i * n + p], aiq = a[i * n + q];
          a[i * n + p] = c * aip - s * aiq;
          a[i * n + q] = s * aip + c * aiq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          double api = a[p * n + i], aqi = a[q * n + i];
          a[p * n + i] = c * api - s * aqi;
          a[q * n + i] = s * api + c * aqi;
        }
        for (std::size_t i = 0; i < n; ++i) {
          double vip = vecs[i * n + p], viq = vecs[i * n + q];
          vecs[i * n + p] = c * vip - s * viq;
          vecs[i * n + q] = s * vip + c * viq;
        }
      }
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (a[i * n + i] > a[best * n + best]) best = i;
  }
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = vecs[i * n + best];
  return v;
}

}  // namespace

const char* cam_method_name(CamMethod m) {
  switch (m) {
    case CamMethod::grad_cam: return "grad-cam";
    case CamMethod::grad_cam_pp: return "grad-cam++";
    case CamMethod::xgrad_cam: return "xgrad-cam";
    case CamMethod::eigen_cam: return "eigen-cam";
  }
  return "?";
}

std::optional<CamMethod> parse_cam_method(std::string_view name) {
  if (name == "grad-cam") return CamMethod::grad_cam;
  if (name == "grad-cam++") return CamMethod::grad_cam_pp;
  if (name == "xgrad-cam") return CamMethod::xgrad_cam;
  if (name == "eigen-cam") return CamMethod::eigen_cam;
  return std::nullopt;
}

Tensor SaliencyMap::normalized() const {
  Tensor out = up;
  double mx = 0.0;
  for (double v : out.data) mx = std::max(mx, v);
  if (mx > 0.0) {
    for (double& v : out.data) v /= mx;
  }
  return out;
}

SaliencyMap grad_cam(NetActivations& acts, std::size_t t, ClassId cls, std::size_t out_h,
                     std::size_t out_w) {
  std::size_t k = acts.cfg.channels, u = acts.cfg.map_h, v = acts.cfg.map_w;
  Tensor grad = grad_score_wrt_feature_map(acts, t, cls);
  const Tensor& a = acts.tape.value(acts.feature_maps[t]);
  std::size_t plane = u * v;
  std::vector<double> alpha(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    double acc = 0.0;
    for (std::size_t i = 0; i < plane; ++i) acc += grad.data[c * plane + i];
    alpha[c] = acc / double(plane);
  }
  return finish(weighted_sum(a, alpha, u, v), t, cls, CamMethod::grad_cam, out_h, out_w);
}

SaliencyMap grad_cam_pp(NetActivations& acts, std::size_t t, ClassId cls, std::size_t out_h,
                        std::size_t out_w) {
  std::size_t k = acts.cfg.channels, u = acts.cfg.map_h, v = acts.cfg.map_w;
  Tensor grad = grad_score_wrt_feature_map(acts, t, cls);
  const Tensor& a = acts.tape.value(acts.feature_maps[t]);
  std::size_t plane = u * v;
  std::vector<double> w(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    double a_sum = 0.0;
    for (std::size_t i = 0; i < plane; ++i) a_sum += a.data[c * plane + i];
    double acc = 0.0;
    for (std::size_t i = 0; i < plane; ++i) {
      double g = grad.data[c * plane + i];
      double denom = 2.0 * g * g + a_sum * g * g * g;
      double alpha = denom == 0.0 ? 0.0 : (g * g) / denom;
      acc += alpha * (g > 0.0 ? g : 0.0);
    }
    w[c] = acc;
  }
  return finish(weighted_sum(a, w, u, v), t, cls, CamMethod::grad_cam_pp, out_h, out_w);
}

SaliencyMap xgrad_cam(NetActivations& acts, std::size_t t, ClassId cls, std::size_t out_h,
                      std::size_t out_w) {
  std::size_t k = acts.cfg.channels, u = acts.cfg.map_h, v = acts.cfg.map_w;
  Tensor grad = grad_score_wrt_feature_map(acts, t, cls);
  const Tensor& a = acts.tape.value(acts.feature_maps[t]);
  std::size_t plane = u * v;
  std::vector<double> w(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    double a_sum = 0.0;
    for (std::size_t i = 0; i < plane; ++i) a_sum += a.data[c * plane + i];
    if (a_sum == 0.0) continue;
    double acc = 0.0;
    for (std::size_t i = 0; i < plane; ++i) {
      acc += (a.data[c * plane + i] / a_sum) * grad.data[c * plane + i];
    }
    w[c] = acc;
  }
  return finish(weighted_sum(a, w, u, v), t, cls, CamMethod::xgrad_cam, out_h, out_w);
}

SaliencyMap eigen_cam(NetActivations& acts, std::size_t t, std::size_t out_h, std::size_t out_w) {
  if (t >= acts.feature_maps.size()) {
    throw ContractError("eigen_cam: frame " + std::to_string(t) + " out of range");
  }
  std::size_t k = acts.cfg.channels, u = acts.cfg.map_h, v = acts.cfg.map_w;
  const Tensor& a = acts.tape.value(acts.feature_maps[t]);
  std::size_t plane = u * v;

  // Gram matrix of the UV x K reshape; its principal eigenvector is the first
  // right singular vector.
  std::vector<double> gram(k * k, 0.0);
  for (std::size_t c1 = 0; c1 < k; ++c1) {
    for (std::size_t c2 = c1; c2 < k; ++c2) {
      double acc = 0.0;
      for (std::size_t i = 0; i < plane; ++i) {
        acc += a.data[c1 * plane + i] * a.data[c2 * plane + i];
      }
      gram[c1 * k + c2] = acc;
      gram[c2 * k + c1] = acc;
    }
  }
  bool all_zero = true;
  for (double g : gram) {
    if (g != 0.0) {
      all_zero = false;
      break;
    }
  }
  Tensor grid = Tensor::zeros({u, v});
  if (!all_zero) {
    std::vector<double> v1 = principal_eigvec(gram, k);
    for (std::size_t c = 0; c < k; ++c) {
      if (v1[c] == 0.0) continue;
      for (std::size_t i = 0; i < plane; ++i) grid.data[i] += a.data[c * plane + i] * v1[c];
    }
    double total = 0.0;
    for (double g : grid.data) total += g;
    if (total < 0.0) {
      for (double& g : grid.data) g = -g;
    }
  }
  return finish(std::move(grid), t, ClassId::accident, CamMethod::eigen_cam, out_h, out_w);
}

void export_saliency(const SaliencyMap& map, const std::filesystem::path& pgm_path,
                     const std::optional<std::filesystem::path>& frame_ppm,
                     const std::optional<std::filesystem::path>& overlay_path) {
  for (double v : map.up.data) {
    if (!std::isfinite(v)) throw ContractError("export_saliency: non-finite map value");
  }
  Tensor norm = map.normalized();
  write_pgm(pgm_path, norm);
  if (!frame_ppm.has_value()) return;
  if (!overlay_path.has_value()) {
    throw ContractError("export_saliency: frame image supplied without overlay path");
  }
  RgbImage frame = read_ppm(*frame_ppm);
  if (frame.height != norm.shape[0] || frame.width != norm.shape[1]) {
    throw FormatError("export_saliency: frame image " + std::to_string(frame.width) + "x" +
                      std::to_string(frame.height) + " does not match map " +
                      std::to_string(norm.shape[1]) + "x" + std::to_string(norm.shape[0]));
  }
  RgbImage out;
  out.height = frame.height;
  out.width = frame.width;
  out.pixels.resize(frame.pixels.size());
  for (std::size_t i = 0; i < norm.size(); ++i) {
    auto heat = heat_color(norm.data[i]);
    for (std::size_t c = 0; c < 3; ++c) {
      double blended = 0.5 * double(frame.pixels[3 * i + c]) + 0.5 * double(heat[c]);
      out.pixels[3 * i + c] = static_cast<std::uint8_t>(std::lround(blended));
    }
  }
  write_ppm(*overlay_path, out);
}

}  // namespace anticipatr
