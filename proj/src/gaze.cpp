#include "anticipatr/gaze.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace anticipatr {

namespace {

GazeKind parse_kind(const std::string& s, std::size_t lineno) {
  if (s.empty() || s == "unknown") return GazeKind::unknown;
  if (s == "fixation") return GazeKind::fixation;
  if (s == "saccade") return GazeKind::saccade;
  throw DataError("gaze csv: line " + std::to_string(lineno) + ": unknown kind \"" + s + "\"");
}

}  // namespace

std::vector<GazePoint> load_gaze_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("gaze csv: cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw DataError("gaze csv: " + path.string() + " is empty");
  if (line.rfind("participant_id,", 0) != 0) {
    throw DataError("gaze csv: " + path.string() + ": missing header row");
  }
  std::vector<GazePoint> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::vector<std::string> f;
    std::string field;
    while (std::getline(ls, field, ',')) f.push_back(field);
    if (!line.empty() && line.back() == ',') f.push_back("");
    if (f.size() != 7) {
      throw DataError("gaze csv: line " + std::to_string(lineno) + " has " +
                      std::to_string(f.size()) + " fields, expected 7");
    }
    GazePoint p;
    try {
      p.participant = f[0];
      p.video = f[1];
      p.frame = std::stoul(f[2]);
      p.timestamp_ms = std::stod(f[3]);
      double x = std::stod(f[4]);
      double y = std::stod(f[5]);
      if (x < 0 || y < 0 || !std::isfinite(x) || !std::isfinite(y)) {
        throw std::invalid_argument("negative coordinate");
      }
      p.x = std::size_t(x);
      p.y = std::size_t(y);
    } catch (const std::exception&) {
      throw DataError("gaze csv: unparseable record at line " + std::to_string(lineno));
    }
    p.kind = parse_kind(f[6], lineno);
    out.push_back(std::move(p));
  }
  return out;
}

Tensor accumulate_gaze(std::span<const GazePoint> points, std::size_t h, std::size_t w,
                       std::optional<GazeKind> filter) {
  Tensor grid = Tensor::zeros({h, w});
  for (const GazePoint& p : points) {
    if (filter.has_value() && p.kind != *filter) continue;
    if (p.x >= w || p.y >= h) {
      throw DataError("gaze: point for participant " + p.participant + ", video " + p.video +
                      ", frame " + std::to_string(p.frame) + " at (" + std::to_string(p.x) +
                      "," + std::to_string(p.y) + ") is outside " + std::to_string(w) + "x" +
                      std::to_string(h));
    }
    grid.at2(p.y, p.x) += 1.0;
  }
  return grid;
}

Tensor gaussian_kernel(std::size_t size, double sigma) {
  if (size == 0) throw ContractError("gaussian_kernel: size must be >= 1");
  if (sigma <= 0.0) throw ContractError("gaussian_kernel: sigma must be positive");
  Tensor k = Tensor::zeros({size, size});
  double center = (double(size) - 1.0) / 2.0;
  double total = 0.0;
  for (std::size_t r = 0; r < size; ++r) {
    for (std::size_t c = 0; c < size; ++c) {
      double dr = double(r) - center;
      double dc = double(c) - center;
      double v = std::exp(-(dr * dr + dc * dc) / (2.0 * sigma * sigma));
      k.at2(r, c) = v;
      total += v;
    }
  }
  for (double& v : k.data) v /= total;
  return k;
}

Tensor blur_counts(const Tensor& counts, std::size_t kernel_size, double sigma) {
  if (counts.rank() != 2) throw ShapeError("blur_counts: count grid must be 2-D");
  Tensor kernel = gaussian_kernel(kernel_size, sigma);
  std::size_t h = counts.shape[0], w = counts.shape[1];
  std::ptrdiff_t half = std::ptrdiff_t(kernel_size - 1) / 2;
  Tensor out = Tensor::zeros({h, w});
  // scatter form: each count deposits a kernel copy, zero-padded at borders
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      double cnt = counts.at2(r, c);
      if (cnt == 0.0) continue;
      for (std::size_t kr = 0; kr < kernel_size; ++kr) {
        std::ptrdiff_t rr = std::ptrdiff_t(r) + std::ptrdiff_t(kr) - half;
        if (rr < 0 || rr >= std::ptrdiff_t(h)) continue;
        for (std::size_t kc = 0; kc < kernel_size; ++kc) {
          std::ptrdiff_t cc = std::ptrdiff_t(c) + std::ptrdiff_t(kc) - half;
          if (cc < 0 || cc >= std::ptrdiff_t(w)) continue;
          out.at2(std::size_t(rr), std::size_t(cc)) += cnt * kernel.at2(kr, kc);
        }
      }
    }
  }
  return out;
}

Tensor attention_map(const Tensor& counts, std::size_t kernel_size, double sigma) {
  Tensor out = blur_counts(counts, kernel_size, sigma);
  double mx = 0.0;
  for (double v : out.data) mx = std::max(mx, v);
  if (mx > 0.0) {
    for (double& v : out.data) v /= mx;
  }
  return out;
}

Tensor fixation_map(const Tensor& attention, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ContractError("fixation_map: threshold must lie in (0,1)");
  }
  Tensor out = attention;
  for (double& v : out.data) v = v > threshold ? 1.0 : 0.0;
  return out;
}

}  // namespace anticipatr
