#include "anticipatr/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

namespace anticipatr {

namespace {

std::uint8_t quantize(double v) {
  double c = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

// Reads one whitespace-delimited token, skipping '#' comment lines.
std::string next_token(std::istream& is) {
  std::string tok;
  int c;
  while ((c = is.get()) != EOF) {
    if (c == '#') {
      while ((c = is.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(char(c));
  }
  return tok;
}

std::size_t parse_dim(const std::string& tok, const std::filesystem::path& path) {
  try {
    long v = std::stol(tok);
    if (v <= 0) throw std::invalid_argument("nonpositive");
    return std::size_t(v);
  } catch (const std::exception&) {
    throw FormatError(path.string() + ": bad dimension token \"" + tok + "\"");
  }
}

}  // namespace

void write_pgm(const std::filesystem::path& path, const Tensor& grid01) {
  if (grid01.rank() != 2) throw ShapeError("write_pgm: grid must be 2-D");
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("write_pgm: cannot write " + path.string());
  os << "P5\n" << grid01.shape[1] << " " << grid01.shape[0] << "\n255\n";
  for (double v : grid01.data) os.put(char(quantize(v)));
}

Tensor read_pgm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("read_pgm: cannot open " + path.string());
  if (next_token(is) != "P5") throw FormatError(path.string() + ": expected P5 magic");
  std::size_t w = parse_dim(next_token(is), path);
  std::size_t h = parse_dim(next_token(is), path);
  std::size_t maxval = parse_dim(next_token(is), path);
  if (maxval != 255) throw FormatError(path.string() + ": only 8-bit PGM supported");
  std::vector<char> buf(w * h);
  if (!is.read(buf.data(), std::streamsize(buf.size()))) {
    throw FormatError(path.string() + ": truncated pixel data");
  }
  Tensor out = Tensor::zeros({h, w});
  for (std::size_t i = 0; i < buf.size(); ++i) {
    out.data[i] = double(static_cast<unsigned char>(buf[i])) / 255.0;
  }
  return out;
}

void write_ppm(const std::filesystem::path& path, const RgbImage& img) {
  if (img.pixels.size() != img.height * img.width * 3) {
    throw ShapeError("write_ppm: pixel buffer does not match dimensions");
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("write_ppm: cannot write " + path.string());
  os << "P6\n" << img.width << " " << img.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(img.pixels.data()), std::streamsize(img.pixels.size()));
}

RgbImage read_ppm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("read_ppm: cannot open " + path.string());
  if (next_token(is) != "P6") throw FormatError(path.string() + ": expected P6 magic");
  RgbImage img;
  img.width = parse_dim(next_token(is), path);
  img.height = parse_dim(next_token(is), path);
  std::size_t maxval = parse_dim(next_token(is), path);
  if (maxval != 255) throw FormatError(path.string() + ": only 8-bit PPM supported");
  img.pixels.resize(img.width * img.height * 3);
  if (!is.read(reinterpret_cast<char*>(img.pixels.data()), std::streamsize(img.pixels.size()))) {
    throw FormatError(path.string() + ": truncated pixel data");
  }
  return img;
}

std::array<std::uint8_t, 3> heat_color(double v) {
  double c = std::clamp(v, 0.0, 1.0);
  return {quantize(3.0 * c), quantize(3.0 * c - 1.0), quantize(3.0 * c - 2.0)};
}

}  // namespace anticipatr
