#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "anticipatr/tensor.hpp"

namespace anticipatr {

struct RgbImage {
  std::size_t height = 0, width = 0;
  std::vector<std::uint8_t> pixels;  // row-major RGB triples
};

// Binary PGM (P5), 8-bit. Values are expected in [0,1] and scaled to 0..255.
void write_pgm(const std::filesystem::path& path, const Tensor& grid01);
// Reads a binary PGM back into a [0,1] grid.
Tensor read_pgm(const std::filesystem::path& path);

// Binary PPM (P6), 8-bit.
void write_ppm(const std::filesystem::path& path, const RgbImage& img);
RgbImage read_ppm(const std::filesystem::path& path);

// Fixed heat colormap used for overlays: black -> red -> yellow -> white,
// r = clamp(3v), g = clamp(3v-1), b = clamp(3v-2), each scaled to 0..255.
std::array<std::uint8_t, 3> heat_color(double v);

}  // namespace anticipatr
