#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "anticipatr/tensor.hpp"

namespace anticipatr {

enum class GazeKind { fixation, saccade, unknown };

struct GazePoint {
  std::string participant;
  std::string video;
  std::size_t frame = 0;
  double timestamp_ms = 0.0;
  std::size_t x = 0, y = 0;  // pixel coordinates, 0 <= x < W, 0 <= y < H
  GazeKind kind = GazeKind::unknown;
};

// Gaze CSV: header row required, then
//   participant_id,video_id,frame_index,timestamp_ms,x,y,kind
// kind defaults to "unknown" when blank.
std::vector<GazePoint> load_gaze_csv(const std::filesystem::path& path);

// Integer gaze count per pixel over all participants. The default filter
// keeps every kind; pass a kind to keep only matching records.
Tensor accumulate_gaze(std::span<const GazePoint> points, std::size_t h, std::size_t w,
                       std::optional<GazeKind> filter = std::nullopt);

// size x size Gaussian kernel normalized to sum 1.
Tensor gaussian_kernel(std::size_t size, double sigma);

// Convolution of the count grid with the Gaussian kernel, zero-padded
// borders, no normalization. Linear in the counts.
Tensor blur_counts(const Tensor& counts, std::size_t kernel_size = 30, double sigma = 5.0);

// blur_counts followed by max-normalization; an all-zero count grid stays
// zero.
Tensor attention_map(const Tensor& counts, std::size_t kernel_size = 30, double sigma = 5.0);

// Step filter: 1 where attention exceeds the threshold.
Tensor fixation_map(const Tensor& attention, double threshold = 0.1);

}  // namespace anticipatr
