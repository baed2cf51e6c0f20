#pragma once

#include <filesystem>
#include <optional>
#include <string_view>

#include "anticipatr/net.hpp"

namespace anticipatr {

enum class CamMethod { grad_cam, grad_cam_pp, xgrad_cam, eigen_cam };

const char* cam_method_name(CamMethod m);
std::optional<CamMethod> parse_cam_method(std::string_view name);

struct SaliencyMap {
  Tensor low;  // U x V, elementwise >= 0 (post-ReLU)
  Tensor up;   // H x W, bilinear upsample of low
  std::size_t frame = 0;
  ClassId cls = ClassId::accident;
  CamMethod method = CamMethod::grad_cam;

  // Upsampled grid max-normalized to [0,1]; a zero map stays zero. This is
  // the grid the agreement metrics consume.
  Tensor normalized() const;
};

// Channel weights are the spatial means of the class-score gradient; the map
// is the ReLU of the weighted channel sum, bilinearly upsampled.
SaliencyMap grad_cam(NetActivations& acts, std::size_t t, ClassId cls, std::size_t out_h,
                     std::size_t out_w);

// Gradient-power weighting: alpha = g^2 / (2 g^2 + sum(A) g^3) per cell (0/0
// cells contribute zero), channel weight = sum(alpha * relu(g)).
SaliencyMap grad_cam_pp(NetActivations& acts, std::size_t t, ClassId cls, std::size_t out_h,
                        std::size_t out_w);

// Activation-normalized gradient weighting: w_k = sum(A_k/sum(A_k) * g_k),
// zero-sum channels contribute zero.
SaliencyMap xgrad_cam(NetActivations& acts, std::size_t t, ClassId cls, std::size_t out_h,
                      std::size_t out_w);

// Class-agnostic: projects the UVxK activation matrix onto its first right
// singular vector, sign chosen so the map's sum is nonnegative.
SaliencyMap eigen_cam(NetActivations& acts, std::size_t t, std::size_t out_h, std::size_t out_w);

// Writes the max-normalized map as 8-bit grayscale PGM; when a frame image
// (PPM) is supplied, also writes a 50/50 blend with the heat colormap.
void export_saliency(const SaliencyMap& map, const std::filesystem::path& pgm_path,
                     const std::optional<std::filesystem::path>& frame_ppm = std::nullopt,
                     const std::optional<std::filesystem::path>& overlay_path = std::nullopt);

}  // namespace anticipatr
