#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "anticipatr/net.hpp"
#include "anticipatr/series.hpp"

namespace anticipatr {

struct TrainConfig {
  double lr = 1e-4;
  std::size_t batch_size = 10;
  std::size_t epochs = 30;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t patience = 3;
  double decay = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

// exp(-max((tau - t)/f, 0)): ramps up to 1 at the accident frame and stays
// there, so late frames of a positive video weigh like a plain cross entropy.
double frame_weight(std::size_t t, std::size_t tau, double fps);

// Eq.-style per-video loss: negatives use -sum log(1 - a^_t), positives use
// the exponentially weighted -sum w_t log(a^_t). Probabilities must lie in
// the open interval (0,1).
double video_loss(const ProbabilitySeries& series);

// Same loss recorded on the activations' tape so its gradient is available.
ValueId record_video_loss(NetActivations& acts, int label, std::optional<std::size_t> tau,
                          double fps);

using ParamGrads = std::array<Tensor, 10>;

struct AdamState {
  std::vector<Tensor> m, v;   // first/second moment per parameter tensor
  std::size_t step = 0;
  double lr = 0.0;

  static AdamState init(const NetParams& params, double lr);
};

// Standard bias-corrected Adam update, in place.
void adam_step(NetParams& params, const ParamGrads& grads, AdamState& state,
               const TrainConfig& cfg);

struct PlateauState {
  double best_loss = 0.0;
  bool has_best = false;
  std::size_t stale_epochs = 0;
};

// Multiplies the learning rate by `decay` once the best loss has not improved
// for `patience` consecutive epochs. Never increases the rate.
double reduce_lr_on_plateau(double epoch_loss, PlateauState& state, double current_lr,
                            std::size_t patience, double decay);

struct TrainVideo {
  FeatureMapSeq frames;
  int label = 0;
  std::optional<std::size_t> tau;
  double fps = 10.0;
};

struct TrainResult {
  NetParams params;
  std::vector<double> epoch_losses;  // mean video loss per epoch
};

// Checkpoint file: magic "ANTN", u32 version, the six NetConfig integers,
// then the parameter tensors in fixed order as 64-bit little-endian floats.
void save_checkpoint(const std::filesystem::path& path, const NetConfig& cfg,
                     const NetParams& params);
std::pair<NetConfig, NetParams> load_checkpoint(const std::filesystem::path& path);

// Seeded mini-batch Adam on the mean of video_loss over each batch. Gradient
// accumulation runs in the worker pool; the update step is serialized and the
// reduction order is fixed, so runs are reproducible.
TrainResult train(const std::vector<TrainVideo>& videos, const NetConfig& net_cfg,
                  const TrainConfig& cfg, const std::optional<NetParams>& start = std::nullopt);

}  // namespace anticipatr
