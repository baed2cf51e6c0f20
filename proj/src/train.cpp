#include "anticipatr/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>

#include "anticipatr/parallel.hpp"
#include "anticipatr/rng.hpp"

namespace anticipatr {

void TrainConfig::validate() const {
  if (lr <= 0.0) throw ContractError("train config: learning rate must be positive");
  if (beta1 <= 0.0 || beta1 >= 1.0 || beta2 <= 0.0 || beta2 >= 1.0) {
    throw ContractError("train config: Adam betas must lie in (0,1)");
  }
  if (batch_size == 0) throw ContractError("train config: batch size must be positive");
  if (patience == 0) throw ContractError("train config: plateau patience must be >= 1");
  if (decay <= 0.0 || decay > 1.0) throw ContractError("train config: decay must be in (0,1]");
}

double frame_weight(std::size_t t, std::size_t tau, double fps) {
  if (fps <= 0.0) throw ContractError("frame_weight: fps must be positive");
  double lead = tau > t ? (double(tau) - double(t)) / fps : 0.0;
  return std::exp(-lead);
}

double video_loss(const ProbabilitySeries& series) {
  if (series.label != 0 && !series.tau.has_value()) {
    throw ContractError("video_loss: positive video without accident frame");
  }
  double loss = 0.0;
  for (std::size_t t = 0; t < series.probs.size(); ++t) {
    double a = series.probs[t];
    if (!(a > 0.0 && a < 1.0)) {
      throw ContractError("video_loss: probability " + std::to_string(a) + " at frame " +
                          std::to_string(t) + " outside (0,1)");
    }
    if (series.label != 0) {
      loss += -frame_weight(t, *series.tau, series.fps) * std::log(a);
    } else {
      loss += -std::log(1.0 - a);
    }
  }
  return loss;
}

ValueId record_video_loss(NetActivations& acts, int label, std::optional<std::size_t> tau,
                          double fps) {
  if (label != 0 && !tau.has_value()) {
    throw ContractError("record_video_loss: positive video without accident frame");
  }
  Tape& tape = acts.tape;
  // sigma(y^c - y^!c) equals the two-class softmax probability, so log(a^)
  // and log(1-a^) both reduce to log-sigmoid of a signed score difference.
  Tensor diff_pos({1, 2}, {1.0, -1.0});
  Tensor diff_neg({1, 2}, {-1.0, 1.0});
  ValueId sel = tape.constant(label != 0 ? diff_pos : diff_neg);
  ValueId total{};
  for (std::size_t t = 0; t < acts.scores.size(); ++t) {
    ValueId log_prob = tape.log(tape.sigmoid(tape.matvec(sel, acts.scores[t])));
    double w = label != 0 ? frame_weight(t, *tau, fps) : 1.0;
    ValueId term = tape.mul(tape.constant(Tensor({1}, {-w})), log_prob);
    total = t == 0 ? term : tape.add(total, term);
  }
  return tape.sum(total);
}

AdamState AdamState::init(const NetParams& params, double lr) {
  AdamState st;
  st.lr = lr;
  for (const Tensor* t : params.tensors()) {
    st.m.push_back(Tensor::zeros(t->shape));
    st.v.push_back(Tensor::zeros(t->shape));
  }
  return st;
}

void adam_step(NetParams& params, const ParamGrads& grads, AdamState& state,
               const TrainConfig& cfg) {
  auto ts = params.tensors();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (!grads[i].same_shape(*ts[i])) {
      throw ShapeError("adam_step: gradient shape " + shape_str(grads[i].shape) +
                       " does not match parameter shape " + shape_str(ts[i]->shape));
    }
  }
  state.step += 1;
  double bc1 = 1.0 - std::pow(cfg.beta1, double(state.step));
  double bc2 = 1.0 - std::pow(cfg.beta2, double(state.step));
  for (std::size_t i = 0; i < ts.size(); ++i) {
    Tensor& p = *ts[i];
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    const Tensor& g = grads[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m.data[j] = cfg.beta1 * m.data[j] + (1.0 - cfg.beta1) * g.data[j];
      v.data[j] = cfg.beta2 * v.data[j] + (1.0 - cfg.beta2) * g.data[j] * g.data[j];
      double mhat = m.data[j] / bc1;
      double vhat = v.data[j] / bc2;
      p.data[j] -= state.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

double reduce_lr_on_plateau(double epoch_loss, PlateauState& state, double current_lr,
                            std::size_t patience, double decay) {
  if (patience == 0) throw ContractError("reduce_lr_on_plateau: patience must be >= 1");
  if (!state.has_best || epoch_loss < state.best_loss) {
    state.best_loss = epoch_loss;
    state.has_best = true;
    state.stale_epochs = 0;
    return current_lr;
  }
  state.stale_epochs += 1;
  if (state.stale_epochs >= patience) {
    state.stale_epochs = 0;
    return current_lr * decay;
  }
  return current_lr;
}

namespace {

constexpr char kCkptMagic[4] = {'A', 'N', 'T', 'N'};
constexpr std::uint32_t kCkptVersion = 1;

void ckpt_write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t ckpt_read_u32(std::istream& is, const std::filesystem::path& path) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) {
    throw FormatError(path.string() + ": truncated checkpoint header");
  }
  return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
         (std::uint32_t(b[3]) << 24);
}

void ckpt_write_f64(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

ParamGrads extract_param_grads(const NetActivations& acts, std::vector<Tensor>& node_grads) {
  ParamGrads out;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::move(node_grads[acts.params.ids[i].idx]);
  }
  return out;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const NetConfig& cfg,
                     const NetParams& params) {
  params.check_shapes(cfg);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("save_checkpoint: cannot write " + path.string());
  os.write(kCkptMagic, 4);
  ckpt_write_u32(os, kCkptVersion);
  for (std::size_t d : {cfg.channels, cfg.map_h, cfg.map_w, cfg.feature_dim, cfg.hidden_dim,
                        cfg.history_len}) {
    ckpt_write_u32(os, static_cast<std::uint32_t>(d));
  }
  for (const Tensor* t : params.tensors()) {
    for (double v : t->data) ckpt_write_f64(os, v);
  }
}

std::pair<NetConfig, NetParams> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("load_checkpoint: cannot open " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kCkptMagic, 4) != 0) {
    throw FormatError(path.string() + ": bad checkpoint magic, expected \"ANTN\"");
  }
  std::uint32_t version = ckpt_read_u32(is, path);
  if (version != kCkptVersion) {
    throw FormatError(path.string() + ": unsupported checkpoint version " +
                      std::to_string(version));
  }
  NetConfig cfg;
  cfg.channels = ckpt_read_u32(is, path);
  cfg.map_h = ckpt_read_u32(is, path);
  cfg.map_w = ckpt_read_u32(is, path);
  cfg.feature_dim = ckpt_read_u32(is, path);
  cfg.hidden_dim = ckpt_read_u32(is, path);
  cfg.history_len = ckpt_read_u32(is, path);
  cfg.validate();
  NetParams params = NetParams::zeros(cfg);
  for (Tensor* t : params.tensors()) {
    for (double& v : t->data) {
      unsigned char b[8];
      if (!is.read(reinterpret_cast<char*>(b), 8)) {
        throw FormatError(path.string() + ": truncated checkpoint payload");
      }
      std::uint64_t bits = 0;
      for (int i = 0; i < 8; ++i) bits |= std::uint64_t(b[i]) << (8 * i);
      std::memcpy(&v, &bits, 8);
      if (!std::isfinite(v)) {
        throw FormatError(path.string() + ": non-finite parameter value");
      }
    }
  }
  char extra;
  if (is.read(&extra, 1)) {
    throw FormatError(path.string() + ": trailing bytes after parameters");
  }
  return {cfg, params};
}

TrainResult train(const std::vector<TrainVideo>& videos, const NetConfig& net_cfg,
                  const TrainConfig& cfg, const std::optional<NetParams>& start) {
  cfg.validate();
  net_cfg.validate();
  if (videos.empty()) throw DataError("train: empty dataset");
  for (std::size_t i = 1; i < videos.size(); ++i) {
    if (videos[i].frames.size() != videos.front().frames.size()) {
      throw DataError("train: video " + std::to_string(i) + " has " +
                      std::to_string(videos[i].frames.size()) + " frames, expected " +
                      std::to_string(videos.front().frames.size()));
    }
    if (videos[i].fps != videos.front().fps) {
      throw DataError("train: inconsistent frame rates across the dataset");
    }
  }

  TrainResult result;
  result.params = start.has_value() ? *start : NetParams::init(net_cfg, cfg.seed);
  result.params.check_shapes(net_cfg);

  AdamState adam = AdamState::init(result.params, cfg.lr);
  PlateauState plateau;
  std::mt19937_64 shuffle_rng = make_rng(cfg.seed, "batch-shuffle");

  std::vector<std::size_t> order(videos.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss_sum = 0.0;

    for (std::size_t base = 0; base < order.size(); base += cfg.batch_size) {
      std::size_t batch_n = std::min(cfg.batch_size, order.size() - base);
      std::vector<ParamGrads> grads(batch_n);
      std::vector<double> losses(batch_n);

      parallel_for(batch_n, [&](std::size_t k) {
        const TrainVideo& video = videos[order[base + k]];
        NetActivations acts =
            forward_video(video.frames, result.params, net_cfg, /*input_grads=*/false);
        ValueId loss = record_video_loss(acts, video.label, video.tau, video.fps);
        losses[k] = acts.tape.value(loss).data[0];
        std::vector<Tensor> node_grads = acts.tape.backward(loss);
        grads[k] = extract_param_grads(acts, node_grads);
      });

      // batch loss is the mean over videos; reduce in index order
      ParamGrads mean = std::move(grads[0]);
      for (std::size_t k = 1; k < batch_n; ++k) {
        for (std::size_t i = 0; i < mean.size(); ++i) {
          for (std::size_t j = 0; j < mean[i].size(); ++j) {
            mean[i].data[j] += grads[k][i].data[j];
          }
        }
      }
      double inv = 1.0 / double(batch_n);
      for (Tensor& g : mean) {
        for (double& v : g.data) v *= inv;
      }
      adam_step(result.params, mean, adam, cfg);
      for (double l : losses) epoch_loss_sum += l;
    }

    double epoch_loss = epoch_loss_sum / double(videos.size());
    result.epoch_losses.push_back(epoch_loss);
    adam.lr = reduce_lr_on_plateau(epoch_loss, plateau, adam.lr, cfg.patience, cfg.decay);
  }
  return result;
}

}  // namespace anticipatr
