#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "anticipatr/series.hpp"
#include "anticipatr/tensor.hpp"

namespace anticipatr {

// K x U x V feature maps per frame, the network input and the Grad-CAM target.
using FeatureMapSeq = std::vector<Tensor>;

struct NetConfig {
  std::size_t channels = 8;      // K
  std::size_t map_h = 14;        // U
  std::size_t map_w = 14;        // V
  std::size_t feature_dim = 32;  // d
  std::size_t hidden_dim = 16;   // h
  std::size_t history_len = 3;   // M, frames pooled into h'_{t-1}

  std::size_t flat() const { return channels * map_h * map_w; }
  void validate() const;
  bool operator==(const NetConfig&) const = default;
};

// All learnable weights. Gate matrices map the feature vector to the hidden
// dimension, recurrent matrices act on the pooled hidden state, and the
// classifier projects the hidden state onto the two class scores.
struct NetParams {
  Tensor w_dense, b_dense;    // d x KUV, d
  Tensor w_reset, b_reset;    // h x d,  h x h
  Tensor w_cand, b_cand;      // h x d,  h x h
  Tensor w_update, b_update;  // h x d,  h x h
  Tensor w_out, b_out;        // 2 x h,  2

  static NetParams zeros(const NetConfig& cfg);
  // Uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], seeded.
  static NetParams init(const NetConfig& cfg, std::uint64_t seed);

  std::array<Tensor*, 10> tensors();
  std::array<const Tensor*, 10> tensors() const;
  static std::array<const char*, 10> names();
  void check_shapes(const NetConfig& cfg) const;
};

enum class ClassId { accident = 0, no_accident = 1 };

struct ParamIds {
  std::array<ValueId, 10> ids{};
  ValueId w_dense() const { return ids[0]; }
  ValueId b_dense() const { return ids[1]; }
  ValueId w_reset() const { return ids[2]; }
  ValueId b_reset() const { return ids[3]; }
  ValueId w_cand() const { return ids[4]; }
  ValueId b_cand() const { return ids[5]; }
  ValueId w_update() const { return ids[6]; }
  ValueId b_update() const { return ids[7]; }
  ValueId w_out() const { return ids[8]; }
  ValueId b_out() const { return ids[9]; }
};

ParamIds record_params(Tape& tape, const NetParams& params);

// Tape-level building blocks.
ValueId project_features(Tape& tape, ValueId a_flat, const ParamIds& p);
ValueId gru_step(Tape& tape, ValueId x_t, const std::vector<ValueId>& history,
                 const ParamIds& p, std::size_t hidden_dim);
ValueId classify(Tape& tape, ValueId h_t, const ParamIds& p);

// Convenience value-level wrappers (each records on a throwaway tape).
Tensor project_features(const Tensor& a_t, const NetParams& params, const NetConfig& cfg);
Tensor gru_step(const Tensor& x_t, const std::vector<Tensor>& history, const NetParams& params,
                const NetConfig& cfg);
Tensor classify(const Tensor& h_t, const NetParams& params);

// Cached forward state for one video: the record plus ids of every symbol a
// later backward pass needs.
struct NetActivations {
  NetConfig cfg;
  Tape tape;
  ParamIds params;
  std::vector<ValueId> feature_maps;  // flattened A_t leaves
  std::vector<ValueId> features;      // x_t
  std::vector<ValueId> hidden;        // h_t
  std::vector<ValueId> scores;        // yhat_t = [y^c, y^!c]
  std::vector<double> probs;          // a^_t
  bool input_grads = true;
};

// Runs the whole pipeline over a nonempty frame sequence: dense projection,
// GRU with M-frame pooled history (zero-padded before frame M), classifier,
// softmax probability per frame. Set input_grads=false during training to
// skip gradient buffers for the input feature maps.
NetActivations forward_video(const FeatureMapSeq& seq, const NetParams& params,
                             const NetConfig& cfg, bool input_grads = true);

// Exact gradient of the frame-t class score with respect to A_t (K x U x V).
// h'_{t-1} depends only on earlier frames, so this is the full dependence of
// y^c_t on the frame-t feature map.
Tensor grad_score_wrt_feature_map(NetActivations& acts, std::size_t t, ClassId cls);

}  // namespace anticipatr
