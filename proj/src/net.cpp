#include "anticipatr/net.hpp"

#include <cmath>
#include <random>
#include <string>

#include "anticipatr/rng.hpp"

namespace anticipatr {

void NetConfig::validate() const {
  if (channels == 0 || map_h == 0 || map_w == 0 || feature_dim == 0 || hidden_dim == 0 ||
      history_len == 0) {
    throw ContractError("net config: all dimensions must be positive");
  }
}

NetParams NetParams::zeros(const NetConfig& cfg) {
  cfg.validate();
  NetParams p;
  std::size_t d = cfg.feature_dim, h = cfg.hidden_dim;
  p.w_dense = Tensor::zeros({d, cfg.flat()});
  p.b_dense = Tensor::zeros({d});
  p.w_reset = Tensor::zeros({h, d});
  p.b_reset = Tensor::zeros({h, h});
  p.w_cand = Tensor::zeros({h, d});
  p.b_cand = Tensor::zeros({h, h});
  p.w_update = Tensor::zeros({h, d});
  p.b_update = Tensor::zeros({h, h});
  p.w_out = Tensor::zeros({2, h});
  p.b_out = Tensor::zeros({2});
  return p;
}

NetParams NetParams::init(const NetConfig& cfg, std::uint64_t seed) {
  NetParams p = zeros(cfg);
  std::mt19937_64 rng = make_rng(seed, "param-init");
  for (Tensor* t : p.tensors()) {
    // fan_in is the column count for matrices, the own length for biases
    std::size_t fan_in = t->rank() == 2 ? t->shape[1] : t->shape[0];
    double bound = 1.0 / std::sqrt(double(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : t->data) v = dist(rng);
  }
  return p;
}

std::array<Tensor*, 10> NetParams::tensors() {
  return {&w_dense, &b_dense, &w_reset, &b_reset, &w_cand,
          &b_cand,  &w_update, &b_update, &w_out, &b_out};
}

std::array<const Tensor*, 10> NetParams::tensors() const {
  return {&w_dense, &b_dense, &w_reset, &b_reset, &w_cand,
          &b_cand,  &w_update, &b_update, &w_out, &b_out};
}

std::array<const char*, 10> NetParams::names() {
  return {"w_dense", "b_dense", "w_reset", "b_reset", "w_cand",
          "b_cand",  "w_update", "b_update", "w_out", "b_out"};
}

void NetParams::check_shapes(const NetConfig& cfg) const {
  const NetParams ref = zeros(cfg);
  auto mine = tensors();
  auto want = ref.tensors();
  auto name = names();
  for (std::size_t i = 0; i < mine.size(); ++i) {
    if (mine[i]->shape != want[i]->shape) {
      throw ShapeError(std::string("net params: ") + name[i] + " has shape " +
                       shape_str(mine[i]->shape) + ", config requires " +
                       shape_str(want[i]->shape));
    }
  }
}

ParamIds record_params(Tape& tape, const NetParams& params) {
  ParamIds out;
  auto ts = params.tensors();
  for (std::size_t i = 0; i < ts.size(); ++i) out.ids[i] = tape.leaf(*ts[i]);
  return out;
}

ValueId project_features(Tape& tape, ValueId a_flat, const ParamIds& p) {
  return tape.add(tape.matvec(p.w_dense(), a_flat), p.b_dense());
}

ValueId gru_step(Tape& tape, ValueId x_t, const std::vector<ValueId>& history,
                 const ParamIds& p, std::size_t hidden_dim) {
  ValueId pooled = history.empty() ? tape.constant(Tensor::zeros({hidden_dim}))
                                   : tape.avgpool_rows(history);
  ValueId reset = tape.sigmoid(tape.add(tape.matvec(p.w_reset(), x_t),
                                        tape.matvec(p.b_reset(), pooled)));
  ValueId cand = tape.tanh(tape.add(tape.matvec(p.w_cand(), x_t),
                                    tape.matvec(p.b_cand(), tape.mul(reset, pooled))));
  ValueId update = tape.sigmoid(tape.add(tape.matvec(p.w_update(), x_t),
                                         tape.matvec(p.b_update(), pooled)));
  ValueId one_minus = tape.add(tape.constant(Tensor::full({hidden_dim}, 1.0)),
                               tape.mul(update, tape.constant(Tensor::full({hidden_dim}, -1.0))));
  return tape.add(tape.mul(one_minus, cand), tape.mul(update, pooled));
}

ValueId classify(Tape& tape, ValueId h_t, const ParamIds& p) {
  return tape.add(tape.matvec(p.w_out(), h_t), p.b_out());
}

namespace {

Tensor flatten(const Tensor& t) { return Tensor({t.size()}, t.data); }

}  // namespace

Tensor project_features(const Tensor& a_t, const NetParams& params, const NetConfig& cfg) {
  if (a_t.size() != cfg.flat()) {
    throw ShapeError("project_features: feature map " + shape_str(a_t.shape) +
                     " does not match config flat size " + std::to_string(cfg.flat()));
  }
  Tape tape;
  ParamIds p = record_params(tape, params);
  return tape.value(project_features(tape, tape.constant(flatten(a_t)), p));
}

Tensor gru_step(const Tensor& x_t, const std::vector<Tensor>& history, const NetParams& params,
                const NetConfig& cfg) {
  Tape tape;
  ParamIds p = record_params(tape, params);
  std::vector<ValueId> hist_ids;
  hist_ids.reserve(history.size());
  for (const Tensor& h : history) hist_ids.push_back(tape.constant(h));
  return tape.value(gru_step(tape, tape.constant(x_t), hist_ids, p, cfg.hidden_dim));
}

Tensor classify(const Tensor& h_t, const NetParams& params) {
  Tape tape;
  ParamIds p = record_params(tape, params);
  return tape.value(classify(tape, tape.constant(h_t), p));
}

NetActivations forward_video(const FeatureMapSeq& seq, const NetParams& params,
                             const NetConfig& cfg, bool input_grads) {
  cfg.validate();
  params.check_shapes(cfg);
  if (seq.empty()) throw ContractError("forward_video: empty frame sequence");

  NetActivations acts;
  acts.cfg = cfg;
  acts.input_grads = input_grads;
  acts.params = record_params(acts.tape, params);
  ValueId zero_hidden = acts.tape.constant(Tensor::zeros({cfg.hidden_dim}));

  for (std::size_t t = 0; t < seq.size(); ++t) {
    const Tensor& a = seq[t];
    if (a.size() != cfg.flat()) {
      throw ShapeError("forward_video: frame " + std::to_string(t) + " has shape " +
                       shape_str(a.shape) + ", expected " + std::to_string(cfg.flat()) +
                       " values");
    }
    ValueId a_leaf = acts.tape.leaf(flatten(a), input_grads);
    acts.feature_maps.push_back(a_leaf);
    ValueId x = project_features(acts.tape, a_leaf, acts.params);
    acts.features.push_back(x);

    // history is the last M hidden states, zero-padded before frame M
    std::vector<ValueId> history(cfg.history_len, zero_hidden);
    for (std::size_t m = 0; m < cfg.history_len && m < t; ++m) {
      history[m] = acts.hidden[t - 1 - m];
    }
    ValueId h = gru_step(acts.tape, x, history, acts.params, cfg.hidden_dim);
    acts.hidden.push_back(h);

    ValueId y = classify(acts.tape, h, acts.params);
    acts.scores.push_back(y);
    const Tensor& yv = acts.tape.value(y);
    acts.probs.push_back(softmax2(yv.data[0], yv.data[1]));
  }
  return acts;
}

Tensor grad_score_wrt_feature_map(NetActivations& acts, std::size_t t, ClassId cls) {
  if (t >= acts.scores.size()) {
    throw ContractError("grad_score_wrt_feature_map: frame " + std::to_string(t) +
                        " out of range (video has " + std::to_string(acts.scores.size()) +
                        " frames)");
  }
  if (!acts.input_grads) {
    throw ContractError("grad_score_wrt_feature_map: forward pass cached without input gradients");
  }
  Tensor selector = cls == ClassId::accident ? Tensor({1, 2}, {1.0, 0.0})
                                             : Tensor({1, 2}, {0.0, 1.0});
  ValueId score = acts.tape.sum(acts.tape.matvec(acts.tape.constant(selector), acts.scores[t]));
  std::vector<Tensor> grads = acts.tape.backward(score);
  Tensor g = std::move(grads[acts.feature_maps[t].idx]);
  g.shape = {acts.cfg.channels, acts.cfg.map_h, acts.cfg.map_w};
  return g;
}

}  // namespace anticipatr
