#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "anticipatr/data.hpp"
#include "anticipatr/train.hpp"
#include "anticipatr/xai.hpp"

namespace anticipatr::cli {

struct SynthOptions {
  SynthConfig cfg;
  std::filesystem::path out_dir;
};

struct TrainOptions {
  std::filesystem::path manifest;
  std::filesystem::path out_dir;
  TrainConfig train;
  std::size_t feature_dim = 32;
  std::size_t hidden_dim = 16;
  std::size_t history_len = 3;
  std::optional<std::filesystem::path> resume;
};

struct ExplainOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path manifest;
  std::filesystem::path out_dir;
  std::vector<CamMethod> methods = {CamMethod::grad_cam};
  std::size_t out_h = 224, out_w = 224;
  std::optional<std::filesystem::path> frames_dir;  // <dir>/<id>/frame_%04d.ppm overlays
};

struct EvalOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path manifest;
  std::filesystem::path out_dir;
};

struct XaiEvalOptions {
  std::filesystem::path saliency_dir;  // an explain output directory
  std::filesystem::path gaze_csv;
  std::filesystem::path manifest;
  std::filesystem::path out_dir;
  std::vector<CamMethod> methods = {CamMethod::grad_cam};
  double fixation_threshold = 0.1;
  std::size_t kernel_size = 30;
  double sigma = 5.0;
  std::size_t borji_splits = 100;
  std::uint64_t seed = 0;
};

int run_synth(const SynthOptions& opt);
int run_train(const TrainOptions& opt);
int run_explain(const ExplainOptions& opt);
int run_eval(const EvalOptions& opt);
int run_xai_eval(const XaiEvalOptions& opt);

}  // namespace anticipatr::cli
