#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "anticipatr/net.hpp"

namespace anticipatr {

struct VideoRecord {
  std::string id;
  int label = 0;                   // 1 = accident video
  std::optional<std::size_t> tau;  // accident frame, positives only
  double fps = 10.0;
  std::size_t frames = 0;          // T
  std::filesystem::path path;      // feature file, relative paths resolve
                                   // against the manifest directory
};

// Manifest format: one record per line, comma-separated
//   id,label,tau,fps,T,path
// tau is empty for negatives. No header row.
std::vector<VideoRecord> load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const std::vector<VideoRecord>& records);

// FMAP file: magic "FMAP", u32 version, u32 T,K,U,V, then T*K*U*V 32-bit
// little-endian floats, frame-major. Round trips are bit-exact.
void save_fmap(const std::filesystem::path& path, const FeatureMapSeq& seq);
FeatureMapSeq load_fmap(const std::filesystem::path& path);

struct SynthConfig {
  std::size_t n_positive = 50;
  std::size_t n_negative = 50;
  std::size_t frames = 20;  // T
  double fps = 10.0;
  std::size_t channels = 8;
  std::size_t map_h = 14;
  std::size_t map_w = 14;
  double amplitude = 4.0;    // peak strength of the planted risk pattern
  std::size_t lead = 20;     // frames before tau over which the pattern ramps in
  double noise_scale = 0.5;
  std::uint64_t seed = 0;
  std::size_t signal_channel = 0;

  struct Patch {
    std::size_t row0, col0, rows, cols;
  };
  // The planted pattern's spatial footprint; fixed so saliency ground truth
  // is known downstream.
  Patch patch() const;

  void validate() const;
};

struct SynthResult {
  std::filesystem::path manifest;
  std::vector<VideoRecord> records;
};

// Generates negatives as unit Gaussian noise fields and positives as the same
// noise plus an additive patch in one channel whose amplitude ramps linearly
// from 0 at tau-lead to full at tau (and stays at full after). tau is placed
// uniformly in the final 20% of frames. Deterministic under seed.
SynthResult synth_generate(const SynthConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace anticipatr
