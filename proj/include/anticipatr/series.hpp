#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace anticipatr {

// Per-frame accident probabilities for one video together with its label,
// accident frame and frame rate.
struct ProbabilitySeries {
  std::string video_id;
  std::vector<double> probs;        // one entry per frame, each in (0,1)
  int label = 0;                    // 1 = accident video
  std::optional<std::size_t> tau;   // accident frame, positives only
  double fps = 10.0;
};

}  // namespace anticipatr
