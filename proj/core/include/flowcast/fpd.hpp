#pragma once

#include <span>
#include <vector>

#include "flowcast/series.hpp"

namespace flowcast {

// Aggregation geometry for flow probability distributions: one distribution
// per `window`, with one bin per `bin_interval` inside it.
struct FpdConfig {
  Duration window = 3600;
  Duration bin_interval = 300;

  int bins() const { return static_cast<int>(window / bin_interval); }
  void validate() const;
};

// Discrete probability distribution over the bins of one aggregation window.
// Invariant: probs sum to 1 (±1e-9) with every entry in [0, 1].
struct Fpd {
  SensorId sensor;
  Timestamp window_start = 0;
  std::vector<double> probs;
};

// Normalize one window of non-negative values into bin probabilities.
// An all-zero window maps to the uniform distribution.
std::vector<double> aggregate_window(std::span<const double> values);

// One Fpd per complete non-overlapping window, in temporal order. A trailing
// incomplete window is dropped; a series shorter than one window yields an
// empty stream.
std::vector<Fpd> fpd_stream(const SensorSeries& series, const FpdConfig& cfg);

}  // namespace flowcast
