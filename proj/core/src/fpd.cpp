#include "flowcast/fpd.hpp"

#include <cmath>

namespace flowcast {

void FpdConfig::validate() const {
  if (window <= 0 || bin_interval <= 0) {
    throw ConfigError("aggregation window and bin interval must be positive");
  }
  if (window % bin_interval != 0) {
    throw ConfigError("aggregation window must be a whole number of bins");
  }
}

std::vector<double> aggregate_window(std::span<const double> values) {
  if (values.empty()) throw Error("cannot aggregate an empty window");
  double sum = 0.0;
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0) {
      throw Error("aggregation window values must be finite and non-negative");
    }
    sum += v;
  }
  std::vector<double> probs(values.size());
  if (sum == 0.0) {
    const double uniform = 1.0 / static_cast<double>(values.size());
    for (auto& p : probs) p = uniform;
  } else {
    for (std::size_t i = 0; i < values.size(); ++i) probs[i] = values[i] / sum;
  }
  return probs;
}

std::vector<Fpd> fpd_stream(const SensorSeries& series, const FpdConfig& cfg) {
  cfg.validate();
  if (series.sample_interval <= 0) throw Error("sample interval must be positive");
  if (cfg.bin_interval % series.sample_interval != 0) {
    throw ConfigError("bin interval must be a whole number of samples");
  }
  const std::size_t per_bin =
      static_cast<std::size_t>(cfg.bin_interval / series.sample_interval);
  const std::size_t bins = static_cast<std::size_t>(cfg.bins());
  const std::size_t per_window = per_bin * bins;
  const std::size_t n_windows = series.size() / per_window;

  std::vector<Fpd> out;
  out.reserve(n_windows);
  std::vector<double> bin_values(bins);
  for (std::size_t w = 0; w < n_windows; ++w) {
    const std::size_t base = w * per_window;
    for (std::size_t b = 0; b < bins; ++b) {
      double acc = 0.0;
      for (std::size_t k = 0; k < per_bin; ++k) {
        acc += series.values[base + b * per_bin + k];
      }
      bin_values[b] = acc;
    }
    Fpd fpd;
    fpd.sensor = series.id;
    fpd.window_start = series.start + static_cast<Duration>(w) * cfg.window;
    fpd.probs = aggregate_window(bin_values);
    out.push_back(std::move(fpd));
  }
  return out;
}

}  // namespace flowcast
