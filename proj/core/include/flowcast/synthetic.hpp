#pragma once

#include <cstdint>
#include <vector>

#include "flowcast/series.hpp"

namespace flowcast {

enum class BasePattern { diurnal, flat };

// Deterministic multi-sensor generator with controllable anomaly injection.
// Every sensor shares the base pattern; per-sensor Gaussian noise and the
// anomaly multipliers are layered on top, then values clamp at zero.
struct SyntheticSpec {
  int n_sensors = 2;
  int n_steps = 288;  // one simulated day at 5-minute sampling
  std::uint64_t seed = 0;
  BasePattern base_pattern = BasePattern::diurnal;
  double noise_sigma = 0.0;
  std::vector<AnomalySpec> anomalies;

  double base_level = 100.0;
  Duration sample_interval = 300;
  Timestamp start_time = 0;
  Indicator indicator = Indicator::flow_count;
};

// Smooth 24h-periodic load profile in [0, 1]; exposed so tests can reuse it.
double diurnal_profile(Timestamp t);

// Sensor names are "s000", "s001", ...
SensorId synthetic_sensor_id(int index);

Dataset generate_synthetic(const SyntheticSpec& spec);

}  // namespace flowcast
