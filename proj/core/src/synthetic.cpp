#include "flowcast/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <set>

#include "flowcast/rng.hpp"

namespace flowcast {
namespace {

// Box-Muller on top of the project-wide uniform helper, so streams only
// depend on the mt19937_64 bit sequence and not on library internals.
double gaussian(std::mt19937_64& rng) {
  double u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

double diurnal_profile(Timestamp t) {
  Timestamp tod = t % 86400;
  if (tod < 0) tod += 86400;
  const double x = static_cast<double>(tod) / 86400.0;
  const double tau = 2.0 * std::numbers::pi;
  // Quiet at midnight, busiest mid-day, with a secondary shoulder; bounded
  // in [0, 1] because the harmonic amplitudes sum to 0.5.
  return 0.5 - 0.35 * std::cos(tau * x) - 0.15 * std::cos(2.0 * tau * x);
}

SensorId synthetic_sensor_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "s%03d", index);
  return SensorId{buf};
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_sensors < 1) throw Error("n_sensors must be at least 1");
  if (spec.n_steps < 1) throw Error("n_steps must be at least 1");
  if (spec.sample_interval <= 0) throw Error("sample interval must be positive");
  if (spec.noise_sigma < 0.0) throw Error("noise sigma must be non-negative");
  if (spec.base_level < 0.0) throw Error("base level must be non-negative");

  std::set<std::string> known;
  for (int i = 0; i < spec.n_sensors; ++i) known.insert(synthetic_sensor_id(i).name);
  for (const auto& a : spec.anomalies) {
    if (a.end <= a.start) throw Error("anomaly interval is empty");
    if (a.magnitude < 0.0) throw Error("anomaly magnitude must be non-negative");
    if (a.sensor_ids.empty()) throw Error("anomaly names no sensors");
    for (const auto& id : a.sensor_ids) {
      if (known.count(id.name) == 0) {
        throw Error("anomaly names unknown sensor '" + id.name + "'");
      }
    }
  }

  Dataset ds;
  ds.indicator = spec.indicator;
  ds.series.reserve(static_cast<std::size_t>(spec.n_sensors));
  for (int i = 0; i < spec.n_sensors; ++i) {
    SensorSeries s;
    s.id = synthetic_sensor_id(i);
    s.start = spec.start_time;
    s.sample_interval = spec.sample_interval;
    s.values.reserve(static_cast<std::size_t>(spec.n_steps));
    std::mt19937_64 rng(mix_seed(spec.seed, seed_role::synthetic,
                                 static_cast<std::uint64_t>(i)));
    for (int j = 0; j < spec.n_steps; ++j) {
      const Timestamp t = s.time_at(static_cast<std::size_t>(j));
      double base = spec.base_level;
      if (spec.base_pattern == BasePattern::diurnal) base *= diurnal_profile(t);
      double multiplier = 1.0;
      for (const auto& a : spec.anomalies) {
        if (t < a.start || t >= a.end) continue;
        for (const auto& id : a.sensor_ids) {
          if (id == s.id) {
            multiplier *= a.magnitude;
            break;
          }
        }
      }
      double v = base * multiplier;
      if (spec.noise_sigma > 0.0) v += spec.noise_sigma * gaussian(rng);
      s.values.push_back(v < 0.0 ? 0.0 : v);
    }
    ds.series.push_back(std::move(s));
  }
  ds.validate();
  return ds;
}

}  // namespace flowcast
