#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace flowcast {

using Timestamp = std::int64_t;  // seconds since epoch
using Duration = std::int64_t;   // seconds

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Configuration problems get their own type so the CLI can map them to a
// distinct exit code (2 instead of 1).
class ConfigError : public Error {
public:
  using Error::Error;
};

struct SensorId {
  std::string name;

  auto operator<=>(const SensorId&) const = default;
};

struct SensorReading {
  Timestamp timestamp = 0;
  double value = 0.0;
};

// One sensor's uniformly sampled stream. The grid is implicit: reading i
// sits at start + i * sample_interval. Gap repair happens at ingestion, so
// a constructed series is always gap-free.
struct SensorSeries {
  SensorId id;
  Timestamp start = 0;
  Duration sample_interval = 300;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  Timestamp time_at(std::size_t i) const {
    return start + static_cast<Duration>(i) * sample_interval;
  }
  SensorReading reading(std::size_t i) const { return {time_at(i), values[i]}; }
};

enum class Indicator { flow_count, speed };

// Time-aligned collection of sensor series. All series share one timestamp
// grid; validate() enforces that plus value sanity.
struct Dataset {
  Indicator indicator = Indicator::flow_count;
  std::vector<SensorSeries> series;

  std::size_t n_sensors() const { return series.size(); }
  std::size_t n_steps() const { return series.empty() ? 0 : series.front().size(); }
  Timestamp start() const { return series.empty() ? 0 : series.front().start; }
  Duration sample_interval() const {
    return series.empty() ? 300 : series.front().sample_interval;
  }
  Timestamp time_at(std::size_t i) const {
    return start() + static_cast<Duration>(i) * sample_interval();
  }

  bool has(const SensorId& id) const;
  std::size_t index_of(const SensorId& id) const;  // throws Error if unknown
  const SensorSeries& at(const SensorId& id) const { return series[index_of(id)]; }

  void validate() const;
};

enum class AnomalyKind { spike, drop, shift };

// Synthetic anomaly: multiply affected sensors' base signal by `magnitude`
// inside the half-open interval [start, end). The kind is descriptive
// metadata (spike/drop/shift all apply the same multiplicative rule).
struct AnomalySpec {
  std::vector<SensorId> sensor_ids;
  Timestamp start = 0;
  Timestamp end = 0;
  AnomalyKind kind = AnomalyKind::spike;
  double magnitude = 1.0;
};

// Index at which a temporal split of n steps happens for a fraction in (0,1).
// Floor semantics, with a tiny snap so exact products like 0.29*100 do not
// round down through float error.
std::size_t split_index(std::size_t n_steps, double fraction);

// Temporal split: first part gets the first floor(fraction*n) steps, second
// part the rest. No shuffling.
std::pair<Dataset, Dataset> split(const Dataset& dataset, double fraction);

// Restrict every series to the step range [first, last).
Dataset slice_steps(const Dataset& dataset, std::size_t first, std::size_t last);

}  // namespace flowcast
