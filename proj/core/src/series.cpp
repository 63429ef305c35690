#include "flowcast/series.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace flowcast {

std::size_t Dataset::index_of(const SensorId& id) const {
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series[i].id == id) return i;
  }
  throw Error("unknown sensor '" + id.name + "'");
}

bool Dataset::has(const SensorId& id) const {
  for (const auto& s : series) {
    if (s.id == id) return true;
  }
  return false;
}

void Dataset::validate() const {
  if (series.empty()) throw Error("dataset has no sensors");
  std::set<std::string> seen;
  const auto& first = series.front();
  if (first.sample_interval <= 0) throw Error("sample interval must be positive");
  for (const auto& s : series) {
    if (!seen.insert(s.id.name).second) {
      throw Error("duplicate sensor '" + s.id.name + "'");
    }
    if (s.start != first.start || s.sample_interval != first.sample_interval) {
      throw Error("sensor '" + s.id.name + "' is not aligned with the shared grid");
    }
    if (s.values.size() != first.values.size()) {
      std::ostringstream os;
      os << "sensor '" << s.id.name << "' has " << s.values.size()
         << " samples, expected " << first.values.size();
      throw Error(os.str());
    }
    for (double v : s.values) {
      if (!std::isfinite(v)) {
        throw Error("sensor '" + s.id.name + "' contains a non-finite value");
      }
    }
  }
}

std::size_t split_index(std::size_t n, double fraction) {
  if (fraction < 0.0 || fraction > 1.0) {
    throw Error("split fraction must lie in [0, 1]");
  }
  const double exact = fraction * static_cast<double>(n);
  double floored = std::floor(exact);
  // Guard against representation error pulling e.g. 0.29 * 100 below 29.
  if (exact - floored > 1.0 - 1e-9) floored += 1.0;
  if (floored > static_cast<double>(n)) floored = static_cast<double>(n);
  return static_cast<std::size_t>(floored);
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double fraction) {
  const std::size_t n = dataset.n_steps();
  const std::size_t cut = split_index(n, fraction);
  return {slice_steps(dataset, 0, cut), slice_steps(dataset, cut, n)};
}

Dataset slice_steps(const Dataset& dataset, std::size_t first, std::size_t last) {
  if (first > last || last > dataset.n_steps()) {
    throw Error("slice range out of bounds");
  }
  Dataset out;
  out.indicator = dataset.indicator;
  out.series.reserve(dataset.series.size());
  for (const auto& s : dataset.series) {
    SensorSeries cut;
    cut.id = s.id;
    cut.sample_interval = s.sample_interval;
    cut.start = s.start + static_cast<Timestamp>(first) * s.sample_interval;
    cut.values.assign(s.values.begin() + static_cast<std::ptrdiff_t>(first),
                      s.values.begin() + static_cast<std::ptrdiff_t>(last));
    out.series.push_back(std::move(cut));
  }
  return out;
}

}  // namespace flowcast
