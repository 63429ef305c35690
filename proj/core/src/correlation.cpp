#include "flowcast/correlation.hpp"

#include <algorithm>
#include <cmath>

namespace flowcast {

PearsonResult pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("correlation inputs differ in length");
  const std::size_t n = x.size();
  if (n < 2) throw Error("correlation needs at least 2 points");
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return {0.0, true};
  const double r = sxy / std::sqrt(sxx * syy);
  return {std::clamp(r, -1.0, 1.0), false};
}

std::string to_string(WeightRule rule) {
  switch (rule) {
    case WeightRule::absolute: return "absolute";
    case WeightRule::signed_r: return "signed_r";
    case WeightRule::binary: return "binary";
  }
  throw Error("invalid weight rule");
}

WeightRule parse_weight_rule(const std::string& text) {
  if (text == "absolute") return WeightRule::absolute;
  if (text == "signed_r") return WeightRule::signed_r;
  if (text == "binary") return WeightRule::binary;
  throw ConfigError("unknown weight rule '" + text +
                    "' (expected absolute, signed_r or binary)");
}

std::vector<const NeighborWeight*> CorrelationWeightMap::selected() const {
  std::vector<const NeighborWeight*> out;
  out.reserve(static_cast<std::size_t>(k));
  for (const auto& e : entries) {
    if (e.selected) out.push_back(&e);
  }
  return out;
}

CorrelationWeightMap compute_weights(
    const std::map<SensorId, OutlierScoreSeries>& scores, const SensorId& target,
    double theta, WeightRule rule) {
  if (theta < 0.0 || theta > 1.0) throw ConfigError("theta must lie in [0, 1]");
  const auto target_it = scores.find(target);
  if (target_it == scores.end()) {
    throw Error("no score series for target '" + target.name + "'");
  }
  const std::size_t n_sensors = scores.size();

  CorrelationWeightMap map;
  map.target = target;
  map.theta = theta;
  map.k = static_cast<int>(
      std::min(split_index(n_sensors, theta), n_sensors - 1));

  map.entries.reserve(n_sensors - 1);
  for (const auto& [id, series] : scores) {
    if (id == target) continue;
    if (series.size() != target_it->second.size()) {
      throw Error("score series for '" + id.name + "' and '" + target.name +
                  "' differ in length");
    }
    const PearsonResult pr = pearson(target_it->second.scores, series.scores);
    NeighborWeight nw;
    nw.neighbor = id;
    nw.r = pr.r;
    nw.degenerate = pr.degenerate;
    map.entries.push_back(std::move(nw));
  }

  const auto rank_key = [rule](const NeighborWeight& e) {
    return rule == WeightRule::signed_r ? e.r : std::abs(e.r);
  };
  std::sort(map.entries.begin(), map.entries.end(),
            [&](const NeighborWeight& a, const NeighborWeight& b) {
              const double ka = rank_key(a);
              const double kb = rank_key(b);
              if (ka != kb) return ka > kb;
              return a.neighbor < b.neighbor;
            });

  for (std::size_t i = 0; i < map.entries.size(); ++i) {
    auto& e = map.entries[i];
    e.selected = i < static_cast<std::size_t>(map.k);
    if (!e.selected) {
      e.weight = 0.0;
    } else {
      switch (rule) {
        case WeightRule::absolute: e.weight = std::abs(e.r); break;
        case WeightRule::signed_r: e.weight = std::max(e.r, 0.0); break;
        case WeightRule::binary: e.weight = 1.0; break;
      }
    }
  }
  return map;
}

}  // namespace flowcast
