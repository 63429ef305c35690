#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "flowcast/autoencoder.hpp"
#include "flowcast/series.hpp"

namespace flowcast {

struct PearsonResult {
  double r = 0.0;
  bool degenerate = false;  // a zero-variance input forced r = 0
};

// Sample Pearson correlation. Length mismatch or length < 2 throws; zero
// variance on either side yields r = 0 with the degeneracy flag set.
PearsonResult pearson(std::span<const double> x, std::span<const double> y);

// How a correlation coefficient turns into a fusion weight.
//   absolute: rank and weight by |r| (default; anti-correlation is signal).
//   signed_r: rank by r, weight max(r, 0).
//   binary:   rank by |r|, selected neighbours get weight 1 (ablation;
//             "unweighted" integration).
enum class WeightRule { absolute, signed_r, binary };

std::string to_string(WeightRule rule);
WeightRule parse_weight_rule(const std::string& text);

struct NeighborWeight {
  SensorId neighbor;
  double r = 0.0;
  double weight = 0.0;
  bool selected = false;
  bool degenerate = false;
};

// Target sensor plus every neighbour's correlation, ranked by the weight
// rule (ties broken by SensorId). The top k = floor(theta * N) entries are
// selected, k clamped to N-1.
struct CorrelationWeightMap {
  SensorId target;
  double theta = 0.0;
  int k = 0;
  std::vector<NeighborWeight> entries;  // sorted by rank, selected first

  std::vector<const NeighborWeight*> selected() const;
};

CorrelationWeightMap compute_weights(
    const std::map<SensorId, OutlierScoreSeries>& scores, const SensorId& target,
    double theta, WeightRule rule = WeightRule::absolute);

}  // namespace flowcast
