#include "support/oracles.hpp"

#include <cmath>
#include <cstdlib>
#include <vector>

namespace testsupport {

double transport_emd(std::span<const double> from, std::span<const double> to) {
  std::vector<double> supply(from.begin(), from.end());
  std::vector<double> demand(to.begin(), to.end());
  double cost = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < supply.size() && j < demand.size()) {
    const double moved = std::min(supply[i], demand[j]);
    cost += moved * std::abs(static_cast<double>(i) - static_cast<double>(j));
    supply[i] -= moved;
    demand[j] -= moved;
    if (supply[i] <= 1e-15) ++i;
    if (j < demand.size() && demand[j] <= 1e-15) ++j;
  }
  return cost;
}

double pearson_raw(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double sx = 0.0;
  double sy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  const double num = n * sxy - sx * sy;
  const double den = std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
  return num / den;
}

Eigen::VectorXd numerical_gradient(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& at, double step) {
  Eigen::VectorXd grad(at.size());
  Eigen::VectorXd probe = at;
  for (Eigen::Index i = 0; i < at.size(); ++i) {
    probe(i) = at(i) + step;
    const double up = f(probe);
    probe(i) = at(i) - step;
    const double down = f(probe);
    probe(i) = at(i);
    grad(i) = (up - down) / (2.0 * step);
  }
  return grad;
}

}  // namespace testsupport
