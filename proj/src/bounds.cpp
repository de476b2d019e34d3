#include "slfv/bounds.hpp"

#include <stdexcept>

namespace slfv {

double deterministic_bound(const ShapeDistribution& mu, double C) {
  double mean_w = 0.0, mean_wh = 0.0;
  for (const auto& a : mu.atoms()) {
    mean_w += a.p * a.w;
    mean_wh += a.p * a.w * a.h;
  }
  return 0.5 * C * mean_w * mean_wh;
}

double stochastic_lower_bound(const ShapeDistribution& mu, double C) {
  double mean_w2h = 0.0;
  for (const auto& a : mu.atoms()) mean_w2h += a.p * a.w * a.w * a.h;
  return 0.5 * C * mean_w2h;
}

SpeedBounds speed_bounds(const ShapeDistribution& mu, double C) {
  return {deterministic_bound(mu, C), stochastic_lower_bound(mu, C)};
}

std::pair<ShapeDistribution, double> extreme_family(int n) {
  if (n < 1) throw std::invalid_argument("extreme_family requires n >= 1");
  const double nd = n;
  const double p = nd / (nd + 1);  // mass on the narrow (1/n) atom
  ShapeDistribution mu({{1.0 / nd, 1.0, p}, {nd, 1.0, 1.0 - p}});
  const double lb = (1.0 + nd * nd * nd) / (2.0 * nd * (nd + 1.0));
  return {std::move(mu), lb};
}

}  // namespace slfv
