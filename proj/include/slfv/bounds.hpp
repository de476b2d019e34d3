#pragma once
// Analytic growth-speed bounds for the infinity-parent SLFV process.
//
// deterministic_bound  : (C/2) * E[w] * E[w h]   -- speed of the averaged
//                        (deterministic) front, a reference value.
// stochastic_lower_bound: (C/2) * E[w^2 h]       -- lower bound on the
//                        stochastic front speed; by Jensen it always
//                        dominates the deterministic value.

#include <utility>

#include "slfv/events.hpp"

namespace slfv {

double deterministic_bound(const ShapeDistribution& mu, double C);
double stochastic_lower_bound(const ShapeDistribution& mu, double C);

struct SpeedBounds {
  double gamma_determ = 0.0;
  double gamma_lb_sto = 0.0;
};

SpeedBounds speed_bounds(const ShapeDistribution& mu, double C);

// Two-atom family indexed by n showing the gap between the two bounds is
// unbounded: widths 1/n and n (heights 1), mass n/(n+1) on the narrow atom.
// At C = 1 the deterministic bound stays 1/2 while the stochastic lower
// bound grows like (1 + n^3) / (2 n (n+1)). Returns the distribution and
// its stochastic lower bound at C = 1.
std::pair<ShapeDistribution, double> extreme_family(int n);

}  // namespace slfv
