#pragma once
// Driving event machinery for the infinity-parent SLFV growth process.
//
// Reproduction events form a Poisson point process with intensity
// C dt (x) dz (x) mu(dw,dh): exponential inter-arrival times at total rate
// theta = C*(W+2m)*(H+2m), centers uniform over the simulation lattice,
// rectangle shapes i.i.d. from a finite-atom distribution mu.

#include <cstdint>
#include <string>
#include <vector>

#include "slfv/rng.hpp"

namespace slfv {

struct ShapeAtom {
  double w = 0.0;  // rectangle width
  double h = 0.0;  // rectangle height
  double p = 0.0;  // probability mass
};

// Finite-atom shape distribution. Atoms with zero mass are dropped at
// construction; masses must sum to 1.
class ShapeDistribution {
 public:
  ShapeDistribution() = default;
  explicit ShapeDistribution(std::vector<ShapeAtom> atoms);

  const std::vector<ShapeAtom>& atoms() const { return atoms_; }
  double max_w() const;
  double max_h() const;

  // Draws one (w, h) pair by CDF inversion (single uniform).
  ShapeAtom sample(Rng& rng) const;

  // Fixed square side a (the baseline configuration).
  static ShapeDistribution square(double a);

  // Two-atom family: width a/2 with probability p_n = (2n-2)/(2n-1),
  // width n*a otherwise; height always a. n = 1 degenerates to square(a).
  static ShapeDistribution two_widths(int n, double a);

  // Weighted mixture of two_widths(1..7, a); weights need not be normalized.
  // Atoms with equal (w, h) are merged.
  static ShapeDistribution mixture(const std::vector<double>& weights, double a);

 private:
  std::vector<ShapeAtom> atoms_;
  std::vector<double> cdf_;  // cumulative masses, last entry == 1
};

// Simulation window [ -m, W+m ] x [ -m-H/2, H/2+m ] discretized with step
// delta. Lattice indices: x(i) = -m + i*delta for i in [0, (W+2m)/delta],
// y(j) = -m - H/2 + j*delta likewise.
struct DomainGeometry {
  double W = 0.0;      // target horizontal expanse to cross
  double H = 0.0;      // vertical expanse
  double delta = 0.0;  // lattice step
  double m = 0.0;      // margin width on every side
  double C = 0.0;      // Poisson intensity per unit time*area

  static DomainGeometry from_C(double W, double H, double delta, double m, double C);
  static DomainGeometry from_theta(double W, double H, double delta, double m,
                                   double theta);

  // Throws std::invalid_argument unless m/delta, W/delta and H/(2*delta)
  // are integers (within 1e-9 of one) and all lengths are positive.
  void validate() const;
  // Additionally requires the margin to absorb any half-shape:
  // m >= max(max_w, max_h)/2.
  void validate_against(const ShapeDistribution& mu) const;

  // Total event rate over the padded window.
  double theta() const { return C * (W + 2 * m) * (H + 2 * m); }

  std::int64_t cols() const;       // lattice sites per row
  std::int64_t rows() const;       // lattice sites per column
  std::int64_t border_col() const; // rightmost initially occupied column (x = 0)
  std::int64_t axis_row() const;   // row with y = 0
  double x_of(std::int64_t i) const { return -m + static_cast<double>(i) * delta; }
  double y_of(std::int64_t j) const {
    return -m - H / 2 + static_cast<double>(j) * delta;
  }
};

struct ReproductionEvent {
  double t = 0.0;   // absolute event time
  double cx = 0.0;  // center coordinates (a lattice site)
  double cy = 0.0;
  double w = 0.0;   // rectangle extents
  double h = 0.0;
};

// Lazy, pull-based stream of reproduction events in increasing time order.
// Draw order per event is fixed (gap, center column, center row, shape) so
// a seed fully determines the stream.
class EventStream {
 public:
  EventStream(const DomainGeometry& geom, const ShapeDistribution& mu, Rng rng);

  ReproductionEvent next();
  double now() const { return t_now_; }

 private:
  DomainGeometry geom_;
  ShapeDistribution mu_;
  Rng rng_;
  double t_now_ = 0.0;
  double theta_ = 0.0;
  std::uint64_t n_cols_ = 0, n_rows_ = 0;
};

}  // namespace slfv
