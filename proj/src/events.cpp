#include "slfv/events.hpp"

#include <cmath>
#include <stdexcept>

namespace slfv {

namespace {

// Checks that x is an integer within 1e-9 and returns it.
std::int64_t require_integer(double x, const char* what) {
  const double r = std::round(x);
  if (std::abs(x - r) > 1e-9 * std::max(1.0, std::abs(x))) {
    throw std::invalid_argument(std::string(what) +
                                " must be an integer multiple of delta");
  }
  return static_cast<std::int64_t>(r);
}

}  // namespace

ShapeDistribution::ShapeDistribution(std::vector<ShapeAtom> atoms) {
  double total = 0.0;
  for (const auto& a : atoms) {
    if (!(a.w > 0.0) || !(a.h > 0.0))
      throw std::invalid_argument("shape atom extents must be positive");
    if (a.p < 0.0) throw std::invalid_argument("shape atom mass must be >= 0");
    if (a.p == 0.0) continue;  // zero-mass atoms carry no information
    atoms_.push_back(a);
    total += a.p;
  }
  if (atoms_.empty()) throw std::invalid_argument("shape distribution has no mass");
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("shape atom masses must sum to 1");
  cdf_.reserve(atoms_.size());
  double acc = 0.0;
  for (const auto& a : atoms_) {
    acc += a.p;
    cdf_.push_back(acc);
  }
  cdf_.back() = 1.0;  // absorb rounding so sampling can never fall off the end
}

double ShapeDistribution::max_w() const {
  double v = 0.0;
  for (const auto& a : atoms_) v = std::max(v, a.w);
  return v;
}

double ShapeDistribution::max_h() const {
  double v = 0.0;
  for (const auto& a : atoms_) v = std::max(v, a.h);
  return v;
}

ShapeAtom ShapeDistribution::sample(Rng& rng) const {
  const double u = rng.uniform();
  for (std::size_t k = 0; k + 1 < cdf_.size(); ++k)
    if (u < cdf_[k]) return atoms_[k];
  return atoms_.back();
}

ShapeDistribution ShapeDistribution::square(double a) {
  return ShapeDistribution({{a, a, 1.0}});
}

ShapeDistribution ShapeDistribution::two_widths(int n, double a) {
  if (n < 1) throw std::invalid_argument("two_widths requires n >= 1");
  const double pn = (2.0 * n - 2.0) / (2.0 * n - 1.0);
  // With mass pn the event is narrow (a/2); otherwise it is n times wider
  // than the square baseline. Mean width stays equal to a for every n.
  return ShapeDistribution({{a / 2, a, pn}, {n * a, a, 1.0 - pn}});
}

ShapeDistribution ShapeDistribution::mixture(const std::vector<double>& weights,
                                             double a) {
  if (weights.size() != 7)
    throw std::invalid_argument("mixture requires exactly 7 weights");
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw std::invalid_argument("mixture weights must be >= 0");
    total += w;
  }
  if (total <= 0.0)
    throw std::invalid_argument("mixture weights must not all be zero");

  std::vector<ShapeAtom> atoms;
  auto add = [&atoms](double w, double h, double p) {
    if (p == 0.0) return;
    for (auto& at : atoms) {
      if (at.w == w && at.h == h) {  // identical arithmetic path => exact match
        at.p += p;
        return;
      }
    }
    atoms.push_back({w, h, p});
  };
  for (int i = 1; i <= 7; ++i) {
    const double wt = weights[static_cast<std::size_t>(i - 1)] / total;
    const double pi = (2.0 * i - 2.0) / (2.0 * i - 1.0);
    add(a / 2, a, wt * pi);
    add(i * a, a, wt * (1.0 - pi));
  }
  return ShapeDistribution(std::move(atoms));
}

DomainGeometry DomainGeometry::from_C(double W, double H, double delta, double m,
                                      double C) {
  DomainGeometry g{W, H, delta, m, C};
  g.validate();
  return g;
}

DomainGeometry DomainGeometry::from_theta(double W, double H, double delta,
                                          double m, double theta) {
  if (!(theta > 0.0)) throw std::invalid_argument("theta must be positive");
  DomainGeometry g{W, H, delta, m, theta / ((W + 2 * m) * (H + 2 * m))};
  g.validate();
  return g;
}

void DomainGeometry::validate() const {
  if (!(W > 0.0) || !(H > 0.0) || !(delta > 0.0) || !(m > 0.0) || !(C > 0.0))
    throw std::invalid_argument("geometry lengths and intensity must be positive");
  require_integer(m / delta, "m/delta");
  require_integer(W / delta, "W/delta");
  require_integer(H / (2 * delta), "H/(2*delta)");
}

void DomainGeometry::validate_against(const ShapeDistribution& mu) const {
  validate();
  const double need = std::max(mu.max_w(), mu.max_h()) / 2;
  if (m < need - 1e-12)
    throw std::invalid_argument(
        "margin m must be at least half the largest event extent");
}

std::int64_t DomainGeometry::cols() const {
  return require_integer((W + 2 * m) / delta, "(W+2m)/delta") + 1;
}

std::int64_t DomainGeometry::rows() const {
  return require_integer((H + 2 * m) / delta, "(H+2m)/delta") + 1;
}

std::int64_t DomainGeometry::border_col() const {
  return require_integer(m / delta, "m/delta");
}

std::int64_t DomainGeometry::axis_row() const {
  return require_integer((m + H / 2) / delta, "(m+H/2)/delta");
}

EventStream::EventStream(const DomainGeometry& geom, const ShapeDistribution& mu,
                         Rng rng)
    : geom_(geom), mu_(mu), rng_(rng) {
  geom_.validate_against(mu_);
  theta_ = geom_.theta();
  n_cols_ = static_cast<std::uint64_t>(geom_.cols());
  n_rows_ = static_cast<std::uint64_t>(geom_.rows());
}

ReproductionEvent EventStream::next() {
  t_now_ += rng_.exponential(theta_);
  const auto i = static_cast<std::int64_t>(rng_.below(n_cols_));
  const auto j = static_cast<std::int64_t>(rng_.below(n_rows_));
  const ShapeAtom s = mu_.sample(rng_);
  return {t_now_, geom_.x_of(i), geom_.y_of(j), s.w, s.h};
}

}  // namespace slfv
