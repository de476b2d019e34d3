#include "slfv/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace slfv::stats {

std::vector<double> SeriesMoments::variance() const {
  std::vector<double> v(mean.size());
  for (std::size_t k = 0; k < mean.size(); ++k) {
    const double var = mean_sq[k] - mean[k] * mean[k];
    // Cancellation may leave a tiny negative residue; anything beyond
    // rounding noise means the moments are inconsistent.
    if (var < -1e-9 * std::max(std::abs(mean_sq[k]), 1.0))
      throw std::runtime_error("second moment below squared mean");
    v[k] = std::max(var, 0.0);
  }
  return v;
}

EnsembleAccumulator::EnsembleAccumulator(double offset, double spacing)
    : offset_(offset), spacing_(spacing) {}

void EnsembleAccumulator::add(const ReplicateSeries& rep) {
  if (reps_ == 0) {
    // The first replicate defines the reporting grid: either every recorded
    // position, or the nearest recorded position to each target
    // offset + spacing*k (within spacing/4; targets beyond coverage stop).
    if (spacing_ <= 0.0) {
      for (const HitRow& h : rep.hits) keys_.push_back(h.x);
    } else if (!rep.hits.empty()) {
      const double x_max = rep.hits.back().x;
      std::vector<double> xs;
      xs.reserve(rep.hits.size());
      for (const HitRow& h : rep.hits) xs.push_back(h.x);
      for (int k = 0;; ++k) {
        const double target = offset_ + spacing_ * k;
        if (target > x_max + spacing_ / 4) break;
        auto it = std::lower_bound(xs.begin(), xs.end(), target);
        double best = it != xs.end() ? *it : xs.back();
        if (it != xs.begin() && std::abs(*(it - 1) - target) < std::abs(best - target))
          best = *(it - 1);
        if (std::abs(best - target) <= spacing_ / 4 &&
            (keys_.empty() || best > keys_.back()))
          keys_.push_back(best);
      }
    }
  }
  ++reps_;
  // Replicate rows are ascending in x, so one merge pass covers all keys.
  std::size_t r = 0;
  for (const double key : keys_) {
    while (r < rep.hits.size() && rep.hits[r].x < key) ++r;
    if (r >= rep.hits.size() || rep.hits[r].x != key) continue;
    const HitRow& h = rep.hits[r];
    Acc& at = tau_[key];
    ++at.n;
    at.sum += h.tau;
    at.sum_sq += h.tau * h.tau;
    if (h.has_sigma) {
      Acc& as = sigma_[key];
      ++as.n;
      as.sum += h.sigma;
      as.sum_sq += h.sigma * h.sigma;
      const double d = h.sigma - h.tau;
      Acc& ad = diff_[key];
      ++ad.n;
      ad.sum += d;
      ad.sum_sq += d * d;
    }
  }
  bool detached = false;
  for (const FrontRow& f : rep.front) {
    Acc& a = front_[f.t];
    ++a.n;
    a.sum += f.sd;
    if (!detached && f.detached) {
      detach_times_.push_back(f.t);
      detached = true;
    }
  }
}

HittingEnsemble EnsembleAccumulator::hitting() const {
  HittingEnsemble out;
  out.tau.reps = out.sigma.reps = reps_;
  for (const double key : keys_) {
    const auto it = tau_.find(key);
    if (it == tau_.end() || it->second.n != reps_) break;
    out.tau.x.push_back(key);
    out.tau.mean.push_back(it->second.sum / static_cast<double>(reps_));
    out.tau.mean_sq.push_back(it->second.sum_sq / static_cast<double>(reps_));
  }
  for (const double key : keys_) {
    const auto it = sigma_.find(key);
    if (it == sigma_.end() || it->second.n != reps_) break;
    out.sigma.x.push_back(key);
    out.sigma.mean.push_back(it->second.sum / static_cast<double>(reps_));
    out.sigma.mean_sq.push_back(it->second.sum_sq / static_cast<double>(reps_));
    const Acc& d = diff_.at(key);  // sigma present implies the pair was seen
    out.diff.x.push_back(key);
    out.diff.mean.push_back(d.sum / static_cast<double>(reps_));
    out.diff.mean_sq.push_back(d.sum_sq / static_cast<double>(reps_));
  }
  out.diff.reps = reps_;
  return out;
}

FrontEnsemble EnsembleAccumulator::front() const {
  FrontEnsemble out;
  out.reps = reps_;
  for (const auto& [t, acc] : front_) {  // map iterates in ascending t
    if (acc.n != reps_) break;           // first bin some replicate missed
    out.t.push_back(t);
    out.sd_mean.push_back(acc.sum / static_cast<double>(reps_));
  }
  out.detach_times = detach_times_;
  return out;
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_line needs >= 2 (x, y) pairs");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!std::isfinite(x[k]) || !std::isfinite(y[k]))
      throw std::invalid_argument("fit_line requires finite data");
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double dx = x[k] - mx, dy = y[k] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_line requires distinct x");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  const double ss_res = std::max(0.0, syy - f.slope * sxy);
  f.se_slope = x.size() > 2 ? std::sqrt(ss_res / (n - 2.0) / sxx) : 0.0;
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  f.x_lo = *lo;
  f.x_hi = *hi;
  f.n = x.size();
  return f;
}

SpeedFit fit_speed(const HittingEnsemble& ens) {
  const SeriesMoments& tau = ens.tau;
  if (tau.x.size() < 10)
    throw std::invalid_argument("speed fit needs >= 10 reporting positions");
  const std::size_t from = tau.x.size() / 2;  // latter half of the positions
  std::vector<double> xs(tau.x.begin() + static_cast<std::ptrdiff_t>(from), tau.x.end());
  std::vector<double> ys(tau.mean.begin() + static_cast<std::ptrdiff_t>(from),
                         tau.mean.end());
  SpeedFit out;
  out.fit = fit_line(xs, ys);
  if (!(out.fit.slope > 0.0))
    throw std::runtime_error("speed fit produced a non-positive slope");
  out.nu = out.fit.slope;
  out.speed = 1.0 / out.nu;
  return out;
}

PlateauReport sigma_minus_tau(const HittingEnsemble& ens) {
  PlateauReport rep;
  rep.x = ens.diff.x;
  rep.diff = ens.diff.mean;
  const std::size_t n = rep.x.size();
  if (n < 4) throw std::invalid_argument("plateau check needs >= 4 positions");
  // Last quartile of positions, but never fewer than the 3 points a slope
  // with an error bar needs.
  const std::size_t take = std::max<std::size_t>((n + 3) / 4, 3);
  const std::size_t from = n - take;
  rep.n_last_quartile = take;

  std::vector<double> xs(rep.x.begin() + static_cast<std::ptrdiff_t>(from), rep.x.end());
  std::vector<double> ys(rep.diff.begin() + static_cast<std::ptrdiff_t>(from),
                         rep.diff.end());
  double m = 0.0;
  for (const double d : ys) m += d;
  rep.mean_last_quartile = m / static_cast<double>(ys.size());

  // Standard error of each mean difference from the replicate scatter.
  const std::size_t reps = ens.diff.reps;
  std::vector<double> se(take, 0.0);
  bool have_scatter = reps >= 2;
  if (have_scatter) {
    const auto r = static_cast<double>(reps);
    double se_min_pos = 0.0;
    for (std::size_t k = 0; k < take; ++k) {
      const std::size_t i = from + k;
      const double var =
          (ens.diff.mean_sq[i] - ens.diff.mean[i] * ens.diff.mean[i]) * r / (r - 1);
      se[k] = std::sqrt(std::max(var, 0.0) / r);
      if (se[k] > 0.0 && (se_min_pos == 0.0 || se[k] < se_min_pos))
        se_min_pos = se[k];
    }
    if (se_min_pos == 0.0) {
      have_scatter = false;  // every point is exact: nothing to weight by
    } else {
      for (double& s : se) s = std::max(s, se_min_pos);
    }
  }

  if (!have_scatter) {
    const LinearFit f = fit_line(xs, ys);
    rep.slope = f.slope;
    rep.t_stat = f.se_slope > 0.0 ? f.slope / f.se_slope : 0.0;
    return rep;
  }

  // Weighted least squares with known per-point errors: the slope's standard
  // error comes from those errors, not from the fit residuals, so the test
  // stays meaningful with few points.
  double sw = 0.0, swx = 0.0;
  for (std::size_t k = 0; k < take; ++k) {
    const double w = 1.0 / (se[k] * se[k]);
    sw += w;
    swx += w * xs[k];
  }
  const double xbar = swx / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < take; ++k) {
    const double w = 1.0 / (se[k] * se[k]);
    const double dx = xs[k] - xbar;
    sxx += w * dx * dx;
    sxy += w * dx * ys[k];
  }
  if (sxx <= 0.0) throw std::invalid_argument("plateau positions are degenerate");
  rep.slope = sxy / sxx;
  rep.t_stat = rep.slope * std::sqrt(sxx);
  return rep;
}

LinearFit fit_variance_exponent(const SeriesMoments& series,
                                std::optional<std::pair<double, double>> window) {
  const std::vector<double> var = series.variance();
  std::vector<double> xs, vs;
  for (std::size_t k = 0; k < series.x.size(); ++k) {
    if (var[k] > 0.0 && series.x[k] > 0.0) {
      xs.push_back(series.x[k]);
      vs.push_back(var[k]);
    }
  }
  if (xs.size() < 10)
    throw std::invalid_argument("variance fit needs >= 10 positive-variance points");
  double lo, hi;
  if (window) {
    lo = window->first;
    hi = window->second;
  } else {
    lo = std::sqrt(xs.front() * xs.back());  // upper half of the log range
    hi = xs.back();
  }
  std::vector<double> lx, lv;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (xs[k] >= lo && xs[k] <= hi) {
      lx.push_back(std::log(xs[k]));
      lv.push_back(std::log(vs[k]));
    }
  }
  if (lx.size() < 3)
    throw std::invalid_argument("variance fit window keeps fewer than 3 points");
  LinearFit f = fit_line(lx, lv);
  f.x_lo = std::exp(f.x_lo);  // report the window in plain units
  f.x_hi = std::exp(f.x_hi);
  return f;
}

FluctuationFit fit_fluctuation_exponents(const FrontEnsemble& ens,
                                         double split_time) {
  if (!(split_time > 0.0))
    throw std::invalid_argument("split time must be positive");
  std::vector<double> t1, s1, t2, s2;
  for (std::size_t k = 0; k < ens.t.size(); ++k) {
    if (!(ens.sd_mean[k] > 0.0)) continue;  // log undefined before any growth
    if (ens.t[k] <= split_time) {
      t1.push_back(std::log(ens.t[k]));
      s1.push_back(std::log(ens.sd_mean[k]));
    } else {
      t2.push_back(std::log(ens.t[k]));
      s2.push_back(std::log(ens.sd_mean[k]));
    }
  }
  if (t1.size() < 3)
    throw std::invalid_argument("stage-1 window keeps fewer than 3 points");
  if (t2.size() < 3)
    throw std::invalid_argument("stage-2 window keeps fewer than 3 points");
  FluctuationFit out;
  out.stage1 = fit_line(t1, s1);
  out.stage2 = fit_line(t2, s2);
  out.stage1.x_lo = std::exp(out.stage1.x_lo);
  out.stage1.x_hi = std::exp(out.stage1.x_hi);
  out.stage2.x_lo = std::exp(out.stage2.x_lo);
  out.stage2.x_hi = std::exp(out.stage2.x_hi);
  out.split_time = split_time;
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of an empty set");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid) - 1,
                   v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (v[mid - 1] + hi);
}

}  // namespace slfv::stats
