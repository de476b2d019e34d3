#include "slfv/metrics.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace slfv {

RowWindow default_row_window(const DomainGeometry& geom) {
  const std::int64_t border = geom.border_col();
  const auto margin = static_cast<std::int64_t>(std::llround(45.0 * border / 32.0));
  RowWindow w{margin, geom.rows() - 1 - margin};
  if (w.lo > w.hi)
    throw std::invalid_argument(
        "default row window is empty for this geometry; set row_window");
  return w;
}

std::vector<double> front_profile(const OccupancyGrid& grid, RowWindow window) {
  const auto& geom = grid.geom();
  if (window.lo < 0 || window.hi >= geom.rows() || window.lo > window.hi)
    throw std::invalid_argument("row window outside the lattice");
  const std::int64_t border = geom.border_col();
  std::vector<double> prof;
  prof.reserve(static_cast<std::size_t>(window.hi - window.lo + 1));
  for (std::int64_t j = window.lo; j <= window.hi; ++j) {
    std::int64_t best = -1;
    for (std::int64_t i = geom.cols() - 1; i >= 0; --i) {
      if (grid.occupied(i, j)) {
        best = i;
        break;
      }
    }
    // Rows start occupied up to the border, so best >= border always holds
    // for model states; an all-empty test row reports the border itself.
    prof.push_back(geom.delta * static_cast<double>(std::max(best, border) - border));
  }
  return prof;
}

double front_sd(const std::vector<double>& profile) {
  if (profile.empty()) throw std::invalid_argument("empty profile");
  const auto n = static_cast<double>(profile.size());
  double mean = 0.0;
  for (double v : profile) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : profile) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / n);
}

StageSplit detect_detach_time(const FrontProfileSeries& series) {
  const double threshold = 0.5 * series.delta;  // values are multiples of delta
  for (std::size_t k = 0; k < series.profiles.size(); ++k) {
    bool all_beyond = true;
    for (double v : series.profiles[k]) {
      if (v < threshold) {
        all_beyond = false;
        break;
      }
    }
    if (all_beyond) return {true, series.sample_times[k]};
  }
  return {false, 0.0};
}

// --- HittingRecorder ---------------------------------------------------------

HittingRecorder::HittingRecorder(const DomainGeometry& geom)
    : axis_row_(geom.axis_row()),
      border_(geom.border_col()),
      cols_(geom.cols()),
      delta_(geom.delta) {
  occ_.assign(static_cast<std::size_t>(cols_), 0);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  tau_.assign(static_cast<std::size_t>(cols_), nan);
  sigma_.assign(static_cast<std::size_t>(cols_), nan);
  for (std::int64_t i = 0; i <= border_; ++i) {
    occ_[static_cast<std::size_t>(i)] = 1;
    tau_[static_cast<std::size_t>(i)] = 0.0;
    sigma_[static_cast<std::size_t>(i)] = 0.0;
  }
  prefix_end_ = border_;
  i_max_tau_ = border_;
}

void HittingRecorder::after_fill(const OccupancyGrid&, const FillRect& rect,
                                 double t) {
  if (rect.j_lo > axis_row_ || rect.j_hi < axis_row_) return;
  for (std::int64_t i = rect.i_lo; i <= rect.i_hi; ++i) {
    auto& o = occ_[static_cast<std::size_t>(i)];
    if (!o) {
      o = 1;
      tau_[static_cast<std::size_t>(i)] = t;
      i_max_tau_ = std::max(i_max_tau_, i);
    }
  }
  // Leftmost-gap pointer: sigma(x) is set the moment the contiguous occupied
  // prefix first reaches x.
  while (prefix_end_ + 1 < cols_ && occ_[static_cast<std::size_t>(prefix_end_ + 1)]) {
    ++prefix_end_;
    sigma_[static_cast<std::size_t>(prefix_end_)] = t;
  }
}

// --- FrontRecorder -----------------------------------------------------------

FrontRecorder::FrontRecorder(const DomainGeometry& geom, RowWindow window,
                             double sample_dt, bool keep_profiles)
    : window_(window),
      dt_(sample_dt),
      delta_(geom.delta),
      border_(geom.border_col()),
      keep_profiles_(keep_profiles) {
  if (!(sample_dt > 0.0)) throw std::invalid_argument("sample_dt must be positive");
  if (window.lo < 0 || window.hi >= geom.rows() || window.lo > window.hi)
    throw std::invalid_argument("row window outside the lattice");
  rightmost_.assign(static_cast<std::size_t>(window.hi - window.lo + 1), border_);
  series_.window = window;
  series_.delta = delta_;
}

void FrontRecorder::before_event(const OccupancyGrid&, double t_next) {
  while (static_cast<double>(next_k_) * dt_ < t_next)
    emit(static_cast<double>(next_k_++) * dt_);
}

void FrontRecorder::after_fill(const OccupancyGrid&, const FillRect& rect,
                               double /*t*/) {
  const std::int64_t lo = std::max(rect.j_lo, window_.lo);
  const std::int64_t hi = std::min(rect.j_hi, window_.hi);
  for (std::int64_t j = lo; j <= hi; ++j) {
    auto& r = rightmost_[static_cast<std::size_t>(j - window_.lo)];
    r = std::max(r, rect.i_hi);
  }
}

void FrontRecorder::emit(double t_sample) {
  const auto n = static_cast<double>(rightmost_.size());
  double mean = 0.0;
  std::int64_t min_col = rightmost_.front();
  for (const std::int64_t r : rightmost_) {
    mean += static_cast<double>(r - border_);
    min_col = std::min(min_col, r);
  }
  mean = mean * delta_ / n;
  double ss = 0.0;
  for (const std::int64_t r : rightmost_) {
    const double v = delta_ * static_cast<double>(r - border_) - mean;
    ss += v * v;
  }
  Sample s;
  s.t = t_sample;
  s.sd = std::sqrt(ss / n);
  s.detached = min_col > border_;
  samples_.push_back(s);
  if (keep_profiles_) {
    std::vector<double> prof;
    prof.reserve(rightmost_.size());
    for (const std::int64_t r : rightmost_)
      prof.push_back(delta_ * static_cast<double>(r - border_));
    series_.sample_times.push_back(t_sample);
    series_.profiles.push_back(std::move(prof));
  }
}

StageSplit FrontRecorder::detach() const {
  for (const Sample& s : samples_)
    if (s.detached) return {true, s.t};
  return {false, 0.0};
}

}  // namespace slfv
