#pragma once
// Observables recorded along a growth run:
//  - first hitting time tau(x) of each site on the central horizontal axis,
//    and sigma(x), the first time every axis site in (0, x] is occupied;
//  - the front profile over a vertical row window (per-row rightmost
//    occupied position), its population SD, and the detachment time (first
//    sampling time at which every window row has advanced beyond the
//    initial border).
// Positions are reported relative to the border x = 0, i.e. as exact
// multiples of delta.

#include <cmath>
#include <cstdint>
#include <vector>

#include "slfv/grid.hpp"

namespace slfv {

struct RowWindow {
  std::int64_t lo = 0, hi = 0;  // inclusive lattice row indices
};

// Symmetric default: trim round(45/32 * m/delta) rows at each edge, the
// margin plus a proportional buffer against edge effects.
RowWindow default_row_window(const DomainGeometry& geom);

// Per-row rightmost occupied position (relative to the border) obtained by
// scanning whole rows; the reference answer recorders must agree with.
std::vector<double> front_profile(const OccupancyGrid& grid, RowWindow window);

// Population standard deviation (two-pass for stability).
double front_sd(const std::vector<double>& profile);

struct FrontProfileSeries {
  std::vector<double> sample_times;
  std::vector<std::vector<double>> profiles;  // one vector per sample time
  RowWindow window;
  double delta = 0.0;
};

struct StageSplit {
  bool detached = false;
  double detach_time = 0.0;  // meaningful only when detached
};

// First sample at which min_j profile >= delta (all rows beyond the border).
StageSplit detect_detach_time(const FrontProfileSeries& series);

// --- recorders -------------------------------------------------------------

class HittingRecorder : public Recorder {
 public:
  explicit HittingRecorder(const DomainGeometry& geom);

  void after_fill(const OccupancyGrid& grid, const FillRect& rect,
                  double t) override;

  // NaN where never recorded. Index = lattice column.
  const std::vector<double>& tau() const { return tau_; }
  const std::vector<double>& sigma() const { return sigma_; }
  std::int64_t i_max_tau() const { return i_max_tau_; }
  std::int64_t i_max_sigma() const { return prefix_end_; }
  std::int64_t border() const { return border_; }
  double delta() const { return delta_; }

 private:
  std::int64_t axis_row_ = 0, border_ = 0, cols_ = 0;
  double delta_ = 0.0;
  std::vector<char> occ_;
  std::vector<double> tau_, sigma_;
  std::int64_t prefix_end_ = 0;  // all axis sites <= prefix_end_ occupied
  std::int64_t i_max_tau_ = 0;
};

class FrontRecorder : public Recorder {
 public:
  struct Sample {
    double t = 0.0;
    double sd = 0.0;
    bool detached = false;
  };

  // Samples the profile at times dt, 2*dt, ... (state strictly before the
  // next event). keep_profiles stores full profiles for diagnostics/tests.
  FrontRecorder(const DomainGeometry& geom, RowWindow window, double sample_dt,
                bool keep_profiles = false);

  void before_event(const OccupancyGrid& grid, double t_next) override;
  void after_fill(const OccupancyGrid& grid, const FillRect& rect,
                  double t) override;

  const std::vector<Sample>& samples() const { return samples_; }
  const FrontProfileSeries& series() const { return series_; }
  StageSplit detach() const;

 private:
  void emit(double t_sample);

  RowWindow window_;
  double dt_ = 0.0, delta_ = 0.0;
  std::int64_t border_ = 0;
  bool keep_profiles_ = false;
  std::vector<std::int64_t> rightmost_;  // per window row, lattice column
  std::int64_t next_k_ = 1;              // next sample index
  std::vector<Sample> samples_;
  FrontProfileSeries series_;
};

}  // namespace slfv
