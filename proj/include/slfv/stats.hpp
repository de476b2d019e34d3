#pragma once
// Ensemble statistics over replicate outputs: expansion-speed fit, the
// sigma-tau plateau check, and log-log scaling exponents for hitting-time
// variances and front-width growth. Aggregation is streaming: one replicate
// at a time feeds running sums, so outputs never co-reside in memory.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace slfv::stats {

// --- replicate rows (produced by the runner / parsed back from CSV) --------

struct HitRow {
  double x = 0.0;    // axis position relative to the border (multiple of delta)
  double tau = 0.0;  // first hitting time of (x, 0)
  double sigma = 0.0;
  bool has_sigma = false;
};

struct FrontRow {
  double t = 0.0;
  double sd = 0.0;
  bool detached = false;
};

struct ReplicateSeries {
  std::vector<HitRow> hits;    // ascending x
  std::vector<FrontRow> front; // ascending t
};

// --- ensembles ---------------------------------------------------------------

struct SeriesMoments {
  std::vector<double> x;
  std::vector<double> mean;
  std::vector<double> mean_sq;
  std::size_t reps = 0;

  std::vector<double> variance() const;  // population: mean_sq - mean^2
};

struct HittingEnsemble {
  SeriesMoments tau;
  SeriesMoments sigma;
  // Paired per-replicate sigma - tau (same domain as sigma); pairing inside
  // each replicate keeps the tau/sigma correlation in the moments, so the
  // per-position variance is the true scatter of the difference.
  SeriesMoments diff;
};

struct FrontEnsemble {
  std::vector<double> t;        // sample times covered by every replicate
  std::vector<double> sd_mean;  // average front SD at each time
  std::vector<double> detach_times;  // per replicate (detached ones only)
  std::size_t reps = 0;
};

// Accumulates replicates on the reporting grid x = offset + spacing*k
// (positions snapped to the recorded lattice; spacing <= 0 keeps every
// recorded x of the first replicate). Points kept in the final ensembles
// are exactly those covered by all replicates, truncated at the first gap.
class EnsembleAccumulator {
 public:
  explicit EnsembleAccumulator(double offset = 0.3, double spacing = 0.5);

  void add(const ReplicateSeries& rep);
  std::size_t replicates() const { return reps_; }
  HittingEnsemble hitting() const;
  FrontEnsemble front() const;

 private:
  struct Acc {
    std::size_t n = 0;
    double sum = 0.0, sum_sq = 0.0;
  };

  double offset_, spacing_;
  std::size_t reps_ = 0;
  std::vector<double> keys_;  // reporting positions (from the first replicate)
  std::map<double, Acc> tau_, sigma_, diff_;
  std::map<double, Acc> front_;  // keyed by sample time
  std::vector<double> detach_times_;
};

// --- fits --------------------------------------------------------------------

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double se_slope = 0.0;  // standard error of the slope
  double x_lo = 0.0, x_hi = 0.0;
  std::size_t n = 0;
};

// Ordinary least squares; requires n >= 2 and distinct x.
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

struct SpeedFit {
  double nu = 0.0;     // slope of E[tau] vs x over the fit window
  double speed = 0.0;  // 1/nu
  LinearFit fit;
};

// Fits the latter half (by index) of the mean-tau points. Requires >= 10
// points and a positive slope.
SpeedFit fit_speed(const HittingEnsemble& ens);

struct PlateauReport {
  std::vector<double> x;
  std::vector<double> diff;  // E[sigma - tau], pointwise
  double mean_last_quartile = 0.0;
  double slope = 0.0;   // drift of the last-quartile points
  double t_stat = 0.0;  // slope / se(slope); |t| < 2 reads as "no drift"
  std::size_t n_last_quartile = 0;
};

// Drift check over the last quartile of positions. The slope is fitted by
// least squares weighted with each point's measured standard error (the
// replicate scatter of the paired difference), and the t-statistic compares
// the slope against that propagated uncertainty — so few points still give
// an honest test. Falls back to residual-based OLS when the ensemble carries
// no scatter information (fewer than 2 replicates).
PlateauReport sigma_minus_tau(const HittingEnsemble& ens);

// Log-log fit of Var vs x. Default window: x at or above the geometric
// midpoint of the positive-variance range ("upper half" on the log axis);
// an explicit window (x_lo, x_hi) overrides it. Requires >= 10 positive-
// variance points before windowing and >= 3 inside the window.
LinearFit fit_variance_exponent(
    const SeriesMoments& series,
    std::optional<std::pair<double, double>> window = std::nullopt);

struct FluctuationFit {
  LinearFit stage1;  // log sd_mean vs log t on (0, split]
  LinearFit stage2;  // same on (split, end]
  double split_time = 0.0;
};

// Two-regime log-log fit of the mean front SD, split at the given time
// (typically the ensemble-median detach time). Zero-SD points are skipped;
// each window must keep >= 3 points.
FluctuationFit fit_fluctuation_exponents(const FrontEnsemble& ens, double split_time);

double median(std::vector<double> v);  // by value: the input gets reordered

}  // namespace slfv::stats
