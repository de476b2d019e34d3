// Acceptance suite for the growth-process toolkit. Each numbered criterion
// prints exactly one "PASS criterion N: ..." / "FAIL criterion N: ..." line
// on stdout and the process exits with the number of failures. Runs are
// seeded, so the verdicts are reproducible run to run.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "slfv/bounds.hpp"
#include "slfv/cgp.hpp"
#include "slfv/config.hpp"
#include "slfv/events.hpp"
#include "slfv/grid.hpp"
#include "slfv/metrics.hpp"
#include "slfv/rng.hpp"
#include "slfv/runner.hpp"
#include "slfv/stats.hpp"

using namespace slfv;
namespace fs = std::filesystem;

namespace {

struct Check {
  bool ok = true;
  std::string detail;
};

class Detail {
 public:
  template <typename T>
  Detail& operator<<(const T& v) {
    s_ << v;
    return *this;
  }
  std::string str() const { return s_.str(); }

 private:
  std::ostringstream s_;
};

std::string fmt(double v, const char* format = "%.4g") {
  char buf[40];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

// ---------------------------------------------------------------------------
// shared run helpers

RunConfig desk_config(int setting, int n, int mixture_id, std::uint64_t reps,
                      std::uint64_t seed) {
  RunConfig cfg;
  cfg.setting = setting;
  cfg.n = n;
  if (setting == 3) cfg.mixture_weights = mixture_preset(mixture_id);
  apply_desk_scale(cfg);
  cfg.replicates = reps;
  cfg.master_seed = seed;
  validate(cfg);
  return cfg;
}

struct DeskRun {
  RunConfig cfg;
  AnalysisResult res;
};

DeskRun desk_run(int setting, int n, int mixture_id, std::uint64_t reps,
                 std::uint64_t seed) {
  DeskRun out{desk_config(setting, n, mixture_id, reps, seed), {}};
  const std::vector<ReplicateOutput> batch = run_batch(out.cfg, nullptr);
  stats::EnsembleAccumulator acc;
  for (const ReplicateOutput& rep : batch) {
    if (!rep.complete)
      throw std::runtime_error("replicate " + std::to_string(rep.index) +
                               " incomplete: " + rep.error);
    acc.add(rep.series);
  }
  out.res = analyze_ensembles(out.cfg, acc.hitting(), acc.front());
  return out;
}

// The 128-replicate fixed-square desk ensemble backs two criteria; run once.
const DeskRun& fixed_square_128() {
  static const DeskRun run = desk_run(1, 1, 0, 128, 2001);
  return run;
}

// Dense reference occupancy used to cross-check the production grid.
class DenseGrid {
 public:
  DenseGrid(const DomainGeometry& g, bool half_plane)
      : cols_(g.cols()), rows_(g.rows()), occ_(static_cast<std::size_t>(cols_ * rows_), 0) {
    if (half_plane)
      for (std::int64_t j = 0; j < rows_; ++j)
        for (std::int64_t i = 0; i <= g.border_col(); ++i) at(i, j) = 1;
  }
  char& at(std::int64_t i, std::int64_t j) {
    return occ_[static_cast<std::size_t>(j * cols_ + i)];
  }
  bool any(const FillRect& r) const {
    for (std::int64_t j = r.j_lo; j <= r.j_hi; ++j)
      for (std::int64_t i = r.i_lo; i <= r.i_hi; ++i)
        if (occ_[static_cast<std::size_t>(j * cols_ + i)]) return true;
    return false;
  }
  void fill(const FillRect& r) {
    for (std::int64_t j = r.j_lo; j <= r.j_hi; ++j)
      for (std::int64_t i = r.i_lo; i <= r.i_hi; ++i) at(i, j) = 1;
  }
  bool matches(const OccupancyGrid& grid) const {
    for (std::int64_t j = 0; j < rows_; ++j)
      for (std::int64_t i = 0; i < cols_; ++i)
        if (grid.occupied(i, j) != (occ_[static_cast<std::size_t>(j * cols_ + i)] != 0))
          return false;
    return true;
  }

 private:
  std::int64_t cols_, rows_;
  std::vector<char> occ_;
};

// Small dense linear solve (partial pivoting) for the first-passage oracle.
std::vector<double> solve_linear(std::vector<std::vector<double>> a,
                                 std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t r = n; r-- > 0;) {
    double s = b[r];
    for (std::size_t c = r + 1; c < n; ++c) s -= a[r][c] * x[c];
    x[r] = s / a[r][r];
  }
  return x;
}

double return_steps_by_solve(int N, double eps) {
  const cgp::DiscretizedChain chain = cgp::discretized_chain(N, eps);
  const auto n = static_cast<std::size_t>(N);
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  std::vector<double> b(n, 1.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c)
      a[r][c] = (r == c ? 1.0 : 0.0) - chain.P[r + 1][c + 1];
  const std::vector<double> h = solve_linear(std::move(a), std::move(b));
  return 1.0 / -std::expm1(-2 * eps) + h[0];
}

// ---------------------------------------------------------------------------
// criteria

Check criterion_bounds() {
  Check c;
  Detail d;
  const double C = 3600.0 / (66.4 * 66.4);
  const double a = 0.2;
  const double g_sq = deterministic_bound(ShapeDistribution::square(a), C);
  c.ok &= std::abs(g_sq - 3.27e-3) <= 1e-5;
  d << "deterministic bound " << fmt(g_sq, "%.6e") << " within 1e-5 of 3.27e-3";

  const double lb1 = stochastic_lower_bound(ShapeDistribution::two_widths(1, a), C);
  double worst_ratio_err = 0.0;
  for (int n = 1; n <= 7; ++n) {
    const double lb = stochastic_lower_bound(ShapeDistribution::two_widths(n, a), C);
    const double expect = (n + 1) / 2.0;
    worst_ratio_err = std::max(worst_ratio_err, std::abs(lb / lb1 - expect) / expect);
  }
  c.ok &= worst_ratio_err < 1e-12;
  d << "; two-width ratios (n+1)/2 off by " << fmt(worst_ratio_err, "%.2e");

  double worst_mix_err = 0.0;
  for (int id = 1; id <= 5; ++id) {
    const std::vector<double> w = mixture_preset(id);
    double total = 0.0, expect = 0.0;
    for (double v : w) total += v;
    for (int n = 1; n <= 7; ++n)
      expect += w[static_cast<std::size_t>(n - 1)] / total *
                stochastic_lower_bound(ShapeDistribution::two_widths(n, a), C);
    const double lb = stochastic_lower_bound(ShapeDistribution::mixture(w, a), C);
    worst_mix_err = std::max(worst_mix_err, std::abs(lb - expect) / expect);
  }
  c.ok &= worst_mix_err < 1e-12;
  d << "; mixture linearity off by " << fmt(worst_mix_err, "%.2e");
  c.detail = d.str();
  return c;
}

Check criterion_column_speed() {
  Check c;
  const cgp::Convergence conv = cgp::approximate_return_time(cgp::default_schedule());
  c.ok = conv.speed >= 1.44 && conv.speed <= 1.48 && conv.speed >= 4.0 / 3.0 &&
         conv.speed <= 2.0;
  Detail d;
  d << "two-column speed " << fmt(conv.speed, "%.7f") << " in [1.44,1.48] and [4/3,2]"
    << ", excursion mean " << fmt(conv.T_estimate, "%.7f");
  c.detail = d.str();
  return c;
}

Check criterion_chain_consistency() {
  Check c;
  Detail d;

  // invariant distribution is stationary at the production resolution
  const int N = 50;
  const double eps = 1e-3;
  const std::vector<double> pi = cgp::invariant_distribution(N, eps);
  const cgp::DiscretizedChain chain = cgp::accelerated_chain(N, eps);
  double residual = 0.0;
  for (int j = 0; j <= N; ++j) {
    double flow = 0.0;
    for (int i = 0; i <= N; ++i)
      flow += pi[static_cast<std::size_t>(i)] *
              chain.P[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    residual = std::max(residual, std::abs(flow - pi[static_cast<std::size_t>(j)]));
  }
  c.ok &= residual < 1e-10;
  d << "stationarity residual " << fmt(residual, "%.2e") << " < 1e-10";

  // closed-form return steps against a direct first-passage solve
  double worst = 0.0;
  for (int n = 2; n <= 10; ++n)
    for (const double e : {0.1, 0.02}) {
      const double direct = return_steps_by_solve(n, e);
      worst = std::max(worst,
                       std::abs(cgp::expected_return_steps(n, e) - direct) / direct);
    }
  c.ok &= worst < 1e-9;
  d << "; return-steps vs solve rel err " << fmt(worst, "%.2e");

  // Monte Carlo excursions: mean height exceeds mean duration by exactly 1/2
  Rng rng(3001);
  const int reps = 1000000;
  double sum_t = 0.0, sum_d = 0.0, sum_d2 = 0.0;
  for (int k = 0; k < reps; ++k) {
    const cgp::Excursion ex = cgp::simulate_excursion(rng);
    const double diff = static_cast<double>(ex.height) - ex.duration;
    sum_t += ex.duration;
    sum_d += diff;
    sum_d2 += diff * diff;
  }
  const double mean_t = sum_t / reps;
  const double mean_d = sum_d / reps;
  const double se_d = std::sqrt((sum_d2 / reps - mean_d * mean_d) / reps);
  c.ok &= mean_t >= 0.5 && mean_t <= 1.5;
  c.ok &= std::abs(mean_d - 0.5) < 3 * se_d;
  d << "; 1e6 excursions: mean duration " << fmt(mean_t, "%.4f")
    << ", height-duration gap " << fmt(mean_d, "%.4f") << " within 3 SE ("
    << fmt(se_d, "%.1e") << ") of 1/2";
  c.detail = d.str();
  return c;
}

Check criterion_grid_oracle() {
  Check c;
  Detail d;

  // randomized events against the dense reference implementation
  const DomainGeometry geoms[] = {
      DomainGeometry::from_C(4, 4, 0.5, 1.0, 1.0),
      DomainGeometry::from_C(2, 1, 0.25, 0.5, 2.0),
      DomainGeometry::from_C(3, 2, 0.5, 1.0, 1.5),
  };
  Rng rng(424242);
  int trials = 0, mismatches = 0;
  for (const DomainGeometry& geom : geoms) {
    for (int round = 0; round < 4; ++round) {
      const bool half_plane = round % 2 == 0;
      OccupancyGrid grid =
          half_plane ? OccupancyGrid(geom) : OccupancyGrid::unoccupied(geom);
      DenseGrid dense(geom, half_plane);
      if (!half_plane)
        for (int k = 0; k < 12; ++k) {
          const auto i = static_cast<std::int64_t>(rng.below(
              static_cast<std::uint64_t>(geom.cols())));
          const auto j = static_cast<std::int64_t>(rng.below(
              static_cast<std::uint64_t>(geom.rows())));
          grid.set_cell(i, j);
          dense.at(i, j) = 1;
        }
      for (int k = 0; k < 100; ++k) {
        const double widths[] = {0.3, 0.5, 1.0, 1.7};
        ReproductionEvent ev;
        ev.t = k + 1.0;
        ev.cx = (rng.uniform() * 2 - 1) * (geom.W / 2 + geom.m + 0.5);
        ev.cy = (rng.uniform() * 2 - 1) * (geom.H / 2 + geom.m + 0.5);
        ev.w = widths[rng.below(4)];
        ev.h = widths[rng.below(4)];
        ++trials;
        FillRect rect;
        const bool clipped = grid.rasterize(ev, rect);
        const bool dense_applied = clipped && dense.any(rect);
        if (dense_applied) dense.fill(rect);
        const bool applied = grid.apply_event(ev);
        if (applied != dense_applied || !dense.matches(grid)) ++mismatches;
      }
    }
  }
  c.ok &= trials >= 1000 && mismatches == 0;
  d << trials << " randomized events, " << mismatches << " disagreements with the dense reference";

  // hitting times from the recorder against a replayed axis scan
  RunConfig cfg;
  cfg.W = 6.0;
  cfg.H = 6.0;
  cfg.delta = 0.02;
  cfg.m = 3.2;
  cfg.theta = 0.0;
  cfg.C = 1.0;
  cfg.replicates = 4;
  cfg.master_seed = 5005;
  validate(cfg);

  const DomainGeometry geom = make_geometry(cfg);
  const ShapeDistribution mu = make_mu(cfg);
  const ReplicateOutput rep = run_replicate(cfg, 1.0, 0);

  OccupancyGrid grid(geom);
  EventStream stream(geom, mu, Rng(cfg.master_seed ^ 0ULL));
  const std::int64_t axis = geom.axis_row();
  const std::int64_t border = geom.border_col();
  const auto cols = static_cast<std::size_t>(geom.cols());
  const double nan = std::nan("");
  std::vector<double> tau(cols, nan), sigma(cols, nan);
  std::int64_t prefix = border;
  while (!grid.barrier_reached()) {
    const ReproductionEvent ev = stream.next();
    if (!grid.apply_event(ev)) continue;
    for (std::size_t i = 0; i < cols; ++i)
      if (std::isnan(tau[i]) && grid.occupied(static_cast<std::int64_t>(i), axis))
        tau[i] = ev.t;
    while (prefix + 1 < geom.cols() &&
           grid.occupied(prefix + 1, axis)) {
      ++prefix;
      sigma[static_cast<std::size_t>(prefix)] = ev.t;
    }
  }
  int replay_mismatches = 0, sigma_violations = 0;
  for (const stats::HitRow& row : rep.series.hits) {
    const auto i =
        static_cast<std::size_t>(border + std::llround(row.x / geom.delta));
    if (tau[i] != row.tau) ++replay_mismatches;
    if (row.has_sigma && sigma[i] != row.sigma) ++replay_mismatches;
    if (!row.has_sigma && !std::isnan(sigma[i])) ++replay_mismatches;
    if (row.has_sigma && !(row.tau <= row.sigma)) ++sigma_violations;
  }
  c.ok &= replay_mismatches == 0;
  d << "; replayed hitting rows: " << rep.series.hits.size() << " compared, "
    << replay_mismatches << " mismatches";

  // ordering across several independent replicates
  for (std::uint64_t idx = 1; idx < cfg.replicates; ++idx) {
    const ReplicateOutput extra = run_replicate(cfg, 1.0, idx);
    for (const stats::HitRow& row : extra.series.hits)
      if (row.has_sigma && !(row.tau <= row.sigma)) ++sigma_violations;
  }
  c.ok &= sigma_violations == 0;
  d << "; first-hit <= prefix-cover time everywhere (" << sigma_violations
    << " violations)";
  c.detail = d.str();
  return c;
}

Check criterion_desk_speeds() {
  Check c;
  Detail d;
  const DeskRun s1 = desk_run(1, 1, 0, 64, 1001);
  c.ok &= s1.res.quotient >= 2.8 && s1.res.quotient <= 4.8;
  d << "fixed-square speed/bound quotient " << fmt(s1.res.quotient, "%.3f")
    << " in [2.8,4.8]";
  c.ok &= s1.res.speed.speed > s1.res.bounds.gamma_lb_sto;

  double prev = 0.0;
  d << "; two-width speeds";
  for (const int n : {2, 4, 7}) {
    const DeskRun run = desk_run(2, n, 0, 64, 1001);
    const double speed = run.res.speed.speed;
    c.ok &= speed > prev;                            // strictly increasing in n
    c.ok &= speed > run.res.bounds.gamma_lb_sto;     // above the lower bound
    d << " n=" << n << ":" << fmt(speed, "%.5f") << " (lb "
      << fmt(run.res.bounds.gamma_lb_sto, "%.5f") << ")";
    prev = speed;
  }
  d << ", strictly increasing and above their bounds";
  c.detail = d.str();
  return c;
}

Check criterion_plateau() {
  Check c;
  const DeskRun run = desk_run(3, 1, 5, 64, 1001);
  if (!run.res.plateau) {
    c.ok = false;
    c.detail = "plateau check unavailable: " + run.res.plateau_error;
    return c;
  }
  const stats::PlateauReport& rep = *run.res.plateau;
  c.ok = std::abs(rep.t_stat) < 2.0;
  Detail d;
  d << "mixture-5 prefix-lag plateau drift t = " << fmt(rep.t_stat, "%.3f")
    << " (|t| < 2) over " << rep.n_last_quartile << " tail positions, mean lag "
    << fmt(rep.mean_last_quartile, "%.2f");
  c.detail = d.str();
  return c;
}

Check criterion_fluctuation_stages() {
  Check c;
  const DeskRun& run = fixed_square_128();
  if (!run.res.beta) {
    c.ok = false;
    c.detail = "fluctuation fit unavailable: " + run.res.beta_error;
    return c;
  }
  const stats::FluctuationFit& fit = *run.res.beta;
  const double b1 = fit.stage1.slope, b2 = fit.stage2.slope;
  c.ok = b1 >= 0.53 && b1 <= 0.71 && fit.stage1.r2 > 0.9 && b2 >= 0.23 && b2 <= 0.42;
  Detail d;
  d << "front-width growth exponents: stage1 " << fmt(b1, "%.3f") << " (R2 "
    << fmt(fit.stage1.r2, "%.3f") << ") in [0.53,0.71], stage2 " << fmt(b2, "%.3f")
    << " in [0.23,0.42], split at t = " << fmt(fit.split_time, "%.1f") << " ("
    << run.res.replicates << " replicates)";
  c.detail = d.str();
  return c;
}

Check criterion_exponent_recovery() {
  Check c;
  Detail d;

  // planted power laws through the same fitting code paths
  double worst_var = 0.0;
  for (const double p : {0.35, 0.5, 0.65}) {
    stats::SeriesMoments s;
    s.reps = 100;
    for (int k = 1; k <= 40; ++k) {
      const double x = static_cast<double>(k);
      s.x.push_back(x);
      s.mean.push_back(x);
      s.mean_sq.push_back(x * x + std::pow(x, p));
    }
    worst_var = std::max(worst_var,
                         std::abs(stats::fit_variance_exponent(s).slope - p));
  }
  c.ok &= worst_var < 0.02;
  d << "planted variance exponents recovered to " << fmt(worst_var, "%.1e");

  stats::FrontEnsemble planted;
  planted.reps = 64;
  for (int k = 1; k <= 100; ++k) {
    const double t = static_cast<double>(k);
    planted.t.push_back(t);
    planted.sd_mean.push_back(t <= 20.0 ? std::pow(t, 0.6)
                                        : std::pow(20.0, 0.6) * std::pow(t / 20.0, 0.25));
  }
  const stats::FluctuationFit ffit = stats::fit_fluctuation_exponents(planted, 20.0);
  const double ferr = std::max(std::abs(ffit.stage1.slope - 0.6),
                               std::abs(ffit.stage2.slope - 0.25));
  c.ok &= ferr < 0.02;
  d << ", planted stage exponents to " << fmt(ferr, "%.1e");

  // measured hitting-time variance growth on the desk ensemble
  const DeskRun& run = fixed_square_128();
  if (!run.res.var_tau || !run.res.var_sigma) {
    c.ok = false;
    c.detail = d.str() + "; variance fits unavailable: " + run.res.var_error;
    return c;
  }
  const double a = run.res.var_tau->slope, b = run.res.var_sigma->slope;
  c.ok &= a >= 0.3 && a <= 0.7 && b >= 0.3 && b <= 0.7;
  d << "; measured variance exponents first-hit " << fmt(a, "%.3f")
    << ", prefix-cover " << fmt(b, "%.3f") << ", both in [0.3,0.7]";
  c.detail = d.str();
  return c;
}

Check criterion_determinism() {
  Check c;
  RunConfig cfg;
  cfg.W = 6.0;
  cfg.H = 6.0;
  cfg.delta = 0.02;
  cfg.m = 3.2;
  cfg.theta = 0.0;
  cfg.C = 1.0;
  cfg.replicates = 8;
  cfg.master_seed = 77;
  validate(cfg);

  const fs::path base = fs::temp_directory_path() / "slfv_acceptance";
  const fs::path serial = base / "serial", parallel = base / "parallel";
  fs::remove_all(base);
  const std::string serial_s = serial.string(), parallel_s = parallel.string();
  run_batch(cfg, &serial_s, 1);
  run_batch(cfg, &parallel_s, 4);

  const auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  };
  int files = 0, diffs = 0;
  for (const auto& entry : fs::recursive_directory_iterator(serial)) {
    if (!entry.is_regular_file()) continue;
    ++files;
    const fs::path rel = fs::relative(entry.path(), serial);
    if (!fs::exists(parallel / rel) || slurp(entry.path()) != slurp(parallel / rel))
      ++diffs;
  }
  fs::remove_all(base);
  c.ok = files == 8 * 3 + 1 && diffs == 0;
  Detail d;
  d << "1 worker vs 4 workers: " << files << " files compared, " << diffs
    << " byte differences";
  c.detail = d.str();
  return c;
}

}  // namespace

int main() {
  struct Entry {
    int id;
    double budget_seconds;  // 0 = no explicit budget
    std::function<Check()> fn;
  };
  const std::vector<Entry> entries{
      {1, 1.0, criterion_bounds},
      {2, 10.0, criterion_column_speed},
      {3, 120.0, criterion_chain_consistency},
      {4, 60.0, criterion_grid_oracle},
      {5, 1800.0, criterion_desk_speeds},
      {6, 0.0, criterion_plateau},
      {7, 3600.0, criterion_fluctuation_stages},
      {8, 0.0, criterion_exponent_recovery},
      {9, 0.0, criterion_determinism},
  };
  int failures = 0;
  for (const Entry& e : entries) {
    const auto t0 = std::chrono::steady_clock::now();
    Check c;
    try {
      c = e.fn();
    } catch (const std::exception& ex) {
      c.ok = false;
      c.detail = std::string("exception: ") + ex.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (e.budget_seconds > 0 && secs > e.budget_seconds) {
      c.ok = false;
      c.detail += "; exceeded " + fmt(e.budget_seconds, "%.0f") + "s budget";
    }
    std::printf("%s criterion %d: %s [%.1fs]\n", c.ok ? "PASS" : "FAIL", e.id,
                c.detail.c_str(), secs);
    std::fflush(stdout);
    if (!c.ok) ++failures;
  }
  return failures;
}
