#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "slfv/events.hpp"
#include "slfv/grid.hpp"
#include "slfv/metrics.hpp"
#include "slfv/rng.hpp"

using slfv::DomainGeometry;
using slfv::EventStream;
using slfv::FillRect;
using slfv::FrontProfileSeries;
using slfv::FrontRecorder;
using slfv::HittingRecorder;
using slfv::OccupancyGrid;
using slfv::Recorder;
using slfv::ReproductionEvent;
using slfv::Rng;
using slfv::RowWindow;
using slfv::ShapeDistribution;

namespace {

const auto kSmallGeom = DomainGeometry::from_C(2, 1, 0.25, 0.5, 4);

bool same_or_both_nan(double a, double b) {
  return (std::isnan(a) && std::isnan(b)) || a == b;
}

// Emits brute-force profiles at the same cadence as FrontRecorder, straight
// from full-row scans of the live grid.
class BruteFrontRecorder : public Recorder {
 public:
  BruteFrontRecorder(RowWindow window, double dt) : window_(window), dt_(dt) {}

  void before_event(const OccupancyGrid& grid, double t_next) override {
    while (static_cast<double>(next_k_) * dt_ < t_next) {
      times.push_back(static_cast<double>(next_k_++) * dt_);
      profiles.push_back(slfv::front_profile(grid, window_));
    }
  }

  std::vector<double> times;
  std::vector<std::vector<double>> profiles;

 private:
  RowWindow window_;
  double dt_;
  std::int64_t next_k_ = 1;
};

}  // namespace

TEST_CASE("default row window trims the proportional margin") {
  const auto full = DomainGeometry::from_theta(60, 60, 0.005, 3.2, 3600);
  const RowWindow wf = slfv::default_row_window(full);
  CHECK(wf.lo == 900);
  CHECK(wf.hi == 12380);

  const auto desk = DomainGeometry::from_C(20, 20, 0.02, 3.2, 0.81653);
  const RowWindow wd = slfv::default_row_window(desk);
  CHECK(wd.lo == 225);
  CHECK(wd.hi == 1095);
}

TEST_CASE("front profile of the initial state is flat zero") {
  OccupancyGrid grid(kSmallGeom);
  const auto prof = slfv::front_profile(grid, slfv::default_row_window(kSmallGeom));
  REQUIRE_FALSE(prof.empty());
  for (const double v : prof) CHECK(v == 0.0);
}

TEST_CASE("one event advances exactly the touched rows") {
  OccupancyGrid grid(kSmallGeom);
  // rectangle centered at (0.25, 0), size 0.5 x 0.5: columns 2..4, rows 3..5
  ReproductionEvent ev{0.1, 0.25, 0.0, 0.5, 0.5};
  FillRect r;
  REQUIRE(grid.rasterize(ev, r));
  REQUIRE(grid.apply_event(ev));
  const RowWindow window{0, kSmallGeom.rows() - 1};
  const auto prof = slfv::front_profile(grid, window);
  for (std::int64_t j = window.lo; j <= window.hi; ++j) {
    const double expect =
        (j >= r.j_lo && j <= r.j_hi)
            ? kSmallGeom.delta * static_cast<double>(r.i_hi - kSmallGeom.border_col())
            : 0.0;
    CHECK(prof[static_cast<std::size_t>(j - window.lo)] == expect);
  }
}

TEST_CASE("front SD reference values and oracle") {
  CHECK(slfv::front_sd({1.5, 1.5, 1.5}) == 0.0);
  CHECK(slfv::front_sd({0.0, 2.0}) == 1.0);

  Rng rng(7);
  std::vector<double> prof(101);
  for (double& v : prof) v = rng.uniform() * 10;
  long double mean = 0.0L, sq = 0.0L;
  for (const double v : prof) {
    mean += v;
    sq += static_cast<long double>(v) * v;
  }
  mean /= static_cast<long double>(prof.size());
  const double oracle = std::sqrt(
      static_cast<double>(sq / static_cast<long double>(prof.size()) - mean * mean));
  CHECK(slfv::front_sd(prof) == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("hitting recorder marks initial sites and respects gaps") {
  OccupancyGrid dummy = OccupancyGrid::unoccupied(kSmallGeom);
  HittingRecorder rec(kSmallGeom);
  const std::int64_t border = kSmallGeom.border_col();  // column 2

  for (std::int64_t i = 0; i <= border; ++i) {
    CHECK(rec.tau()[static_cast<std::size_t>(i)] == 0.0);
    CHECK(rec.sigma()[static_cast<std::size_t>(i)] == 0.0);
  }

  // fill x = 0.5 (column 4) while x = 0.25 (column 3) stays empty
  rec.after_fill(dummy, FillRect{4, 4, 4, 4}, 1.0);
  CHECK(rec.tau()[4] == 1.0);
  CHECK(std::isnan(rec.sigma()[4]));
  CHECK(rec.i_max_tau() == 4);
  CHECK(rec.i_max_sigma() == border);

  // an off-axis fill records nothing
  rec.after_fill(dummy, FillRect{5, 6, 5, 6}, 1.5);
  CHECK(std::isnan(rec.tau()[5]));

  // closing the gap sets sigma for the whole prefix at the closing time
  rec.after_fill(dummy, FillRect{3, 3, 2, 6}, 2.0);
  CHECK(rec.tau()[3] == 2.0);
  CHECK(rec.sigma()[3] == 2.0);
  CHECK(rec.sigma()[4] == 2.0);
  CHECK(rec.i_max_sigma() == 4);
  CHECK(rec.tau()[4] <= rec.sigma()[4]);
}

TEST_CASE("recorders match a from-scratch replay of the same run") {
  const auto& g = kSmallGeom;
  const auto mu = ShapeDistribution::square(0.5);
  const std::uint64_t seed = 404;

  OccupancyGrid grid(g);
  EventStream stream(g, mu, Rng(seed));
  HittingRecorder rec(g);
  const auto res = slfv::run_until_barrier(grid, stream, {&rec}, 100000);
  CHECK(res.events_applied > 0);

  // replay: recompute tau/sigma by scanning the axis row after every event
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> tau(static_cast<std::size_t>(g.cols()), nan);
  std::vector<double> sigma(static_cast<std::size_t>(g.cols()), nan);
  for (std::int64_t i = 0; i <= g.border_col(); ++i)
    tau[static_cast<std::size_t>(i)] = sigma[static_cast<std::size_t>(i)] = 0.0;
  {
    OccupancyGrid replay(g);
    EventStream events(g, mu, Rng(seed));
    while (!replay.barrier_reached()) {
      const ReproductionEvent ev = events.next();
      if (!replay.apply_event(ev)) continue;
      for (std::int64_t i = 0; i < g.cols(); ++i) {
        if (replay.occupied(i, g.axis_row()) &&
            std::isnan(tau[static_cast<std::size_t>(i)]))
          tau[static_cast<std::size_t>(i)] = ev.t;
      }
      for (std::int64_t i = g.border_col() + 1; i < g.cols(); ++i) {
        if (!replay.occupied(i, g.axis_row())) break;
        if (std::isnan(sigma[static_cast<std::size_t>(i)]))
          sigma[static_cast<std::size_t>(i)] = ev.t;
      }
    }
  }
  for (std::int64_t i = 0; i < g.cols(); ++i) {
    CHECK(same_or_both_nan(rec.tau()[static_cast<std::size_t>(i)],
                           tau[static_cast<std::size_t>(i)]));
    CHECK(same_or_both_nan(rec.sigma()[static_cast<std::size_t>(i)],
                           sigma[static_cast<std::size_t>(i)]));
  }

  SUBCASE("tau <= sigma wherever sigma is recorded, sigma non-decreasing") {
    double prev_sigma = 0.0;
    for (std::int64_t i = g.border_col() + 1; i < g.cols(); ++i) {
      const double s = rec.sigma()[static_cast<std::size_t>(i)];
      if (std::isnan(s)) break;
      CHECK(rec.tau()[static_cast<std::size_t>(i)] <= s);
      CHECK(s >= prev_sigma);
      prev_sigma = s;
    }
  }
}

TEST_CASE("incremental front recorder equals whole-grid scans at every sample") {
  const auto& g = kSmallGeom;
  const auto mu = ShapeDistribution::square(0.5);
  const RowWindow window = slfv::default_row_window(g);

  OccupancyGrid grid(g);
  EventStream stream(g, mu, Rng(777));
  FrontRecorder fast(g, window, 0.05, /*keep_profiles=*/true);
  BruteFrontRecorder brute(window, 0.05);
  slfv::run_until_barrier(grid, stream, {&fast, &brute}, 100000);

  const FrontProfileSeries& series = fast.series();
  REQUIRE(series.profiles.size() == brute.profiles.size());
  REQUIRE_FALSE(series.profiles.empty());
  for (std::size_t k = 0; k < series.profiles.size(); ++k) {
    CHECK(series.sample_times[k] == brute.times[k]);
    REQUIRE(series.profiles[k].size() == brute.profiles[k].size());
    for (std::size_t r = 0; r < series.profiles[k].size(); ++r)
      CHECK(series.profiles[k][r] == brute.profiles[k][r]);
  }

  SUBCASE("profiles are pointwise non-decreasing in time") {
    for (std::size_t k = 1; k < series.profiles.size(); ++k)
      for (std::size_t r = 0; r < series.profiles[k].size(); ++r)
        CHECK(series.profiles[k][r] >= series.profiles[k - 1][r]);
  }

  SUBCASE("sample SD matches the scan-based profile SD") {
    for (std::size_t k = 0; k < series.profiles.size(); ++k)
      CHECK(fast.samples()[k].sd ==
            doctest::Approx(slfv::front_sd(brute.profiles[k])).epsilon(1e-12));
  }

  SUBCASE("detach flag matches the profile-series detector") {
    const auto split = slfv::detect_detach_time(series);
    const auto direct = fast.detach();
    CHECK(split.detached == direct.detached);
    if (split.detached) CHECK(split.detach_time == direct.detach_time);
  }
}

TEST_CASE("detachment detection on crafted profile series") {
  FrontProfileSeries series;
  series.delta = 0.25;
  series.sample_times = {1.0, 2.0, 3.0};
  series.profiles = {{0.0, 0.25}, {0.25, 0.25}, {0.5, 0.5}};
  const auto split = slfv::detect_detach_time(series);
  CHECK(split.detached);
  CHECK(split.detach_time == 2.0);

  FrontProfileSeries never;
  never.delta = 0.25;
  never.sample_times = {1.0};
  never.profiles = {{0.0, 0.0}};
  CHECK_FALSE(slfv::detect_detach_time(never).detached);
}
