#include "slfv/cgp.hpp"

#include <cmath>
#include <stdexcept>

namespace slfv::cgp {

namespace {

// 1 - e^{-x} without cancellation for small x.
long double em1(long double x) { return -std::expm1l(-x); }

// One jump of the height process given the current gap d = high - low.
// Returns the gap change and whether the high pile grew.
struct Jump {
  std::int64_t d_change = 0;
  bool high_grew = false;
};

Jump draw_jump(std::int64_t d, Rng& rng) {
  if (d == 0) return {+1, true};  // only move: one pile grows
  const double u = rng.uniform() * static_cast<double>(d + 2);
  if (u < 1.0) return {+1, true};      // higher pile up (rate 1)
  if (u < 3.0) return {-1, false};     // lower pile up (rate 2)
  const auto k = 2 + static_cast<std::int64_t>(u - 3.0);  // gap collapse (rate 1 each)
  return {-std::min(k, d), false};
}

}  // namespace

std::vector<Transition> step_rates(const State& s) {
  if (s.low > s.high) throw std::invalid_argument("state requires low <= high");
  std::vector<Transition> out;
  if (s.low == s.high) {
    out.push_back({{s.low, s.high + 1}, 2.0});
    return out;
  }
  out.push_back({{s.low, s.high + 1}, 1.0});
  out.push_back({{s.low + 1, s.high}, 2.0});
  for (std::int64_t k = 2; k <= s.high - s.low; ++k)
    out.push_back({{s.low + k, s.high}, 1.0});
  return out;
}

Excursion simulate_excursion(Rng& rng) {
  double t = rng.exponential(2.0);  // leave the equal-height state
  std::int64_t d = 1, height = 1;
  while (d > 0) {
    t += rng.exponential(static_cast<double>(d + 2));
    const Jump jmp = draw_jump(d, rng);
    d += jmp.d_change;
    if (jmp.high_grew) ++height;
  }
  return {t, height};
}

SpeedEstimate estimate_speed_mc(double t_max, int reps, Rng& rng) {
  if (!(t_max > 0.0) || reps < 2)
    throw std::invalid_argument("need t_max > 0 and reps >= 2");
  double sum = 0.0, sum_sq = 0.0;
  for (int r = 0; r < reps; ++r) {
    double t = 0.0;
    std::int64_t d = 0, height = 0;
    for (;;) {
      const double rate = d == 0 ? 2.0 : static_cast<double>(d + 2);
      const double t_next = t + rng.exponential(rate);
      if (t_next > t_max) break;  // height holds on [t, t_next)
      t = t_next;
      const Jump jmp = draw_jump(d, rng);
      d += jmp.d_change;
      if (jmp.high_grew) ++height;
    }
    const double v = static_cast<double>(height) / t_max;
    sum += v;
    sum_sq += v * v;
  }
  const double n = reps;
  const double mean = sum / n;
  const double var = std::max(0.0, sum_sq / n - mean * mean) * n / (n - 1);
  return {mean, 1.96 * std::sqrt(var / n), reps, t_max};
}

std::vector<long double> invariant_weights(int N, double eps) {
  if (N < 2) throw std::invalid_argument("invariant_weights requires N >= 2");
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  std::vector<long double> A(static_cast<std::size_t>(N) + 1, 0.0L);
  A[static_cast<std::size_t>(N)] = 1.0L;
  A[static_cast<std::size_t>(N - 1)] = static_cast<long double>(N + 1);
  long double suffix = 0.0L;  // sum of A[i+2..N] for the current i
  for (int i = N - 1; i >= 2; --i) {
    A[static_cast<std::size_t>(i - 1)] =
        static_cast<long double>(i + 2) * A[static_cast<std::size_t>(i)] -
        2.0L * A[static_cast<std::size_t>(i + 1)] - suffix;
    suffix += A[static_cast<std::size_t>(i + 1)];
  }
  long double tail = 0.0L;  // sum of A[2..N]
  for (int j = 2; j <= N; ++j) tail += A[static_cast<std::size_t>(j)];
  A[0] = 0.5L * (2.0L * A[1] + tail) * em1(2.0L * eps);
  for (const long double v : A)
    if (std::isinf(v) || std::isnan(v))
      throw std::overflow_error("weight recursion overflows long double; reduce N");
  return A;
}

namespace {

// Shared body for the two transition matrices; only row 0 differs.
DiscretizedChain build_chain(int N, double eps, bool accelerated) {
  if (N < 2) throw std::invalid_argument("chain requires N >= 2");
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  DiscretizedChain c;
  c.N = N;
  c.eps = eps;
  c.P.assign(static_cast<std::size_t>(N) + 1,
             std::vector<double>(static_cast<std::size_t>(N) + 1, 0.0));
  if (accelerated) {
    c.P[0][1] = 1.0;
  } else {
    const double q = static_cast<double>(em1(2.0L * eps));
    c.P[0][0] = 1.0 - q;
    c.P[0][1] = q;
  }
  for (int i = 1; i <= N; ++i) {
    const double move = static_cast<double>(em1(static_cast<long double>(i + 2) * eps));
    const double share = move / (i + 2);
    auto& row = c.P[static_cast<std::size_t>(i)];
    if (i < N) {
      row[static_cast<std::size_t>(i + 1)] = share;       // gap widens
      row[static_cast<std::size_t>(i)] = 1.0 - move;      // no jump within eps
    } else {
      // Truncation row: the widening move is folded into staying at N.
      row[static_cast<std::size_t>(N)] = 1.0 - move + share;
    }
    row[static_cast<std::size_t>(i - 1)] = 2.0 * share;   // lower pile up
    for (int j = 0; j <= i - 2; ++j) row[static_cast<std::size_t>(j)] = share;
  }
  return c;
}

}  // namespace

DiscretizedChain discretized_chain(int N, double eps) {
  return build_chain(N, eps, false);
}

DiscretizedChain accelerated_chain(int N, double eps) {
  return build_chain(N, eps, true);
}

std::vector<double> invariant_distribution(int N, double eps) {
  const std::vector<long double> A = invariant_weights(N, eps);
  std::vector<long double> q(A.size());
  long double total = 0.0L;
  for (int i = 0; i <= N; ++i) {
    q[static_cast<std::size_t>(i)] =
        A[static_cast<std::size_t>(i)] * static_cast<long double>(i + 2) /
        em1(static_cast<long double>(i + 2) * eps);
    total += q[static_cast<std::size_t>(i)];
  }
  std::vector<double> p(A.size());
  for (std::size_t i = 0; i < q.size(); ++i)
    p[i] = static_cast<double>(q[i] / total);
  return p;
}

double expected_return_steps(int N, double eps) {
  const std::vector<long double> A = invariant_weights(N, eps);
  const long double e2 = em1(2.0L * eps);
  long double sum = 0.0L;
  for (int i = 1; i <= N; ++i)
    sum += static_cast<long double>(i + 2) * A[static_cast<std::size_t>(i)] /
           em1(static_cast<long double>(i + 2) * eps);
  return static_cast<double>(1.0L / e2 + e2 / (2.0L * A[0]) * sum);
}

Convergence approximate_return_time(
    const std::vector<std::pair<int, double>>& schedule) {
  if (schedule.size() < 2)
    throw std::invalid_argument("schedule needs at least two (N, eps) entries");
  for (std::size_t k = 1; k < schedule.size(); ++k) {
    const auto [n0, e0] = schedule[k - 1];
    const auto [n1, e1] = schedule[k];
    const double c0 = static_cast<double>(n0) * n0 * e0;
    const double c1 = static_cast<double>(n1) * n1 * e1;
    if (n1 <= n0 || c1 >= c0)
      throw std::invalid_argument(
          "schedule must have N strictly increasing and N^2*eps strictly "
          "decreasing");
  }
  Convergence out;
  for (const auto& [N, eps] : schedule) {
    ScheduleRow row;
    row.N = N;
    row.eps = eps;
    row.eps_E = eps * expected_return_steps(N, eps);
    row.speed = 1.0 + 1.0 / (2.0 * row.eps_E);
    out.rows.push_back(row);
  }
  const std::size_t K = out.rows.size() - 1;
  double est = out.rows[K].eps_E;
  if (K >= 2) {
    const double d1 = out.rows[K - 1].eps_E - out.rows[K - 2].eps_E;
    const double d2 = out.rows[K].eps_E - out.rows[K - 1].eps_E;
    const double r = d1 != 0.0 ? d2 / d1 : 0.0;
    if (r > 0.0 && r < 1.0) est += d2 * r / (1.0 - r);  // geometric tail
  }
  out.T_estimate = est;
  out.speed = 1.0 + 1.0 / (2.0 * est);
  return out;
}

std::vector<std::pair<int, double>> default_schedule() {
  std::vector<std::pair<int, double>> s;
  for (int k = 0; k < 4; ++k) {
    const int N = 50 << k;
    const double Nd = N;
    s.emplace_back(N, 1.0 / (Nd * Nd * Nd));
  }
  return s;
}

}  // namespace slfv::cgp
