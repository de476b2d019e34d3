#pragma once
// Two-column growth process: two adjacent integer piles of heights
// low <= high. From equal heights one pile grows (rate 2); otherwise the
// higher pile grows by one (rate 1), the lower pile grows by one (rate 2),
// and the gap can collapse by any k in [2, high-low] (rate 1 each). The
// growth speed of the highest pile is 1 + 1/(2 E[T]), where T is the mean
// excursion time between equal-height states.
//
// Two estimation routes are provided:
//  - direct Gillespie simulation of excursions / long trajectories;
//  - an exact pipeline for the eps-discretized height-difference chain on
//    {0..N}: a backward weight recursion gives its invariant distribution
//    and the expected number of steps between returns to 0; eps * E[steps]
//    converges to E[T] as N -> infinity with N^2 eps -> 0.

#include <cstdint>
#include <utility>
#include <vector>

#include "slfv/rng.hpp"

namespace slfv::cgp {

struct State {
  std::int64_t low = 0;
  std::int64_t high = 0;
};

struct Transition {
  State to;
  double rate = 0.0;
};

// Outgoing transitions with rates; total rate is 2 at equal heights and
// (high-low)+2 otherwise.
std::vector<Transition> step_rates(const State& s);

struct Excursion {
  double duration = 0.0;     // time between consecutive equal-height states
  std::int64_t height = 0;   // common height when the excursion closes
};

// One excursion started from equal heights (heights relative to the start).
Excursion simulate_excursion(Rng& rng);

struct SpeedEstimate {
  double mean = 0.0;        // average of high(t_max)/t_max across replicates
  double half_width = 0.0;  // 1.96 * SE, a normal 95% interval
  int reps = 0;
  double t_max = 0.0;
};

SpeedEstimate estimate_speed_mc(double t_max, int reps, Rng& rng);

// Backward weight recursion A_N..A_0 for the discretized chain; the weights
// grow factorially, hence extended precision. Throws std::overflow_error
// when N is large enough to overflow long double (~N > 1600).
std::vector<long double> invariant_weights(int N, double eps);

// Row-stochastic transition matrix of the discretized height-difference
// chain on {0..N}; `accelerated` replaces the slow geometric exit from 0 by
// a deterministic hop to 1 (used for the invariant distribution).
struct DiscretizedChain {
  int N = 0;
  double eps = 0.0;
  std::vector<std::vector<double>> P;
};

DiscretizedChain discretized_chain(int N, double eps);
DiscretizedChain accelerated_chain(int N, double eps);

// Invariant distribution of the accelerated chain (normalized).
std::vector<double> invariant_distribution(int N, double eps);

// Expected number of steps for the discretized chain to leave 0 and return.
double expected_return_steps(int N, double eps);

struct ScheduleRow {
  int N = 0;
  double eps = 0.0;
  double eps_E = 0.0;   // eps * expected_return_steps
  double speed = 0.0;   // 1 + 1/(2 * eps_E)
};

struct Convergence {
  std::vector<ScheduleRow> rows;
  double T_estimate = 0.0;  // extrapolated E[T]
  double speed = 0.0;       // 1 + 1/(2 * T_estimate)
};

// Evaluates the schedule (N strictly increasing, N^2*eps strictly
// decreasing; rejected otherwise) and extrapolates the limit from the last
// values (Aitken when the differences contract, last value otherwise).
Convergence approximate_return_time(const std::vector<std::pair<int, double>>& schedule);

// N = 50*2^k, eps = N^-3, k = 0..3.
std::vector<std::pair<int, double>> default_schedule();

}  // namespace slfv::cgp
