// slfv — command-line front end.
//
//   slfv simulate ...   run a replicate batch and write per-replicate files
//   slfv analyze  ...   aggregate a results directory into summary CSVs
//   slfv cgp      ...   two-column growth process speed (exact / Monte Carlo)
//   slfv bounds   ...   analytic speed bounds for the built-in distributions
//
// Exit codes: 0 success, 2 configuration/usage error, 3 runtime failure
// (including batches with incomplete replicates).

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>
#include <utility>
#include <vector>

#include "slfv/bounds.hpp"
#include "slfv/cgp.hpp"
#include "slfv/config.hpp"
#include "slfv/csv.hpp"
#include "slfv/runner.hpp"

namespace {

void print_bounds_row(const char* label, const slfv::SpeedBounds& b) {
  std::printf("%-18s %14.9g %14.9g %10.4f\n", label, b.gamma_determ, b.gamma_lb_sto,
              b.gamma_lb_sto / b.gamma_determ);
}

int cmd_simulate(const slfv::RunConfig& cfg) {
  const std::string out = cfg.out_dir;
  std::printf("config hash  %s\n", slfv::config_hash_hex(cfg).c_str());
  std::printf("distribution %s\n", slfv::setting_label(cfg).c_str());
  std::printf("lattice      %lld x %lld, delta %.9g, theta %.9g\n",
              static_cast<long long>(slfv::make_geometry(cfg).cols()),
              static_cast<long long>(slfv::make_geometry(cfg).rows()), cfg.delta,
              cfg.theta);
  std::printf("replicates   %llu (jobs %d) -> %s\n",
              static_cast<unsigned long long>(cfg.replicates),
              slfv::effective_jobs(cfg), out.c_str());
  std::fflush(stdout);

  const auto reps = slfv::run_batch(cfg, &out);
  std::uint64_t incomplete = 0;
  double barrier_sum = 0.0;
  for (const auto& r : reps) {
    if (!r.complete) {
      ++incomplete;
      std::fprintf(stderr, "replicate %llu incomplete: %s\n",
                   static_cast<unsigned long long>(r.index), r.error.c_str());
    } else {
      barrier_sum += r.barrier_time;
    }
  }
  const std::uint64_t complete = reps.size() - incomplete;
  std::printf("complete     %llu/%zu", static_cast<unsigned long long>(complete),
              reps.size());
  if (complete > 0)
    std::printf(", mean barrier time %.6g",
                barrier_sum / static_cast<double>(complete));
  std::printf("\n");
  return incomplete == 0 ? 0 : 3;
}

void print_fit(const char* name, const slfv::stats::LinearFit& fit) {
  std::printf("%-10s %+.4f  (r2 %.4f, window [%.6g, %.6g], %zu pts)\n", name,
              fit.slope, fit.r2, fit.x_lo, fit.x_hi, fit.n);
}

int cmd_analyze(const std::string& results_dir, const slfv::AnalyzeOptions& opts,
                std::string out_dir) {
  slfv::RunConfig cfg;
  const slfv::AnalysisResult res =
      slfv::analyze_results_dir(results_dir, opts, &cfg);
  if (out_dir.empty()) out_dir = results_dir + "/analysis";

  std::printf("replicates   %zu\n", res.replicates);
  std::printf("speed        %.9g  (nu %.9g, fit on [%.6g, %.6g], %zu pts, r2 %.4f)\n",
              res.speed.speed, res.speed.nu, res.speed.fit.x_lo, res.speed.fit.x_hi,
              res.speed.fit.n, res.speed.fit.r2);
  std::printf("bounds       determ %.9g, stochastic-lb %.9g\n",
              res.bounds.gamma_determ, res.bounds.gamma_lb_sto);
  std::printf("quotient     %.4f (speed / deterministic bound)\n", res.quotient);
  if (res.var_tau) {
    print_fit("var(tau)", *res.var_tau);
    print_fit("var(sigma)", *res.var_sigma);
  } else {
    std::printf("variance exponents unavailable: %s\n", res.var_error.c_str());
  }
  if (res.plateau) {
    std::printf("sigma-tau    last-quartile mean %.6g, drift t-stat %.3f (%zu pts)\n",
                res.plateau->mean_last_quartile, res.plateau->t_stat,
                res.plateau->n_last_quartile);
  } else {
    std::printf("sigma-tau plateau unavailable: %s\n", res.plateau_error.c_str());
  }
  std::printf("detached     %zu replicates", res.detached_count);
  if (res.detached_count > 0) std::printf(", median detach time %.6g", res.detach_median);
  std::printf("\n");
  if (res.beta) {
    print_fit("beta1", res.beta->stage1);
    print_fit("beta2", res.beta->stage2);
  } else {
    std::printf("fluctuation exponents unavailable: %s\n", res.beta_error.c_str());
  }

  slfv::write_analysis_csvs(res, cfg, out_dir);
  std::printf("wrote        %s/{speeds,var_exponents,beta_exponents}.csv\n",
              out_dir.c_str());
  return 0;
}

int cmd_cgp(const std::string& mode, double t_max, int reps, std::uint64_t seed,
            const std::vector<std::string>& schedule_args, const std::string& out) {
  if (mode == "mc") {
    slfv::Rng rng(seed);
    const auto est = slfv::cgp::estimate_speed_mc(t_max, reps, rng);
    std::printf("mc speed     %.6f +/- %.6f  (%d reps, t_max %.6g)\n", est.mean,
                est.half_width, est.reps, est.t_max);
    return 0;
  }

  std::vector<std::pair<int, double>> schedule;
  if (schedule_args.empty()) {
    schedule = slfv::cgp::default_schedule();
  } else {
    for (const std::string& item : schedule_args) {
      const auto colon = item.find(':');
      if (colon == std::string::npos)
        throw slfv::ConfigError("--schedule items must look like N:eps, got '" +
                                item + "'");
      schedule.emplace_back(std::stoi(item.substr(0, colon)),
                            std::stod(item.substr(colon + 1)));
    }
  }
  const auto conv = slfv::cgp::approximate_return_time(schedule);
  if (mode == "convergence-table") {
    std::printf("%8s %14s %16s %12s\n", "N", "eps", "eps*E[steps]", "speed");
    for (const auto& row : conv.rows)
      std::printf("%8d %14.6g %16.10f %12.7f\n", row.N, row.eps, row.eps_E,
                  row.speed);
  }
  std::printf("E[T]         %.10f\n", conv.T_estimate);
  std::printf("speed        %.7f\n", conv.speed);
  if (!out.empty()) {
    std::FILE* f = std::fopen(out.c_str(), "w");
    if (!f) throw std::runtime_error("cannot write " + out);
    std::fprintf(f, "N,eps,eps_E,speed\n");
    for (const auto& row : conv.rows)
      std::fprintf(f, "%d,%s,%s,%s\n", row.N, slfv::fmt_g9(row.eps).c_str(),
                   slfv::fmt_g9(row.eps_E).c_str(), slfv::fmt_g9(row.speed).c_str());
    std::fprintf(f, "limit,,%s,%s\n", slfv::fmt_g9(conv.T_estimate).c_str(),
                 slfv::fmt_g9(conv.speed).c_str());
    std::fclose(f);
    std::printf("wrote        %s\n", out.c_str());
  }
  return 0;
}

int cmd_bounds(double C, double a) {
  std::printf("intensity C = %.9g, base scale a = %.9g\n", C, a);
  std::printf("%-18s %14s %14s %10s\n", "distribution", "determ", "stochastic-lb",
              "ratio");
  print_bounds_row("square", slfv::speed_bounds(slfv::ShapeDistribution::square(a), C));
  for (int n = 1; n <= 7; ++n) {
    char label[32];
    std::snprintf(label, sizeof label, "two-widths n=%d", n);
    print_bounds_row(label,
                     slfv::speed_bounds(slfv::ShapeDistribution::two_widths(n, a), C));
  }
  for (int id = 1; id <= 5; ++id) {
    char label[32];
    std::snprintf(label, sizeof label, "mixture %d", id);
    print_bounds_row(label, slfv::speed_bounds(slfv::ShapeDistribution::mixture(
                                                   slfv::mixture_preset(id), a),
                                               C));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Growth-process simulation toolkit: rectangle-event lattice growth "
      "(simulate/analyze/bounds) and the two-column growth process (cgp)."};
  app.require_subcommand(1);

  // --- simulate ---------------------------------------------------------
  auto* sim = app.add_subcommand(
      "simulate",
      "Run a replicate batch. Per replicate writes hitting.csv (x,tau,sigma; "
      "sigma empty until defined), front_sd.csv (t,sd,detached) and "
      "manifest.json; the batch root gets config.resolved.");
  std::string cfg_path;
  bool desk = false;
  int setting = 0, n_widths = 0, mixture_id = 0, jobs = 0;
  std::uint64_t replicates = 0, seed = 0, max_events = 0;
  double front_dt = 0.0;
  std::string sim_out;
  auto* sim_cfg = sim->add_option("--config", cfg_path, "INI config file");
  auto* sim_desk = sim->add_flag("--desk", desk,
                                 "Desk-scale geometry (W=H=20, delta=1/50) with "
                                 "the intensity C preserved");
  auto* sim_setting =
      sim->add_option("--setting", setting, "Shape distribution: 1 fixed square, "
                                            "2 two-width family, 3 mixture")
          ->check(CLI::Range(1, 3));
  auto* sim_n = sim->add_option("--n", n_widths, "Width multiplier for setting 2")
                    ->check(CLI::Range(1, 1000));
  auto* sim_mix =
      sim->add_option("--mixture", mixture_id, "Built-in mixture preset (1-5) "
                                               "for setting 3")
          ->check(CLI::Range(1, 5));
  auto* sim_reps = sim->add_option("--replicates", replicates, "Replicate count");
  auto* sim_seed = sim->add_option("--seed", seed, "Master seed");
  auto* sim_jobs = sim->add_option("--jobs", jobs, "Worker threads (0 = auto)");
  auto* sim_cap = sim->add_option("--max-events", max_events,
                                  "Event budget per replicate (0 = automatic)");
  auto* sim_dt = sim->add_option("--front-dt", front_dt,
                                 "Front sampling step (0 = pilot estimate)");
  auto* sim_outopt = sim->add_option("--out", sim_out, "Output directory");

  // --- analyze ----------------------------------------------------------
  auto* ana = app.add_subcommand(
      "analyze",
      "Aggregate a simulate output directory. Writes speeds.csv (setting,nu,"
      "speed,gamma_determ,gamma_lb_sto,quotient,fit_x_lo,fit_x_hi,fit_points,"
      "replicates), var_exponents.csv (series,exponent,r2,x_lo,x_hi,points) "
      "and beta_exponents.csv (stage,beta,r2,t_lo,t_hi,points,split_time).");
  std::string results_dir, ana_out;
  std::vector<double> var_window;
  double beta_split = 0.0;
  ana->add_option("results_dir", results_dir, "Directory written by simulate")
      ->required();
  ana->add_option("--out", ana_out, "Analysis output directory "
                                    "(default: results_dir/analysis)");
  auto* ana_win = ana->add_option("--var-window", var_window,
                                  "Explicit LO HI window for the variance "
                                  "exponent fits")
                      ->expected(2);
  auto* ana_split = ana->add_option("--beta-split", beta_split,
                                    "Stage split time for the fluctuation fits "
                                    "(default: median detach time)");

  // --- cgp --------------------------------------------------------------
  auto* cgp = app.add_subcommand(
      "cgp", "Two-column growth process speed: exact discretized-chain "
             "pipeline or Monte Carlo.");
  std::string cgp_mode = "exact";
  double t_max = 2000.0;
  int cgp_reps = 200;
  std::uint64_t cgp_seed = 1;
  std::vector<std::string> schedule_args;
  std::string cgp_out;
  cgp->add_option("--mode", cgp_mode, "exact | convergence-table | mc")
      ->check(CLI::IsMember({"exact", "convergence-table", "mc"}));
  cgp->add_option("--t-max", t_max, "Trajectory length for mc mode");
  cgp->add_option("--reps", cgp_reps, "Replicates for mc mode");
  cgp->add_option("--seed", cgp_seed, "Seed for mc mode");
  cgp->add_option("--schedule", schedule_args,
                  "Comma-free N:eps pairs for the exact pipeline, e.g. "
                  "--schedule 50:8e-6 100:1e-6 (default: N=50*2^k, eps=N^-3, "
                  "k=0..3)");
  cgp->add_option("--out", cgp_out, "Write the convergence table as CSV "
                                    "(N,eps,eps_E,speed + a limit row)");

  // --- bounds -----------------------------------------------------------
  auto* bnd = app.add_subcommand(
      "bounds", "Analytic speed bounds (deterministic and stochastic lower "
                "bound) for the built-in shape distributions.");
  double bounds_C = 3600.0 / (66.4 * 66.4);
  double bounds_a = 0.2;
  bnd->add_option("--C", bounds_C, "Event intensity per unit time*area");
  bnd->add_option("--a", bounds_a, "Base length scale");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) {
      slfv::RunConfig cfg;
      if (sim_cfg->count()) cfg = slfv::parse_config_file(cfg_path);
      if (sim_desk->count()) slfv::apply_desk_scale(cfg);
      if (sim_setting->count()) cfg.setting = setting;
      if (sim_n->count()) {
        cfg.n = n_widths;
        if (!sim_setting->count() && cfg.setting == 1) cfg.setting = 2;
      }
      if (sim_mix->count()) {
        cfg.mixture_weights = slfv::mixture_preset(mixture_id);
        if (!sim_setting->count()) cfg.setting = 3;
      }
      if (sim_reps->count()) cfg.replicates = replicates;
      if (sim_seed->count()) cfg.master_seed = seed;
      if (sim_jobs->count()) cfg.jobs = jobs;
      if (sim_cap->count()) cfg.max_events = max_events;
      if (sim_dt->count()) cfg.front_sample_dt = front_dt;
      if (sim_outopt->count()) cfg.out_dir = sim_out;
      slfv::validate(cfg);
      return cmd_simulate(cfg);
    }
    if (ana->parsed()) {
      slfv::AnalyzeOptions opts;
      if (ana_win->count()) opts.var_window = {var_window[0], var_window[1]};
      if (ana_split->count()) opts.split_override = beta_split;
      return cmd_analyze(results_dir, opts, ana_out);
    }
    if (cgp->parsed()) return cmd_cgp(cgp_mode, t_max, cgp_reps, cgp_seed,
                                      schedule_args, cgp_out);
    if (bnd->parsed()) return cmd_bounds(bounds_C, bounds_a);
  } catch (const slfv::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
