#include "slfv/runner.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "slfv/csv.hpp"
#include "slfv/grid.hpp"
#include "slfv/metrics.hpp"

namespace slfv {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kPilotIndex = ~0ULL;

RowWindow window_of(const RunConfig& cfg, const DomainGeometry& geom) {
  if (cfg.row_lo >= 0) return {cfg.row_lo, cfg.row_hi};
  return default_row_window(geom);
}

// Writes grid snapshots at the configured times (state right before the
// first event past each time).
class PgmRecorder : public Recorder {
 public:
  PgmRecorder(std::vector<double> times, std::string dir)
      : times_(std::move(times)), dir_(std::move(dir)) {
    std::sort(times_.begin(), times_.end());
  }

  void before_event(const OccupancyGrid& grid, double t_next) override {
    while (next_ < times_.size() && times_[next_] < t_next) {
      char name[48];
      std::snprintf(name, sizeof name, "snapshot_%03zu.pgm", next_);
      write_pgm(grid, dir_ + "/" + name);
      ++next_;
    }
  }

 private:
  std::vector<double> times_;
  std::string dir_;
  std::size_t next_ = 0;
};

}  // namespace

std::uint64_t resolve_event_cap(const RunConfig& cfg) {
  if (cfg.max_events > 0) return cfg.max_events;
  const double gamma = deterministic_bound(make_mu(cfg), cfg.C);
  // The front crosses W at a speed of at least the deterministic bound, so
  // theta * W / gamma events generously over-cover one run; keep 20x slack.
  const double est = 20.0 * cfg.theta * cfg.W / gamma;
  return std::max<std::uint64_t>(10'000'000, static_cast<std::uint64_t>(est));
}

double resolve_front_dt(const RunConfig& cfg) {
  if (cfg.front_sample_dt > 0.0) return cfg.front_sample_dt;
  const DomainGeometry geom = make_geometry(cfg);
  const ShapeDistribution mu = make_mu(cfg);
  OccupancyGrid grid(geom);
  EventStream stream(geom, mu, Rng::substream(cfg.master_seed, kPilotIndex));
  const SimulationResult res =
      run_until_barrier(grid, stream, {}, resolve_event_cap(cfg));
  return res.barrier_time / 400.0;
}

ReplicateOutput run_replicate(const RunConfig& cfg, double front_dt,
                              std::uint64_t index, const std::string* rep_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  ReplicateOutput out;
  out.index = index;
  out.seed = cfg.master_seed ^ index;
  out.front_sample_dt = front_dt;

  const DomainGeometry geom = make_geometry(cfg);
  const ShapeDistribution mu = make_mu(cfg);
  OccupancyGrid grid(geom);
  EventStream stream(geom, mu, Rng(out.seed));
  HittingRecorder hits(geom);
  FrontRecorder front(geom, window_of(cfg, geom), front_dt);
  std::vector<Recorder*> recorders{&hits, &front};
  PgmRecorder snaps(cfg.snapshot_times, rep_dir ? *rep_dir : std::string());
  if (rep_dir && !cfg.snapshot_times.empty()) recorders.push_back(&snaps);

  try {
    const SimulationResult res =
        run_until_barrier(grid, stream, recorders, resolve_event_cap(cfg));
    out.barrier_time = res.barrier_time;
    out.events_applied = res.events_applied;
    out.events_ignored = res.events_ignored;
    out.complete = true;
  } catch (const EventCapExceeded& e) {
    out.error = e.what();
    out.events_applied = e.applied;
    out.events_ignored = e.ignored;
    out.complete = false;
  }

  // Axis hitting rows for positions beyond the border, in ascending x.
  const std::int64_t border = hits.border();
  const double delta = hits.delta();
  for (std::int64_t i = border + 1; i <= hits.i_max_tau(); ++i) {
    const double tau = hits.tau()[static_cast<std::size_t>(i)];
    if (std::isnan(tau)) continue;
    stats::HitRow row;
    row.x = delta * static_cast<double>(i - border);
    row.tau = tau;
    const double sigma = hits.sigma()[static_cast<std::size_t>(i)];
    row.has_sigma = !std::isnan(sigma);
    row.sigma = row.has_sigma ? sigma : 0.0;
    out.series.hits.push_back(row);
  }
  for (const FrontRecorder::Sample& s : front.samples())
    out.series.front.push_back({s.t, s.sd, s.detached});

  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

int effective_jobs(const RunConfig& cfg) {
  if (cfg.jobs > 0) return cfg.jobs;
  if (const char* env = std::getenv("SLFV_JOBS")) {
    const int j = std::atoi(env);
    if (j > 0) return j;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

std::string replicate_dir_name(std::uint64_t index) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "rep_%04llu", static_cast<unsigned long long>(index));
  return buf;
}

std::vector<ReplicateOutput> run_batch(const RunConfig& cfg,
                                       const std::string* out_root,
                                       int jobs_override) {
  if (!cfg.validated) throw ConfigError("run_batch needs a validated config");
  const std::string hash = config_hash_hex(cfg);
  if (out_root) {
    fs::create_directories(*out_root);
    std::ofstream resolved(*out_root + "/config.resolved");
    resolved << serialize_config(cfg);
  }
  const double front_dt = resolve_front_dt(cfg);

  const std::uint64_t n = cfg.replicates;
  std::vector<ReplicateOutput> outs(n);
  std::atomic<std::uint64_t> cursor{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;

  auto worker = [&]() {
    for (;;) {
      const std::uint64_t idx = cursor.fetch_add(1);
      if (idx >= n) return;
      {
        std::scoped_lock lk(err_mutex);
        if (first_error) return;  // stop picking up work after a hard failure
      }
      try {
        std::string rep_dir;
        if (out_root) {
          rep_dir = *out_root + "/" + replicate_dir_name(idx);
          fs::create_directories(rep_dir);
        }
        ReplicateOutput rep =
            run_replicate(cfg, front_dt, idx, out_root ? &rep_dir : nullptr);
        if (out_root) {
          write_replicate_files(rep, rep_dir, hash);
          rep.series = {};  // streamed to disk; keep the batch light
        }
        outs[idx] = std::move(rep);
      } catch (...) {
        std::scoped_lock lk(err_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  int jobs = jobs_override >= 0 ? jobs_override : effective_jobs(cfg);
  jobs = std::max(1, std::min<int>(jobs, static_cast<int>(std::min<std::uint64_t>(
                                             n, 1'000'000))));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int k = 0; k < jobs; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return outs;
}

void write_replicate_files(const ReplicateOutput& rep, const std::string& rep_dir,
                           const std::string& config_hash_hex) {
  {
    std::ofstream f(rep_dir + "/hitting.csv");
    if (!f) throw std::runtime_error("cannot write " + rep_dir + "/hitting.csv");
    f << "x,tau,sigma\n";
    for (const stats::HitRow& h : rep.series.hits) {
      f << fmt_g9(h.x) << ',' << fmt_g9(h.tau) << ',';
      if (h.has_sigma) f << fmt_g9(h.sigma);
      f << '\n';
    }
  }
  {
    std::ofstream f(rep_dir + "/front_sd.csv");
    if (!f) throw std::runtime_error("cannot write " + rep_dir + "/front_sd.csv");
    f << "t,sd,detached\n";
    for (const stats::FrontRow& r : rep.series.front)
      f << fmt_g9(r.t) << ',' << fmt_g9(r.sd) << ',' << (r.detached ? 1 : 0) << '\n';
  }
  {
    json j;
    j["replicate"] = rep.index;
    j["seed"] = rep.seed;
    j["config_hash"] = config_hash_hex;
    j["barrier_time"] = rep.barrier_time;
    j["events_applied"] = rep.events_applied;
    j["events_ignored"] = rep.events_ignored;
    j["front_sample_dt"] = rep.front_sample_dt;
    j["complete"] = rep.complete;
    j["error"] = rep.error;
    // wall_seconds stays out: manifests must be byte-identical across
    // serial/parallel runs of the same seed.
    std::ofstream f(rep_dir + "/manifest.json");
    if (!f) throw std::runtime_error("cannot write " + rep_dir + "/manifest.json");
    f << j.dump(2) << '\n';
  }
}

ReplicateOutput read_replicate_dir(const std::string& rep_dir,
                                   std::string* config_hash_out, bool load_series) {
  ReplicateOutput out;
  {
    std::ifstream f(rep_dir + "/manifest.json");
    if (!f) throw std::runtime_error("missing manifest: " + rep_dir);
    const json j = json::parse(f);
    out.index = j.at("replicate").get<std::uint64_t>();
    out.seed = j.at("seed").get<std::uint64_t>();
    out.barrier_time = j.at("barrier_time").get<double>();
    out.events_applied = j.at("events_applied").get<std::uint64_t>();
    out.events_ignored = j.at("events_ignored").get<std::uint64_t>();
    out.front_sample_dt = j.at("front_sample_dt").get<double>();
    out.complete = j.at("complete").get<bool>();
    out.error = j.at("error").get<std::string>();
    if (config_hash_out) *config_hash_out = j.at("config_hash").get<std::string>();
  }
  if (!load_series) return out;
  {
    std::ifstream f(rep_dir + "/hitting.csv");
    if (!f) throw std::runtime_error("missing hitting.csv in " + rep_dir);
    std::string line;
    std::getline(f, line);  // header
    while (std::getline(f, line)) {
      if (line.empty()) continue;
      const auto fields = split_csv_line(line);
      if (fields.size() != 3)
        throw std::runtime_error("bad hitting.csv row in " + rep_dir + ": " + line);
      stats::HitRow h;
      h.x = parse_double(fields[0], "x");
      h.tau = parse_double(fields[1], "tau");
      h.has_sigma = !fields[2].empty();
      h.sigma = h.has_sigma ? parse_double(fields[2], "sigma") : 0.0;
      out.series.hits.push_back(h);
    }
  }
  {
    std::ifstream f(rep_dir + "/front_sd.csv");
    if (!f) throw std::runtime_error("missing front_sd.csv in " + rep_dir);
    std::string line;
    std::getline(f, line);
    while (std::getline(f, line)) {
      if (line.empty()) continue;
      const auto fields = split_csv_line(line);
      if (fields.size() != 3)
        throw std::runtime_error("bad front_sd.csv row in " + rep_dir + ": " + line);
      out.series.front.push_back({parse_double(fields[0], "t"),
                                  parse_double(fields[1], "sd"),
                                  fields[2] == "1"});
    }
  }
  return out;
}

AnalysisResult analyze_ensembles(const RunConfig& cfg,
                                 const stats::HittingEnsemble& hits,
                                 const stats::FrontEnsemble& front,
                                 const AnalyzeOptions& opts) {
  AnalysisResult res;
  res.replicates = hits.tau.reps;
  res.bounds = speed_bounds(make_mu(cfg), cfg.C);
  res.speed = stats::fit_speed(hits);
  res.quotient = res.speed.speed / res.bounds.gamma_determ;
  try {
    res.var_tau = stats::fit_variance_exponent(hits.tau, opts.var_window);
    res.var_sigma = stats::fit_variance_exponent(hits.sigma, opts.var_window);
  } catch (const std::exception& e) {
    res.var_error = e.what();
  }
  try {
    res.plateau = stats::sigma_minus_tau(hits);
  } catch (const std::exception& e) {
    res.plateau_error = e.what();
  }
  res.detached_count = front.detach_times.size();
  if (front.detach_times.empty()) {
    res.beta_error = "no replicate detached from the border";
  } else {
    res.detach_median = stats::median(front.detach_times);
    const double split = opts.split_override.value_or(res.detach_median);
    try {
      res.beta = stats::fit_fluctuation_exponents(front, split);
    } catch (const std::exception& e) {
      res.beta_error = e.what();
    }
  }
  return res;
}

AnalysisResult analyze_results_dir(const std::string& results_dir,
                                   const AnalyzeOptions& opts, RunConfig* cfg_out) {
  RunConfig cfg = parse_config_file(results_dir + "/config.resolved");
  validate(cfg);
  const std::string expected_hash = config_hash_hex(cfg);

  std::vector<std::string> rep_dirs;
  for (const auto& entry : fs::directory_iterator(results_dir)) {
    if (entry.is_directory() &&
        entry.path().filename().string().rfind("rep_", 0) == 0)
      rep_dirs.push_back(entry.path().string());
  }
  std::sort(rep_dirs.begin(), rep_dirs.end());

  stats::EnsembleAccumulator acc;
  std::size_t complete = 0, incomplete = 0;
  for (const std::string& dir : rep_dirs) {
    std::string hash;
    ReplicateOutput head = read_replicate_dir(dir, &hash, /*load_series=*/false);
    if (hash != expected_hash)
      throw ConfigError("replicate " + dir + " was produced by a different config");
    if (!head.complete) {
      ++incomplete;
      continue;
    }
    const ReplicateOutput rep = read_replicate_dir(dir, nullptr, true);
    acc.add(rep.series);
    ++complete;
  }
  if (complete < 2)
    throw ConfigError("analysis needs at least 2 complete replicates (found " +
                      std::to_string(complete) + ", incomplete " +
                      std::to_string(incomplete) + ")");
  if (cfg_out) *cfg_out = cfg;
  return analyze_ensembles(cfg, acc.hitting(), acc.front(), opts);
}

std::string setting_label(const RunConfig& cfg) {
  if (cfg.setting == 1) return "1";
  if (cfg.setting == 2) return "2:n=" + std::to_string(cfg.n);
  std::string s = "3:w=";
  for (std::size_t k = 0; k < cfg.mixture_weights.size(); ++k)
    s += (k ? "," : "") + fmt_g9(cfg.mixture_weights[k]);
  return s;
}

void write_analysis_csvs(const AnalysisResult& res, const RunConfig& cfg,
                         const std::string& out_dir) {
  fs::create_directories(out_dir);
  {
    std::ofstream f(out_dir + "/speeds.csv");
    f << "setting,nu,speed,gamma_determ,gamma_lb_sto,quotient,fit_x_lo,fit_x_hi,"
         "fit_points,replicates\n";
    f << setting_label(cfg) << ',' << fmt_g9(res.speed.nu) << ','
      << fmt_g9(res.speed.speed) << ',' << fmt_g9(res.bounds.gamma_determ) << ','
      << fmt_g9(res.bounds.gamma_lb_sto) << ',' << fmt_g9(res.quotient) << ','
      << fmt_g9(res.speed.fit.x_lo) << ',' << fmt_g9(res.speed.fit.x_hi) << ','
      << res.speed.fit.n << ',' << res.replicates << '\n';
  }
  {
    std::ofstream f(out_dir + "/var_exponents.csv");
    f << "series,exponent,r2,x_lo,x_hi,points\n";
    auto row = [&f](const char* name, const stats::LinearFit& fit) {
      f << name << ',' << fmt_g9(fit.slope) << ',' << fmt_g9(fit.r2) << ','
        << fmt_g9(fit.x_lo) << ',' << fmt_g9(fit.x_hi) << ',' << fit.n << '\n';
    };
    if (res.var_tau) row("tau", *res.var_tau);
    if (res.var_sigma) row("sigma", *res.var_sigma);
  }
  {
    std::ofstream f(out_dir + "/beta_exponents.csv");
    f << "stage,beta,r2,t_lo,t_hi,points,split_time\n";
    if (res.beta) {
      const auto& b = *res.beta;
      f << "1," << fmt_g9(b.stage1.slope) << ',' << fmt_g9(b.stage1.r2) << ','
        << fmt_g9(b.stage1.x_lo) << ',' << fmt_g9(b.stage1.x_hi) << ','
        << b.stage1.n << ',' << fmt_g9(b.split_time) << '\n';
      f << "2," << fmt_g9(b.stage2.slope) << ',' << fmt_g9(b.stage2.r2) << ','
        << fmt_g9(b.stage2.x_lo) << ',' << fmt_g9(b.stage2.x_hi) << ','
        << b.stage2.n << ',' << fmt_g9(b.split_time) << '\n';
    }
  }
}

}  // namespace slfv
