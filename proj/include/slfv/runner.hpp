#pragma once
// Replicate orchestration: runs independent growth replicates (optionally in
// a worker pool), writes/reads per-replicate artifacts (hitting.csv,
// front_sd.csv, manifest.json) and turns replicate ensembles into the summary
// analysis (speed, bounds quotient, variance and fluctuation exponents).
//
// Determinism: replicate k always uses the substream master_seed ^ k, so the
// same master seed yields byte-identical replicate files whether replicates
// run serially or across any number of workers.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "slfv/bounds.hpp"
#include "slfv/config.hpp"
#include "slfv/stats.hpp"

namespace slfv {

struct ReplicateOutput {
  std::uint64_t index = 0;
  std::uint64_t seed = 0;
  double barrier_time = 0.0;
  std::uint64_t events_applied = 0;
  std::uint64_t events_ignored = 0;
  double front_sample_dt = 0.0;
  bool complete = false;
  std::string error;
  double wall_seconds = 0.0;
  stats::ReplicateSeries series;
};

// Configured sampling step, or a pilot-run estimate (pilot barrier time /
// 400; reserved substream index 2^64-1 so replicate streams are untouched).
double resolve_front_dt(const RunConfig& cfg);

// Automatic event budget when cfg.max_events == 0: a generous multiple of
// the expected number of events needed to reach the barrier.
std::uint64_t resolve_event_cap(const RunConfig& cfg);

// One replicate. rep_dir, when given, is used for optional grid snapshots.
ReplicateOutput run_replicate(const RunConfig& cfg, double front_dt,
                              std::uint64_t index,
                              const std::string* rep_dir = nullptr);

// All replicates of the config. out_root == nullptr keeps every series in
// memory (small runs, tests); otherwise each worker writes its replicate
// directory immediately and the returned entries carry metadata only.
std::vector<ReplicateOutput> run_batch(const RunConfig& cfg,
                                       const std::string* out_root,
                                       int jobs_override = -1);

int effective_jobs(const RunConfig& cfg);
std::string replicate_dir_name(std::uint64_t index);

void write_replicate_files(const ReplicateOutput& rep, const std::string& rep_dir,
                           const std::string& config_hash_hex);
ReplicateOutput read_replicate_dir(const std::string& rep_dir,
                                   std::string* config_hash_out = nullptr,
                                   bool load_series = true);

// --- analysis ---------------------------------------------------------------

struct AnalyzeOptions {
  std::optional<std::pair<double, double>> var_window;  // log-log fit window
  std::optional<double> split_override;                 // beta stage split time
};

struct AnalysisResult {
  std::size_t replicates = 0;
  stats::SpeedFit speed;
  SpeedBounds bounds;
  double quotient = 0.0;  // measured speed / deterministic bound
  std::optional<stats::LinearFit> var_tau, var_sigma;
  std::string var_error;
  std::optional<stats::PlateauReport> plateau;
  std::string plateau_error;
  std::optional<stats::FluctuationFit> beta;
  std::string beta_error;
  double detach_median = 0.0;
  std::size_t detached_count = 0;
};

AnalysisResult analyze_ensembles(const RunConfig& cfg,
                                 const stats::HittingEnsemble& hits,
                                 const stats::FrontEnsemble& front,
                                 const AnalyzeOptions& opts = {});

// Streams rep_* directories under results_dir (config.resolved describes the
// run) through the accumulator. Requires >= 2 complete replicates, all with
// the config hash of config.resolved.
AnalysisResult analyze_results_dir(const std::string& results_dir,
                                   const AnalyzeOptions& opts = {},
                                   RunConfig* cfg_out = nullptr);

std::string setting_label(const RunConfig& cfg);
void write_analysis_csvs(const AnalysisResult& res, const RunConfig& cfg,
                         const std::string& out_dir);

}  // namespace slfv
