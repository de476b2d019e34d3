#pragma once
// Run configuration: geometry, shape distribution, execution controls and
// output location. Parsed from a flat INI-style file ([section], key = value,
// '#' comments) with CLI overrides applied on top; validate() resolves
// derived fields and rejects inconsistent input.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "slfv/events.hpp"

namespace slfv {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  // [geometry] — full-scale defaults
  double W = 60.0;
  double H = 60.0;
  double delta = 0.005;
  double m = 3.2;
  double theta = 3600.0;  // at most one of theta / C in the file; 0 = unset
  double C = 0.0;

  // [distribution]
  int setting = 1;  // 1 fixed square, 2 two-width family, 3 mixture
  int n = 2;        // setting 2 width multiplier
  double a = 0.2;   // base length scale
  std::vector<double> mixture_weights = {1, 1, 1, 1, 1, 1, 1};

  // [execution]
  std::uint64_t replicates = 0;    // 0 = per-setting default
  std::uint64_t master_seed = 1;
  std::uint64_t max_events = 0;    // 0 = automatic budget
  double front_sample_dt = 0.0;    // 0 = pilot-run estimate / 400
  std::vector<double> snapshot_times;
  std::int64_t row_lo = -1, row_hi = -1;  // -1 = default window
  int jobs = 0;  // 0 = SLFV_JOBS env or hardware concurrency

  // [output]
  std::string out_dir = "out";

  bool validated = false;
};

// Built-in mixture presets (1-based id).
std::vector<double> mixture_preset(int id);

// Reads the file onto the given defaults. Unknown sections/keys are errors.
RunConfig parse_config_file(const std::string& path, RunConfig base = RunConfig());
RunConfig parse_config_text(const std::string& text, RunConfig base = RunConfig());

// Desk-scale geometry: W = H = 20, delta = 1/50, m = 3.2, with theta rescaled
// so the intensity C is preserved.
void apply_desk_scale(RunConfig& cfg);

// Resolves theta/C, replicate defaults, checks geometry integrality, the
// distribution parameters and the margin condition. Throws ConfigError.
void validate(RunConfig& cfg);

ShapeDistribution make_mu(const RunConfig& cfg);
DomainGeometry make_geometry(const RunConfig& cfg);

// Canonical serialization of every output-affecting field (excludes jobs and
// out_dir) and its FNV-1a 64-bit hash; requires a validated config.
std::string canonical_string(const RunConfig& cfg);
std::uint64_t config_hash(const RunConfig& cfg);
std::string config_hash_hex(const RunConfig& cfg);

// INI text capturing the validated config (round-trips through the parser
// to an identical hash).
std::string serialize_config(const RunConfig& cfg);

}  // namespace slfv
