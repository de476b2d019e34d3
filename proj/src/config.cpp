#include "slfv/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "slfv/csv.hpp"

namespace slfv {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<double> parse_list(const std::string& v, const char* what) {
  std::vector<double> out;
  std::istringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(parse_double(item, what));
  }
  return out;
}

std::uint64_t parse_u64(const std::string& v, const char* what) {
  try {
    std::size_t pos = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    const std::uint64_t r = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError(std::string("bad unsigned integer for ") + what + ": '" + v +
                      "'");
  }
}

int parse_int(const std::string& v, const char* what) {
  try {
    std::size_t pos = 0;
    const int r = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError(std::string("bad integer for ") + what + ": '" + v + "'");
  }
}

double parse_num(const std::string& v, const char* what) {
  try {
    return parse_double(v, what);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

std::vector<double> mixture_preset(int id) {
  switch (id) {
    case 1: return {1, 2, 3, 4, 5, 6, 7};
    case 2: return {1, 2, 2, 2, 2, 1, 1};
    case 3: return {1, 2, 0, 0, 2, 1, 1};
    case 4: return {1, 0, 0, 0, 0, 0, 1};
    case 5: return {1, 2, 1, 1, 1, 1, 1};
    default: throw ConfigError("mixture preset id must be 1..5");
  }
}

RunConfig parse_config_text(const std::string& text, RunConfig base) {
  RunConfig cfg = std::move(base);
  cfg.validated = false;
  std::istringstream in(text);
  std::string raw, section;
  int line_no = 0;
  bool theta_seen = false, c_seen = false;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(line_no) + ": malformed section");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "geometry" && section != "distribution" &&
          section != "execution" && section != "output")
        throw ConfigError("unknown config section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    auto in_section = [&](const char* s) { return section == s; };
    if (in_section("geometry")) {
      if (key == "W") cfg.W = parse_num(val, "W");
      else if (key == "H") cfg.H = parse_num(val, "H");
      else if (key == "delta") cfg.delta = parse_num(val, "delta");
      else if (key == "m") cfg.m = parse_num(val, "m");
      else if (key == "theta") { cfg.theta = parse_num(val, "theta"); theta_seen = true; }
      else if (key == "C") { cfg.C = parse_num(val, "C"); c_seen = true; }
      else throw ConfigError("unknown key '" + key + "' in [geometry]");
    } else if (in_section("distribution")) {
      if (key == "setting") cfg.setting = parse_int(val, "setting");
      else if (key == "n") cfg.n = parse_int(val, "n");
      else if (key == "a") cfg.a = parse_num(val, "a");
      else if (key == "mixture_weights") cfg.mixture_weights = parse_list(val, "mixture_weights");
      else if (key == "mixture") cfg.mixture_weights = mixture_preset(parse_int(val, "mixture"));
      else throw ConfigError("unknown key '" + key + "' in [distribution]");
    } else if (in_section("execution")) {
      if (key == "replicates") cfg.replicates = parse_u64(val, "replicates");
      else if (key == "master_seed") cfg.master_seed = parse_u64(val, "master_seed");
      else if (key == "max_events") cfg.max_events = parse_u64(val, "max_events");
      else if (key == "front_sample_dt") cfg.front_sample_dt = parse_num(val, "front_sample_dt");
      else if (key == "snapshot_times") cfg.snapshot_times = parse_list(val, "snapshot_times");
      else if (key == "row_window") {
        const std::vector<double> w = parse_list(val, "row_window");
        if (w.size() != 2) throw ConfigError("row_window needs exactly 'lo,hi'");
        cfg.row_lo = static_cast<std::int64_t>(w[0]);
        cfg.row_hi = static_cast<std::int64_t>(w[1]);
      } else if (key == "jobs") cfg.jobs = parse_int(val, "jobs");
      else throw ConfigError("unknown key '" + key + "' in [execution]");
    } else if (in_section("output")) {
      if (key == "dir") cfg.out_dir = val;
      else throw ConfigError("unknown key '" + key + "' in [output]");
    } else {
      throw ConfigError("key '" + key + "' appears before any [section]");
    }
  }
  if (theta_seen && !c_seen) cfg.C = 0.0;  // file chose the theta entry point
  if (c_seen && !theta_seen) cfg.theta = 0.0;
  return cfg;
}

RunConfig parse_config_file(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str(), std::move(base));
}

void apply_desk_scale(RunConfig& cfg) {
  // Preserve the intensity C while shrinking the window.
  double C = cfg.C;
  if (C <= 0.0) {
    if (cfg.theta <= 0.0) throw ConfigError("desk scaling needs theta or C");
    C = cfg.theta / ((cfg.W + 2 * cfg.m) * (cfg.H + 2 * cfg.m));
  }
  cfg.W = 20.0;
  cfg.H = 20.0;
  cfg.delta = 0.02;
  cfg.m = 3.2;
  cfg.C = 0.0;
  cfg.theta = C * (cfg.W + 2 * cfg.m) * (cfg.H + 2 * cfg.m);
  cfg.validated = false;
}

void validate(RunConfig& cfg) {
  if (cfg.theta > 0.0 && cfg.C > 0.0) {
    const double derived = cfg.theta / ((cfg.W + 2 * cfg.m) * (cfg.H + 2 * cfg.m));
    if (std::abs(derived - cfg.C) > 1e-9 * cfg.C)
      throw ConfigError("theta and C are both set but inconsistent");
  } else if (cfg.theta > 0.0) {
    cfg.C = cfg.theta / ((cfg.W + 2 * cfg.m) * (cfg.H + 2 * cfg.m));
  } else if (cfg.C > 0.0) {
    cfg.theta = cfg.C * ((cfg.W + 2 * cfg.m) * (cfg.H + 2 * cfg.m));
  } else {
    throw ConfigError("one of theta or C must be positive");
  }
  if (cfg.setting < 1 || cfg.setting > 3)
    throw ConfigError("setting must be 1, 2 or 3");
  if (cfg.setting == 2 && cfg.n < 1) throw ConfigError("setting 2 needs n >= 1");
  if (!(cfg.a > 0.0)) throw ConfigError("a must be positive");
  if (cfg.setting == 3) {
    if (cfg.mixture_weights.size() != 7)
      throw ConfigError("mixture_weights must list exactly 7 values");
    double total = 0.0;
    for (const double w : cfg.mixture_weights) {
      if (w < 0.0) throw ConfigError("mixture weights must be >= 0");
      total += w;
    }
    if (total <= 0.0) throw ConfigError("mixture weights must not all be zero");
  }
  if (cfg.replicates == 0)
    cfg.replicates = cfg.setting == 1 ? 1616 : 368;  // full-scale defaults
  if (cfg.front_sample_dt < 0.0) throw ConfigError("front_sample_dt must be >= 0");
  if ((cfg.row_lo < 0) != (cfg.row_hi < 0))
    throw ConfigError("row_window needs both bounds (or neither)");
  if (cfg.jobs < 0) throw ConfigError("jobs must be >= 0");

  DomainGeometry geom;
  try {
    geom = DomainGeometry::from_theta(cfg.W, cfg.H, cfg.delta, cfg.m, cfg.theta);
    geom.validate_against(make_mu(cfg));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (cfg.row_lo >= 0 && (cfg.row_hi >= geom.rows() || cfg.row_lo > cfg.row_hi))
    throw ConfigError("row_window outside the lattice");
  for (const double t : cfg.snapshot_times)
    if (!(t >= 0.0)) throw ConfigError("snapshot times must be >= 0");
  cfg.validated = true;
}

ShapeDistribution make_mu(const RunConfig& cfg) {
  switch (cfg.setting) {
    case 1: return ShapeDistribution::square(cfg.a);
    case 2: return ShapeDistribution::two_widths(cfg.n, cfg.a);
    case 3: return ShapeDistribution::mixture(cfg.mixture_weights, cfg.a);
    default: throw ConfigError("setting must be 1, 2 or 3");
  }
}

DomainGeometry make_geometry(const RunConfig& cfg) {
  return DomainGeometry::from_theta(cfg.W, cfg.H, cfg.delta, cfg.m, cfg.theta);
}

std::string canonical_string(const RunConfig& cfg) {
  if (!cfg.validated) throw ConfigError("config must be validated before hashing");
  std::ostringstream s;
  s << "W=" << fmt_g17(cfg.W) << ";H=" << fmt_g17(cfg.H)
    << ";delta=" << fmt_g17(cfg.delta) << ";m=" << fmt_g17(cfg.m)
    << ";theta=" << fmt_g17(cfg.theta) << ";setting=" << cfg.setting;
  if (cfg.setting == 2) s << ";n=" << cfg.n;
  s << ";a=" << fmt_g17(cfg.a);
  if (cfg.setting == 3) {
    s << ";weights=";
    for (const double w : cfg.mixture_weights) s << fmt_g17(w) << ",";
  }
  s << ";replicates=" << cfg.replicates << ";master_seed=" << cfg.master_seed
    << ";max_events=" << cfg.max_events
    << ";front_sample_dt=" << fmt_g17(cfg.front_sample_dt) << ";snapshots=";
  for (const double t : cfg.snapshot_times) s << fmt_g17(t) << ",";
  s << ";row_window=" << cfg.row_lo << "," << cfg.row_hi;
  return s.str();
}

std::uint64_t config_hash(const RunConfig& cfg) {
  const std::string c = canonical_string(cfg);
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (const unsigned char ch : c) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash_hex(const RunConfig& cfg) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(config_hash(cfg)));
  return buf;
}

std::string serialize_config(const RunConfig& cfg) {
  if (!cfg.validated) throw ConfigError("config must be validated before writing");
  std::ostringstream s;
  s << "# resolved run configuration\n";
  s << "[geometry]\n";
  s << "W = " << fmt_g17(cfg.W) << "\n";
  s << "H = " << fmt_g17(cfg.H) << "\n";
  s << "delta = " << fmt_g17(cfg.delta) << "\n";
  s << "m = " << fmt_g17(cfg.m) << "\n";
  s << "theta = " << fmt_g17(cfg.theta) << "\n";
  s << "[distribution]\n";
  s << "setting = " << cfg.setting << "\n";
  if (cfg.setting == 2) s << "n = " << cfg.n << "\n";
  s << "a = " << fmt_g17(cfg.a) << "\n";
  if (cfg.setting == 3) {
    s << "mixture_weights = ";
    for (std::size_t k = 0; k < cfg.mixture_weights.size(); ++k)
      s << (k ? "," : "") << fmt_g17(cfg.mixture_weights[k]);
    s << "\n";
  }
  s << "[execution]\n";
  s << "replicates = " << cfg.replicates << "\n";
  s << "master_seed = " << cfg.master_seed << "\n";
  s << "max_events = " << cfg.max_events << "\n";
  s << "front_sample_dt = " << fmt_g17(cfg.front_sample_dt) << "\n";
  if (!cfg.snapshot_times.empty()) {
    s << "snapshot_times = ";
    for (std::size_t k = 0; k < cfg.snapshot_times.size(); ++k)
      s << (k ? "," : "") << fmt_g17(cfg.snapshot_times[k]);
    s << "\n";
  }
  if (cfg.row_lo >= 0)
    s << "row_window = " << cfg.row_lo << "," << cfg.row_hi << "\n";
  return s.str();
}

}  // namespace slfv
