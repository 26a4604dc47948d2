#pragma once

// Command-line front end. Exit codes: 0 success, 1 usage or precondition
// error, 2 a verification, census or bound check that failed.

#include "collatz_lab/bench.hpp"
#include "collatz_lab/census.hpp"
#include "collatz_lab/closed_form.hpp"
#include "collatz_lab/density.hpp"
#include "collatz_lab/maps.hpp"
#include "collatz_lab/natural.hpp"
#include "collatz_lab/rational.hpp"
#include "collatz_lab/step_table.hpp"
#include "collatz_lab/stopping_stats.hpp"
#include "collatz_lab/verification.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace collatz_lab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitCheckFailed = 2;

inline constexpr std::uint64_t kSamplingThreshold = std::uint64_t{1} << 26;

struct RunConfig {
  unsigned threads = 0;
  std::string output;
  std::string format = "csv";
  std::uint64_t budget = kDefaultStepBudget;

  // orbit
  std::string m;
  std::string map = "t";
  std::optional<std::uint64_t> max_steps;
  bool trace = false;
  // verify
  std::uint64_t m_max = 0;
  std::size_t k_max = 0;
  // census / table
  unsigned n = 0;
  std::string interval_start;
  std::string cache;
  std::uint64_t count = 10'000'000;
  std::uint64_t seed = 1;
  // density
  std::string family;
  std::string epsilon;
  std::string lambda;
  std::string alpha;
  std::string theta;
  std::uint64_t n_max = 0;
  double base = 2;
  bool cumulative = false;
  std::optional<std::uint64_t> samples;
  bool exhaustive = false;
  // fit
  std::string input;
  // hoeffding
  std::uint64_t a = 0, b = 0, N = 0;
  // tau
  std::uint64_t x = 0;
  std::vector<std::uint64_t> checkpoints;
  double width = 0.25;
};

class CheckFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline ExactRational parse_param(const std::string& name, const std::string& text) {
  if (text.empty()) throw PreconditionError("--" + name + " is required");
  try {
    return ExactRational::parse(text);
  } catch (const std::exception&) {
    throw PreconditionError("--" + name + ": cannot parse '" + text + "' as a number");
  }
}

inline void emit(const RunConfig& cfg, std::ostream& out, const std::string& text) {
  if (cfg.output.empty()) {
    out << text;
    return;
  }
  std::ofstream f(cfg.output, std::ios::binary);
  if (!f) throw PreconditionError("cannot open output file '" + cfg.output + "'");
  f << text;
}

inline bool json(const RunConfig& cfg) { return cfg.format == "json"; }

inline std::string density_text(const RunConfig& cfg, const DensityReport& rep) {
  std::ostringstream os;
  if (json(cfg)) {
    os << to_json(rep).dump(2) << '\n';
  } else if (cfg.cumulative) {
    write_cumulative_csv(os, rep);
  } else {
    write_shells_csv(os, rep);
  }
  return os.str();
}

inline std::string verify_text(const VerifyReport& r) {
  std::string s = r.name + ": " + std::to_string(r.checked) + " cases, " + std::to_string(r.failures) + " failures";
  if (r.first_failure) s += " (first: " + *r.first_failure + ")";
  return s + '\n';
}

// ----- subcommand bodies ---------------------------------------------------

inline int run_orbit(const RunConfig& cfg, std::ostream& out) {
  const BigInt m = parse_natural(cfg.m);
  if (m < 1) throw PreconditionError("--m must be >= 1");
  MapKind kind;
  if (cfg.map == "t") {
    kind = MapKind::T;
  } else if (cfg.map == "col") {
    kind = MapKind::C;
  } else if (cfg.map == "syr") {
    kind = MapKind::Syracuse;
  } else {
    throw PreconditionError("--map must be t, col or syr");
  }
  OrbitOptions opts;
  opts.max_steps = cfg.max_steps.value_or(cfg.budget);
  opts.trace = cfg.trace;
  const OrbitRecord rec = orbit(kind, m, opts);

  std::ostringstream os;
  if (json(cfg)) {
    nlohmann::ordered_json j;
    j["m"] = rec.start.str();
    j["map"] = std::string(to_string(kind));
    j["steps"] = rec.steps_taken;
    j["reached_one"] = rec.reached_one;
    j["tau"] = rec.tau ? nlohmann::ordered_json(*rec.tau) : nlohmann::ordered_json(nullptr);
    j["max"] = rec.max_value.str();
    if (rec.parity_ones) j["parity_ones"] = *rec.parity_ones;
    if (cfg.trace) {
      auto& t = j["trace"] = nlohmann::ordered_json::array();
      for (const auto& v : rec.trace) t.push_back(v.str());
    }
    os << j.dump(2) << '\n';
  } else {
    os << "m=" << rec.start << " map=" << to_string(kind) << " steps=" << rec.steps_taken
       << " reached_one=" << (rec.reached_one ? "true" : "false");
    if (rec.tau) {
      os << " tau=" << *rec.tau;
    } else {
      os << " tau=unresolved";
    }
    os << " max=" << rec.max_value;
    if (rec.parity_ones) os << " parity_ones=" << *rec.parity_ones;
    os << '\n';
    if (cfg.trace) {
      for (std::size_t i = 0; i < rec.trace.size(); ++i) os << (i ? "," : "") << rec.trace[i];
      os << '\n';
    }
  }
  emit(cfg, out, os.str());
  return kExitOk;
}

inline int run_verify(const RunConfig& cfg, std::ostream& out, const std::string& which) {
  if (cfg.m_max < 1) throw PreconditionError("--m-max must be >= 1");
  std::vector<VerifyReport> reports;
  if (which == "closed-form") {
    reports.push_back(verify_closed_form_range(cfg.m_max, cfg.k_max, cfg.threads));
    reports.push_back(verify_remainder_bounds(cfg.m_max, cfg.k_max, cfg.threads));
  } else {
    reports.push_back(verify_split_range(cfg.m_max, cfg.k_max, cfg.threads));
  }
  std::string text;
  bool ok = true;
  for (const auto& r : reports) {
    text += verify_text(r);
    ok = ok && r.ok();
  }
  emit(cfg, out, text);
  return ok ? kExitOk : kExitCheckFailed;
}

inline int run_census(const RunConfig& cfg, std::ostream& out) {
  CensusReport rep;
  if (cfg.interval_start.empty()) {
    rep = parity_census(cfg.n, kHardMaxWindow, cfg.threads);
  } else {
    rep = census_on_interval(parse_natural(cfg.interval_start), cfg.n, kHardMaxWindow, cfg.threads);
  }
  const std::uint64_t vectors = std::uint64_t{1} << rep.n;
  std::ostringstream os;
  if (json(cfg)) {
    nlohmann::ordered_json j;
    j["n"] = rep.n;
    j["interval_start"] = rep.interval_start ? nlohmann::ordered_json(rep.interval_start->str())
                                             : nlohmann::ordered_json(nullptr);
    j["vectors"] = vectors;
    j["distinct"] = rep.distinct;
    j["min_count"] = rep.min_count;
    j["max_count"] = rep.max_count;
    j["uniform"] = rep.uniform;
    os << j.dump(2) << '\n';
  } else {
    os << "census n=" << rep.n;
    if (rep.interval_start) os << " start=" << *rep.interval_start;
    os << ": " << rep.distinct << '/' << vectors << " vectors, "
       << (rep.uniform ? "uniform" : "NOT uniform (min " + std::to_string(rep.min_count) + ", max " +
                                         std::to_string(rep.max_count) + ")")
       << '\n';
  }
  emit(cfg, out, os.str());
  return rep.uniform ? kExitOk : kExitCheckFailed;
}

inline int run_table_build(const RunConfig& cfg, std::ostream& out) {
  check_window(cfg.n, kHardMaxWindow);
  std::optional<std::filesystem::path> path;
  if (!cfg.cache.empty()) path = cfg.cache;
  if (!path) path = default_cache_path(cfg.n);
  const auto t0 = std::chrono::steady_clock::now();
  StepTable t = load_or_build_table(cfg.n, path, kHardMaxWindow, cfg.threads);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::uint64_t wide = 0;
  unsigned max_odd = 0;
  for (std::uint64_t r = 0; r < t.size(); ++r) {
    wide += t.offset_overflowed(r) ? 1 : 0;
    max_odd = std::max(max_odd, t.odd_steps(r));
  }
  std::ostringstream os;
  os << "table n=" << cfg.n << ": " << t.size() << " entries, max odd steps " << max_odd << ", " << wide
     << " offsets beyond 128 bits";
  if (path) os << ", cache " << path->string();
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", secs);
  os << ", " << buf << " s\n";
  emit(cfg, out, os.str());
  return kExitOk;
}

inline int run_table_bench(const RunConfig& cfg, std::ostream& out) {
  check_window(cfg.n, kHardMaxWindow);
  if (cfg.count < 1) throw PreconditionError("--count must be >= 1");
  std::optional<std::filesystem::path> path;
  if (!cfg.cache.empty()) path = cfg.cache;
  const StepTable t = load_or_build_table(cfg.n, path, kHardMaxWindow, cfg.threads);
  const ThroughputReport r = table_bench(t, cfg.count, cfg.seed);
  std::ostringstream os;
  if (json(cfg)) {
    nlohmann::ordered_json j{{"n", r.window},           {"steps", r.steps},
                             {"single_rate", r.single_rate}, {"batch_rate", r.batch_rate},
                             {"speedup", r.speedup},     {"results_match", r.results_match}};
    os << j.dump(2) << '\n';
  } else {
    char buf[200];
    std::snprintf(buf, sizeof buf, "steps=%llu single=%.4g steps/s batch(n=%u)=%.4g steps/s speedup=%.2fx match=%s\n",
                  static_cast<unsigned long long>(r.steps), r.single_rate, r.window, r.batch_rate, r.speedup,
                  r.results_match ? "yes" : "no");
    os << buf;
  }
  emit(cfg, out, os.str());
  return r.results_match ? kExitOk : kExitCheckFailed;
}

inline ScanOptions scan_options(const RunConfig& cfg) {
  ScanOptions so;
  so.threads = cfg.threads;
  so.seed = cfg.seed;
  if (cfg.samples) {
    so.samples_per_shell = cfg.samples;
  } else if (!cfg.exhaustive && cfg.n_max > kSamplingThreshold) {
    so.samples_per_shell = std::uint64_t{1} << 20;
  }
  return so;
}

inline int run_density(const RunConfig& cfg, std::ostream& out) {
  const auto family = parse_family(cfg.family);
  if (!family) throw PreconditionError("--family: unknown family '" + cfg.family + "'");
  PredicateSpec spec;
  spec.family = *family;
  spec.epsilon = parse_param("epsilon", cfg.epsilon);
  if (!cfg.lambda.empty()) spec.lambda = parse_param("lambda", cfg.lambda);
  if (!cfg.alpha.empty()) spec.alpha = parse_param("alpha", cfg.alpha);
  spec.validate();
  const DensityReport rep = measure_density(spec, cfg.n_max, cfg.base, scan_options(cfg));
  emit(cfg, out, density_text(cfg, rep));
  return kExitOk;
}

inline int run_fit(const RunConfig& cfg, std::ostream& out) {
  std::ifstream in(cfg.input);
  if (!in) throw PreconditionError("--input: cannot open '" + cfg.input + "'");
  const auto shells = read_shells_csv(in);
  const StarFit fit = fit_star_density(std::span<const Shell>(shells));
  emit(cfg, out, to_json(fit).dump() + '\n');
  return kExitOk;
}

inline int run_hoeffding(const RunConfig& cfg, std::ostream& out) {
  const ExactRational eps = parse_param("epsilon", cfg.epsilon);
  const HoeffdingResult r = hoeffding_check(cfg.a, cfg.b, cfg.N, eps, cfg.threads);
  std::ostringstream os;
  if (json(cfg)) {
    nlohmann::ordered_json j{{"a", r.a},           {"b", r.b},         {"N", r.N},
                             {"epsilon", eps.str()}, {"deviating", r.deviating}, {"total", r.total},
                             {"empirical", r.empirical}, {"bound", r.bound}, {"pass", r.pass}};
    os << j.dump(2) << '\n';
  } else {
    char buf[256];
    std::snprintf(buf, sizeof buf, "hoeffding a=%llu b=%llu N=%llu eps=%s: %llu/%llu deviate, empirical %.12f, bound %.12f, %s\n",
                  static_cast<unsigned long long>(r.a), static_cast<unsigned long long>(r.b),
                  static_cast<unsigned long long>(r.N), eps.str().c_str(),
                  static_cast<unsigned long long>(r.deviating), static_cast<unsigned long long>(r.total), r.empirical,
                  r.bound, r.pass ? "pass" : "FAIL");
    os << buf;
  }
  emit(cfg, out, os.str());
  return r.pass ? kExitOk : kExitCheckFailed;
}

inline TauScanOptions tau_options(const RunConfig& cfg) {
  TauScanOptions o;
  o.budget = cfg.budget;
  o.threads = cfg.threads;
  return o;
}

inline int run_tau_avg(const RunConfig& cfg, std::ostream& out) {
  if (cfg.x < 2) throw PreconditionError("--x must be >= 2");
  auto cps = cfg.checkpoints.empty() ? default_checkpoints(cfg.x) : cfg.checkpoints;
  const auto rows = tau_average_checkpoints(cfg.x, cps, tau_options(cfg));
  std::ostringstream os;
  if (json(cfg)) {
    auto j = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
      j.push_back({{"x", r.x}, {"sum_tau", r.sum_tau}, {"normalized", r.normalized}, {"unresolved", r.unresolved}});
    }
    os << nlohmann::ordered_json{{"tau_convention", "T-steps"}, {"rows", j}}.dump(2) << '\n';
  } else {
    write_tau_csv(os, rows);
  }
  emit(cfg, out, os.str());
  return kExitOk;
}

inline int run_tau_exceed(const RunConfig& cfg, std::ostream& out) {
  const auto rep = tau_exceedance_density(parse_param("alpha", cfg.alpha), cfg.n_max, cfg.base, tau_options(cfg));
  std::string text = density_text(cfg, rep);
  if (!json(cfg)) text = std::string(kTauConvention) + '\n' + text;
  emit(cfg, out, text);
  return kExitOk;
}

inline int run_tau_hist(const RunConfig& cfg, std::ostream& out) {
  const auto h = tau_ratio_histogram(cfg.n_max, cfg.width, tau_options(cfg));
  std::ostringstream os;
  write_histogram_csv(os, h);
  emit(cfg, out, os.str());
  return kExitOk;
}

inline int run_tmin(const RunConfig& cfg, std::ostream& out) {
  const auto rep = tmin_threshold_density(parse_param("theta", cfg.theta), cfg.n_max, cfg.base, tau_options(cfg));
  emit(cfg, out, density_text(cfg, rep));
  return kExitOk;
}

}  // namespace detail

/// Parses argv and dispatches. Output goes to `out` unless --output is set.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  RunConfig cfg;
  CLI::App app{"Exact experiments on the 3x+1 map", "collatz_lab"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  auto common = [&cfg](CLI::App* sub) {
    sub->add_option("--threads", cfg.threads, "Worker threads (0 = all cores)");
    sub->add_option("--output,-o", cfg.output, "Write the result to this file");
    sub->add_option("--format", cfg.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--budget", cfg.budget, "Step budget per orbit")->check(CLI::PositiveNumber);
  };
  std::function<int()> action;
  auto bind = [&action](CLI::App* sub, std::function<int()> fn) {
    sub->callback([&action, fn] { action = fn; });
  };

  auto* orbit_cmd = app.add_subcommand("orbit", "Iterate one starting value");
  common(orbit_cmd);
  orbit_cmd->add_option("--m", cfg.m, "Starting value")->required();
  orbit_cmd->add_option("--map", cfg.map, "t, col or syr");
  orbit_cmd->add_option("--max-steps", cfg.max_steps, "Step limit");
  orbit_cmd->add_flag("--trace", cfg.trace, "Print every orbit value");
  bind(orbit_cmd, [&] { return detail::run_orbit(cfg, out); });

  auto* verify_cmd = app.add_subcommand("verify", "Bulk checks of the closed form");
  verify_cmd->require_subcommand(1);
  for (const char* which : {"closed-form", "split"}) {
    auto* sub = verify_cmd->add_subcommand(which, which == std::string("split") ? "Split identity for r_k"
                                                                                 : "Closed form and 0 <= r_k < 1");
    common(sub);
    sub->add_option("--m-max", cfg.m_max, "Largest starting value")->required();
    sub->add_option("--k-max", cfg.k_max, "Largest step count")->required();
    const std::string w = which;
    bind(sub, [&, w] { return detail::run_verify(cfg, out, w); });
  }

  auto* census_cmd = app.add_subcommand("census", "Parity-vector census over 2^n values");
  common(census_cmd);
  census_cmd->add_option("--n", cfg.n, "Vector length")->required();
  census_cmd->add_option("--interval-start", cfg.interval_start, "First value of the interval (default: residues)");
  bind(census_cmd, [&] { return detail::run_census(cfg, out); });

  auto* table_cmd = app.add_subcommand("table", "Affine step tables");
  table_cmd->require_subcommand(1);
  auto* build_cmd = table_cmd->add_subcommand("build", "Build (or load) and cache a table");
  common(build_cmd);
  build_cmd->add_option("--n", cfg.n, "Window")->required();
  build_cmd->add_option("--cache", cfg.cache, "Cache file (default: $COLLATZ_LAB_CACHE_DIR)");
  bind(build_cmd, [&] { return detail::run_table_build(cfg, out); });
  auto* bench_cmd = table_cmd->add_subcommand("bench", "Single-step vs batch throughput");
  common(bench_cmd);
  bench_cmd->add_option("--n", cfg.n, "Window")->required();
  bench_cmd->add_option("--count", cfg.count, "T-steps per method");
  bench_cmd->add_option("--seed", cfg.seed, "Seed for the starting values");
  bench_cmd->add_option("--cache", cfg.cache, "Cache file");
  bind(bench_cmd, [&] { return detail::run_table_bench(cfg, out); });

  auto* density_cmd = app.add_subcommand("density", "Shell densities of a predicate family");
  common(density_cmd);
  density_cmd->add_option("--family", cfg.family, "Predicate family, e.g. MAIN_T")->required();
  density_cmd->add_option("--epsilon", cfg.epsilon, "Epsilon (decimal or a/b)")->required();
  density_cmd->add_option("--lambda", cfg.lambda, "Lambda for REFORM_LAMBDA");
  density_cmd->add_option("--alpha", cfg.alpha, "Alpha for PARITY_WINDOW");
  density_cmd->add_option("--n-max", cfg.n_max, "Scan limit")->required();
  density_cmd->add_option("--base", cfg.base, "Shell base");
  density_cmd->add_flag("--cumulative", cfg.cumulative, "Emit the cumulative table");
  density_cmd->add_option("--samples", cfg.samples, "Sample this many values per shell");
  density_cmd->add_flag("--exhaustive", cfg.exhaustive, "Never sample, even above 2^26");
  density_cmd->add_option("--seed", cfg.seed, "Sampling seed");
  bind(density_cmd, [&] { return detail::run_density(cfg, out); });

  auto* fit_cmd = app.add_subcommand("fit", "Star-density fit of a shell CSV");
  common(fit_cmd);
  fit_cmd->add_option("--input", cfg.input, "Shell CSV from 'density'")->required();
  bind(fit_cmd, [&] { return detail::run_fit(cfg, out); });

  auto* hoeff_cmd = app.add_subcommand("hoeffding", "Parity concentration on [a, b)");
  common(hoeff_cmd);
  hoeff_cmd->add_option("--a", cfg.a, "Interval start")->required();
  hoeff_cmd->add_option("--b", cfg.b, "Interval end (exclusive)")->required();
  hoeff_cmd->add_option("--n", cfg.N, "Number of parities")->required();
  hoeff_cmd->add_option("--epsilon", cfg.epsilon, "Deviation")->required();
  bind(hoeff_cmd, [&] { return detail::run_hoeffding(cfg, out); });

  auto* tau_cmd = app.add_subcommand("tau", "Total stopping time statistics (T-steps)");
  tau_cmd->require_subcommand(1);
  auto* avg_cmd = tau_cmd->add_subcommand("avg", "Sum and normalized mean of tau up to x");
  common(avg_cmd);
  avg_cmd->add_option("--x", cfg.x, "Scan limit")->required();
  avg_cmd->add_option("--checkpoints", cfg.checkpoints, "Checkpoints (default: powers of 2 and 10)")->delimiter(',');
  bind(avg_cmd, [&] { return detail::run_tau_avg(cfg, out); });
  auto* exceed_cmd = tau_cmd->add_subcommand("exceed", "Density of tau(m) > alpha log2 m");
  common(exceed_cmd);
  exceed_cmd->add_option("--alpha", cfg.alpha, "Alpha")->required();
  exceed_cmd->add_option("--n-max", cfg.n_max, "Scan limit")->required();
  exceed_cmd->add_option("--base", cfg.base, "Shell base");
  exceed_cmd->add_flag("--cumulative", cfg.cumulative, "Emit the cumulative table");
  bind(exceed_cmd, [&] { return detail::run_tau_exceed(cfg, out); });
  auto* hist_cmd = tau_cmd->add_subcommand("hist", "Histogram of tau(m) / log2 m");
  common(hist_cmd);
  hist_cmd->add_option("--n-max", cfg.n_max, "Scan limit")->required();
  hist_cmd->add_option("--width", cfg.width, "Bucket width");
  bind(hist_cmd, [&] { return detail::run_tau_hist(cfg, out); });

  auto* tmin_cmd = app.add_subcommand("tmin", "Density of T_min(m) <= m^theta");
  common(tmin_cmd);
  tmin_cmd->add_option("--theta", cfg.theta, "Exponent")->required();
  tmin_cmd->add_option("--n-max", cfg.n_max, "Scan limit")->required();
  tmin_cmd->add_option("--base", cfg.base, "Shell base");
  tmin_cmd->add_flag("--cumulative", cfg.cumulative, "Emit the cumulative table");
  bind(tmin_cmd, [&] { return detail::run_tmin(cfg, out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, er;
    const int code = app.exit(e, o, er);
    out << o.str();
    err << er.str();
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    return action ? action() : kExitUsage;
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const TableSizeError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const FitUndefinedError& e) {
    err << "fit failed: " << e.what() << '\n';
    return kExitCheckFailed;
  } catch (const std::logic_error& e) {
    err << "check failed: " << e.what() << '\n';
    return kExitCheckFailed;
  }
}

}  // namespace collatz_lab::cli
