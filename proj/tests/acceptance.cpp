// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Tolerances and calibrated thresholds are pinned below.

#include "collatz_lab/bench.hpp"
#include "collatz_lab/census.hpp"
#include "collatz_lab/cli.hpp"
#include "collatz_lab/closed_form.hpp"
#include "collatz_lab/density.hpp"
#include "collatz_lab/step_table.hpp"
#include "collatz_lab/stopping_stats.hpp"
#include "collatz_lab/verification.hpp"
#include "oracles.hpp"

#include <array>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace collatz_lab;

namespace {

// --- pinned thresholds -----------------------------------------------------

// Exhaustive MAIN_T member counts per shell [2^n, 2^(n+1)), frozen from the
// calibration scan.
constexpr std::array<std::uint64_t, 13> kMainT02Members{2,    7,     43,    80,    232,   398,  1263,
                                                        2041, 4677, 11098, 36837, 57081, 130167};  // n = 10..22
constexpr std::array<std::uint64_t, 15> kMainT01Members{0, 0, 0, 0, 0, 0, 0, 0,
                                                        0, 0, 0, 31, 37, 414, 1915};  // n = 10..24
// Below 2^23 the eps = 0.1 report has only two shells with any members, so
// its fit runs on the scan up to 2^25 - 1.
constexpr std::uint64_t kMainT01ScanLimit = (std::uint64_t{1} << 25) - 1;
constexpr std::uint64_t kMainT02ScanLimit = (std::uint64_t{1} << 23) - 1;

constexpr double kTauNormalizedFloor = 4.40;  // calibrated 4.406400715254 at x = 10^6
constexpr double kMinSpeedup = 8.0;           // n = 16 batch vs single step
constexpr double kBoundDigitsTolerance = 5e-13;

// --- reporting -------------------------------------------------------------

int failures = 0;

void report(const std::string& id, bool pass, const std::string& what, const std::string& detail) {
  std::printf("[%s] %s %s: %s\n", pass ? "PASS" : "FAIL", id.c_str(), what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

template <class Fn>
void criterion(const std::string& id, const std::string& what, Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool pass = false;
  try {
    pass = fn(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  char buf[32];
  std::snprintf(buf, sizeof buf, " [%.1fs]", secs);
  report(id, pass, what, detail + buf);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "collatz_lab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) throw std::runtime_error("cli exit " + std::to_string(code) + ": " + err.str());
  return out.str();
}

PredicateSpec main_t(const char* eps) {
  PredicateSpec s;
  s.family = Family::MainT;
  s.epsilon = ExactRational::parse(eps);
  return s;
}

// Complement fraction averaged over the 4-shell windows starting at n = 14..19
// must never increase.
bool trend_ok(const DensityReport& rep, std::string& detail) {
  auto comp = [&](unsigned n) {
    for (const auto& s : rep.shells) {
      if (s.n == n) return 1.0 - s.fraction;
    }
    throw std::runtime_error("missing shell " + std::to_string(n));
  };
  std::vector<double> w;
  for (unsigned start = 14; start + 3 <= 22; ++start) {
    w.push_back((comp(start) + comp(start + 1) + comp(start + 2) + comp(start + 3)) / 4);
  }
  bool ok = true;
  for (std::size_t i = 1; i < w.size(); ++i) ok = ok && w[i] <= w[i - 1];
  detail += "window means " + fmt("%.6f", w.front()) + " -> " + fmt("%.6f", w.back());
  return ok;
}

}  // namespace

int main() {
  std::printf("acceptance: exact identities, census, bounds and measured statistics\n");

  criterion("1", "closed form equals iterated T (m <= 10^4, k <= 200)", [](std::string& d) {
    const auto r = verify_closed_form_range(10'000, 200);
    // spot-check the bulk path against the term-by-term closed form
    std::uint64_t spot = 0;
    for (std::uint64_t m = 1; m <= 10'000; m += 997) {
      for (std::size_t k : {0, 1, 50, 200}) {
        spot += closed_form_iterate(BigInt(m), k) == oracle::t_iter(BigInt(m), k) ? 0 : 1;
      }
    }
    d = std::to_string(r.checked) + " cases, " + std::to_string(r.failures) + " mismatches, " + std::to_string(spot) +
        " spot mismatches";
    return r.ok() && r.checked == 10'000u * 201 && spot == 0;
  });

  criterion("2", "0 <= r_k < 1 (m <= 10^3, k <= 200) and split identity (k, k0 <= 50)", [](std::string& d) {
    const auto bounds = verify_remainder_bounds(1'000, 200);
    const auto split = verify_split_range(1'000, 50);
    std::uint64_t direct_bad = 0;
    for (std::uint64_t m = 1; m <= 40; ++m) {
      for (std::size_t k = 0; k <= 50; k += 5) {
        for (std::size_t k0 = 0; k0 <= 50; k0 += 5) direct_bad += verify_split_identity(BigInt(m), k, k0) ? 0 : 1;
      }
    }
    d = "bounds " + std::to_string(bounds.checked) + "/" + std::to_string(bounds.failures) + " failed, split " +
        std::to_string(split.checked) + "/" + std::to_string(split.failures) + " failed, direct " +
        std::to_string(direct_bad) + " failed";
    return bounds.ok() && split.ok() && split.checked == 1'000u * 51 * 51 && direct_bad == 0;
  });

  criterion("3", "parity census is a bijection for n <= 16 and n = 20", [](std::string& d) {
    bool ok = true;
    for (unsigned n = 0; n <= 16; ++n) ok = ok && parity_census(n).uniform;
    const auto c20 = parity_census(20, kHardMaxWindow);
    ok = ok && c20.uniform && c20.distinct == (1u << 20);
    d = "n=0..16 uniform, n=20: " + std::to_string(c20.distinct) + "/" + std::to_string(1u << 20) + " distinct";
    return ok;
  });

  criterion("4", "batch advance equals n single steps; n-table twice equals 2n-table", [](std::string& d) {
    std::mt19937_64 rng(2024);
    std::vector<BigInt> sample;
    for (int i = 0; i < 100'000; ++i) {
      std::uint64_t m = rng();
      sample.emplace_back(m == 0 ? 1 : m);
    }
    std::uint64_t bad = 0, checked = 0;
    for (unsigned n : {1u, 2u, 4u, 8u, 16u, 24u}) {
      const StepTable t = load_or_build_table(n, std::nullopt);
      for (const auto& m : sample) {
        ++checked;
        bad += t.advance(m) == oracle::t_iter(m, n) ? 0 : 1;
      }
    }
    std::uint64_t comp_bad = 0, comp_checked = 0;
    for (unsigned n = 1; n <= 12; ++n) {
      const StepTable half = build_table(n);
      const StepTable full = build_table(2 * n);
      for (std::uint64_t r = 0; r < full.size(); ++r) {
        const std::uint64_t rep = r == 0 ? (std::uint64_t{1} << (2 * n)) : r;
        const auto once = half.advance(rep);
        const auto twice = once ? half.advance(*once) : std::nullopt;
        const auto direct = full.advance(rep);
        ++comp_checked;
        comp_bad += (twice && direct && *twice == *direct) ? 0 : 1;
      }
    }
    d = std::to_string(checked) + " sampled advances (" + std::to_string(bad) + " bad), " +
        std::to_string(comp_checked) + " composed residues (" + std::to_string(comp_bad) + " bad)";
    return bad == 0 && comp_bad == 0;
  });

  criterion("5", "Hoeffding bound holds on the full grid; bound digits", [](std::string& d) {
    std::uint64_t cases = 0, violations = 0;
    for (const char* e : {"0.1", "0.25", "0.5"}) {
      const ExactRational eps = ExactRational::parse(e);
      for (unsigned j = 0; j <= 16; ++j) {
        const std::uint64_t b = (std::uint64_t{1} << j) + 1;
        for (unsigned N = 0; N <= j; ++N) {
          ++cases;
          violations += hoeffding_check(1, b, N, eps).pass ? 0 : 1;
        }
      }
    }
    const auto ref = hoeffding_check(1, (1u << 16) + 1, 16, ExactRational::parse("0.25"));
    const double expected = 0.541341132946;  // 4 e^-2 to 12 digits
    const bool digits = std::fabs(ref.bound - expected) < kBoundDigitsTolerance;
    d = std::to_string(cases) + " grid points, " + std::to_string(violations) + " violations; 4e^-2 = " +
        fmt("%.12f", ref.bound);
    return violations == 0 && digits;
  });

  criterion("6", "MAIN_T complement trend (n = 14..22) and star-density fit D > 0", [](std::string& d) {
    bool ok = true;
    // eps = 0.2
    const auto r02 = measure_density(main_t("0.2"), kMainT02ScanLimit, 2);
    for (unsigned n = 10; n <= 22; ++n) ok = ok && r02.shells[n].members == kMainT02Members[n - 10];
    d += "eps=0.2: counts " + std::string(ok ? "match" : "DIFFER") + ", ";
    ok = trend_ok(r02, d) && ok;
    std::vector<Shell> window02(r02.shells.begin() + 10, r02.shells.begin() + 23);
    const StarFit f02 = fit_star_density(window02);
    d += ", D=" + fmt("%.6g", f02.D);
    ok = ok && f02.D > 0;
    // eps = 0.1
    const auto r01 = measure_density(main_t("0.1"), kMainT01ScanLimit, 2);
    bool counts01 = true;
    for (unsigned n = 10; n <= 24; ++n) counts01 = counts01 && r01.shells[n].members == kMainT01Members[n - 10];
    d += "; eps=0.1: counts " + std::string(counts01 ? "match" : "DIFFER") + ", ";
    ok = trend_ok(r01, d) && ok && counts01;
    std::vector<Shell> window01(r01.shells.begin() + 10, r01.shells.begin() + 25);
    const StarFit f01 = fit_star_density(window01);
    d += ", D=" + fmt("%.6g", f01.D) + " over " + std::to_string(f01.shells_used) + " shells (n <= 24)";
    return ok && f01.D > 0;
  });

  criterion("7", "tau averages: zero unresolved, exact small sums, normalized floor", [](std::string& d) {
    const auto rows = tau_average_checkpoints(1'000'000, {10, 10'000, 100'000});
    std::uint64_t oracle_sum = 0;
    bool sums_ok = true;
    std::size_t next = 0;
    for (std::uint64_t m = 1; m <= 1'000'000; ++m) {
      oracle_sum += oracle::tau(m);
      if (next < rows.size() && rows[next].x == m) sums_ok = sums_ok && rows[next++].sum_tau == oracle_sum;
    }
    bool unresolved = false;
    for (const auto& r : rows) unresolved = unresolved || r.unresolved != 0;
    const auto& top = rows.back();
    // tau(1..10) = 0,1,5,2,4,6,11,3,13,5 by hand
    const bool ten = rows[0].x == 10 && rows[0].sum_tau == 50;
    d = "sum(10)=" + std::to_string(rows[0].sum_tau) + ", sum(10^6)=" + std::to_string(top.sum_tau) +
        ", normalized(10^6)=" + fmt("%.6f", top.normalized) + " (floor " + fmt("%.2f", kTauNormalizedFloor) +
        "), unresolved " + (unresolved ? "present" : "none") + ", oracle sums " + (sums_ok ? "match" : "DIFFER");
    return ten && sums_ok && !unresolved && next == rows.size() && top.normalized > kTauNormalizedFloor;
  });

  criterion("8", "tau(m) >= floor(log2 m) for all resolved m; tau(2^j) = j", [](std::string& d) {
    std::uint64_t violations = 0;
    for (std::uint64_t m = 1; m <= 1'000'000; ++m) {
      const auto t = tau(m);
      violations += (t && *t < bit_length(m) - 1) ? 1 : 0;
    }
    // every library scan asserts the bound; run one through checked_tau
    const auto h = tau_ratio_histogram(1'000'000, 0.25);
    std::uint64_t powers_bad = 0;
    for (unsigned j = 0; j <= 30; ++j) {
      powers_bad += tau(std::uint64_t{1} << j) == j ? 0 : 1;
      powers_bad += tau(pow2(j)) == j ? 0 : 1;
    }
    d = std::to_string(violations) + " violations up to 10^6, " + std::to_string(powers_bad) +
        " bad powers of two, histogram unresolved " + std::to_string(h.unresolved);
    return violations == 0 && powers_bad == 0 && h.unresolved == 0;
  });

  criterion("9", "n = 16 batch throughput >= 8x single step over 10^7 steps", [](std::string& d) {
    const StepTable t = load_or_build_table(16, std::nullopt);
    ThroughputReport best;
    for (int attempt = 0; attempt < 3; ++attempt) {
      const auto r = table_bench(t, 10'000'000, 1 + static_cast<std::uint64_t>(attempt));
      if (!r.results_match) {
        d = "batch and single-step results differ";
        return false;
      }
      if (r.speedup > best.speedup) best = r;
    }
    d = "speedup " + fmt("%.2f", best.speedup) + "x (single " + fmt("%.3g", best.single_rate) + " steps/s, batch " +
        fmt("%.3g", best.batch_rate) + " steps/s), threshold " + fmt("%.1f", kMinSpeedup) + "x";
    return best.steps >= 10'000'000 && best.speedup >= kMinSpeedup;
  });

  criterion("10", "scans with 1 vs many threads give byte-identical CSV", [](std::string& d) {
    const std::vector<std::vector<std::string>> cmds{
        {"density", "--family", "MAIN_T", "--epsilon", "0.2", "--n-max", "1048575"},
        {"density", "--family", "SECOND_MAIN_T", "--epsilon", "0.5", "--n-max", "200000", "--cumulative"},
        {"density", "--family", "PARITY_WINDOW", "--epsilon", "0.25", "--alpha", "0.5", "--n-max", "300000",
         "--base", "1.7"},
        {"tau", "avg", "--x", "1000000"},
        {"tau", "exceed", "--alpha", "4", "--n-max", "500000"},
        {"tmin", "--theta", "0.3", "--n-max", "500000"},
        {"tau", "hist", "--n-max", "300000"}};
    std::size_t same = 0;
    for (const auto& c : cmds) {
      auto one = c, many = c;
      one.insert(one.end(), {"--threads", "1"});
      many.insert(many.end(), {"--threads", "8"});
      same += run_cli(one) == run_cli(many) ? 1 : 0;
    }
    d = std::to_string(same) + "/" + std::to_string(cmds.size()) + " outputs identical";
    return same == cmds.size();
  });

  std::printf("acceptance: %d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
