// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <fmt/core.h>

#include "bayesproj/bayesproj.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace bayesproj;
namespace fs = std::filesystem;

namespace {

// Tolerances and bands.
constexpr std::size_t kSeeds = 20;
constexpr double kPi12Lo = 0.644, kPi12Hi = 0.704;
constexpr double kPi24Lo = 0.019, kPi24Hi = 0.039;
constexpr double kPi23Lo = 0.344, kPi23Hi = 0.404;
constexpr double kStationaryBudgetSec = 5.0;
constexpr double kConjugacyTol = 1e-6;
constexpr double kConjugacyBudgetSec = 10.0;
constexpr double kNormalizationTol = 1e-9;
constexpr double kBankAboveFraction = 0.9;
constexpr double kPerfBudgetSec = 30.0;
// Peak resident set allowed for the perf run: fixed overhead plus a per-pair allowance.
constexpr double kBaseRssBytes = 64.0 * 1024 * 1024;
constexpr double kRssBytesPerPair = 256.0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void report(int id, bool ok, const std::string& what) {
  std::printf("%s  criterion %2d  %s\n", ok ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

const std::vector<NodePair> kStationaryPairs{{1, 2}, {2, 4}, {2, 3}};

void stationary_criteria() {
  const auto start = Clock::now();
  const auto runs = stationary_experiment(seed_range(kSeeds), kStationaryPairs);
  const double elapsed = seconds_since(start);

  const double pi12 = mean_final(runs, {1, 2});
  report(1, pi12 >= kPi12Lo && pi12 <= kPi12Hi && elapsed < kStationaryBudgetSec,
         fmt::format("mean final E[pi_12] = {:.4f} in [{}, {}], {} seeds, {:.2f} s (< {} s)", pi12, kPi12Lo, kPi12Hi,
                     kSeeds, elapsed, kStationaryBudgetSec));

  const double pi24 = mean_final(runs, {2, 4});
  report(2, pi24 >= kPi24Lo && pi24 <= kPi24Hi,
         fmt::format("mean final E[pi_24] = {:.4f} in [{}, {}]", pi24, kPi24Lo, kPi24Hi));

  const double pi23 = mean_final(runs, {2, 3});
  std::size_t below = 0;
  for (const auto& r : runs) below += r.traces.at({2, 3}).mean_pi.back() < r.traces.at({1, 2}).mean_pi.back();
  report(3, pi23 >= kPi23Lo && pi23 <= kPi23Hi && below == runs.size(),
         fmt::format("mean final E[pi_23] = {:.4f} in [{}, {}], below E[pi_12] in {}/{} seeds", pi23, kPi23Lo,
                     kPi23Hi, below, runs.size()));
}

void conjugacy_criterion() {
  const auto start = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> par(1.0, 20.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const double a = par(rng), b = par(rng);
    const unsigned x = std::uniform_int_distribution<unsigned>(0, 20)(rng);
    const unsigned w = std::uniform_int_distribution<unsigned>(0, x)(rng);
    const auto post = update_cumulative({a, b}, {w, x});
    const auto grid = oracle::quadrature_posterior(a, b, w, x, 10001);
    for (std::size_t m = 1; m + 1 < grid.grid.size(); ++m) {
      const double expected = std::exp(beta_log_pdf(grid.grid[m], post));
      worst = std::max(worst, std::fabs(grid.density[m] - expected) / std::max(1.0, expected));
    }
  }
  const double elapsed = seconds_since(start);
  report(4, worst <= kConjugacyTol && elapsed < kConjugacyBudgetSec,
         fmt::format("100 tuples, max pointwise deviation {:.2e} (<= {:.0e}), {:.2f} s (< {} s)", worst,
                     kConjugacyTol, elapsed, kConjugacyBudgetSec));
}

void normalization_criterion() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> par(0.1, 50.0);
  std::vector<PairPosterior> params;
  for (int n = 0; n < 20; ++n) params.push_back({par(rng), par(rng)});
  double worst = 0.0;
  for (unsigned x : {0u, 1u, 10u, 1000u, 10000u}) {
    for (const auto& p : params) {
      double total = 0.0;
      for (unsigned w = 0; w <= x; ++w) total += std::exp(beta_binomial_log_pmf(w, x, p));
      worst = std::max(worst, std::fabs(total - 1.0));
    }
  }
  report(5, worst <= kNormalizationTol,
         fmt::format("x in {{0,1,10,1e3,1e4}} x 20 parameter pairs, max |sum - 1| = {:.2e} (<= {:.0e})", worst,
                     kNormalizationTol));
}

void brute_force_criterion() {
  std::mt19937_64 rng(606);
  int mismatches = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(2, 50)(rng);
    const std::size_t k = std::uniform_int_distribution<std::size_t>(1, 50)(rng);
    const auto dense = oracle::random_dense(n, k, std::uniform_real_distribution<double>(0.0, 0.5)(rng), rng);
    const auto s = testutil::to_snapshot(dense);
    const auto expected_w = oracle::brute_cooccurrence(dense);
    const auto w = co_occurrences(s);
    bool ok = w.size() == expected_w.size();
    for (const auto& [key, v] : w) {
      const auto it = expected_w.find({key.lo(), key.hi()});
      ok = ok && it != expected_w.end() && it->second == v;
    }
    std::vector<PairKey> all;
    for (NodeIndex i = 0; i < n; ++i)
      for (NodeIndex j = i + 1; j < n; ++j) all.emplace_back(i, j);
    const auto x = opportunities(s, all);
    for (const auto& [key, v] : x) ok = ok && v == oracle::brute_opportunities(dense, key.lo(), key.hi());
    ok = ok && x.size() == all.size();
    mismatches += !ok;
  }
  report(6, mismatches == 0, fmt::format("50 random snapshots (N, K <= 50), {} mismatches", mismatches));
}

void saturation_criterion() {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> par(0.5, 40.0);
  int violations = 0;
  for (int trial = 0; trial < 50; ++trial) {
    PairPosterior p{par(rng), par(rng)};
    const unsigned x = std::uniform_int_distribution<unsigned>(1, 10)(rng);
    const unsigned w = std::uniform_int_distribution<unsigned>(0, x)(rng);
    double prev_mean = posterior_mean(p), prev_step = INFINITY;
    bool ok = true;
    for (int n = 0; n < 30; ++n) {
      p = update_cumulative(p, {w, x});
      const double step = std::fabs(posterior_mean(p) - prev_mean);
      ok = ok && step < prev_step;
      prev_step = step;
      prev_mean = posterior_mean(p);
    }
    violations += !ok;
  }
  report(7, violations == 0,
         fmt::format("50 random starting points, 30 identical updates each, {} violations", violations));
}

void changepoint_criterion() {
  const auto runs = changepoint_experiment(seed_range(kSeeds));
  std::size_t above = 0;
  double cum = 0, bank = 0;
  for (const auto& r : runs) {
    const double c = r.cumulative.at({1, 4}).mean_pi.back();
    const double b = r.bank.at({1, 4}).mean_pi.back();
    above += c < b;
    cum += c, bank += b;
  }
  const double frac = double(above) / double(runs.size());
  report(8, frac >= kBankAboveFraction,
         fmt::format("cumulative E[pi_14](200) < bank in {}/{} seeds (>= {:.0f}%), means {:.3f} vs {:.3f}", above,
                     runs.size(), 100 * kBankAboveFraction, cum / double(runs.size()), bank / double(runs.size())));
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(BAYESPROJ_CLI_PATH) + " " + args;
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void performance_criterion() {
  constexpr std::size_t kSources = 1000, kTargets = 500, kSteps = 50;
  constexpr double kDensity = 0.05;
  const fs::path dir = fs::temp_directory_path() / ("bayesproj_perf_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);

  std::mt19937_64 rng(12345);
  std::bernoulli_distribution on(kDensity);
  std::size_t links = 0;
  {
    std::ofstream f(dir / "stream.tsv", std::ios::binary);
    std::string buf;
    for (std::size_t t = 1; t <= kSteps; ++t) {
      for (std::size_t i = 1; i <= kSources; ++i) {
        for (std::size_t k = 1; k <= kTargets; ++k) {
          if (!on(rng)) continue;
          buf += fmt::format("{}\ts{}\tt{}\n", t, i, k);
          ++links;
        }
      }
    }
    f << buf;
  }

  const auto start = Clock::now();
  const int rc = run_cli("project --mode cumulative --in " + (dir / "stream.tsv").string() + " --out " +
                         (dir / "out").string());
  const double elapsed = seconds_since(start);
  rusage usage{};
  getrusage(RUSAGE_CHILDREN, &usage);
  const double peak_rss = double(usage.ru_maxrss) * 1024.0;

  // Every pair with at least one active endpoint at some step gets materialized.
  std::size_t active_pairs = 0;
  {
    const auto stream = [&] {
      std::ifstream in(dir / "stream.tsv");
      return parse_snapshots(in);
    }();
    EngineState state;
    std::vector<char> ever(kSources * kSources, 0);
    for (const auto& s : stream.snapshots) {
      for (NodeIndex i = 0; i < s.source_count(); ++i) {
        if (s.degree(i) == 0) continue;
        for (NodeIndex j = 0; j < stream.sources.size(); ++j) {
          if (j != i) ever[std::size_t(std::min(i, j)) * kSources + std::max(i, j)] = 1;
        }
      }
    }
    for (char c : ever) active_pairs += c;
  }
  const double rss_limit = kBaseRssBytes + kRssBytesPerPair * double(active_pairs);
  fs::remove_all(dir);

  report(9, rc == 0 && elapsed < kPerfBudgetSec && peak_rss <= rss_limit,
         fmt::format("N={} K={} T={} density {:.0f}% ({} links): exit {}, {:.1f} s (< {} s), peak RSS {:.0f} MiB "
                     "(<= {:.0f} MiB for {} active pairs)",
                     kSources, kTargets, kSteps, 100 * kDensity, links, rc, elapsed, kPerfBudgetSec,
                     peak_rss / 1048576, rss_limit / 1048576, active_pairs));
}

// Serialized exports of the stationary and changepoint experiments.
std::string stationary_export(unsigned threads) {
  std::string out;
  const NodeRegistry names = numbered_registry(5);
  const FrameSink sink = [&](std::uint64_t rs, const ProjectionFrame& f, const BankStepResult*) {
    std::ostringstream s;
    s << "# seed " << rs << '\n';
    write_pair_records(s, f, names, {});
    out += s.str();
  };
  stationary_experiment(seed_range(kSeeds), kStationaryPairs, 100, {}, threads, sink);
  return out;
}

std::string changepoint_export(unsigned threads) {
  std::string out;
  const NodeRegistry names = numbered_registry(5);
  ChangepointSettings settings;
  settings.threads = threads;
  const FrameSink cumulative = [&](std::uint64_t rs, const ProjectionFrame& f, const BankStepResult*) {
    std::ostringstream s;
    s << "# cumulative seed " << rs << '\n';
    write_pair_records(s, f, names, {});
    out += s.str();
  };
  const FrameSink bank = [&](std::uint64_t rs, const ProjectionFrame& f, const BankStepResult* r) {
    std::ostringstream s;
    s << "# bank seed " << rs << '\n';
    write_pair_records(s, f, names, {});
    write_score_row(s, f.t, *r, r->step_scores);
    out += s.str();
  };
  changepoint_experiment(seed_range(kSeeds), settings, cumulative, bank);
  return out;
}

void determinism_criterion() {
  const std::string s1 = stationary_export(1);
  const bool stationary_ok = !s1.empty() && stationary_export(1) == s1 && stationary_export(4) == s1;
  const std::string c1 = changepoint_export(1);
  const bool changepoint_ok = !c1.empty() && changepoint_export(1) == c1 && changepoint_export(4) == c1;
  report(10, stationary_ok && changepoint_ok,
         fmt::format("byte-identical exports, repeated and threads 1 vs 4: stationary {} ({} bytes), "
                     "changepoint {} ({} bytes)",
                     stationary_ok ? "identical" : "DIFFER", s1.size(), changepoint_ok ? "identical" : "DIFFER",
                     c1.size()));
}

}  // namespace

int main() {
  try {
    stationary_criteria();
    conjugacy_criterion();
    normalization_criterion();
    brute_force_criterion();
    saturation_criterion();
    changepoint_criterion();
    performance_criterion();
    determinism_criterion();
  } catch (const std::exception& e) {
    std::printf("FAIL  aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%s: %d failing criteria\n", failures ? "FAILED" : "ALL PASSED", failures);
  return failures ? 1 : 0;
}
