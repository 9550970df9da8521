#pragma once

// End-to-end runs on the 5x4 toy network: stationary streams from the builtin
// seed (pairs 1-2, 2-4 and 2-3) and the T=200 changepoint stream comparing the
// cumulative engine against the kappa filter bank.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "bayesproj/engine.hpp"
#include "bayesproj/filter_bank.hpp"
#include "bayesproj/synthgen.hpp"

namespace bayesproj {

// 1-based node labels, as pairs are named in the toy network.
using NodePair = std::pair<unsigned, unsigned>;

struct PairTrace {
  std::vector<double> mean_pi;  // index n is the posterior mean after step n+1
  std::vector<double> expected_w;
  std::vector<Count> w;
  std::vector<Count> x;

  void record(const ProjectionFrame& f, NodePair p) {
    const NodeIndex i = p.first - 1, j = p.second - 1;
    const FrameEntry* e = f.find(i, j);
    const PairPosterior post = e ? e->posterior : f.default_prior;
    const Count xx = e ? e->obs.opportunities : 0;
    mean_pi.push_back(posterior_mean(post));
    expected_w.push_back(expected_weight(post, xx));
    w.push_back(e ? e->obs.co_occurrences : 0);
    x.push_back(xx);
  }
};

// Called with every frame produced; `bank` is set for filter-bank frames.
using FrameSink = std::function<void(std::uint64_t rng_seed, const ProjectionFrame&, const BankStepResult* bank)>;

struct StationaryRun {
  std::uint64_t rng_seed = 0;
  std::map<NodePair, PairTrace> traces;
};

inline std::vector<std::uint64_t> seed_range(std::size_t count, std::uint64_t first = 1) {
  std::vector<std::uint64_t> s(count);
  std::iota(s.begin(), s.end(), first);
  return s;
}

// Cumulative engine over `steps` snapshots of the builtin seed, one run per rng seed.
inline std::vector<StationaryRun> stationary_experiment(std::span<const std::uint64_t> rng_seeds,
                                                        std::span<const NodePair> pairs, std::size_t steps = 100,
                                                        PairPosterior prior = {}, unsigned threads = 1,
                                                        const FrameSink& sink = {}) {
  std::vector<StationaryRun> runs;
  for (std::uint64_t rs : rng_seeds) {
    const auto cfg = GeneratorConfig::stationary(builtin_seeds().seed, steps, rs);
    ProjectionEngine engine(UpdateRule::cumulative(), prior, threads);
    StationaryRun run{rs, {}};
    for (std::size_t n = 0; n < steps; ++n) {
      const auto frame = engine.step(generate_step(cfg, n));
      for (NodePair p : pairs) run.traces[p].record(frame, p);
      if (sink) sink(rs, frame, nullptr);
    }
    runs.push_back(std::move(run));
  }
  return runs;
}

inline double mean_final(const std::vector<StationaryRun>& runs, NodePair p) {
  double s = 0.0;
  for (const auto& r : runs) s += r.traces.at(p).mean_pi.back();
  return runs.empty() ? 0.0 : s / double(runs.size());
}

struct ChangepointRun {
  std::uint64_t rng_seed = 0;
  std::map<NodePair, PairTrace> cumulative;
  std::map<NodePair, PairTrace> bank;  // selected candidate's frame at each step
  std::vector<double> selected_kappa;
  std::vector<std::vector<double>> bank_scores;  // [step][candidate], discounted cumulative
  std::vector<std::vector<double>> step_scores;  // [step][candidate]
};

struct ChangepointSettings {
  std::size_t total_steps = 200;
  StepIndex change_step = 101;
  std::vector<double> grid = default_kappa_grid();
  double discount = kDefaultScoreDiscount;
  PairPosterior prior;
  unsigned threads = 1;
};

inline const std::vector<NodePair>& changepoint_pairs() {
  static const std::vector<NodePair> p{{1, 2}, {1, 4}};
  return p;
}

// Runs the cumulative engine and the filter bank on identical streams that
// switch from the builtin seed to the changepoint seed at change_step.
inline std::vector<ChangepointRun> changepoint_experiment(std::span<const std::uint64_t> rng_seeds,
                                                          const ChangepointSettings& settings = {},
                                                          const FrameSink& cumulative_sink = {},
                                                          const FrameSink& bank_sink = {}) {
  const auto& seeds = builtin_seeds();
  std::vector<ChangepointRun> runs;
  for (std::uint64_t rs : rng_seeds) {
    const auto cfg = GeneratorConfig::changepoint(seeds.seed, seeds.changepoint_seed, settings.change_step,
                                                  settings.total_steps, rs);
    ProjectionEngine cumulative(UpdateRule::cumulative(), settings.prior, settings.threads);
    KappaFilterBank bank(settings.grid, settings.discount, settings.prior);
    ChangepointRun run;
    run.rng_seed = rs;
    for (std::size_t n = 0; n < settings.total_steps; ++n) {
      const auto snap = generate_step(cfg, n);
      const auto cf = cumulative.step(snap);
      const auto br = bank.step(snap, {settings.threads, nullptr});
      for (NodePair p : changepoint_pairs()) {
        run.cumulative[p].record(cf, p);
        run.bank[p].record(br.frame, p);
      }
      run.selected_kappa.push_back(br.selected_kappa);
      run.bank_scores.push_back(bank.log_scores());
      run.step_scores.push_back(br.step_scores);
      if (cumulative_sink) cumulative_sink(rs, cf, nullptr);
      if (bank_sink) bank_sink(rs, br.frame, &br);
    }
    runs.push_back(std::move(run));
  }
  return runs;
}

}  // namespace bayesproj
