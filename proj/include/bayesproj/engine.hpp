#pragma once

// Streaming one-mode projection: per snapshot, compute (w, x) for every pair
// with opportunities, fold them into that pair's Beta posterior, and report
// posterior means and expected weights.
//
// Pair records are materialized lazily, the first time a pair has x > 0.
// Pairs never materialized answer with the default prior.

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bayesproj/beta_binomial.hpp"
#include "bayesproj/cooccurrence.hpp"
#include "bayesproj/errors.hpp"
#include "bayesproj/parallel.hpp"
#include "bayesproj/snapshot.hpp"

namespace bayesproj {

class UpdateRule {
 public:
  static UpdateRule cumulative() { return UpdateRule(false, 1.0); }

  static UpdateRule mixed(double kappa) {
    if (!(kappa >= 0.0 && kappa <= 1.0)) {
      throw std::domain_error("kappa must lie in [0,1], got " + std::to_string(kappa));
    }
    return UpdateRule(true, kappa);
  }

  bool is_mixed() const noexcept { return mixed_; }
  double kappa() const noexcept { return kappa_; }

  PairPosterior apply(const PairPosterior& prior, const PairObservation& obs) const {
    return mixed_ ? update_mixed(prior, obs, kappa_) : update_cumulative(prior, obs);
  }

  friend bool operator==(const UpdateRule&, const UpdateRule&) = default;

 private:
  UpdateRule(bool mixed, double kappa) : mixed_(mixed), kappa_(kappa) {}

  bool mixed_;
  double kappa_;
};

// Materialized pair: posterior after the latest step and that step's counts
// (zero when the pair had no opportunities at the latest step).
struct PairState {
  PairObservation obs;
  PairPosterior posterior;

  friend bool operator==(const PairState&, const PairState&) = default;
};

struct EngineState {
  StepIndex current_step = 0;
  bool started = false;
  PairPosterior default_prior;
  PairTable<PairState> pairs;
  NodeRegistry nodes;

  EngineState() = default;
  explicit EngineState(PairPosterior prior) : default_prior(prior) {}

  friend bool operator==(const EngineState&, const EngineState&) = default;
};

struct FrameEntry {
  PairKey key;
  PairObservation obs;
  PairPosterior posterior;
  PosteriorSummary summary;
};

// Every materialized pair after step t, ordered by pair key.
struct ProjectionFrame {
  StepIndex t = 0;
  std::size_t node_count = 0;
  PairPosterior default_prior;
  std::vector<FrameEntry> entries;

  const FrameEntry* find(NodeIndex i, NodeIndex j) const {
    const PairKey key(i, j);
    auto it = std::lower_bound(entries.begin(), entries.end(), key,
                               [](const FrameEntry& e, PairKey k) { return e.key < k; });
    return (it != entries.end() && it->key == key) ? &*it : nullptr;
  }

  // Posterior for {i,j}, falling back to the default prior.
  PairPosterior posterior(NodeIndex i, NodeIndex j) const {
    const FrameEntry* e = find(i, j);
    return e ? e->posterior : default_prior;
  }

  double mean_pi(NodeIndex i, NodeIndex j) const { return posterior_mean(posterior(i, j)); }

  std::size_t active_count() const {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.obs.opportunities > 0;
    return n;
  }
};

struct StepOptions {
  unsigned threads = 1;
  // Identifiers for sources first seen in this snapshot; defaults to "index+1".
  const NodeRegistry* names = nullptr;
};

namespace detail {

inline void check_sequence(const EngineState& state, StepIndex t) {
  if (state.started && t != state.current_step + 1) {
    throw SequenceError("snapshot step " + std::to_string(t) + " does not follow step " +
                        std::to_string(state.current_step));
  }
}

inline void register_sources(EngineState& state, std::size_t count, const NodeRegistry* names) {
  while (state.nodes.size() < count) {
    const auto idx = static_cast<NodeIndex>(state.nodes.size());
    if (names && idx < names->size()) {
      state.nodes.intern(names->id(idx));
    } else {
      state.nodes.intern(std::to_string(idx + 1));
    }
  }
}

}  // namespace detail

// Folds one step's observations into the posterior table. Pairs absent from
// obs keep their posterior and have their latest-step counts reset to zero.
inline void apply_observations(EngineState& state, const PairTable<PairObservation>& obs,
                               const UpdateRule& rule, unsigned threads = 1) {
  using Entry = PairTable<PairState>::Entry;
  const auto& old = state.pairs.entries();
  std::vector<Entry> merged;
  merged.reserve(old.size() + obs.size());
  auto a = old.begin();
  auto b = obs.begin();
  while (a != old.end() || b != obs.end()) {
    if (b == obs.end() || (a != old.end() && a->key < b->key)) {
      merged.push_back({a->key, {PairObservation{}, a->value.posterior}});
      ++a;
    } else if (a == old.end() || b->key < a->key) {
      merged.push_back({b->key, {b->value, state.default_prior}});
      ++b;
    } else {
      merged.push_back({b->key, {b->value, a->value.posterior}});
      ++a, ++b;
    }
  }
  parallel_for(merged.size(), threads, [&](std::size_t n) {
    auto& ps = merged[n].value;
    if (ps.obs.opportunities > 0) ps.posterior = rule.apply(ps.posterior, ps.obs);
  });
  state.pairs = PairTable<PairState>::from_sorted_unchecked(std::move(merged));
}

inline ProjectionFrame make_frame(const EngineState& state) {
  ProjectionFrame frame;
  frame.t = state.current_step;
  frame.node_count = state.nodes.size();
  frame.default_prior = state.default_prior;
  frame.entries.reserve(state.pairs.size());
  for (const auto& [key, ps] : state.pairs) {
    frame.entries.push_back({key, ps.obs, ps.posterior, summarize(ps.posterior, ps.obs.opportunities)});
  }
  return frame;
}

// Prepares state for snapshot s: validates sequencing, registers new sources
// and returns the step's observations. State is untouched on error.
inline PairTable<PairObservation> begin_step(EngineState& state, const BipartiteSnapshot& s,
                                             const StepOptions& opts) {
  detail::check_sequence(state, s.t());
  auto obs = pair_observations(s, std::max(state.nodes.size(), s.source_count()), opts.threads);
  detail::register_sources(state, s.source_count(), opts.names);
  return obs;
}

inline void finish_step(EngineState& state, StepIndex t) {
  state.current_step = t;
  state.started = true;
}

inline ProjectionFrame step(EngineState& state, const BipartiteSnapshot& s, const UpdateRule& rule,
                            const StepOptions& opts = {}) {
  auto obs = begin_step(state, s, opts);
  apply_observations(state, obs, rule, opts.threads);
  finish_step(state, s.t());
  return make_frame(state);
}

struct PairQuery {
  PairPosterior posterior;
  PosteriorSummary summary;
};

inline PairQuery query_pair(const EngineState& state, NodeIndex i, NodeIndex j) {
  if (i >= state.nodes.size() || j >= state.nodes.size()) {
    throw LookupError("node index outside registry");
  }
  const PairKey key(i, j);
  if (const PairState* ps = state.pairs.find(key)) {
    return {ps->posterior, summarize(ps->posterior, ps->obs.opportunities)};
  }
  return {state.default_prior, summarize(state.default_prior, 0)};
}

inline PairQuery query_pair(const EngineState& state, std::string_view i, std::string_view j) {
  return query_pair(state, state.nodes.at(i), state.nodes.at(j));
}

// Owning wrapper for the common single-rule streaming loop.
class ProjectionEngine {
 public:
  explicit ProjectionEngine(UpdateRule rule, PairPosterior prior = {}, unsigned threads = 1)
      : rule_(rule), state_(prior), threads_(threads) {}

  ProjectionFrame step(const BipartiteSnapshot& s, const NodeRegistry* names = nullptr) {
    return bayesproj::step(state_, s, rule_, {threads_, names});
  }

  PairQuery query(std::string_view i, std::string_view j) const { return query_pair(state_, i, j); }

  const EngineState& state() const noexcept { return state_; }
  const UpdateRule& rule() const noexcept { return rule_; }

 private:
  UpdateRule rule_;
  EngineState state_;
  unsigned threads_;
};

}  // namespace bayesproj
