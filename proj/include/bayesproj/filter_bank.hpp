#pragma once

// Bank of mixed-update engines, one per forgetting coefficient kappa. Each
// candidate is scored by the posterior-predictive log-probability of every
// incoming pair observation, evaluated before that candidate absorbs it, and
// the candidate with the best discounted cumulative score is selected.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "bayesproj/beta_binomial.hpp"
#include "bayesproj/engine.hpp"
#include "bayesproj/errors.hpp"
#include "bayesproj/parallel.hpp"

namespace bayesproj {

inline const std::vector<double>& default_kappa_grid() {
  static const std::vector<double> grid{0.8, 0.9, 0.95, 0.99, 1.0};
  return grid;
}

inline constexpr double kDefaultScoreDiscount = 0.98;

// Sum over observed pairs of log P(w | x, current posterior).
inline double predictive_log_score(const EngineState& state, const PairTable<PairObservation>& obs) {
  double total = 0.0;
  const auto& posts = state.pairs.entries();
  auto p = posts.begin();
  for (const auto& [key, o] : obs) {
    while (p != posts.end() && p->key < key) ++p;
    const PairPosterior& post = (p != posts.end() && p->key == key) ? p->value.posterior : state.default_prior;
    total += beta_binomial_log_pmf(o.co_occurrences, o.opportunities, post);
  }
  return total;
}

// Index of the maximum score; ties go to the lowest index (smallest kappa).
inline std::size_t select_best(const std::vector<double>& scores) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < scores.size(); ++c) {
    if (scores[c] > scores[best]) best = c;
  }
  return best;
}

struct BankStepResult {
  std::size_t selected = 0;
  double selected_kappa = 1.0;
  std::vector<double> step_scores;  // this step's predictive log-score per candidate
  ProjectionFrame frame;            // from the selected candidate
};

class KappaFilterBank {
 public:
  explicit KappaFilterBank(std::vector<double> candidates = default_kappa_grid(),
                           double score_discount = kDefaultScoreDiscount, PairPosterior prior = {})
      : candidates_(std::move(candidates)), discount_(score_discount) {
    if (candidates_.empty()) throw ConfigError("filter bank needs at least one kappa candidate");
    for (std::size_t c = 0; c < candidates_.size(); ++c) {
      const double k = candidates_[c];
      if (!(k >= 0.0 && k <= 1.0)) throw ConfigError("kappa candidate outside [0,1]: " + std::to_string(k));
      if (c > 0 && !(candidates_[c - 1] < k)) throw ConfigError("kappa candidates must be strictly increasing");
    }
    if (!(discount_ > 0.0 && discount_ <= 1.0)) {
      throw ConfigError("score discount must lie in (0,1], got " + std::to_string(discount_));
    }
    states_.assign(candidates_.size(), EngineState(prior));
    log_scores_.assign(candidates_.size(), 0.0);
  }

  BankStepResult step(const BipartiteSnapshot& s, const StepOptions& opts = {}) {
    // All candidates share node registry growth and step sequencing, so the
    // observations are computed once.
    auto obs = begin_step(states_.front(), s, opts);
    for (std::size_t c = 1; c < states_.size(); ++c) {
      detail::check_sequence(states_[c], s.t());
      detail::register_sources(states_[c], s.source_count(), opts.names);
    }

    BankStepResult result;
    result.step_scores.assign(candidates_.size(), 0.0);
    // Candidates run in parallel; each one's pair updates stay single-threaded.
    parallel_for(candidates_.size(), opts.threads, [&](std::size_t c) {
      result.step_scores[c] = predictive_log_score(states_[c], obs);
      apply_observations(states_[c], obs, UpdateRule::mixed(candidates_[c]), 1);
      finish_step(states_[c], s.t());
    });
    for (std::size_t c = 0; c < candidates_.size(); ++c) {
      log_scores_[c] = discount_ * log_scores_[c] + result.step_scores[c];
    }
    result.selected = select_best(log_scores_);
    result.selected_kappa = candidates_[result.selected];
    result.frame = make_frame(states_[result.selected]);
    return result;
  }

  const std::vector<double>& candidates() const noexcept { return candidates_; }
  const std::vector<double>& log_scores() const noexcept { return log_scores_; }
  double score_discount() const noexcept { return discount_; }
  const EngineState& state(std::size_t c) const { return states_.at(c); }
  std::size_t selected() const { return select_best(log_scores_); }

 private:
  std::vector<double> candidates_;
  double discount_;
  std::vector<EngineState> states_;
  std::vector<double> log_scores_;
};

inline BankStepResult bank_step(KappaFilterBank& bank, const BipartiteSnapshot& s,
                                const StepOptions& opts = {}) {
  return bank.step(s, opts);
}

}  // namespace bayesproj
