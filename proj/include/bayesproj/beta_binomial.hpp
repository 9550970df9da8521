#pragma once

// Closed-form Beta-Binomial mathematics for a single source pair.
//
// The latent attraction coefficient pi of a pair converts opportunities x
// (targets linked by either node) into co-occurrences w (targets linked by
// both) as w ~ Binomial(x, pi). A Beta(alpha, beta) belief over pi is
// conjugate to that likelihood, so every update is a pair of additions and
// every predictive query is a Beta-binomial evaluated in log space.

#include <cmath>
#include <cstdint>
#include <limits>
#include <math.h>
#include <stdexcept>
#include <string>

#include "bayesproj/errors.hpp"

namespace bayesproj {

using Count = std::uint32_t;

// Parameter floor used by update_mixed when a convex mix collapses to zero.
inline constexpr double kMixedFloor = 1e-3;

inline constexpr double kDefaultPriorAlpha = 10.0;
inline constexpr double kDefaultPriorBeta = 10.0;

// Beta(alpha, beta) belief over the attraction coefficient of one pair.
struct PairPosterior {
  double alpha = kDefaultPriorAlpha;
  double beta = kDefaultPriorBeta;

  PairPosterior() = default;
  PairPosterior(double a, double b) : alpha(a), beta(b) {
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
      throw std::domain_error("Beta parameters must be positive and finite (alpha=" +
                              std::to_string(a) + ", beta=" + std::to_string(b) + ")");
    }
  }

  friend bool operator==(const PairPosterior&, const PairPosterior&) = default;
};

// Counts observed for one pair in one snapshot.
struct PairObservation {
  Count co_occurrences = 0;  // w
  Count opportunities = 0;   // x

  PairObservation() = default;
  PairObservation(Count w, Count x) : co_occurrences(w), opportunities(x) {
    if (w > x) {
      throw std::domain_error("co-occurrences (" + std::to_string(w) + ") exceed opportunities (" +
                              std::to_string(x) + ")");
    }
  }

  Count misses() const noexcept { return opportunities - co_occurrences; }

  friend bool operator==(const PairObservation&, const PairObservation&) = default;
};

struct PosteriorSummary {
  double mean_pi = 0.5;     // E[pi]
  double expected_w = 0.0;  // E[w] for the pair's current opportunities

  friend bool operator==(const PosteriorSummary&, const PosteriorSummary&) = default;
};

namespace detail {

// glibc's lgamma writes the global signgam; the reentrant variant does not.
inline double log_gamma(double v) {
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(v, &sign);
#else
  return std::lgamma(v);
#endif
}

inline double log_beta_fn(double a, double b) {
  return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
}

inline double log_choose(Count n, Count k) {
  return log_gamma(double(n) + 1.0) - log_gamma(double(k) + 1.0) -
         log_gamma(double(n - k) + 1.0);
}

inline void require_counts(Count w, Count x) {
  if (w > x) {
    throw std::domain_error("w=" + std::to_string(w) + " exceeds x=" + std::to_string(x));
  }
}

}  // namespace detail

// log [ C(x,w) pi^w (1-pi)^(x-w) ]. Endpoint probabilities give -inf for
// impossible outcomes and 0 for certain ones.
inline double binomial_log_likelihood(Count w, Count x, double pi) {
  detail::require_counts(w, x);
  if (!(pi >= 0.0 && pi <= 1.0)) {
    throw std::domain_error("pi must lie in [0,1], got " + std::to_string(pi));
  }
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (x == 0) return 0.0;
  if (pi == 0.0) return w == 0 ? 0.0 : kNegInf;
  if (pi == 1.0) return w == x ? 0.0 : kNegInf;
  return detail::log_choose(x, w) + double(w) * std::log(pi) + double(x - w) * std::log1p(-pi);
}

// Maximum-likelihood baseline w/x. Undefined without opportunities.
inline double ml_estimate(Count w, Count x) {
  detail::require_counts(w, x);
  if (x == 0) throw UndefinedEstimate("ML estimate undefined for zero opportunities");
  return double(w) / double(x);
}

inline PairPosterior update_cumulative(const PairPosterior& prior, const PairObservation& obs) {
  return {prior.alpha + double(obs.co_occurrences), prior.beta + double(obs.misses())};
}

// Convex blend of prior pseudo-counts with the new counts. kappa = 1 keeps the
// prior, kappa = 0 keeps only the data.
inline PairPosterior update_mixed(const PairPosterior& prior, const PairObservation& obs,
                                  double kappa) {
  if (!(kappa >= 0.0 && kappa <= 1.0)) {
    throw std::domain_error("kappa must lie in [0,1], got " + std::to_string(kappa));
  }
  double a = kappa * prior.alpha + (1.0 - kappa) * double(obs.co_occurrences);
  double b = kappa * prior.beta + (1.0 - kappa) * double(obs.misses());
  if (a <= 0.0) a = kMixedFloor;
  if (b <= 0.0) b = kMixedFloor;
  return {a, b};
}

inline double posterior_mean(const PairPosterior& p) { return p.alpha / (p.alpha + p.beta); }

inline double expected_weight(const PairPosterior& p, Count x) {
  return double(x) * p.alpha / (p.alpha + p.beta);
}

inline PosteriorSummary summarize(const PairPosterior& p, Count x) {
  return {posterior_mean(p), expected_weight(p, x)};
}

// Log-density of Beta(alpha, beta) on the open interval (0,1).
inline double beta_log_pdf(double pi, const PairPosterior& p) {
  if (!(pi > 0.0 && pi < 1.0)) {
    throw std::domain_error("Beta density is evaluated on (0,1), got " + std::to_string(pi));
  }
  return (p.alpha - 1.0) * std::log(pi) + (p.beta - 1.0) * std::log1p(-pi) -
         detail::log_beta_fn(p.alpha, p.beta);
}

// Posterior predictive log P(w | x, alpha, beta) with pi integrated out.
inline double beta_binomial_log_pmf(Count w, Count x, const PairPosterior& p) {
  detail::require_counts(w, x);
  if (x == 0) return 0.0;
  return detail::log_choose(x, w) +
         detail::log_beta_fn(double(w) + p.alpha, double(x - w) + p.beta) -
         detail::log_beta_fn(p.alpha, p.beta);
}

}  // namespace bayesproj
