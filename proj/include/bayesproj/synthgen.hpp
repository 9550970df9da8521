#pragma once

// Synthetic snapshot streams: every cell b_ik of snapshot t is an independent
// Bernoulli draw from the active segment's seed probability. Draws come from a
// counter-based hash of (rng_seed, t, i, k), so output never depends on
// generation order or thread count.

#include <cstddef>
#include <cstdint>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "bayesproj/errors.hpp"
#include "bayesproj/parallel.hpp"
#include "bayesproj/snapshot.hpp"

namespace bayesproj {

class SeedMatrix {
 public:
  SeedMatrix() = default;
  SeedMatrix(std::size_t rows, std::size_t cols, std::vector<double> probabilities)
      : rows_(rows), cols_(cols), p_(std::move(probabilities)) {
    if (p_.size() != rows_ * cols_) throw ConfigError("seed matrix data does not match its shape");
    for (double v : p_) {
      if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("seed probability outside [0,1]: " + std::to_string(v));
    }
  }

  SeedMatrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    for (const auto& r : rows) {
      if (r.size() != cols_) throw ConfigError("ragged seed matrix");
      p_.insert(p_.end(), r.begin(), r.end());
    }
    *this = SeedMatrix(rows_, cols_, std::move(p_));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  // 0-based.
  double operator()(std::size_t i, std::size_t k) const { return p_[i * cols_ + k]; }
  const std::vector<double>& data() const noexcept { return p_; }

  friend bool operator==(const SeedMatrix&, const SeedMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> p_;
};

// Whitespace-separated numeric grid, one row per line; '#' starts a comment.
inline SeedMatrix parse_seed_matrix(std::istream& in) {
  std::vector<double> data;
  std::size_t rows = 0, cols = 0, line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::size_t n = 0;
    std::string tok;
    while (fields >> tok) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size()) throw ParseError(line_no, "not a number: '" + tok + "'");
      if (!(v >= 0.0 && v <= 1.0)) throw ParseError(line_no, "probability outside [0,1]: " + tok);
      data.push_back(v);
      ++n;
    }
    if (n == 0) continue;
    if (rows == 0) cols = n;
    if (n != cols) {
      throw ParseError(line_no, "expected " + std::to_string(cols) + " columns, found " + std::to_string(n));
    }
    ++rows;
  }
  if (rows == 0) throw ParseError(line_no, "seed matrix file has no rows");
  return SeedMatrix(rows, cols, std::move(data));
}

struct BuiltinSeeds {
  SeedMatrix template_matrix;
  SeedMatrix seed;
  SeedMatrix changepoint_seed;
};

// The 5x4 toy network: its 0/1 template, the noisy seed probabilities, and the
// post-changepoint seed in which pairs 1-4 and 2-5 take over.
inline const BuiltinSeeds& builtin_seeds() {
  static const BuiltinSeeds seeds{
      SeedMatrix{{1, 1, 0, 0}, {1, 1, 0, 0}, {1, 1, 1, 1}, {0, 0, 1, 1}, {0, 0, 1, 1}},
      SeedMatrix{{0.80, 0.90, 0.00, 0.00},
                 {0.90, 0.70, 0.00, 0.00},
                 {0.90, 0.80, 0.90, 0.90},
                 {0.00, 0.00, 0.80, 0.90},
                 {0.00, 0.00, 0.60, 0.90}},
      SeedMatrix{{0.90, 0.80, 0.00, 0.00},
                 {0.00, 0.00, 0.90, 0.90},
                 {0.80, 0.90, 0.80, 0.90},
                 {0.90, 0.80, 0.00, 0.00},
                 {0.00, 0.00, 0.90, 0.80}},
  };
  return seeds;
}

struct Segment {
  SeedMatrix seed;
  std::size_t duration = 0;
};

struct GeneratorConfig {
  std::vector<Segment> segments;
  std::uint64_t rng_seed = 0;
  StepIndex first_step = 1;

  void validate() const {
    if (segments.empty()) throw ConfigError("generator needs at least one segment");
    for (const auto& seg : segments) {
      if (seg.duration == 0) throw ConfigError("segment durations must be positive");
      if (seg.seed.rows() != segments.front().seed.rows() ||
          seg.seed.cols() != segments.front().seed.cols()) {
        throw ConfigError("segment seed matrices differ in dimensions");
      }
    }
    if (first_step < 0) throw ConfigError("first step must be nonnegative");
  }

  std::size_t total_steps() const {
    std::size_t n = 0;
    for (const auto& seg : segments) n += seg.duration;
    return n;
  }

  // Stationary stream of the given seed.
  static GeneratorConfig stationary(SeedMatrix seed, std::size_t steps, std::uint64_t rng_seed) {
    return {{{std::move(seed), steps}}, rng_seed, 1};
  }

  // `before` for steps [1, change_step), `after` for [change_step, total].
  static GeneratorConfig changepoint(SeedMatrix before, SeedMatrix after, StepIndex change_step,
                                     std::size_t total, std::uint64_t rng_seed) {
    if (change_step < 2 || std::size_t(change_step) > total) {
      throw ConfigError("changepoint step must lie in [2, total steps]");
    }
    const auto pre = std::size_t(change_step - 1);
    return {{{std::move(before), pre}, {std::move(after), total - pre}}, rng_seed, 1};
  }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// Uniform double in [0,1) keyed by (seed, t, i, k).
inline double counter_uniform(std::uint64_t seed, std::uint64_t t, std::uint64_t i, std::uint64_t k) {
  std::uint64_t h = detail::splitmix64(seed);
  h = detail::splitmix64(h ^ t);
  h = detail::splitmix64(h ^ i);
  h = detail::splitmix64(h ^ k);
  return double(h >> 11) * 0x1.0p-53;
}

// One snapshot drawn from `seed` at step t.
inline BipartiteSnapshot draw_snapshot(const SeedMatrix& seed, std::uint64_t rng_seed, StepIndex t) {
  std::vector<Link> links;
  for (std::size_t i = 0; i < seed.rows(); ++i) {
    for (std::size_t k = 0; k < seed.cols(); ++k) {
      if (counter_uniform(rng_seed, std::uint64_t(t), i, k) < seed(i, k)) {
        links.push_back({NodeIndex(i), NodeIndex(k)});
      }
    }
  }
  return BipartiteSnapshot::from_links(t, seed.rows(), seed.cols(), std::move(links));
}

// Snapshot n (0-based) of the stream described by config.
inline BipartiteSnapshot generate_step(const GeneratorConfig& config, std::size_t n) {
  std::size_t offset = n;
  for (const auto& seg : config.segments) {
    if (offset < seg.duration) {
      return draw_snapshot(seg.seed, config.rng_seed, config.first_step + StepIndex(n));
    }
    offset -= seg.duration;
  }
  throw std::out_of_range("step beyond generator stream");
}

inline std::vector<BipartiteSnapshot> generate(const GeneratorConfig& config, unsigned threads = 1) {
  config.validate();
  std::vector<BipartiteSnapshot> out(config.total_steps());
  parallel_for(out.size(), threads, [&](std::size_t n) { out[n] = generate_step(config, n); });
  return out;
}

}  // namespace bayesproj
