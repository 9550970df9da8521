#pragma once

// Text formats:
//   snapshots     t<TAB>source_id<TAB>target_id, '#' comment lines, t nondecreasing
//   pairs.tsv     header + one line per pair with opportunities at step t
//   pi_<t>.tsv    dense symmetric E[pi] matrix, diagonal "NA"
//   scores.tsv    filter-bank selection and per-candidate scores per step
//   run.json      run manifest (mode, prior, steps, source ids)
// Reals are written with 6 significant digits.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <iterator>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "bayesproj/beta_binomial.hpp"
#include "bayesproj/engine.hpp"
#include "bayesproj/errors.hpp"
#include "bayesproj/filter_bank.hpp"
#include "bayesproj/snapshot.hpp"

namespace bayesproj {

struct SnapshotStream {
  NodeRegistry sources;
  NodeRegistry targets;
  std::vector<BipartiteSnapshot> snapshots;
};

namespace detail {

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

inline double parse_real(std::string_view s, std::size_t line, std::string_view field) {
  double v = 0.0;
  if (!parse_number(s, v)) {
    throw ParseError(line, "invalid " + std::string(field) + " '" + std::string(s) + "'");
  }
  return v;
}

// %.6g rendering, shared by every numeric output column.
inline void append_real(std::string& buf, double v) {
  char tmp[32];
  // Integral values under 1e6 print identically as integers.
  if (v >= 0.0 && v < 1e6 && v == double(std::int64_t(v)) && !std::signbit(v)) {
    const auto r = std::to_chars(tmp, tmp + sizeof tmp, std::int64_t(v));
    buf.append(tmp, r.ptr);
    return;
  }
  const auto r = std::to_chars(tmp, tmp + sizeof tmp, v, std::chars_format::general, 6);
  buf.append(tmp, r.ptr);
}

template <typename Int>
void append_int(std::string& buf, Int v) {
  char tmp[24];
  const auto r = std::to_chars(tmp, tmp + sizeof tmp, v);
  buf.append(tmp, r.ptr);
}

inline void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace detail

// Groups edge-list records by step. Duplicate records collapse; steps missing
// between the first and last are filled with empty snapshots.
inline SnapshotStream parse_snapshots(std::istream& in) {
  SnapshotStream out;
  std::vector<Link> pending;
  std::optional<StepIndex> current;

  auto flush = [&] {
    out.snapshots.push_back(BipartiteSnapshot::from_links(*current, out.sources.size(),
                                                          out.targets.size(), std::move(pending)));
    pending.clear();
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (line.empty() || line.front() == '#') continue;
    const auto fields = detail::split_tabs(line);
    if (fields.size() != 3) {
      throw ParseError(line_no, "expected 3 tab-separated fields, found " + std::to_string(fields.size()));
    }
    StepIndex t = 0;
    if (!detail::parse_number(fields[0], t) || t < 0) {
      throw ParseError(line_no, "invalid step index '" + std::string(fields[0]) + "'");
    }
    if (fields[1].empty() || fields[2].empty()) throw ParseError(line_no, "empty node identifier");
    if (current && t < *current) {
      throw SequenceError("line " + std::to_string(line_no) + ": step " + std::to_string(t) +
                          " after step " + std::to_string(*current));
    }
    if (current && t > *current) {
      flush();
      for (StepIndex gap = *current + 1; gap < t; ++gap) {
        out.snapshots.push_back(BipartiteSnapshot::empty(gap, out.sources.size(), out.targets.size()));
      }
    }
    current = t;
    pending.push_back({out.sources.intern(fields[1]), out.targets.intern(fields[2])});
  }
  if (current) flush();
  return out;
}

inline SnapshotStream parse_snapshots(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_snapshots(in);
}

inline void write_snapshots(std::ostream& out, std::span<const BipartiteSnapshot> snapshots,
                            const NodeRegistry& sources, const NodeRegistry& targets) {
  std::string buf;
  for (const auto& s : snapshots) {
    for (NodeIndex i = 0; i < s.source_count(); ++i) {
      for (NodeIndex k : s.targets_of(i)) {
        fmt::format_to(std::back_inserter(buf), "{}\t{}\t{}\n", s.t(), sources.id(i), targets.id(k));
      }
    }
    if (buf.size() > (1u << 20)) {
      out.write(buf.data(), std::streamsize(buf.size()));
      buf.clear();
    }
  }
  out.write(buf.data(), std::streamsize(buf.size()));
}

inline void write_snapshots(std::ostream& out, const SnapshotStream& stream) {
  write_snapshots(out, stream.snapshots, stream.sources, stream.targets);
}

// Registry with identifiers "1".."n".
inline NodeRegistry numbered_registry(std::size_t n) {
  NodeRegistry r;
  for (std::size_t i = 0; i < n; ++i) r.intern(std::to_string(i + 1));
  return r;
}

// ---------------------------------------------------------------------------
// Run configuration

struct CumulativeMode {};
struct MixedMode {
  double kappa = 1.0;
};
struct BankMode {
  std::vector<double> grid = default_kappa_grid();
  double discount = kDefaultScoreDiscount;
};
using RunMode = std::variant<CumulativeMode, MixedMode, BankMode>;

enum class OutputFormat { pair_records, dense };

struct StatFlags {
  bool alpha = true;
  bool beta = true;
  bool mean_pi = true;
  bool expected_w = true;
  bool scores = true;

  friend bool operator==(const StatFlags&, const StatFlags&) = default;
};

struct RunConfig {
  PairPosterior prior;
  RunMode mode = CumulativeMode{};
  OutputFormat format = OutputFormat::pair_records;
  StatFlags stats;
  unsigned threads = 1;
};

// "cumulative", "mixed:<kappa>" or "bank:<k1>,<k2>,...".
inline RunMode parse_mode(std::string_view spec, double discount = kDefaultScoreDiscount) {
  auto parse_kappa = [](std::string_view s) {
    double v = 0.0;
    if (!detail::parse_number(s, v)) throw ConfigError("invalid kappa '" + std::string(s) + "'");
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("kappa outside [0,1]: " + std::string(s));
    return v;
  };
  if (spec == "cumulative") return CumulativeMode{};
  if (spec.starts_with("mixed:")) return MixedMode{parse_kappa(spec.substr(6))};
  if (spec.starts_with("bank")) {
    BankMode bank;
    bank.discount = discount;
    if (spec.size() > 4) {
      if (spec[4] != ':') throw ConfigError("unknown mode '" + std::string(spec) + "'");
      bank.grid.clear();
      std::string_view rest = spec.substr(5);
      while (true) {
        const auto comma = rest.find(',');
        bank.grid.push_back(parse_kappa(rest.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
      }
    }
    return bank;
  }
  throw ConfigError("unknown mode '" + std::string(spec) + "'");
}

inline std::string mode_name(const RunMode& mode) {
  if (std::holds_alternative<CumulativeMode>(mode)) return "cumulative";
  if (auto* m = std::get_if<MixedMode>(&mode)) return fmt::format("mixed:{:.6g}", m->kappa);
  const auto& b = std::get<BankMode>(mode);
  std::string s = "bank:";
  for (std::size_t c = 0; c < b.grid.size(); ++c) s += fmt::format("{}{:.6g}", c ? "," : "", b.grid[c]);
  return s;
}

// Comma-separated subset of pi,w,alpha,beta,scores.
inline StatFlags parse_stat_flags(std::string_view list) {
  StatFlags f{false, false, false, false, false};
  while (!list.empty()) {
    const auto comma = list.find(',');
    const auto name = list.substr(0, comma);
    if (name == "alpha") f.alpha = true;
    else if (name == "beta") f.beta = true;
    else if (name == "pi") f.mean_pi = true;
    else if (name == "w") f.expected_w = true;
    else if (name == "scores") f.scores = true;
    else throw ConfigError("unknown statistic '" + std::string(name) + "'");
    if (comma == std::string_view::npos) break;
    list = list.substr(comma + 1);
  }
  return f;
}

// ---------------------------------------------------------------------------
// Frame export

inline void write_pair_header(std::ostream& out, const StatFlags& stats) {
  std::string h = "t\ti\tj\tw\tx";
  if (stats.alpha) h += "\talpha";
  if (stats.beta) h += "\tbeta";
  if (stats.mean_pi) h += "\tmean_pi";
  if (stats.expected_w) h += "\texpected_w";
  h += '\n';
  out << h;
}

// One line per pair with opportunities at frame.t, in pair-key order.
inline void write_pair_records(std::ostream& out, const ProjectionFrame& frame, const NodeRegistry& nodes,
                               const StatFlags& stats) {
  std::string buf;
  std::string prefix;
  detail::append_int(prefix, frame.t);
  prefix.push_back('\t');
  for (const auto& e : frame.entries) {
    if (e.obs.opportunities == 0) continue;
    buf += prefix;
    buf += nodes.id(e.key.lo());
    buf.push_back('\t');
    buf += nodes.id(e.key.hi());
    buf.push_back('\t');
    detail::append_int(buf, e.obs.co_occurrences);
    buf.push_back('\t');
    detail::append_int(buf, e.obs.opportunities);
    auto column = [&](bool on, double v) {
      if (!on) return;
      buf.push_back('\t');
      detail::append_real(buf, v);
    };
    column(stats.alpha, e.posterior.alpha);
    column(stats.beta, e.posterior.beta);
    column(stats.mean_pi, e.summary.mean_pi);
    column(stats.expected_w, e.summary.expected_w);
    buf.push_back('\n');
    if (buf.size() > (1u << 20)) {
      out.write(buf.data(), std::streamsize(buf.size()));
      buf.clear();
    }
  }
  out.write(buf.data(), std::streamsize(buf.size()));
}

// Symmetric node_count x node_count matrix of E[pi]; diagonal written as NA.
inline void write_dense(std::ostream& out, const ProjectionFrame& frame, const NodeRegistry& nodes) {
  const std::size_t n = frame.node_count;
  std::vector<double> m(n * n, posterior_mean(frame.default_prior));
  for (const auto& e : frame.entries) {
    m[e.key.lo() * n + e.key.hi()] = e.summary.mean_pi;
    m[e.key.hi() * n + e.key.lo()] = e.summary.mean_pi;
  }
  std::string buf = "node";
  for (std::size_t j = 0; j < n; ++j) {
    buf.push_back('\t');
    buf += nodes.id(NodeIndex(j));
  }
  buf.push_back('\n');
  for (std::size_t i = 0; i < n; ++i) {
    buf += nodes.id(NodeIndex(i));
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) {
        buf += "\tNA";
      } else {
        buf.push_back('\t');
        detail::append_real(buf, m[i * n + j]);
      }
    }
    buf.push_back('\n');
  }
  out.write(buf.data(), std::streamsize(buf.size()));
}

inline void write_score_header(std::ostream& out, std::span<const double> candidates) {
  std::string h = "t\tselected_kappa";
  for (double k : candidates) h += fmt::format("\tscore_{:.6g}", k);
  for (double k : candidates) h += fmt::format("\tlogp_{:.6g}", k);
  h += '\n';
  out << h;
}

inline void write_score_row(std::ostream& out, StepIndex t, const BankStepResult& r,
                            std::span<const double> cumulative_scores) {
  std::string line;
  detail::append_int(line, t);
  line.push_back('\t');
  detail::append_real(line, r.selected_kappa);
  for (double s : cumulative_scores) {
    line.push_back('\t');
    detail::append_real(line, s);
  }
  for (double s : r.step_scores) {
    line.push_back('\t');
    detail::append_real(line, s);
  }
  line += '\n';
  out << line;
}

// Streams frames into an output directory; call finish() once after the last
// frame to write the manifest.
class FrameExporter {
 public:
  FrameExporter(std::filesystem::path dir, RunConfig config) : dir_(std::move(dir)), config_(std::move(config)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory " + dir_.string() + ": " + ec.message());
    if (config_.format == OutputFormat::pair_records) {
      pairs_ = open(dir_ / "pairs.tsv");
      write_pair_header(pairs_, config_.stats);
    } else {
      std::filesystem::create_directories(dir_ / "dense", ec);
      if (ec) throw IoError("cannot create " + (dir_ / "dense").string() + ": " + ec.message());
    }
  }

  void write(const ProjectionFrame& frame, const NodeRegistry& nodes) {
    if (config_.format == OutputFormat::pair_records) {
      write_pair_records(pairs_, frame, nodes, config_.stats);
      check(pairs_, dir_ / "pairs.tsv");
    } else {
      const auto path = dir_ / "dense" / fmt::format("pi_{}.tsv", frame.t);
      auto f = open(path);
      write_dense(f, frame, nodes);
      check(f, path);
    }
    steps_.push_back(frame.t);
  }

  void write_scores(const KappaFilterBank& bank, const BankStepResult& r, StepIndex t) {
    if (!config_.stats.scores) return;
    if (!scores_.is_open()) {
      scores_ = open(dir_ / "scores.tsv");
      write_score_header(scores_, bank.candidates());
    }
    write_score_row(scores_, t, r, bank.log_scores());
    check(scores_, dir_ / "scores.tsv");
  }

  void finish(const NodeRegistry& nodes) {
    nlohmann::ordered_json manifest;
    manifest["format"] = config_.format == OutputFormat::pair_records ? "pairs" : "dense";
    manifest["mode"] = mode_name(config_.mode);
    manifest["prior"] = {config_.prior.alpha, config_.prior.beta};
    manifest["steps"] = steps_;
    manifest["sources"] = nodes.ids();
    auto f = open(dir_ / "run.json");
    f << manifest.dump(1) << '\n';
    check(f, dir_ / "run.json");
    if (pairs_.is_open()) {
      pairs_.flush();
      check(pairs_, dir_ / "pairs.tsv");
    }
    if (scores_.is_open()) {
      scores_.flush();
      check(scores_, dir_ / "scores.tsv");
    }
  }

 private:
  static std::ofstream open(const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    return f;
  }

  static void check(const std::ostream& f, const std::filesystem::path& path) {
    if (!f) throw IoError("write failed for " + path.string());
  }

  std::filesystem::path dir_;
  RunConfig config_;
  std::ofstream pairs_;
  std::ofstream scores_;
  std::vector<StepIndex> steps_;
};

inline void export_frames(std::span<const ProjectionFrame> frames, const NodeRegistry& nodes,
                          const RunConfig& config, const std::filesystem::path& dir) {
  FrameExporter ex(dir, config);
  for (const auto& f : frames) ex.write(f, nodes);
  ex.finish(nodes);
}

// ---------------------------------------------------------------------------
// Reading pair records back

struct PairRecord {
  StepIndex t = 0;
  std::string i;
  std::string j;
  Count w = 0;
  Count x = 0;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<double> mean_pi;
  std::optional<double> expected_w;
};

inline std::vector<PairRecord> read_pair_records(std::istream& in) {
  std::vector<PairRecord> out;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> columns;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (line.empty()) continue;
    const auto fields = detail::split_tabs(line);
    if (columns.empty()) {
      columns.assign(fields.begin(), fields.end());
      if (columns.size() < 5 || columns[0] != "t" || columns[1] != "i" || columns[2] != "j" ||
          columns[3] != "w" || columns[4] != "x") {
        throw ParseError(line_no, "unrecognized pair-record header");
      }
      continue;
    }
    if (fields.size() != columns.size()) {
      throw ParseError(line_no, "expected " + std::to_string(columns.size()) + " fields");
    }
    PairRecord r;
    if (!detail::parse_number(fields[0], r.t)) throw ParseError(line_no, "invalid step index");
    r.i = fields[1];
    r.j = fields[2];
    if (!detail::parse_number(fields[3], r.w) || !detail::parse_number(fields[4], r.x) || r.w > r.x) {
      throw ParseError(line_no, "invalid counts");
    }
    for (std::size_t c = 5; c < columns.size(); ++c) {
      const double v = detail::parse_real(fields[c], line_no, columns[c]);
      if (columns[c] == "alpha") r.alpha = v;
      else if (columns[c] == "beta") r.beta = v;
      else if (columns[c] == "mean_pi") r.mean_pi = v;
      else if (columns[c] == "expected_w") r.expected_w = v;
    }
    out.push_back(std::move(r));
  }
  return out;
}

struct RunManifest {
  std::string format;
  std::string mode;
  PairPosterior prior;
  std::vector<StepIndex> steps;
  std::vector<std::string> sources;
};

inline RunManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path.string());
  try {
    const auto j = nlohmann::json::parse(f);
    RunManifest m;
    m.format = j.at("format").get<std::string>();
    m.mode = j.at("mode").get<std::string>();
    m.prior = PairPosterior(j.at("prior").at(0).get<double>(), j.at("prior").at(1).get<double>());
    m.steps = j.at("steps").get<std::vector<StepIndex>>();
    m.sources = j.at("sources").get<std::vector<std::string>>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, path.string() + ": " + e.what());
  }
}

struct PairSeriesPoint {
  StepIndex t = 0;
  Count w = 0;
  Count x = 0;
  PairPosterior posterior;
  PosteriorSummary summary;
};

// Time series of one pair across the run's steps. Steps where the pair had no
// opportunities carry its posterior forward with w = x = 0.
inline std::vector<PairSeriesPoint> pair_series(const RunManifest& manifest,
                                                const std::vector<PairRecord>& records, std::string_view a,
                                                std::string_view b) {
  if (a == b) throw std::domain_error("pair needs two distinct nodes");
  bool known_a = false, known_b = false;
  for (const auto& s : manifest.sources) {
    known_a |= s == a;
    known_b |= s == b;
  }
  if (!known_a) throw LookupError("unknown node identifier '" + std::string(a) + "'");
  if (!known_b) throw LookupError("unknown node identifier '" + std::string(b) + "'");

  std::vector<PairSeriesPoint> out;
  PairPosterior current = manifest.prior;
  auto rec = records.begin();
  for (StepIndex t : manifest.steps) {
    PairSeriesPoint p{t, 0, 0, current, {}};
    while (rec != records.end() && rec->t < t) ++rec;
    for (auto r = rec; r != records.end() && r->t == t; ++r) {
      if ((r->i == a && r->j == b) || (r->i == b && r->j == a)) {
        if (!r->alpha || !r->beta) throw ParseError(0, "pair records lack alpha/beta columns");
        p.w = r->w;
        p.x = r->x;
        current = PairPosterior(*r->alpha, *r->beta);
        p.posterior = current;
        break;
      }
    }
    p.summary = summarize(p.posterior, p.x);
    out.push_back(p);
  }
  return out;
}

}  // namespace bayesproj
