// Command-line front end: generate synthetic streams, project snapshot files,
// inspect exported pair series and reproduce the toy-network experiments.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 I/O error.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "bayesproj/bayesproj.hpp"

namespace fs = std::filesystem;
using namespace bayesproj;

namespace {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kIo = 3 };

SeedMatrix load_seed(const std::string& spec, const SeedMatrix& builtin) {
  if (spec == "builtin") return builtin;
  std::ifstream f(spec);
  if (!f) throw IoError("cannot open seed matrix file " + spec);
  return parse_seed_matrix(f);
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  return f;
}

PairPosterior parse_prior(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw ConfigError("--prior expects alpha,beta");
  double a = 0, b = 0;
  if (!detail::parse_number(std::string_view(s).substr(0, comma), a) ||
      !detail::parse_number(std::string_view(s).substr(comma + 1), b)) {
    throw ConfigError("--prior: invalid number in '" + s + "'");
  }
  if (!(a > 0) || !(b > 0)) throw ConfigError("--prior parameters must be positive");
  return {a, b};
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::string seeds;
  std::size_t steps = 0;
  std::string changepoint;
  std::uint64_t rng_seed = 0;
  std::string out;
};

int run_generate(const GenerateArgs& a) {
  const auto& builtin = builtin_seeds();
  SeedMatrix base = load_seed(a.seeds, builtin.seed);
  GeneratorConfig cfg;
  if (a.changepoint.empty()) {
    cfg = GeneratorConfig::stationary(std::move(base), a.steps, a.rng_seed);
  } else {
    const auto colon = a.changepoint.find(':');
    StepIndex tc = 0;
    if (colon == std::string::npos || !detail::parse_number(std::string_view(a.changepoint).substr(0, colon), tc)) {
      throw ConfigError("--changepoint expects <step>:<seedfile|builtin>");
    }
    SeedMatrix after = load_seed(a.changepoint.substr(colon + 1), builtin.changepoint_seed);
    cfg = GeneratorConfig::changepoint(std::move(base), std::move(after), tc, a.steps, a.rng_seed);
  }
  const auto snapshots = generate(cfg, default_thread_count());
  const auto rows = cfg.segments.front().seed.rows();
  const auto cols = cfg.segments.front().seed.cols();
  auto f = open_out(a.out);
  f << "# t\tsource\ttarget\n";
  write_snapshots(f, snapshots, numbered_registry(rows), numbered_registry(cols));
  if (!f.flush()) throw IoError("write failed for " + a.out);
  return kOk;
}

// ---------------------------------------------------------------------------

struct ProjectArgs {
  std::string in;
  std::string mode = "cumulative";
  std::string prior = "10,10";
  std::string out;
  bool dense = false;
  unsigned threads = 0;
  double discount = kDefaultScoreDiscount;
  std::string stats = "alpha,beta,pi,w,scores";
};

int run_project(const ProjectArgs& a) {
  RunConfig cfg;
  cfg.prior = parse_prior(a.prior);
  cfg.mode = parse_mode(a.mode, a.discount);
  cfg.format = a.dense ? OutputFormat::dense : OutputFormat::pair_records;
  cfg.stats = parse_stat_flags(a.stats);
  cfg.threads = a.threads ? a.threads : default_thread_count();

  std::ifstream in(a.in);
  if (!in) throw IoError("cannot open " + a.in);
  const SnapshotStream stream = parse_snapshots(in);

  FrameExporter exporter(a.out, cfg);
  const StepOptions opts{cfg.threads, &stream.sources};
  if (auto* bank_mode = std::get_if<BankMode>(&cfg.mode)) {
    KappaFilterBank bank(bank_mode->grid, bank_mode->discount, cfg.prior);
    for (const auto& s : stream.snapshots) {
      const auto r = bank.step(s, opts);
      exporter.write(r.frame, bank.state(r.selected).nodes);
      exporter.write_scores(bank, r, s.t());
    }
    exporter.finish(bank.state(0).nodes);
  } else {
    const UpdateRule rule = std::holds_alternative<MixedMode>(cfg.mode)
                                ? UpdateRule::mixed(std::get<MixedMode>(cfg.mode).kappa)
                                : UpdateRule::cumulative();
    EngineState state(cfg.prior);
    for (const auto& s : stream.snapshots) exporter.write(step(state, s, rule, opts), state.nodes);
    exporter.finish(state.nodes);
  }
  return kOk;
}

// ---------------------------------------------------------------------------

int run_inspect(const std::string& dir, const std::string& pair) {
  const auto comma = pair.find(',');
  if (comma == std::string::npos) throw ConfigError("--pair expects i,j");
  const RunManifest manifest = read_manifest(fs::path(dir) / "run.json");
  if (manifest.format != "pairs") throw ConfigError("inspect needs a run exported as pair records");
  std::ifstream f(fs::path(dir) / "pairs.tsv");
  if (!f) throw IoError("cannot open " + (fs::path(dir) / "pairs.tsv").string());
  const auto records = read_pair_records(f);
  const auto series = pair_series(manifest, records, pair.substr(0, comma), pair.substr(comma + 1));
  std::string out = "t\tw\tx\tmean_pi\texpected_w\talpha\tbeta\n";
  for (const auto& p : series) {
    out += fmt::format("{}\t{}\t{}\t{:.6g}\t{:.6g}\t{:.6g}\t{:.6g}\n", p.t, p.w, p.x, p.summary.mean_pi,
                       p.summary.expected_w, p.posterior.alpha, p.posterior.beta);
  }
  std::cout << out;
  return kOk;
}

// ---------------------------------------------------------------------------

struct MeanStats {
  double mean = 0, min = 0, max = 0;
};

MeanStats stats_of(const std::vector<double>& v) {
  MeanStats s{0, *std::min_element(v.begin(), v.end()), *std::max_element(v.begin(), v.end())};
  for (double d : v) s.mean += d;
  s.mean /= double(v.size());
  return s;
}

std::string label(NodePair p) { return fmt::format("{}-{}", p.first, p.second); }

int run_reproduce(const std::string& experiment, std::size_t seeds_count, const std::string& out, unsigned threads) {
  if (seeds_count == 0) throw ConfigError("--seeds-count must be positive");
  const auto seeds = seed_range(seeds_count);
  const fs::path dir(out);
  fs::create_directories(dir);
  nlohmann::ordered_json summary;
  summary["experiment"] = experiment;
  summary["seeds"] = seeds_count;

  const std::map<std::string, NodePair> stationary_pair{{"fig2", {1, 2}}, {"fig3", {2, 4}}, {"fig4", {2, 3}}};
  if (auto it = stationary_pair.find(experiment); it != stationary_pair.end()) {
    const std::vector<NodePair> pairs{it->second};
    const std::size_t steps = 100;
    const auto runs = stationary_experiment(seeds, pairs, steps, {}, threads);
    std::vector<double> finals;
    for (const auto& r : runs) finals.push_back(r.traces.at(it->second).mean_pi.back());
    const auto st = stats_of(finals);
    summary["pair"] = label(it->second);
    summary["steps"] = steps;
    summary["mean_final_pi"] = st.mean;
    summary["min_final_pi"] = st.min;
    summary["max_final_pi"] = st.max;
    summary["per_seed_final_pi"] = finals;

    auto f = open_out(dir / "trajectory.tsv");
    std::string buf = "t\tmean_pi\texpected_w\tw\tx\n";
    for (std::size_t n = 0; n < steps; ++n) {
      double pi = 0, ew = 0, w = 0, x = 0;
      for (const auto& r : runs) {
        const auto& tr = r.traces.at(it->second);
        pi += tr.mean_pi[n], ew += tr.expected_w[n], w += tr.w[n], x += tr.x[n];
      }
      const double m = double(runs.size());
      buf += fmt::format("{}\t{:.6g}\t{:.6g}\t{:.6g}\t{:.6g}\n", n + 1, pi / m, ew / m, w / m, x / m);
    }
    f << buf;
  } else if (experiment == "fig5") {
    ChangepointSettings settings;
    settings.threads = threads;
    const auto runs = changepoint_experiment(seeds, settings);
    const std::size_t pre = std::size_t(settings.change_step - 2);  // index of step t_c - 1
    summary["total_steps"] = settings.total_steps;
    summary["change_step"] = settings.change_step;
    summary["kappa_grid"] = settings.grid;
    summary["score_discount"] = settings.discount;
    for (NodePair p : changepoint_pairs()) {
      std::vector<double> cum_pre, cum_final, bank_final;
      std::size_t bank_above = 0;
      for (const auto& r : runs) {
        cum_pre.push_back(r.cumulative.at(p).mean_pi[pre]);
        cum_final.push_back(r.cumulative.at(p).mean_pi.back());
        bank_final.push_back(r.bank.at(p).mean_pi.back());
        bank_above += bank_final.back() > cum_final.back();
      }
      auto& node = summary["pairs"][label(p)];
      node["cumulative_mean_pi_before_change"] = stats_of(cum_pre).mean;
      node["cumulative_mean_final_pi"] = stats_of(cum_final).mean;
      node["bank_mean_final_pi"] = stats_of(bank_final).mean;
      node["fraction_bank_above_cumulative"] = double(bank_above) / double(runs.size());
    }
    std::vector<double> final_kappa;
    for (const auto& r : runs) final_kappa.push_back(r.selected_kappa.back());
    summary["mean_final_selected_kappa"] = stats_of(final_kappa).mean;

    auto f = open_out(dir / "trajectory.tsv");
    std::string buf = "t\tcumulative_pi_1_2\tcumulative_pi_1_4\tbank_pi_1_2\tbank_pi_1_4\tselected_kappa\n";
    for (std::size_t n = 0; n < settings.total_steps; ++n) {
      double c12 = 0, c14 = 0, b12 = 0, b14 = 0, k = 0;
      for (const auto& r : runs) {
        c12 += r.cumulative.at({1, 2}).mean_pi[n];
        c14 += r.cumulative.at({1, 4}).mean_pi[n];
        b12 += r.bank.at({1, 2}).mean_pi[n];
        b14 += r.bank.at({1, 4}).mean_pi[n];
        k += r.selected_kappa[n];
      }
      const double m = double(runs.size());
      buf += fmt::format("{}\t{:.6g}\t{:.6g}\t{:.6g}\t{:.6g}\t{:.6g}\n", n + 1, c12 / m, c14 / m, b12 / m, b14 / m,
                         k / m);
    }
    f << buf;
  } else {
    throw ConfigError("unknown experiment '" + experiment + "' (expected fig2, fig3, fig4 or fig5)");
  }
  auto f = open_out(dir / "summary.json");
  f << summary.dump(2) << '\n';
  if (!f.flush()) throw IoError("write failed for " + (dir / "summary.json").string());
  std::cout << summary.dump(2) << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian one-mode projection of bipartite snapshot streams"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate_cmd = app.add_subcommand("generate", "Write a synthetic snapshot stream");
  generate_cmd->add_option("--seeds", gen.seeds, "Seed matrix file, or 'builtin'")->required();
  generate_cmd->add_option("--steps", gen.steps, "Number of snapshots")->required()->check(CLI::PositiveNumber);
  generate_cmd->add_option("--changepoint", gen.changepoint, "<step>:<seedfile|builtin> seed switch");
  generate_cmd->add_option("--rng-seed", gen.rng_seed, "Generator seed")->required();
  generate_cmd->add_option("--out", gen.out, "Output edge-list path")->required();

  ProjectArgs proj;
  auto* project_cmd = app.add_subcommand("project", "Project a snapshot stream");
  project_cmd->add_option("--in", proj.in, "Edge-list input")->required();
  project_cmd->add_option("--mode", proj.mode, "cumulative | mixed:<kappa> | bank[:k1,k2,...]");
  project_cmd->add_option("--prior", proj.prior, "alpha,beta of the default prior");
  project_cmd->add_option("--out", proj.out, "Output directory")->required();
  project_cmd->add_flag("--dense", proj.dense, "Write dense E[pi] matrices instead of pair records");
  project_cmd->add_option("--threads", proj.threads, "Worker threads (default BAYESPROJ_THREADS or 1)");
  project_cmd->add_option("--discount", proj.discount, "Filter-bank score discount in (0,1]");
  project_cmd->add_option("--stats", proj.stats, "Emitted statistics: subset of alpha,beta,pi,w,scores");

  std::string inspect_in, inspect_pair;
  auto* inspect_cmd = app.add_subcommand("inspect", "Print a pair's time series from a project run");
  inspect_cmd->add_option("--in", inspect_in, "Output directory of a project run")->required();
  inspect_cmd->add_option("--pair", inspect_pair, "i,j node identifiers")->required();

  std::string experiment, repro_out;
  std::size_t seeds_count = 20;
  unsigned repro_threads = 0;
  auto* reproduce_cmd = app.add_subcommand("reproduce", "Run a toy-network experiment");
  reproduce_cmd->add_option("--experiment", experiment, "fig2 | fig3 | fig4 | fig5")->required();
  reproduce_cmd->add_option("--seeds-count", seeds_count, "Number of generator seeds");
  reproduce_cmd->add_option("--out", repro_out, "Output directory")->required();
  reproduce_cmd->add_option("--threads", repro_threads, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (generate_cmd->parsed()) return run_generate(gen);
    if (project_cmd->parsed()) return run_project(proj);
    if (inspect_cmd->parsed()) return run_inspect(inspect_in, inspect_pair);
    if (reproduce_cmd->parsed()) {
      return run_reproduce(experiment, seeds_count, repro_out, repro_threads ? repro_threads : default_thread_count());
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
