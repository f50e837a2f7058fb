#include "featmatch/core.hpp"
#include "featmatch/harness.hpp"
#include "featmatch/io.hpp"
#include "featmatch/search.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

namespace fm = featmatch;

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitTimeout = 3;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int env_threads() {
  const char* raw = std::getenv("FEATMATCH_THREADS");
  if (!raw || !*raw) return 1;
  try {
    return std::max(1, std::stoi(raw));
  } catch (const std::exception&) {
    throw fm::InvalidInput(std::string("FEATMATCH_THREADS must be a positive integer, got '") + raw + "'");
  }
}

std::optional<fm::Clock::time_point> deadline_after(double secs) {
  if (secs <= 0.0) return std::nullopt;
  return fm::Clock::now() + std::chrono::duration_cast<fm::Clock::duration>(std::chrono::duration<double>(secs));
}

fm::StackFormat pick_format(const std::string& flag, const std::string& path) {
  return flag.empty() ? fm::format_from_path(path) : fm::parse_format(flag);
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text << '\n';
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  out << text << '\n';
}

// Left-multiply every unit by L so plain Euclidean distances become
// Mahalanobis-type distances under L'L.
std::vector<Eigen::MatrixXd> weighted(const std::vector<Eigen::MatrixXd>& units, const std::string& path) {
  if (path.empty()) return units;
  const Eigen::MatrixXd l = fm::load_matrix(path);
  if (l.cols() != units.front().rows()) {
    throw fm::InvalidInput("weight matrix has " + std::to_string(l.cols()) + " columns but p = " +
                           std::to_string(units.front().rows()));
  }
  std::vector<Eigen::MatrixXd> out;
  out.reserve(units.size());
  for (const auto& x : units) out.push_back(l * x);
  return out;
}

// First min(m_i, K) columns take clusters 1..; a seed shuffles which columns.
fm::PartialMatching partial_start(const fm::UnbalancedStack& data, std::optional<std::uint64_t> seed) {
  std::mt19937_64 rng(seed.value_or(0));
  fm::PartialMatching out;
  for (std::size_t i = 0; i < data.n(); ++i) {
    const auto size = static_cast<std::size_t>(data.size(i));
    std::vector<int> labels(size, 0);
    const std::size_t used = std::min<std::size_t>(size, static_cast<std::size_t>(data.clusters()));
    for (std::size_t q = 0; q < used; ++q) labels[q] = static_cast<int>(q) + 1;
    if (seed) std::shuffle(labels.begin(), labels.end(), rng);
    out.labels.push_back(std::move(labels));
  }
  return out;
}

struct GenerateArgs {
  std::size_t n = 10;
  int m = 10;
  int p = 64;
  double center_sd = 10.0;
  std::vector<double> class_sd{1.0};
  double noise_sd = 2.5;
  std::uint64_t seed = 0;
  std::string preset;
  std::string out;
  std::string format;
  std::string labels_out;
};

fm::GenConfig gen_config(const GenerateArgs& a, bool preset_only_fixes_shape) {
  fm::GenConfig config;
  if (a.preset == "digitslike") {
    config = fm::GenConfig::digitslike(a.n, a.seed);
    if (!preset_only_fixes_shape) return config;
  } else if (!a.preset.empty()) {
    throw fm::InvalidInput("unknown preset '" + a.preset + "'");
  } else {
    config.m = a.m;
    config.p = a.p;
    config.center_sd = a.center_sd;
    config.class_sd = a.class_sd;
    config.noise_sd = a.noise_sd;
  }
  config.n = a.n;
  config.seed = a.seed;
  return config;
}

int run_generate(const GenerateArgs& a) {
  const fm::GenConfig config = gen_config(a, false);
  const fm::GeneratedData gen = fm::generate(config);
  if (a.out.empty() || a.out == "-") {
    fm::write_stack(std::cout, gen.data, a.format.empty() ? fm::StackFormat::json : fm::parse_format(a.format));
  } else {
    fm::save_stack(a.out, gen.data, pick_format(a.format, a.out));
  }
  if (!a.labels_out.empty()) fm::save_labels(a.labels_out, gen.labels);
  return 0;
}

struct MatchArgs {
  std::string input;
  std::string format;
  std::string algo = "bca";
  std::string init = "identity";
  std::uint64_t seed = 0;
  std::string out;
  int max_sweeps = 1000;
  std::string order = "cyclic";
  double timeout_secs = 0.0;
  std::string weight;
  std::optional<int> clusters;
  std::string templ;
  std::uint64_t max_leaves = 1'000'000;
};

fm::SolveOptions solve_options(const MatchArgs& a) {
  fm::SolveOptions opts;
  opts.max_sweeps = a.max_sweeps;
  opts.seed = a.seed;
  if (a.order == "random") {
    opts.order = fm::SweepOrder::random_permutation;
  } else if (a.order != "cyclic") {
    throw fm::InvalidInput("sweep order must be cyclic or random");
  }
  opts.deadline = deadline_after(a.timeout_secs);
  return opts;
}

int run_match(const MatchArgs& a) {
  const fm::StackFormat format = pick_format(a.format, a.input);
  fm::AnyStack stack = fm::load_stack(a.input, format, a.clusters);

  if (auto* unbalanced = std::get_if<fm::UnbalancedStack>(&stack)) {
    if (a.algo != "bca") throw fm::InvalidInput("unbalanced data (--clusters) only supports --algo bca");
    const fm::UnbalancedStack data(weighted(unbalanced->units(), a.weight), unbalanced->clusters());
    std::optional<std::uint64_t> shuffle;
    if (a.init.rfind("random", 0) == 0) {
      shuffle = a.seed;
    } else if (a.init != "identity") {
      throw fm::InvalidInput("unbalanced data supports --init identity or random");
    }
    const fm::PartialSolveResult result = fm::bca_unbalanced(data, partial_start(data, shuffle), solve_options(a));
    emit(fm::partial_json(result, a.algo), a.out);
    return result.timed_out ? kExitTimeout : 0;
  }

  const auto& raw = std::get<fm::FeatureStack>(stack);
  const fm::FeatureStack data(weighted(raw.units(), a.weight));
  fm::SolveResult result;
  if (a.algo == "exhaustive") {
    result = fm::exhaustive(data, solve_options(a), a.max_leaves);
  } else {
    fm::PipelineContext ctx;
    ctx.seed = a.seed;
    ctx.solve = solve_options(a);
    ctx.em.deadline = ctx.solve.deadline;
    if (!a.templ.empty()) ctx.templ = fm::load_matrix(a.templ);
    result = fm::run_pipeline(data, fm::PipelineSpec::parse(a.algo), fm::InitSpec::parse(a.init), ctx);
  }
  emit(fm::matching_json(result, a.algo, a.algo == "exhaustive" ? "none" : a.init), a.out);
  return result.timed_out ? kExitTimeout : 0;
}

struct BenchArgs {
  GenerateArgs gen;
  std::string methods = "bca";
  std::string inits = "identity";
  std::string n_values = "10";
  int reps = 1;
  double timeout_secs = 300.0;
  std::string out;
  bool deterministic = false;
  int max_sweeps = 1000;
};

int run_bench(const BenchArgs& a) {
  fm::BenchmarkGrid grid;
  grid.methods = split_list(a.methods);
  grid.inits = split_list(a.inits);
  for (const auto& v : split_list(a.n_values)) {
    try {
      const long long n = std::stoll(v);
      if (n < 1) throw std::out_of_range("n");
      grid.n_values.push_back(static_cast<std::size_t>(n));
    } catch (const std::exception&) {
      throw fm::InvalidInput("bad n value '" + v + "'");
    }
  }
  grid.replications = a.reps;
  grid.seed = a.gen.seed;
  grid.base = gen_config(a.gen, true);
  grid.base.check();
  grid.timeout_secs = a.timeout_secs;
  grid.threads = a.deterministic ? 1 : env_threads();
  grid.solve.max_sweeps = a.max_sweeps;
  const fm::BenchmarkReport report = fm::run_benchmark(grid);
  const std::string csv = report.to_csv(!a.deterministic);
  if (a.out.empty() || a.out == "-") {
    std::cout << csv;
  } else {
    fm::save_report(a.out, report, !a.deterministic);
  }
  for (const auto& row : report.rows) {
    if (row.timed_out) return kExitTimeout;
  }
  return 0;
}

struct ExactArgs {
  std::string input;
  std::string format;
  std::string out;
  std::uint64_t max_leaves = 1'000'000;
  double timeout_secs = 0.0;
};

int run_exact(const ExactArgs& a) {
  const fm::FeatureStack data = fm::load_balanced(a.input, pick_format(a.format, a.input));
  fm::SolveOptions opts;
  opts.deadline = deadline_after(a.timeout_secs);
  const fm::SolveResult result = fm::exhaustive(data, opts, a.max_leaves);
  emit(fm::matching_json(result, "exhaustive", "none"), a.out);
  return result.timed_out ? kExitTimeout : 0;
}

void add_gen_flags(CLI::App* cmd, GenerateArgs& g) {
  cmd->add_option("--n", g.n, "number of units")->check(CLI::PositiveNumber);
  cmd->add_option("--m", g.m, "vectors per unit")->check(CLI::PositiveNumber);
  cmd->add_option("--p", g.p, "feature dimension")->check(CLI::PositiveNumber);
  cmd->add_option("--center-sd", g.center_sd, "SD of the class means");
  cmd->add_option("--class-sd", g.class_sd, "within-class SD (one value, or one per class)")->delimiter(',');
  cmd->add_option("--noise-sd", g.noise_sd, "additive white-noise SD");
  cmd->add_option("--seed", g.seed, "random seed");
  cmd->add_option("--preset", g.preset, "parameter preset")->check(CLI::IsMember({"digitslike"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"featmatch: one-to-one feature matching across datasets"};
  app.require_subcommand(1);

  GenerateArgs gen_args;
  auto* gen = app.add_subcommand("generate", "sample a synthetic stack with planted labels");
  add_gen_flags(gen, gen_args);
  gen->add_option("--out", gen_args.out, "output stack file (json or csv by extension; default stdout)");
  gen->add_option("--format", gen_args.format, "json or csv");
  gen->add_option("--labels-out", gen_args.labels_out, "write the planted labels as JSON");

  MatchArgs match_args;
  auto* match = app.add_subcommand("match", "solve a matching problem");
  match->add_option("input", match_args.input, "stack file")->required();
  match->add_option("--format", match_args.format, "json or csv (default: by extension)");
  match->add_option("--algo", match_args.algo,
                    "kmeans, bca, fw, interchange (2x), em, exhaustive; append +2x / +em for post-processing");
  match->add_option("--init", match_args.init,
                    "identity, random:R, hub, hub:i, hub-cap:C, recursive, template");
  match->add_option("--seed", match_args.seed, "random seed");
  match->add_option("--out", match_args.out, "output JSON (default stdout)");
  match->add_option("--max-sweeps", match_args.max_sweeps, "sweep cap")->check(CLI::PositiveNumber);
  match->add_option("--order", match_args.order, "cyclic or random sweep order");
  match->add_option("--timeout-secs", match_args.timeout_secs, "wall-clock limit (0 = none)");
  match->add_option("--weight-cholesky", match_args.weight, "JSON matrix L applied to every unit");
  match->add_option("--clusters", match_args.clusters, "K for unbalanced data (bca only)")->check(CLI::PositiveNumber);
  match->add_option("--template", match_args.templ, "JSON p x m template matrix for --init template");
  match->add_option("--max-leaves", match_args.max_leaves, "search-size cap for exhaustive");

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("benchmark", "run a methods x inits x n grid on synthetic data");
  add_gen_flags(bench, bench_args.gen);
  bench->add_option("--methods", bench_args.methods, "comma-separated pipelines, e.g. bca,fw+2x,exhaustive");
  bench->add_option("--inits", bench_args.inits, "comma-separated init ids");
  bench->add_option("--n-values", bench_args.n_values, "comma-separated unit counts");
  bench->add_option("--reps", bench_args.reps, "replications per n")->check(CLI::PositiveNumber);
  bench->add_option("--timeout-secs", bench_args.timeout_secs, "per-run wall-clock limit");
  bench->add_option("--max-sweeps", bench_args.max_sweeps, "sweep cap")->check(CLI::PositiveNumber);
  bench->add_option("--out", bench_args.out, "report CSV (default stdout)");
  bench->add_flag("--deterministic", bench_args.deterministic, "single thread, seconds column zeroed");

  ExactArgs exact_args;
  auto* exact = app.add_subcommand("exact", "exhaustive optimum for small instances");
  exact->add_option("input", exact_args.input, "stack file")->required();
  exact->add_option("--format", exact_args.format, "json or csv");
  exact->add_option("--out", exact_args.out, "output JSON (default stdout)");
  exact->add_option("--max-leaves", exact_args.max_leaves, "search-size cap");
  exact->add_option("--timeout-secs", exact_args.timeout_secs, "wall-clock limit (0 = none)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  try {
    if (*gen) return run_generate(gen_args);
    if (*match) return run_match(match_args);
    if (*bench) return run_bench(bench_args);
    if (*exact) return run_exact(exact_args);
  } catch (const fm::InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
