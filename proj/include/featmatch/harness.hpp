#ifndef FEATMATCH_HARNESS_HPP_
#define FEATMATCH_HARNESS_HPP_

#include "featmatch/core.hpp"
#include "featmatch/gmm.hpp"
#include "featmatch/init.hpp"
#include "featmatch/search.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace featmatch {

// Synthetic data from the permuted Gaussian model: class means, isotropic
// within-class spread, additive white noise, and a uniform label shuffle per
// unit.
struct GenConfig {
  std::size_t n = 10;
  int m = 10;
  int p = 64;
  double center_sd = 10.0;          // class means ~ N(0, center_sd^2 I)
  std::vector<double> class_sd{1.0};  // one value for all classes, or one per class
  double noise_sd = 2.5;
  std::uint64_t seed = 0;
  std::optional<Eigen::MatrixXd> means;  // p x m, overrides center_sd

  // m = 10, p = 64, white noise SD 2.5, class spread 5, center spread 8.
  static GenConfig digitslike(std::size_t n, std::uint64_t seed);
  void check() const;
};

struct GeneratedData {
  FeatureStack data;
  // labels[i][k] = class (0-based) of column k of unit i.
  std::vector<std::vector<int>> labels;
  Eigen::MatrixXd means;
};

GeneratedData generate(const GenConfig& config);

// The matching that puts class l in cluster l.
Matching plant_matching(const std::vector<std::vector<int>>& labels);

// Flattened unit-major labels, comparable with cluster_labels().
std::vector<int> flatten_labels(const std::vector<std::vector<int>>& labels);

// Fraction of item pairs on which two partitions agree.
double rand_index(const std::vector<int>& a, const std::vector<int>& b);

// value / min(values) - 1 over the finite values; non-finite inputs map to
// NaN. When the minimum is 0, exact zeros get 0 and the rest +inf.
std::vector<double> relative_error(const std::vector<double>& values);

// A solver pipeline: "<main>[+<post>...]" with main in {kmeans, bca, fw,
// interchange, em, exhaustive} and post in {2x, em}.
struct PipelineSpec {
  std::string main;
  std::vector<std::string> post;

  static PipelineSpec parse(const std::string& text);
};

struct PipelineContext {
  std::uint64_t seed = 0;
  SolveOptions solve;
  EmOptions em;
  std::optional<Eigen::MatrixXd> templ;           // for InitKind::template_
  const std::vector<std::vector<int>>* labels = nullptr;  // for InitKind::label
};

// Runs init, the main solver (best of all starts for random:R), then each
// post-processing step. `sweeps` and `seconds` cover the whole pipeline.
SolveResult run_pipeline(const FeatureStack& data, const PipelineSpec& pipeline, const InitSpec& init,
                         const PipelineContext& ctx);

Matching make_start(const FeatureStack& data, const InitSpec& init, const PipelineContext& ctx,
                    std::uint64_t seed);

struct BenchmarkRow {
  std::string method;
  std::string init;
  std::size_t n = 0;
  int rep = 0;
  double objective = 0.0;
  double rel_error = 0.0;
  double rand_index = 0.0;
  double seconds = 0.0;
  int sweeps = 0;
  bool timed_out = false;
  Matching matching;
};

struct BenchmarkReport {
  std::vector<BenchmarkRow> rows;

  // CSV with header method,init,n,rep,objective,rel_error,rand_index,seconds,sweeps.
  // Timed-out runs report nan metrics. With include_timing = false the
  // seconds column is written as 0 so identical runs are byte-identical.
  std::string to_csv(bool include_timing = true) const;
};

struct BenchmarkGrid {
  std::vector<std::string> methods;
  std::vector<std::string> inits;
  std::vector<std::size_t> n_values;
  int replications = 1;
  std::uint64_t seed = 0;
  GenConfig base;  // n and seed are set per cell
  double timeout_secs = 300.0;
  int threads = 1;
  SolveOptions solve;
  EmOptions em;
};

BenchmarkReport run_benchmark(const BenchmarkGrid& grid);

// Seed for replication `rep` at size `n` under a master seed.
std::uint64_t instance_seed(std::uint64_t master, std::size_t n, int rep);

}  // namespace featmatch

#endif  // FEATMATCH_HARNESS_HPP_
