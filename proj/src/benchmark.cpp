#include "featmatch/harness.hpp"

#include "solver_util.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <sstream>
#include <thread>

namespace featmatch {

namespace {

bool known_main(const std::string& name) {
  return name == "kmeans" || name == "bca" || name == "fw" || name == "interchange" || name == "em" ||
         name == "exhaustive";
}

SolveResult run_stage(const std::string& name, const FeatureStack& data, const Matching& start,
                      const PipelineContext& ctx) {
  if (name == "kmeans") return kmeans_match(data, start, ctx.solve);
  if (name == "bca") return bca(data, start, ctx.solve);
  if (name == "fw") return frank_wolfe(data, start, ctx.solve);
  if (name == "interchange") return interchange(data, start, ctx.solve);
  if (name == "em") {
    EmOptions em = ctx.em;
    em.deadline = ctx.solve.deadline;
    return em_fit(data, start, em).solve;
  }
  throw InvalidInput("unknown solver '" + name + "'");
}

// splitmix64 finalizer
std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::string format_double(const char* fmt, double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

}  // namespace

std::uint64_t instance_seed(std::uint64_t master, std::size_t n, int rep) {
  return mix(mix(master) ^ mix(static_cast<std::uint64_t>(n) * 0x100000001B3ULL + static_cast<std::uint64_t>(rep)));
}

PipelineSpec PipelineSpec::parse(const std::string& text) {
  PipelineSpec spec;
  std::stringstream parts(text);
  std::string token;
  bool first = true;
  while (std::getline(parts, token, '+')) {
    if (first) {
      spec.main = token == "2x" ? "interchange" : token;
      if (!known_main(spec.main)) throw InvalidInput("unknown algorithm '" + token + "'");
      first = false;
    } else if (token == "2x" || token == "interchange") {
      spec.post.emplace_back("interchange");
    } else if (token == "em") {
      spec.post.emplace_back("em");
    } else {
      throw InvalidInput("unknown post-processing step '" + token + "'");
    }
  }
  if (first) throw InvalidInput("empty algorithm name");
  return spec;
}

Matching make_start(const FeatureStack& data, const InitSpec& init, const PipelineContext& ctx, std::uint64_t seed) {
  switch (init.kind) {
    case InitKind::identity: return init_identity(data);
    case InitKind::random: return init_random(data, seed);
    case InitKind::template_:
      if (!ctx.templ) throw InvalidInput("template init needs a template matrix");
      return init_template(data, *ctx.templ);
    case InitKind::hub_single: return init_hub_single(data, init.hub);
    case InitKind::hub_multiple: return init_hub_multiple(data, init.cap, seed);
    case InitKind::recursive: return init_recursive(data);
    case InitKind::label:
      if (!ctx.labels) throw InvalidInput("label init needs the planted labels");
      return plant_matching(*ctx.labels);
  }
  throw InvalidInput("unknown init");
}

SolveResult run_pipeline(const FeatureStack& data, const PipelineSpec& pipeline, const InitSpec& init,
                         const PipelineContext& ctx) {
  detail::Stopwatch watch;
  SolveResult best;
  if (pipeline.main == "exhaustive") {
    best = exhaustive(data, ctx.solve);
  } else {
    const int starts = init.kind == InitKind::random ? init.restarts : 1;
    bool have = false;
    int sweeps = 0;
    for (int r = 0; r < starts; ++r) {
      const std::uint64_t seed = mix(ctx.seed + static_cast<std::uint64_t>(r));
      const Matching start = make_start(data, init, ctx, seed);
      SolveResult result = run_stage(pipeline.main, data, start, ctx);
      sweeps += result.sweeps;
      const bool timed_out = result.timed_out;
      if (!have || result.objective < best.objective) {
        best = std::move(result);
        have = true;
      }
      best.timed_out = best.timed_out || timed_out;
      if (timed_out) break;
    }
    best.sweeps = sweeps;
  }
  for (const auto& step : pipeline.post) {
    if (best.timed_out) break;
    SolveResult next = run_stage(step, data, best.matching, ctx);
    next.sweeps += best.sweeps;
    best = std::move(next);
  }
  best.seconds = watch.seconds();
  return best;
}

std::string BenchmarkReport::to_csv(bool include_timing) const {
  std::ostringstream out;
  out << "method,init,n,rep,objective,rel_error,rand_index,seconds,sweeps\n";
  for (const auto& row : rows) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out << row.method << ',' << row.init << ',' << row.n << ',' << row.rep << ','
        << format_double("%.17g", row.timed_out ? nan : row.objective) << ','
        << format_double("%.6e", row.timed_out ? nan : row.rel_error) << ','
        << format_double("%.6f", row.timed_out ? nan : row.rand_index) << ','
        << format_double("%.3f", include_timing ? row.seconds : 0.0) << ',' << row.sweeps << '\n';
  }
  return out.str();
}

BenchmarkReport run_benchmark(const BenchmarkGrid& grid) {
  if (grid.replications < 1) throw InvalidInput("benchmark needs at least one replication");
  std::vector<PipelineSpec> pipelines;
  for (const auto& m : grid.methods) pipelines.push_back(PipelineSpec::parse(m));
  std::vector<InitSpec> inits;
  for (const auto& s : grid.inits) inits.push_back(InitSpec::parse(s));
  if (pipelines.empty() || inits.empty() || grid.n_values.empty()) {
    throw InvalidInput("benchmark grid needs methods, inits and n values");
  }

  struct Cell {
    std::size_t n;
    int rep;
    std::vector<BenchmarkRow> rows;
  };
  std::vector<Cell> cells;
  for (std::size_t n : grid.n_values) {
    for (int rep = 0; rep < grid.replications; ++rep) cells.push_back({n, rep, {}});
  }

  auto run_cell = [&](Cell& cell) {
    GenConfig config = grid.base;
    config.n = cell.n;
    config.seed = instance_seed(grid.seed, cell.n, cell.rep);
    const GeneratedData gen = generate(config);
    const std::vector<int> truth = flatten_labels(gen.labels);
    for (std::size_t a = 0; a < pipelines.size(); ++a) {
      for (std::size_t b = 0; b < inits.size(); ++b) {
        PipelineContext ctx;
        ctx.seed = mix(config.seed);
        ctx.solve = grid.solve;
        ctx.solve.seed = ctx.seed;
        ctx.solve.deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                                std::chrono::duration<double>(grid.timeout_secs));
        ctx.em = grid.em;
        ctx.labels = &gen.labels;
        BenchmarkRow row;
        row.method = grid.methods[a];
        row.init = grid.inits[b];
        row.n = cell.n;
        row.rep = cell.rep;
        SolveResult result = run_pipeline(gen.data, pipelines[a], inits[b], ctx);
        // recomputed on the canonical form so equal partitions compare bit-equal
        result.matching = canonical(result.matching);
        row.objective = objective_from_surrogate(gen.data, frobenius_surrogate(gen.data, result.matching));
        row.seconds = std::round(result.seconds * 1000.0) / 1000.0;
        row.sweeps = result.sweeps;
        row.timed_out = result.timed_out;
        row.rand_index = gen.data.n() * static_cast<std::size_t>(gen.data.m()) >= 2
                             ? rand_index(cluster_labels(result.matching), truth)
                             : 1.0;
        row.matching = result.matching;
        cell.rows.push_back(std::move(row));
      }
    }
    std::vector<double> values;
    for (const auto& row : cell.rows) {
      values.push_back(row.timed_out ? std::numeric_limits<double>::quiet_NaN() : row.objective);
    }
    bool any_finite = false;
    for (double v : values) any_finite = any_finite || std::isfinite(v);
    if (any_finite) {
      const std::vector<double> rel = relative_error(values);
      for (std::size_t t = 0; t < rel.size(); ++t) cell.rows[t].rel_error = rel[t];
    }
  };

  const int threads = std::max(1, std::min<int>(grid.threads, static_cast<int>(cells.size())));
  if (threads == 1) {
    for (auto& cell : cells) run_cell(cell);
  } else {
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    for (int w = 0; w < threads; ++w) {
      workers.emplace_back([&, w] {
        try {
          for (std::size_t c = static_cast<std::size_t>(w); c < cells.size(); c += static_cast<std::size_t>(threads)) {
            run_cell(cells[c]);
          }
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    for (auto& worker : workers) worker.join();
    for (const auto& error : errors) {
      if (error) std::rethrow_exception(error);
    }
  }

  BenchmarkReport report;
  for (auto& cell : cells) {
    for (auto& row : cell.rows) report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace featmatch
