#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kaczmarz/bounds.hpp"
#include "kaczmarz/csv.hpp"
#include "kaczmarz/error.hpp"
#include "kaczmarz/experiments.hpp"
#include "kaczmarz/matrix_core.hpp"
#include "kaczmarz/solvers.hpp"
#include "kaczmarz/svg_plot.hpp"

namespace kaczmarz::cli {

inline constexpr const char* tool_name = "kaczmarz";
inline constexpr const char* tool_version = "1.0.0";

enum ExitCode : int { ok = 0, usage = 2, input = 3, numerical = 4 };

struct CliConfig {
  std::string subcommand;
  std::vector<std::string> inputs;
  std::filesystem::path out_dir = ".";
  ExperimentConfig experiment;
  std::vector<std::string> method_names;
  std::optional<double> residual_threshold;
  bool augmented = false;
  bool svg = false;
  double grid_step = 0.01;

  /// Canonical text of every flag that influences output. The output
  /// directory is left out so that reruns into different directories
  /// produce identical files.
  std::string provenance() const {
    std::ostringstream s;
    s.imbue(std::locale::classic());
    s << tool_name << ' ' << tool_version << ' ' << subcommand;
    for (const auto& in : inputs) s << ' ' << in;
    const auto& e = experiment;
    if (subcommand == "analyze") {
      s << (augmented ? " --augmented" : "");
    } else if (subcommand == "solve") {
      s << " --method " << to_string(e.methods.front()) << " --iterations " << e.iterations << " --seed " << e.seed
        << " --sign-adjust " << (e.sign_adjust ? "on" : "off");
      if (residual_threshold) s << " --residual-threshold " << csv::format(*residual_threshold);
      s << (augmented ? " --augmented" : "");
    } else if (subcommand == "bench") {
      s << " --m " << e.m << " --n " << e.n << " --c " << csv::format(e.c) << " --noise-norm "
        << csv::format(e.noise_norm) << " --iterations " << e.iterations << " --trials " << e.trials << " --seed "
        << e.seed;
      for (Method m : e.methods) s << " --method " << to_string(m);
      s << " --sign-adjust " << (e.sign_adjust ? "on" : "off") << " --format " << (svg ? "csv+svg" : "csv");
    } else if (subcommand == "dsurface") {
      s << " --grid-step " << csv::format(grid_step);
    }
    return s.str();
  }
};

namespace detail {

inline void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

/// Matrix and rhs from the positional inputs (rhs optional for analyze).
inline std::pair<DenseMatrix, std::optional<Vector>> load_system(const CliConfig& cfg, bool need_rhs) {
  if (cfg.inputs.empty()) throw Error(ErrorKind::InvalidArgument, "missing matrix CSV path");
  DenseMatrix a = csv::read_matrix(cfg.inputs[0]);
  std::optional<Vector> b;
  if (cfg.augmented) {
    if (a.cols() < 2) throw Error(ErrorKind::DimensionMismatch, "augmented matrix needs at least two columns");
    b = a.col(a.cols() - 1);
    DenseMatrix left = a.leftCols(a.cols() - 1);
    a = std::move(left);
  } else if (cfg.inputs.size() > 1) {
    b = csv::read_vector(cfg.inputs[1]);
  } else if (need_rhs) {
    throw Error(ErrorKind::InvalidArgument, "missing right-hand side: pass a one-column CSV or --augmented");
  }
  return {std::move(a), std::move(b)};
}

}  // namespace detail

struct AnalysisReport {
  Index m = 0;
  Index n = 0;
  RateFactors factors;
  double rk_rate = 0.0;             // per row touch, squared error
  double two_subspace_rate = 0.0;   // per row touch, sqrt(eta)
  double improved_rate = 0.0;       // per row touch, sqrt(eta_improved)
};

inline AnalysisReport cmd_analyze(const CliConfig& cfg, std::ostream& log) {
  auto [a, b] = detail::load_system(cfg, false);
  const StandardizedSystem s = standardize(a, b ? *b : Vector::Zero(a.rows()));
  AnalysisReport report;
  report.m = s.rows();
  report.n = s.cols();
  report.factors = rate_factors(s, /*with_omega=*/true);
  const RateFactors& f = report.factors;
  report.rk_rate = 1.0 - 1.0 / f.R;
  report.two_subspace_rate = std::sqrt(std::max(f.eta, 0.0));
  report.improved_rate = std::sqrt(std::max(f.eta_improved, 0.0));

  csv::Writer w(cfg.provenance());
  w.columns({"quantity", "value"});
  w.row("m", report.m).row("n", report.n);
  w.row("delta", f.delta).row("Delta", f.Delta).row("R", f.R).row("Q", f.Q).row("D", f.D).row("E", f.E);
  w.row("eta", f.eta).row("eta_improved", f.eta_improved);
  w.row("rk_rate_per_row_touch", report.rk_rate);
  w.row("two_subspace_rate_per_row_touch", report.two_subspace_rate);
  w.row("improved_rate_per_row_touch", report.improved_rate);
  detail::ensure_dir(cfg.out_dir);
  csv::write_atomic(cfg.out_dir / "analysis.csv", w.str());

  log << "m = " << report.m << ", n = " << report.n << '\n'
      << "delta = " << csv::format(f.delta) << ", Delta = " << csv::format(f.Delta) << '\n'
      << "R = " << csv::format(f.R) << ", Q = " << csv::format(f.Q) << '\n'
      << "D = " << csv::format(f.D) << ", E = " << csv::format(f.E) << '\n'
      << "eta = " << csv::format(f.eta) << ", eta_improved = " << csv::format(f.eta_improved) << '\n'
      << "rate per row touch: rk " << csv::format(report.rk_rate) << ", two-subspace "
      << csv::format(report.two_subspace_rate) << '\n';
  return report;
}

inline SolveTrace cmd_solve(const CliConfig& cfg, std::ostream& log) {
  auto [a, b] = detail::load_system(cfg, true);
  const StandardizedSystem s = standardize(a, *b);
  SolveOptions options;
  options.method = cfg.experiment.methods.front();
  options.stop.max_iterations = cfg.experiment.iterations;
  options.stop.residual_threshold = cfg.residual_threshold;
  options.seed = cfg.experiment.seed;
  options.sign_adjust = cfg.experiment.sign_adjust;
  SolveTrace trace = solve(s, options);

  const std::string header = cfg.provenance();
  csv::Writer sol(header);
  for (Index j = 0; j < trace.solution.size(); ++j) sol.row(trace.solution(j));
  csv::Writer tr(header);
  tr.columns({"k", "row_touches", "error", "residual"});
  for (const auto& r : trace.records) tr.row(r.k, r.row_touches, r.error, r.residual);

  detail::ensure_dir(cfg.out_dir);
  csv::write_atomic(cfg.out_dir / "solution.csv", sol.str());
  csv::write_atomic(cfg.out_dir / "trace.csv", tr.str());
  log << to_string(trace.method) << ": " << trace.iterations() << " iterations, residual "
      << csv::format(trace.records.back().residual) << '\n';
  return trace;
}

inline ComparisonResult cmd_bench(const CliConfig& cfg, std::ostream& log) {
  ComparisonResult result = run_comparison(cfg.experiment);
  const std::string header = cfg.provenance();

  csv::Writer agg(header);
  agg.columns({"row_touches", "method", "mean_error", "median_error", "min_error", "max_error"});
  for (const auto& curve : result.aggregate.curves) {
    for (std::size_t i = 0; i < curve.row_touches.size(); ++i) {
      agg.row(curve.row_touches[i], to_string(curve.method), curve.mean[i], curve.median[i], curve.min[i],
              curve.max[i]);
    }
  }

  csv::Writer meta(header);
  meta.columns({"trial", "seed", "delta", "Delta", "R", "D", "eta", "w_inf", "initial_error"});
  for (const auto& t : result.trials) {
    meta.row(t.trial, t.seed, t.factors.delta, t.factors.Delta, t.factors.R, t.factors.D, t.factors.eta, t.w_inf,
             t.err0);
  }

  detail::ensure_dir(cfg.out_dir);
  detail::ensure_dir(cfg.out_dir / "traces");
  csv::write_atomic(cfg.out_dir / "aggregate.csv", agg.str());
  csv::write_atomic(cfg.out_dir / "trials.csv", meta.str());
  for (const auto& t : result.trials) {
    for (const auto& trace : t.traces) {
      csv::Writer tr(header + " trial=" + std::to_string(t.trial) + " solver_seed=" + std::to_string(trace.seed));
      tr.columns({"k", "row_touches", "error", "residual"});
      for (const auto& r : trace.records) tr.row(r.k, r.row_touches, r.error, r.residual);
      std::string name = "trial_" + std::to_string(t.trial) + "_" + std::string(to_string(trace.method)) + ".csv";
      csv::write_atomic(cfg.out_dir / "traces" / name, tr.str());
    }
  }

  if (cfg.svg) {
    std::vector<svg::Series> series;
    for (const auto& curve : result.aggregate.curves) {
      svg::Series s{std::string(to_string(curve.method)), {}, curve.mean};
      for (auto t : curve.row_touches) s.x.push_back(static_cast<double>(t));
      series.push_back(std::move(s));
    }
    const auto& e = cfg.experiment;
    const std::string title = std::to_string(e.m) + "x" + std::to_string(e.n) + ", c = " + csv::format(e.c) +
                              ", " + std::to_string(e.trials) + " trials";
    csv::write_atomic(cfg.out_dir / "plot.svg", svg::log_linear_plot(series, title, "row touches", "mean error"));
  }

  for (const auto& curve : result.aggregate.curves) {
    log << to_string(curve.method) << ": final mean error " << csv::format(curve.mean.back()) << " after "
        << curve.row_touches.back() << " row touches\n";
  }
  return result;
}

struct DSurfacePoint {
  double delta = 0.0;
  double Delta = 0.0;
  double D = 0.0;
};

/// D over the grid 0, step, 2 step, ... (capped at 1) for delta <= Delta.
inline std::vector<DSurfacePoint> d_surface(double grid_step) {
  if (!(grid_step > 0.0 && grid_step <= 0.1)) {
    throw Error(ErrorKind::InvalidArgument, "grid step must lie in (0, 0.1]");
  }
  const auto count = static_cast<int>(std::floor(1.0 / grid_step + 1e-9));
  std::vector<double> grid;
  for (int i = 0; i <= count; ++i) grid.push_back(std::min(1.0, i * grid_step));
  std::vector<DSurfacePoint> out;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    for (std::size_t i = 0; i <= j; ++i) out.push_back({grid[i], grid[j], d_factor(grid[i], grid[j])});
  }
  return out;
}

inline std::vector<DSurfacePoint> cmd_dsurface(const CliConfig& cfg, std::ostream& log) {
  auto points = d_surface(cfg.grid_step);
  csv::Writer w(cfg.provenance());
  w.columns({"delta", "Delta", "D"});
  const DSurfacePoint* best = &points.front();
  for (const auto& p : points) {
    w.row(p.delta, p.Delta, p.D);
    if (p.D > best->D) best = &p;
  }
  detail::ensure_dir(cfg.out_dir);
  csv::write_atomic(cfg.out_dir / "dsurface.csv", w.str());
  log << "max D = " << csv::format(best->D) << " at delta = " << csv::format(best->delta)
      << ", Delta = " << csv::format(best->Delta) << '\n';
  return points;
}

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument:
      return usage;
    case ErrorKind::ParseError:
    case ErrorKind::IoError:
    case ErrorKind::DimensionMismatch:
      return input;
    default:
      return numerical;
  }
}

/// Parses argv, runs the chosen subcommand, and returns the process exit code.
inline int main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CliConfig cfg;
  CLI::App app{"Randomized and two-subspace Kaczmarz solvers, rate analysis, and benchmarks", tool_name};
  app.set_version_flag("--version", tool_version);
  app.require_subcommand(1);

  std::string sign_adjust = "off";
  std::string format = "csv";
  std::string out_dir = ".";
  auto* analyze = app.add_subcommand("analyze", "Coherence, condition numbers and predicted rates of a matrix");
  auto* solve_cmd = app.add_subcommand("solve", "Solve a system and write the solution and its trace");
  auto* bench = app.add_subcommand("bench", "Compare methods on random coherent systems");
  auto* dsurface = app.add_subcommand("dsurface", "Tabulate the coherence gain D over (delta, Delta)");

  const auto sign_values = CLI::IsMember({"on", "off"});
  const auto method_values = CLI::IsMember({"cyclic", "rk", "two-subspace"});

  analyze->add_option("matrix", cfg.inputs, "matrix CSV (header-free)")->required()->expected(1);
  analyze->add_flag("--augmented", cfg.augmented, "last column of the matrix is the right-hand side");
  analyze->add_option("--out", out_dir, "output directory");

  solve_cmd->add_option("inputs", cfg.inputs, "matrix CSV, then rhs CSV unless --augmented")->required()->expected(1, 2);
  solve_cmd->add_option("--method", cfg.method_names, "cyclic | rk | two-subspace")
      ->check(method_values)
      ->expected(1);
  solve_cmd->add_option("--iterations", cfg.experiment.iterations, "iteration budget")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--seed", cfg.experiment.seed, "sampling seed");
  solve_cmd->add_option("--sign-adjust", sign_adjust, "on | off")->check(sign_values);
  solve_cmd->add_option("--residual-threshold", cfg.residual_threshold, "stop once ||Ax - b|| falls to this")
      ->check(CLI::NonNegativeNumber);
  solve_cmd->add_flag("--augmented", cfg.augmented, "last column of the matrix is the right-hand side");
  solve_cmd->add_option("--out", out_dir, "output directory");

  bench->add_option("--m", cfg.experiment.m, "rows")->check(CLI::PositiveNumber);
  bench->add_option("--n", cfg.experiment.n, "columns")->check(CLI::PositiveNumber);
  bench->add_option("--c", cfg.experiment.c, "entries uniform on [c, 1]")->check(CLI::Range(-1.0, 1.0));
  bench->add_option("--noise-norm", cfg.experiment.noise_norm, "Euclidean norm of the added noise")
      ->check(CLI::NonNegativeNumber);
  bench->add_option("--iterations", cfg.experiment.iterations, "two-subspace iterations (row touches / 2)")
      ->check(CLI::PositiveNumber);
  bench->add_option("--trials", cfg.experiment.trials, "independent trials")->check(CLI::PositiveNumber);
  bench->add_option("--seed", cfg.experiment.seed, "master seed");
  bench->add_option("--method", cfg.method_names, "methods to compare (repeatable)")->check(method_values);
  bench->add_option("--sign-adjust", sign_adjust, "on | off")->check(sign_values);
  bench->add_option("--format", format, "csv | csv+svg")->check(CLI::IsMember({"csv", "csv+svg"}));
  bench->add_option("--threads", cfg.experiment.threads, "worker threads (0: all cores)");
  bench->add_option("--out", out_dir, "output directory");

  dsurface->add_option("--grid-step", cfg.grid_step, "grid spacing in (0, 0.1]");
  dsurface->add_option("--out", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return usage;
  }

  try {
    cfg.out_dir = out_dir;
    cfg.experiment.sign_adjust = sign_adjust == "on";
    cfg.svg = format == "csv+svg";
    if (!cfg.method_names.empty()) {
      cfg.experiment.methods.clear();
      for (const auto& name : cfg.method_names) {
        const Method m = parse_method(name);
        if (std::find(cfg.experiment.methods.begin(), cfg.experiment.methods.end(), m) ==
            cfg.experiment.methods.end()) {
          cfg.experiment.methods.push_back(m);
        }
      }
    }
    if (*analyze) {
      cfg.subcommand = "analyze";
      cmd_analyze(cfg, out);
    } else if (*solve_cmd) {
      cfg.subcommand = "solve";
      if (cfg.method_names.empty()) cfg.experiment.methods = {Method::two_subspace};
      if (cfg.augmented && cfg.inputs.size() > 1) {
        throw Error(ErrorKind::InvalidArgument, "--augmented takes a single matrix path");
      }
      cmd_solve(cfg, out);
    } else if (*bench) {
      cfg.subcommand = "bench";
      cmd_bench(cfg, out);
    } else if (*dsurface) {
      cfg.subcommand = "dsurface";
      cmd_dsurface(cfg, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return numerical;
  }
  return ok;
}

}  // namespace kaczmarz::cli
