#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "kaczmarz/bounds.hpp"
#include "kaczmarz/error.hpp"
#include "kaczmarz/matrix_core.hpp"
#include "kaczmarz/rng.hpp"
#include "kaczmarz/solvers.hpp"

namespace kaczmarz {

struct ExperimentConfig {
  Index m = 500;
  Index n = 50;
  double c = 0.0;  // entries are i.i.d. uniform on [c, 1]
  double noise_norm = 0.0;
  std::int64_t iterations = 500;  // iterations of the widest method; sets the row-touch budget
  std::int64_t trials = 1;
  std::uint64_t seed = 0;
  std::vector<Method> methods{Method::rk, Method::two_subspace};
  bool sign_adjust = false;
  unsigned threads = 0;  // 0: hardware concurrency

  void validate() const {
    if (n < 1 || m < n) throw Error(ErrorKind::InvalidArgument, "need m >= n >= 1");
    if (iterations < 1) throw Error(ErrorKind::InvalidArgument, "iterations must be >= 1");
    if (trials < 1) throw Error(ErrorKind::InvalidArgument, "trials must be >= 1");
    if (!(c >= -1.0 && c < 1.0)) throw Error(ErrorKind::InvalidArgument, "c must lie in [-1, 1)");
    if (!(noise_norm >= 0.0) || !std::isfinite(noise_norm)) {
      throw Error(ErrorKind::InvalidArgument, "noise norm must be finite and nonnegative");
    }
    if (methods.empty()) throw Error(ErrorKind::InvalidArgument, "no methods requested");
  }

  /// Row touches between two plotted points: every method has a record there.
  std::int64_t touch_stride() const {
    int stride = 1;
    for (Method method : methods) stride = std::max(stride, row_touches_per_iteration(method));
    return stride;
  }

  std::int64_t row_touch_budget() const { return iterations * touch_stride(); }
};

struct GeneratedSystem {
  StandardizedSystem system;
  Vector x_true;
};

/// Raw entries i.i.d. uniform on [c, 1], x_true i.i.d. standard normal,
/// b = A x_true, then rows standardized.
inline GeneratedSystem gen_uniform_system(Index m, Index n, double c, std::uint64_t seed) {
  if (!(c >= -1.0 && c < 1.0)) throw Error(ErrorKind::InvalidArgument, "c must lie in [-1, 1)");
  if (m < 1 || n < 1) throw Error(ErrorKind::InvalidArgument, "dimensions must be positive");
  Rng rng(seed);
  std::uniform_real_distribution<double> entry(c, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  DenseMatrix a(m, n);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n; ++j) a(i, j) = entry(rng);
  }
  Vector x(n);
  for (Index j = 0; j < n; ++j) x(j) = gauss(rng);
  Vector b = a * x;
  return {standardize(a, b), std::move(x)};
}

struct NoisyRhs {
  Vector b;
  Vector w;
};

/// Adds Gaussian noise rescaled to have Euclidean norm exactly `noise_norm`.
inline NoisyRhs add_noise(const Vector& b, double noise_norm, std::uint64_t seed) {
  if (!(noise_norm >= 0.0)) throw Error(ErrorKind::InvalidArgument, "noise norm must be nonnegative");
  Vector w = Vector::Zero(b.size());
  if (noise_norm > 0.0 && b.size() > 0) {
    Rng rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (Index i = 0; i < w.size(); ++i) w(i) = gauss(rng);
    w *= noise_norm / w.norm();
  }
  return {b + w, std::move(w)};
}

/// Largest system the exhaustive pair sweep accepts.
inline constexpr Index brute_force_max_rows = 64;

/// Exact conditional expectation of ||x_true - x_next||^2 for one
/// two-subspace step from x_prev: the mean over every usable ordered pair.
inline double brute_force_expectation(const StandardizedSystem& s, const Vector& x_true, const Vector& x_prev,
                                      bool sign_adjust) {
  const Index m = s.rows();
  if (m < 2) throw Error(ErrorKind::TooFewRows, "need at least two rows");
  if (m > brute_force_max_rows) {
    throw Error(ErrorKind::TooLarge, "exhaustive sweep limited to " + std::to_string(brute_force_max_rows) + " rows");
  }
  double total = 0.0;
  std::int64_t used = 0;
  for (Index r = 0; r < m; ++r) {
    for (Index q = 0; q < m; ++q) {
      if (r == q) continue;
      if (std::abs(s.row(r).dot(s.row(q))) >= 1.0 - tol::degenerate_pair) continue;
      const PairGeometry g = pair_geometry(s, r, q, sign_adjust);
      total += (x_true - two_subspace_update(x_prev, s, g)).squaredNorm();
      ++used;
    }
  }
  if (used == 0) throw Error(ErrorKind::DegeneratePair, "all row pairs are parallel");
  return total / static_cast<double>(used);
}

struct TrialResult {
  std::int64_t trial = 0;
  std::uint64_t seed = 0;  // sub-seed of the system draw
  RateFactors factors;     // Q is not computed here
  double w_inf = 0.0;
  double err0 = 0.0;
  std::vector<SolveTrace> traces;  // one per requested method, same order
};

/// Error statistics across trials at the shared row-touch abscissae.
struct MethodCurve {
  Method method = Method::rk;
  std::vector<std::int64_t> row_touches;
  std::vector<double> mean;
  std::vector<double> median;
  std::vector<double> min;
  std::vector<double> max;
};

struct AggregateTrace {
  std::vector<MethodCurve> curves;
};

struct ComparisonResult {
  ExperimentConfig config;
  std::vector<TrialResult> trials;
  AggregateTrace aggregate;
};

namespace detail {

enum Stream : std::uint64_t { system_stream = 0, noise_stream = 1, start_stream = 2, solver_stream = 3 };

inline TrialResult run_trial(const ExperimentConfig& config, std::int64_t trial) {
  const auto t = static_cast<std::uint64_t>(trial);
  TrialResult out;
  out.trial = trial;
  out.seed = derive_seed(config.seed, t, system_stream);

  GeneratedSystem gen = gen_uniform_system(config.m, config.n, config.c, out.seed);
  const NoisyRhs noisy = add_noise(gen.system.rhs(), config.noise_norm, derive_seed(config.seed, t, noise_stream));
  const StandardizedSystem system = gen.system.with_rhs(noisy.b);
  out.w_inf = noisy.w.size() ? noisy.w.cwiseAbs().maxCoeff() : 0.0;
  out.factors = rate_factors(gen.system, /*with_omega=*/false);

  Rng start_rng(derive_seed(config.seed, t, start_stream));
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector x0(config.n);
  for (Index j = 0; j < config.n; ++j) x0(j) = gauss(start_rng);
  out.err0 = (gen.x_true - x0).norm();

  const std::int64_t budget = config.row_touch_budget();
  for (Method method : config.methods) {
    SolveOptions options;
    options.method = method;
    options.x0 = x0;
    options.stop.max_iterations = budget / row_touches_per_iteration(method);
    options.seed = derive_seed(config.seed, t, solver_stream + static_cast<std::uint64_t>(method));
    options.sign_adjust = config.sign_adjust;
    options.x_true = gen.x_true;
    out.traces.push_back(solve(system, options));
  }
  return out;
}

template <typename Fn>
void parallel_for(std::int64_t count, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::int64_t>(threads, count));
  if (threads <= 1) {
    for (std::int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&]() {
      for (std::int64_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
}

inline double median_of(std::vector<double> values) {
  const std::size_t n = values.size();
  std::sort(values.begin(), values.end());
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace detail

inline AggregateTrace aggregate(const ExperimentConfig& config, const std::vector<TrialResult>& trials) {
  AggregateTrace out;
  const std::int64_t stride = config.touch_stride();
  const std::int64_t budget = config.row_touch_budget();
  for (std::size_t j = 0; j < config.methods.size(); ++j) {
    MethodCurve curve;
    curve.method = config.methods[j];
    const int factor = row_touches_per_iteration(curve.method);
    std::vector<double> column(trials.size());
    for (std::int64_t touch = 0; touch <= budget; touch += stride) {
      const auto k = static_cast<std::size_t>(touch / factor);
      for (std::size_t t = 0; t < trials.size(); ++t) {
        const auto& records = trials[t].traces[j].records;
        column[t] = records[std::min(k, records.size() - 1)].error;
      }
      double sum = 0.0;
      for (double v : column) sum += v;
      curve.row_touches.push_back(touch);
      curve.mean.push_back(sum / static_cast<double>(column.size()));
      curve.median.push_back(detail::median_of(column));
      curve.min.push_back(*std::min_element(column.begin(), column.end()));
      curve.max.push_back(*std::max_element(column.begin(), column.end()));
    }
    out.curves.push_back(std::move(curve));
  }
  return out;
}

/// Runs every requested method on `trials` freshly drawn systems from a
/// shared random start point and aggregates errors on the row-touch axis.
/// Trials may run concurrently; results do not depend on scheduling.
inline ComparisonResult run_comparison(const ExperimentConfig& config) {
  config.validate();
  ComparisonResult out;
  out.config = config;
  out.trials.resize(static_cast<std::size_t>(config.trials));
  detail::parallel_for(config.trials, config.threads, [&](std::int64_t t) {
    out.trials[static_cast<std::size_t>(t)] = detail::run_trial(config, t);
  });
  out.aggregate = aggregate(config, out.trials);
  return out;
}

struct SemiconvergenceResult {
  std::int64_t k_min_error = 0;  // iteration of the scanned method with least mean error
  std::vector<double> curve;      // mean error per iteration
  std::int64_t trials_with_interior_min = 0;
  ComparisonResult comparison;
};

/// Locates the iteration of least mean error. Observational only: no
/// stopping rule is derived from it.
inline SemiconvergenceResult semiconvergence_scan(ExperimentConfig config, Method method = Method::two_subspace) {
  if (std::find(config.methods.begin(), config.methods.end(), method) == config.methods.end()) {
    config.methods.push_back(method);
  }
  SemiconvergenceResult out;
  out.comparison = run_comparison(config);
  const auto j = static_cast<std::size_t>(
      std::find(config.methods.begin(), config.methods.end(), method) - config.methods.begin());

  const auto& first = out.comparison.trials.front().traces[j].records;
  out.curve.assign(first.size(), 0.0);
  for (const auto& trial : out.comparison.trials) {
    const auto& records = trial.traces[j].records;
    for (std::size_t k = 0; k < records.size(); ++k) out.curve[k] += records[k].error;
    auto best = std::min_element(records.begin(), records.end(),
                                 [](const TraceRecord& a, const TraceRecord& b) { return a.error < b.error; });
    if (best + 1 != records.end()) ++out.trials_with_interior_min;
  }
  for (double& v : out.curve) v /= static_cast<double>(out.comparison.trials.size());
  out.k_min_error = std::min_element(out.curve.begin(), out.curve.end()) - out.curve.begin();
  return out;
}

}  // namespace kaczmarz
