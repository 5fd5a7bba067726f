#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kaczmarz/error.hpp"
#include "kaczmarz/matrix_core.hpp"
#include "kaczmarz/rng.hpp"

namespace kaczmarz {

enum class Method { cyclic, rk, two_subspace };

inline std::string_view to_string(Method method) {
  switch (method) {
    case Method::cyclic: return "cyclic";
    case Method::rk: return "rk";
    case Method::two_subspace: return "two-subspace";
  }
  return "unknown";
}

inline Method parse_method(std::string_view name) {
  if (name == "cyclic") return Method::cyclic;
  if (name == "rk") return Method::rk;
  if (name == "two-subspace" || name == "two_subspace") return Method::two_subspace;
  throw Error(ErrorKind::InvalidArgument, "unknown method '" + std::string(name) + "'");
}

/// Rows consumed by one iteration of `method`.
constexpr int row_touches_per_iteration(Method method) { return method == Method::two_subspace ? 2 : 1; }

/// Iterate, iteration counter and the sampling stream of one solve.
struct SolverState {
  Vector x;
  std::int64_t k = 0;
  Rng rng;

  SolverState(Vector x0, std::uint64_t seed) : x(std::move(x0)), rng(seed) {}
};

/// Everything one two-subspace iteration needs for the pair (r, s).
///
/// With `flipped` set the step uses -a_r and -b_r, which makes mu >= 0
/// without changing the hyperplane being projected on.
struct PairGeometry {
  Index r = 0;
  Index s = 0;
  double mu = 0.0;
  double gamma = 1.0;
  Vector v;
  double beta = 0.0;
  bool flipped = false;
};

struct StoppingRule {
  std::int64_t max_iterations = 1;
  std::optional<double> residual_threshold;
};

struct TraceRecord {
  std::int64_t k = 0;
  std::int64_t row_touches = 0;
  double error = 0.0;  // NaN when the true solution is unknown
  double residual = 0.0;
};

struct SolveTrace {
  Method method = Method::rk;
  std::uint64_t seed = 0;
  bool sign_adjust = false;
  int accounting_factor = 1;
  std::vector<TraceRecord> records;
  Vector solution;

  std::int64_t iterations() const { return records.empty() ? 0 : records.back().k; }
};

struct SolveOptions {
  Method method = Method::rk;
  std::optional<Vector> x0;  // zero vector when absent
  StoppingRule stop;
  std::uint64_t seed = 0;
  bool sign_adjust = false;
  std::optional<Vector> x_true;
};

namespace detail {

inline void check_row(const StandardizedSystem& s, Index r) {
  if (r < 0 || r >= s.rows()) {
    throw Error(ErrorKind::IndexOutOfRange,
                "row " + std::to_string(r + 1) + " outside 1.." + std::to_string(s.rows()));
  }
}

inline void check_iterate(const StandardizedSystem& s, const Vector& x) {
  if (x.size() != s.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "iterate length " + std::to_string(x.size()) +
                                                  " does not match column count " + std::to_string(s.cols()));
  }
}

}  // namespace detail

/// Orthogonal projection of x onto the hyperplane <a_r, x> = b_r.
inline void project_onto_row(Vector& x, const StandardizedSystem& s, Index r) {
  x += (s.rhs(r) - s.row(r).dot(x)) * s.row(r).transpose();
}

inline void rk_step(SolverState& state, const StandardizedSystem& s, Index r) {
  detail::check_row(s, r);
  detail::check_iterate(s, state.x);
  project_onto_row(state.x, s, r);
  ++state.k;
}

/// Uniform row index in [0, m), drawn with replacement.
inline Index sample_row(SolverState& state, Index m) {
  if (m < 1) throw Error(ErrorKind::TooFewRows, "cannot sample from an empty matrix");
  std::uniform_int_distribution<Index> pick(0, m - 1);
  return pick(state.rng);
}

/// Uniform ordered pair (r, s) with r != s.
inline std::pair<Index, Index> sample_pair(SolverState& state, Index m) {
  if (m < 2) throw Error(ErrorKind::TooFewRows, "pair sampling needs at least two rows");
  std::uniform_int_distribution<Index> first(0, m - 1);
  std::uniform_int_distribution<Index> second(0, m - 2);
  const Index r = first(state.rng);
  Index s = second(state.rng);
  if (s >= r) ++s;
  return {r, s};
}

inline PairGeometry pair_geometry(const StandardizedSystem& s, Index r, Index q, bool sign_adjust) {
  detail::check_row(s, r);
  detail::check_row(s, q);
  PairGeometry g;
  g.r = r;
  g.s = q;
  double mu = s.row(r).dot(s.row(q));
  if (std::abs(mu) >= 1.0 - tol::degenerate_pair) {
    throw Error(ErrorKind::DegeneratePair, "rows " + std::to_string(r + 1) + " and " + std::to_string(q + 1) +
                                               " are parallel (mu = " + std::to_string(mu) + ")");
  }
  double sign = 1.0;
  if (sign_adjust && mu < 0.0) {
    sign = -1.0;
    mu = -mu;
    g.flipped = true;
  }
  g.mu = mu;
  // computed norm of a_r - mu a_s in place of sqrt(1 - mu^2)
  const Vector w = (sign * s.row(r) - mu * s.row(q)).transpose();
  g.gamma = w.norm();
  g.v = w / g.gamma;
  g.beta = (sign * s.rhs(r) - s.rhs(q) * mu) / g.gamma;
  return g;
}

/// Projection of x onto {<a_r, x> = b_r, <a_s, x> = b_s}: first onto row s,
/// then along v, the unit direction of a_r orthogonal to a_s.
inline Vector two_subspace_update(const Vector& x, const StandardizedSystem& s, const PairGeometry& g) {
  const auto a_s = s.row(g.s);
  Vector y = x + (s.rhs(g.s) - a_s.dot(x)) * a_s.transpose();
  y += (g.beta - y.dot(g.v)) * g.v;
  return y;
}

inline void two_subspace_step(SolverState& state, const StandardizedSystem& s, const PairGeometry& g) {
  detail::check_row(s, g.r);
  detail::check_row(s, g.s);
  detail::check_iterate(s, state.x);
  state.x = two_subspace_update(state.x, s, g);
  ++state.k;
}

/// Weight of the intermediate step along a_r that makes the two-step
/// procedure land on the two-row projection. The unknown solution enters only
/// through <a_r, x> = b_r and <a_s, x> = b_s. Returns 0 when the r-residual
/// vanishes.
inline double epsilon_opt(const Vector& x, const StandardizedSystem& s, Index r, Index q) {
  detail::check_row(s, r);
  detail::check_row(s, q);
  detail::check_iterate(s, x);
  const double mu = s.row(r).dot(s.row(q));
  if (std::abs(mu) >= 1.0 - tol::degenerate_pair) {
    throw Error(ErrorKind::DegeneratePair, "rows " + std::to_string(r + 1) + " and " + std::to_string(q + 1) +
                                               " are parallel");
  }
  const double res_r = s.rhs(r) - s.row(r).dot(x);
  if (res_r == 0.0) return 0.0;
  const double res_s = s.rhs(q) - s.row(q).dot(x);
  // ||a_r - mu a_s||^2 stands for 1 - mu^2, as in pair_geometry
  const double gamma_sq = (s.row(r) - mu * s.row(q)).squaredNorm();
  return (res_r - mu * res_s) / (res_r * gamma_sq);
}

/// y = x + eps (b_r - <x, a_r>) a_r, then project y onto row s.
inline Vector two_step_with_epsilon(const Vector& x, const StandardizedSystem& s, Index r, Index q, double eps) {
  detail::check_row(s, r);
  detail::check_row(s, q);
  detail::check_iterate(s, x);
  Vector y = x + eps * (s.rhs(r) - s.row(r).dot(x)) * s.row(r).transpose();
  project_onto_row(y, s, q);
  return y;
}

/// True when some pair of rows is not parallel, i.e. a two-subspace step exists.
inline bool has_usable_pair(const StandardizedSystem& s) {
  for (Index j = 0; j < s.rows(); ++j) {
    for (Index i = j + 1; i < s.rows(); ++i) {
      if (std::abs(s.row(j).dot(s.row(i))) < 1.0 - tol::degenerate_pair) return true;
    }
  }
  return false;
}

inline SolveTrace solve(const StandardizedSystem& s, const SolveOptions& options) {
  if (options.stop.max_iterations < 1) {
    throw Error(ErrorKind::InvalidArgument, "max_iterations must be at least 1");
  }
  if (options.stop.residual_threshold && !(*options.stop.residual_threshold >= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "residual threshold must be nonnegative");
  }
  Vector x0 = options.x0 ? *options.x0 : Vector::Zero(s.cols());
  detail::check_iterate(s, x0);
  if (options.x_true) detail::check_iterate(s, *options.x_true);
  if (options.method == Method::two_subspace) {
    if (s.rows() < 2) throw Error(ErrorKind::TooFewRows, "two-subspace method needs at least two rows");
    if (!has_usable_pair(s)) throw Error(ErrorKind::DegeneratePair, "all row pairs are parallel");
  }

  SolveTrace trace;
  trace.method = options.method;
  trace.seed = options.seed;
  trace.sign_adjust = options.sign_adjust;
  trace.accounting_factor = row_touches_per_iteration(options.method);
  trace.records.reserve(static_cast<std::size_t>(options.stop.max_iterations) + 1);

  SolverState state(std::move(x0), options.seed);
  auto record = [&]() {
    const double err = options.x_true ? (*options.x_true - state.x).norm() : std::numeric_limits<double>::quiet_NaN();
    const double res = s.residual_norm(state.x);
    trace.records.push_back({state.k, state.k * trace.accounting_factor, err, res});
    return res;
  };
  auto below_threshold = [&](double res) {
    return options.stop.residual_threshold && res <= *options.stop.residual_threshold;
  };

  double res = record();
  while (state.k < options.stop.max_iterations && !below_threshold(res)) {
    switch (options.method) {
      case Method::cyclic:
        rk_step(state, s, static_cast<Index>(state.k % s.rows()));
        break;
      case Method::rk:
        rk_step(state, s, sample_row(state, s.rows()));
        break;
      case Method::two_subspace:
        for (;;) {
          const auto [r, q] = sample_pair(state, s.rows());
          if (std::abs(s.row(r).dot(s.row(q))) >= 1.0 - tol::degenerate_pair) continue;
          two_subspace_step(state, s, pair_geometry(s, r, q, options.sign_adjust));
          break;
        }
        break;
    }
    res = record();
  }
  trace.solution = state.x;
  return trace;
}

}  // namespace kaczmarz
