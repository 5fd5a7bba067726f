#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "kaczmarz/error.hpp"
#include "kaczmarz/matrix_core.hpp"

namespace kaczmarz {

/// Scaled condition numbers and coherence-derived gains of one system.
struct RateFactors {
  double delta = 0.0;
  double Delta = 0.0;
  double R = 0.0;
  double D = 0.0;
  double E = 0.0;
  /// +inf when the difference matrix is rank deficient (then E/Q = 0).
  double Q = std::numeric_limits<double>::infinity();
  double eta = 0.0;           // (1 - 1/R)^2 - D/R
  double eta_improved = 0.0;  // eta - E/Q
};

struct NoiseModel {
  double w_inf = 0.0;  // ||w||_inf
  double Delta = 0.0;
};

/// A bound that may have been clamped at zero because its base went negative.
struct BoundValue {
  double value = 0.0;
  bool clamped = false;
};

namespace detail {

inline void check_r(double R) {
  if (!(R >= 1.0) || !std::isfinite(R)) {
    throw Error(ErrorKind::InvalidR, "scaled condition number must be >= 1, got " + std::to_string(R));
  }
}

inline void check_k(std::int64_t k) {
  if (k < 0) throw Error(ErrorKind::InvalidArgument, "iteration count must be nonnegative");
}

}  // namespace detail

/// Expected squared error bound of randomized Kaczmarz after k iterations.
inline double rk_bound(double R, std::int64_t k, double err0_sq) {
  detail::check_r(R);
  detail::check_k(k);
  return std::pow(1.0 - 1.0 / R, static_cast<double>(k)) * err0_sq;
}

/// Expected error bound of randomized Kaczmarz with measurement noise w.
inline double rk_noise_bound(double R, std::int64_t k, double err0, double w_inf) {
  detail::check_r(R);
  detail::check_k(k);
  return std::pow(1.0 - 1.0 / R, 0.5 * static_cast<double>(k)) * err0 + std::sqrt(R) * w_inf;
}

inline double d_factor(double delta, double Delta) {
  if (!(0.0 <= delta && delta <= Delta && Delta <= 1.0)) {
    throw Error(ErrorKind::InvalidCoherence, "need 0 <= delta <= Delta <= 1, got delta=" + std::to_string(delta) +
                                                 " Delta=" + std::to_string(Delta));
  }
  auto gain = [](double t) { return t * t * (1.0 - t) / (1.0 + t); };
  return std::min(gain(delta), gain(Delta));
}

/// (|mu| - mu^2) / sqrt(1 - mu^2)
inline double c_rs(double mu) {
  if (!(std::abs(mu) < 1.0)) throw Error(ErrorKind::DegenerateMu, "|mu| must be < 1");
  const double a = std::abs(mu);
  return (a - mu * mu) / std::sqrt(1.0 - mu * mu);
}

struct ImprovedCoefficients {
  double c = 0.0;  // mu^2 (1 - mu) / (1 + mu)
  double e = 0.0;  // 4 mu^3, negative for negative correlations
};

inline ImprovedCoefficients c_rs_improved(double mu) {
  if (!(mu > -1.0)) throw Error(ErrorKind::DegenerateMu, "mu must be > -1");
  return {mu * mu * (1.0 - mu) / (1.0 + mu), 4.0 * mu * mu * mu};
}

inline double e_ij(double mu) { return c_rs_improved(mu).e; }

/// Right-hand side of the single-iteration bound
///   (1 - 1/R)^2 ||e||^2 - 1/(m^2 - m) sum_{r<s} C_rs^2 (<e,a_r>^2 + <e,a_s>^2)
/// with e = x_true - x_prev. Parallel pairs contribute C_rs = 0.
inline double lemma_main_rhs(const StandardizedSystem& s, double R, const Vector& x_true, const Vector& x_prev) {
  detail::check_r(R);
  const Index m = s.rows();
  if (m < 2) throw Error(ErrorKind::TooFewRows, "bound needs at least two rows");
  const Vector e = x_true - x_prev;
  const Vector proj = s.matrix() * e;
  double sum = 0.0;
  for (Index r = 0; r < m; ++r) {
    for (Index q = r + 1; q < m; ++q) {
      const double mu = s.row(r).dot(s.row(q));
      if (std::abs(mu) >= 1.0) continue;
      const double c = c_rs(mu);
      sum += c * c * (proj(r) * proj(r) + proj(q) * proj(q));
    }
  }
  const double base = 1.0 - 1.0 / R;
  return base * base * e.squaredNorm() - sum / static_cast<double>(m * m - m);
}

inline double lemma_main_rhs(const StandardizedSystem& s, const Vector& x_true, const Vector& x_prev) {
  return lemma_main_rhs(s, condition_stats(s.matrix()).scaled_condition, x_true, x_prev);
}

/// Per-iteration contraction factor of the two-subspace method.
inline double two_srk_factor(double R, double D) {
  detail::check_r(R);
  const double base = 1.0 - 1.0 / R;
  return base * base - D / R;
}

inline double improved_factor(double R, double D, double Q, double E) {
  return two_srk_factor(R, D) - E / Q;
}

namespace detail {

inline BoundValue power_bound(double factor, std::int64_t k, double err0_sq) {
  check_k(k);
  if (k == 0) return {err0_sq, false};
  if (factor < 0.0) return {0.0, true};
  return {std::pow(factor, static_cast<double>(k)) * err0_sq, false};
}

}  // namespace detail

inline BoundValue two_srk_bound(double R, double D, std::int64_t k, double err0_sq) {
  return detail::power_bound(two_srk_factor(R, D), k, err0_sq);
}

inline BoundValue improved_bound(double R, double D, double Q, double E, std::int64_t k, double err0_sq) {
  return detail::power_bound(improved_factor(R, D, Q, E), k, err0_sq);
}

/// Noise floor 3 ||w||_inf / ((1 - sqrt(eta)) sqrt(1 - Delta^2)) of the two-subspace method.
inline double noise_threshold(double eta, double Delta, double w_inf) {
  if (!(eta >= 0.0 && eta < 1.0)) throw Error(ErrorKind::InvalidEta, "eta must lie in [0, 1), got " + std::to_string(eta));
  if (!(Delta < 1.0 - 1e-12)) throw Error(ErrorKind::DegenerateDelta, "Delta too close to 1");
  if (w_inf < 0.0) throw Error(ErrorKind::InvalidArgument, "noise level must be nonnegative");
  return 3.0 * w_inf / ((1.0 - std::sqrt(eta)) * std::sqrt(1.0 - Delta * Delta));
}

inline double noise_threshold(double eta, const NoiseModel& noise) { return noise_threshold(eta, noise.Delta, noise.w_inf); }

inline double two_srk_noise_bound(double eta, double Delta, double w_inf, std::int64_t k, double err0) {
  detail::check_k(k);
  const double floor = noise_threshold(eta, Delta, w_inf);
  return std::pow(eta, 0.5 * static_cast<double>(k)) * err0 + floor;
}

/// All rate quantities of a standardized, full-rank system. The difference
/// matrix is only formed when `with_omega` is set.
inline RateFactors rate_factors(const StandardizedSystem& s, bool with_omega = true) {
  RateFactors f;
  const CoherenceStats coh = coherence(s);
  f.delta = coh.delta;
  f.Delta = coh.Delta;
  f.R = condition_stats(s.matrix()).scaled_condition;
  f.D = d_factor(f.delta, f.Delta);
  f.E = 4.0 * f.delta * f.delta * f.delta;
  if (with_omega) {
    try {
      f.Q = omega_condition_stats(s).scaled_condition;
    } catch (const Error& err) {
      if (err.kind() != ErrorKind::RankDeficient) throw;
      f.Q = std::numeric_limits<double>::infinity();
    }
  }
  f.eta = two_srk_factor(f.R, f.D);
  f.eta_improved = f.eta - f.E / f.Q;
  return f;
}

}  // namespace kaczmarz
