#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "kaczmarz/error.hpp"

namespace kaczmarz {

using Index = Eigen::Index;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// A dense real matrix, row-major so that each row a_i is contiguous.
using DenseMatrix = Matrix;

namespace tol {
/// Row norms at or below this are treated as zero rows.
inline constexpr double zero_row = 1e-12;
/// Allowed deviation of a standardized row norm from 1.
inline constexpr double unit_norm = 1e-12;
/// sigma_min / sigma_max at or below this means rank deficient.
inline constexpr double rank_ratio = 1e-10;
/// Pairs with |mu| >= 1 - degenerate_pair are considered parallel.
inline constexpr double degenerate_pair = 1e-10;
/// Rows closer than this produce a zero difference row.
inline constexpr double duplicate_row = 1e-12;
}  // namespace tol

inline void require_finite(const DenseMatrix& a, const char* what) {
  if (a.rows() < 1 || a.cols() < 1) {
    throw Error(ErrorKind::DimensionMismatch, std::string(what) + " must have at least one row and column");
  }
  if (!a.allFinite()) {
    throw Error(ErrorKind::InvalidArgument, std::string(what) + " contains non-finite entries");
  }
}

/// A linear system A x = b whose rows a_i all have unit Euclidean norm.
///
/// Instances are immutable. The only ways to obtain one are `standardize`,
/// which rescales rows, and `StandardizedSystem::from_unit_rows`, which
/// validates rows that are already normalized.
class StandardizedSystem {
 public:
  static StandardizedSystem from_unit_rows(DenseMatrix a, Vector b) {
    require_finite(a, "matrix");
    if (b.size() != a.rows()) {
      throw Error(ErrorKind::DimensionMismatch, "rhs length " + std::to_string(b.size()) +
                                                    " does not match row count " + std::to_string(a.rows()));
    }
    for (Index i = 0; i < a.rows(); ++i) {
      if (std::abs(a.row(i).norm() - 1.0) > tol::unit_norm) {
        throw Error(ErrorKind::InvalidArgument, "row " + std::to_string(i + 1) + " is not unit norm");
      }
    }
    return StandardizedSystem(std::move(a), std::move(b));
  }

  const DenseMatrix& matrix() const noexcept { return a_; }
  const Vector& rhs() const noexcept { return b_; }
  Index rows() const noexcept { return a_.rows(); }
  Index cols() const noexcept { return a_.cols(); }

  auto row(Index i) const { return a_.row(i); }
  double rhs(Index i) const { return b_(i); }

  /// Same rows, different measurements (used to perturb b with noise).
  StandardizedSystem with_rhs(Vector b) const {
    if (b.size() != a_.rows()) {
      throw Error(ErrorKind::DimensionMismatch, "rhs length does not match row count");
    }
    return StandardizedSystem(a_, std::move(b));
  }

  /// ||A x - b||_2
  double residual_norm(const Vector& x) const { return (a_ * x - b_).norm(); }

 private:
  StandardizedSystem(DenseMatrix a, Vector b) : a_(std::move(a)), b_(std::move(b)) {}

  DenseMatrix a_;
  Vector b_;

  friend StandardizedSystem standardize(const DenseMatrix& a, const Vector& b);
};

/// Scales each equation so that its row has unit norm. The solution set is unchanged.
inline StandardizedSystem standardize(const DenseMatrix& a, const Vector& b) {
  require_finite(a, "matrix");
  if (b.size() != a.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "rhs length " + std::to_string(b.size()) +
                                                  " does not match row count " + std::to_string(a.rows()));
  }
  DenseMatrix out(a.rows(), a.cols());
  Vector rhs(b.size());
  for (Index i = 0; i < a.rows(); ++i) {
    const double norm = a.row(i).norm();
    if (norm <= tol::zero_row) {
      throw Error(ErrorKind::ZeroRow, "row " + std::to_string(i + 1) + " has zero norm");
    }
    out.row(i) = a.row(i) / norm;
    rhs(i) = b(i) / norm;
  }
  return StandardizedSystem(std::move(out), std::move(rhs));
}

inline StandardizedSystem standardize(const StandardizedSystem& s) { return standardize(s.matrix(), s.rhs()); }

struct CoherenceStats {
  double delta = 0.0;  // min |<a_j, a_k>| over j != k
  double Delta = 0.0;  // max |<a_j, a_k>| over j != k
};

inline CoherenceStats coherence(const StandardizedSystem& s) {
  const Index m = s.rows();
  if (m < 2) throw Error(ErrorKind::TooFewRows, "coherence needs at least two rows");
  const DenseMatrix& a = s.matrix();
  double lo = 1.0;
  double hi = 0.0;
  for (Index j = 0; j < m; ++j) {
    for (Index k = j + 1; k < m; ++k) {
      const double mu = std::abs(a.row(j).dot(a.row(k)));
      lo = std::min(lo, mu);
      hi = std::max(hi, mu);
    }
  }
  return {std::clamp(lo, 0.0, 1.0), std::clamp(hi, 0.0, 1.0)};
}

/// Frobenius mass and smallest singular value; `scaled_condition` is
/// ||M||_F^2 / sigma_min^2, i.e. R for A and Q for the difference matrix.
struct ConditionStats {
  double frob_sq = 0.0;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  double scaled_condition = 0.0;
};

namespace detail {

inline ConditionStats finish_condition(double frob_sq, const Vector& singular_values) {
  const double smax = singular_values.size() ? singular_values.maxCoeff() : 0.0;
  const double smin = singular_values.size() ? singular_values.minCoeff() : 0.0;
  if (!(smax > 0.0) || smin / smax <= tol::rank_ratio) {
    throw Error(ErrorKind::RankDeficient, "matrix is not of full column rank (sigma_min/sigma_max = " +
                                              std::to_string(smax > 0.0 ? smin / smax : 0.0) + ")");
  }
  return {frob_sq, smin, smax, frob_sq / (smin * smin)};
}

}  // namespace detail

inline ConditionStats condition_stats(const DenseMatrix& m) {
  require_finite(m, "matrix");
  if (m.rows() < m.cols()) {
    throw Error(ErrorKind::RankDeficient, "fewer rows than columns");
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  return detail::finish_condition(m.squaredNorm(), svd.singularValues());
}

/// The m^2 x n matrix of normalized row differences. Row m*j + i (0-based)
/// holds (a_j - a_i)/||a_j - a_i||, and is zero when j == i or the rows coincide.
struct OmegaMatrix {
  Index base_m = 0;
  DenseMatrix matrix;

  Index index(Index j, Index i) const { return base_m * j + i; }
};

/// Writes the normalized difference (a_j - a_i)/||a_j - a_i|| into `out`;
/// returns false (and zeroes `out`) for coincident rows.
template <typename Out>
bool omega_row(const StandardizedSystem& s, Index j, Index i, Out&& out) {
  out = s.row(j) - s.row(i);
  const double norm = out.norm();
  if (j == i || norm <= tol::duplicate_row) {
    out.setZero();
    return false;
  }
  out /= norm;
  return true;
}

inline OmegaMatrix omega(const StandardizedSystem& s) {
  const Index m = s.rows();
  if (m < 2) throw Error(ErrorKind::TooFewRows, "difference matrix needs at least two rows");
  OmegaMatrix out{m, DenseMatrix::Zero(m * m, s.cols())};
  for (Index j = 0; j < m; ++j) {
    for (Index i = 0; i < m; ++i) {
      omega_row(s, j, i, out.matrix.row(out.index(j, i)));
    }
  }
  return out;
}

inline ConditionStats condition_stats(const OmegaMatrix& omega) { return condition_stats(omega.matrix); }

/// Condition stats of the difference matrix without materializing it.
///
/// Rows are streamed through a running QR factorization (R stacked on a
/// block of new rows, refactored), so memory stays O(n^2) and sigma_min is
/// read from R without squaring the condition number. Row (j,i) is the
/// negation of row (i,j), so each unordered pair enters once with weight
/// sqrt(2).
inline ConditionStats omega_condition_stats(const StandardizedSystem& s) {
  const Index m = s.rows();
  const Index n = s.cols();
  if (m < 2) throw Error(ErrorKind::TooFewRows, "difference matrix needs at least two rows");

  const Index block = std::max<Index>(4 * n, 256);
  Eigen::MatrixXd stack = Eigen::MatrixXd::Zero(n + block, n);
  Eigen::MatrixXd r_factor = Eigen::MatrixXd::Zero(n, n);
  Index filled = 0;
  double frob_sq = 0.0;
  Eigen::RowVectorXd w(n);

  auto flush = [&]() {
    if (filled == 0) return;
    stack.topRows(n) = r_factor;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(stack.topRows(n + filled));
    r_factor = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    filled = 0;
  };

  const double weight = std::sqrt(2.0);
  for (Index j = 0; j < m; ++j) {
    for (Index i = j + 1; i < m; ++i) {
      if (!omega_row(s, j, i, w)) continue;
      frob_sq += 2.0;
      stack.row(n + filled) = weight * w;
      if (++filled == block) flush();
    }
  }
  flush();

  if (frob_sq == 0.0) throw Error(ErrorKind::RankDeficient, "difference matrix is identically zero");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(r_factor);
  return detail::finish_condition(frob_sq, svd.singularValues());
}

}  // namespace kaczmarz
