#include "pseudopost/linalg.hpp"

#include <cmath>
#include <string>

#include "pseudopost/errors.hpp"

namespace pseudopost {

double CholeskyFactor::log_det() const {
  return 2.0 * lower.diagonal().array().log().sum();
}

Eigen::MatrixXd CholeskyFactor::solve(const Eigen::MatrixXd& b) const {
  Eigen::MatrixXd y = lower.triangularView<Eigen::Lower>().solve(b);
  return lower.transpose().triangularView<Eigen::Upper>().solve(y);
}

Eigen::MatrixXd CholeskyFactor::solve_transposed(const Eigen::MatrixXd& b) const {
  return lower.transpose().triangularView<Eigen::Upper>().solve(b);
}

namespace {

bool try_factor(const Eigen::MatrixXd& a, Eigen::MatrixXd* lower) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) return false;
  *lower = llt.matrixL();
  // LLT can "succeed" with zero or non-finite pivots on edge cases; insist
  // on a strictly positive finite diagonal.
  for (Eigen::Index i = 0; i < lower->rows(); ++i) {
    const double d = (*lower)(i, i);
    if (!(d > 0.0) || !std::isfinite(d)) return false;
  }
  return true;
}

}  // namespace

CholeskyFactor cholesky(const Eigen::MatrixXd& a, const char* label) {
  if (a.rows() != a.cols()) {
    throw ConfigError(std::string("cholesky: ") + label + " is not square");
  }
  if (!a.allFinite()) {
    throw NumericalError(std::string("cholesky: ") + label +
                         " has non-finite entries");
  }

  CholeskyFactor out;
  out.matrix = a;
  if (try_factor(out.matrix, &out.lower)) return out;

  const double delta = 1e-8 * a.diagonal().mean();
  if (!(delta > 0.0)) {
    throw NumericalError(std::string("cholesky: ") + label +
                         " is not positive definite and has a non-positive "
                         "mean diagonal; cannot jitter");
  }
  for (int attempt = 0; attempt < 3; ++attempt) {
    out.matrix.diagonal().array() += delta;
    out.jitter += delta;
    if (try_factor(out.matrix, &out.lower)) return out;
  }
  throw NumericalError(std::string("cholesky: ") + label +
                       " is not positive definite after 3 jitter attempts "
                       "(total jitter " +
                       std::to_string(out.jitter) + ")");
}

bool is_spd(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) return false;
  if (!a.allFinite()) return false;
  if (!a.isApprox(a.transpose(), 1e-10)) return false;
  Eigen::MatrixXd lower;
  return try_factor(a, &lower);
}

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& a, const char* label) {
  const CholeskyFactor chol = cholesky(a, label);
  Eigen::MatrixXd inv =
      chol.solve(Eigen::MatrixXd::Identity(a.rows(), a.cols()));
  // Symmetrize: the two triangular solves leave asymmetry at rounding level.
  return 0.5 * (inv + inv.transpose());
}

}  // namespace pseudopost
