#pragma once

#include <Eigen/Dense>

namespace pseudopost {

// Lower-triangular Cholesky factor together with the matrix it factors.
// When jitter was needed to rescue a marginally indefinite input, `matrix`
// is the jittered matrix, so L * L^T reconstructs `matrix` itself.
struct CholeskyFactor {
  Eigen::MatrixXd matrix;  // SPD matrix A (after any jitter)
  Eigen::MatrixXd lower;   // L with A = L * L^T
  double jitter = 0.0;     // total amount added to the diagonal

  Eigen::Index dim() const { return lower.rows(); }

  // log|A| = 2 * sum(log diag L)
  double log_det() const;

  // Solves A x = b through the two triangular systems.
  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const;

  // Solves L^T x = b (used to turn iid normals into precision-shaped draws).
  Eigen::MatrixXd solve_transposed(const Eigen::MatrixXd& b) const;
};

// Factors a symmetric positive-definite matrix.  On failure, adds
// 1e-8 * mean(diag) to the diagonal and retries, up to three times, then
// throws NumericalError.  `label` names the matrix in error messages.
CholeskyFactor cholesky(const Eigen::MatrixXd& a, const char* label = "matrix");

// True when the matrix is symmetric and factors without jitter.
bool is_spd(const Eigen::MatrixXd& a);

// Inverse of an SPD matrix via its Cholesky factorization (jitter policy
// applies).  Used for Wishart scale matrices given in precision form.
Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& a, const char* label = "matrix");

}  // namespace pseudopost
