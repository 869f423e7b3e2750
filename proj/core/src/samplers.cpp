#include "pseudopost/samplers.hpp"

#include <cmath>
#include <string>

namespace pseudopost {

Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean,
                           const CholeskyFactor& precision_chol,
                           RngStream& rng) {
  if (!mean.allFinite()) {
    throw NumericalError("sample_mvn: mean has non-finite entries");
  }
  if (mean.size() != precision_chol.dim()) {
    throw ConfigError("sample_mvn: mean and precision dimensions disagree");
  }
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return mean + precision_chol.solve_transposed(z);
}

Eigen::MatrixXd sample_matrix_normal(const Eigen::MatrixXd& mean,
                                     const CholeskyFactor& row_prec_chol,
                                     const CholeskyFactor& col_prec_chol,
                                     RngStream& rng) {
  if (!mean.allFinite()) {
    throw NumericalError("sample_matrix_normal: mean has non-finite entries");
  }
  if (mean.rows() != row_prec_chol.dim() || mean.cols() != col_prec_chol.dim()) {
    throw ConfigError(
        "sample_matrix_normal: mean shape does not match the row/column "
        "precision dimensions");
  }
  Eigen::MatrixXd z(mean.rows(), mean.cols());
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    for (Eigen::Index i = 0; i < z.rows(); ++i) z(i, j) = rng.normal();
  }
  // X = mean + Lr^-T Z Lc^-1 gives vec covariance (col_prec ⊗ row_prec)^-1.
  Eigen::MatrixXd half = row_prec_chol.solve_transposed(z);
  Eigen::MatrixXd shaped = col_prec_chol.lower
                               .triangularView<Eigen::Lower>()
                               .solve(half.transpose())
                               .transpose();
  return mean + shaped;
}

Eigen::MatrixXd sample_wishart(double df, const Eigen::MatrixXd& scale,
                               RngStream& rng) {
  const Eigen::Index d = scale.rows();
  if (!(df > static_cast<double>(d) - 1.0)) {
    throw ConfigError("sample_wishart: df = " + std::to_string(df) +
                      " must exceed dim - 1 = " + std::to_string(d - 1));
  }
  const CholeskyFactor scale_chol = cholesky(scale, "Wishart scale");

  // Bartlett: A lower-triangular, A_ii = sqrt(chi^2(df - i)), A_ij ~ N(0,1).
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    a(i, i) = std::sqrt(rng.chi_squared(df - static_cast<double>(i)));
    for (Eigen::Index j = 0; j < i; ++j) a(i, j) = rng.normal();
  }
  const Eigen::MatrixXd la = scale_chol.lower * a;
  Eigen::MatrixXd w = la * la.transpose();
  return 0.5 * (w + w.transpose());
}

Eigen::VectorXd ess_step(const Eigen::VectorXd& current, const EssTarget& target,
                         RngStream& rng) {
  if (!target.log_likelihood) {
    throw ConfigError("ess_step: target has no log-likelihood");
  }
  if (target.prior_precision_chol == nullptr) {
    throw ConfigError("ess_step: target has no prior precision factor");
  }
  return ess_step_impl(current, target.log_likelihood, target.prior_mean,
                       *target.prior_precision_chol, rng);
}

}  // namespace pseudopost
