#pragma once

#include <filesystem>
#include <string>

#include <Eigen/Dense>

#include "pseudopost/design.hpp"
#include "pseudopost/population.hpp"
#include "pseudopost/rng.hpp"

namespace testsupport {

// Random SPD matrix A = G G^T + dim * I with G ~ iid normal entries.
inline Eigen::MatrixXd make_spd(int dim, std::uint64_t seed) {
  pseudopost::RngStream rs(seed);
  Eigen::MatrixXd g(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) g(i, j) = rs.normal();
  }
  return g * g.transpose() + dim * Eigen::MatrixXd::Identity(dim, dim);
}

// Small single-covariate frame: intercept plus one standardized predictor,
// size measures tied to the predictor so pps designs on it are informative.
inline pseudopost::PopulationFrame make_frame(int n, std::uint64_t seed) {
  pseudopost::PopulationFrame frame;
  frame.covariates.resize(n, 2);
  frame.size_measure.resize(n);
  pseudopost::RngStream rs(seed);
  for (int i = 0; i < n; ++i) {
    const double x = rs.normal();
    frame.covariates(i, 0) = 1.0;
    frame.covariates(i, 1) = x;
    frame.size_measure[i] = std::exp(0.8 * x);
  }
  return frame;
}

// Hand-built observed sample with every invariant satisfied; responses are
// small fixed counts.
inline pseudopost::ObservedSample make_sample(int n, int d, int p,
                                              std::uint64_t seed) {
  pseudopost::ObservedSample s;
  pseudopost::RngStream rs(seed);
  s.unit_ids.resize(static_cast<std::size_t>(n));
  s.responses.resize(n, d);
  s.covariates.resize(n, p);
  s.size_measure.resize(n);
  s.pi.resize(n);
  s.raw_weights.resize(n);
  s.normalized_weights.resize(n);
  for (int i = 0; i < n; ++i) {
    s.unit_ids[static_cast<std::size_t>(i)] = i;
    for (int j = 0; j < d; ++j) {
      s.responses(i, j) = static_cast<std::int64_t>(rs.uniform_index(7));
    }
    s.covariates(i, 0) = 1.0;
    for (int j = 1; j < p; ++j) s.covariates(i, j) = rs.normal();
    s.size_measure[i] = 1.0 + rs.uniform();
    s.pi[i] = 0.2 + 0.6 * rs.uniform();
    s.raw_weights[i] = 1.0 / s.pi[i];
  }
  const double total = s.raw_weights.sum();
  s.normalized_weights = s.raw_weights * (n / total);
  return s;
}

// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("pseudopost_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }

 private:
  std::filesystem::path path_;
};

}  // namespace testsupport
