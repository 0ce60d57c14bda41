#pragma once

#include "obsadj/adjustments.hpp"
#include "obsadj/common.hpp"
#include "obsadj/estimator.hpp"
#include "obsadj/model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace obsadj {

enum class OmegaSource { exact, estimated };
OmegaSource parse_omega_source(const std::string& s);

// beta_d = beta + v^{-1} (n Sigma)^{-1} X' psi
Vec debias(const FitResult& fit, const Dataset& data, const Adjustments& adj, const Covariance& sigma);

// diag(Sigma^{-1}) either exactly or from the design (p < n).
Vec omega_diag(const Dataset& data, OmegaSource source);

struct CoordinateCI {
  Index j = 0;
  double center = 0.0;
  double half_width = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

// Interval for +-w_j: (v/t) beta_d_j +- (r/t)(z/sqrt(n)) Omega_jj^{1/2}.
// Throws degenerate when t = 0.
std::vector<CoordinateCI> confidence_intervals(const Vec& beta_d, const Adjustments& adj, double alpha,
                                               const Vec& omega, Index n);

struct NullTest {
  double stat = 0.0;  // (v/r) sqrt(n) |beta_d_j| / Omega_jj^{1/2}
  bool reject = false;
};

NullTest test_null(double beta_d_j, const Adjustments& adj, double alpha, double omega_jj, Index n);

// Unpenalized least squares pivot; `signed_w` is (+-)w or empty for nulls only
// (treated as zero).
Vec pivot_ls(const FitResult& fit, const Dataset& data, const Vec& omega, const Vec& signed_w);

// Ridge pivot (sqrt(n/p)/r)[(v + lambda) beta_j - t (+-w_j)], lambda = p kappa.
Vec pivot_ridge(const FitResult& fit, const Adjustments& adj, const Dataset& data, const Vec& signed_w);

// (sqrt(n)/Omega_jj^{1/2}) ((v/r) beta_d_j - (t/r) (+-w_j))
Vec pivot_general(const Vec& beta_d, const Adjustments& adj, const Vec& omega, const Vec& signed_w, Index n);

// beta_j - prox[g_j / (c v)](beta_d_j) for isotropic Sigma = c I; zero up to
// solver precision on any converged fit.
Vec prox_kkt_residual(const FitResult& fit, const Adjustments& adj, const Vec& beta_d, const Covariance& sigma);

// x_i'beta + gamma* l'_{y_i}(x_i'beta) - a* x_i'w; its variance across i
// approximates sigma*^2.
Vec prox_residual_predicted(const FitResult& fit, const Dataset& data, const OracleQuantities& oracle);

// t / v
double signal_strength(const Adjustments& adj);

}  // namespace obsadj
