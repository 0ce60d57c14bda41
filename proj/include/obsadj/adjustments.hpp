#pragma once

#include "obsadj/common.hpp"
#include "obsadj/estimator.hpp"
#include "obsadj/model.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace obsadj {

enum class AhatKind { full, active_set, kernel };

/// Sensitivity matrix A = (X_S' D X_S + n diag(kappa_S))^{-1}, zero outside S.
///
/// full / active_set keep a Cholesky factor of the |S| x |S| system. kernel
/// is used for strictly convex smooth penalties with p > n and keeps the
/// n x n Woodbury factor instead; its methods need the design passed back in.
class Ahat {
 public:
  AhatKind kind() const { return kind_; }
  Index dim() const { return p_; }
  const std::vector<Index>& support() const { return support_; }

  Vec apply(const Vec& v, const Mat& X) const;
  // h_i = x_i' A x_i
  Vec leverages(const Mat& X) const;
  // trace(Sigma A)
  double trace_sigma(const Covariance& sigma, const Mat& X) const;
  // diag(A) restricted to the support, in support order.
  Vec support_diagonal(const Mat& X) const;
  Mat dense(const Mat& X) const;

  friend Ahat compute_ahat(const FitResult& fit, const Dataset& data, const GramCache* gram);

 private:
  AhatKind kind_ = AhatKind::full;
  Index p_ = 0;
  std::vector<Index> support_;
  Vec kappa_s_;                // kappa on the support
  Eigen::LLT<Mat> llt_;        // full / active_set
  Vec kn_;                     // kernel: n * kappa
  Vec sqrt_d_;                 // kernel: D^{1/2}
  Eigen::LLT<Mat> c_llt_;      // kernel: I + S X diag(1/kn) X' S
  mutable std::shared_ptr<const Vec> diag_cache_;  // support_diagonal, computed once
};

// gram (X'X) is used when the curvature is identically one.
Ahat compute_ahat(const FitResult& fit, const Dataset& data, const GramCache* gram = nullptr);

struct Traces {
  double df = 0.0;
  double trace_v = 0.0;
  double trace_d = 0.0;
};

Traces compute_traces(const Ahat& ahat, const FitResult& fit, const Dataset& data);

enum class Variant { general, tilde, unregularized, square_loss, huber, ridge_simplified };
Variant parse_variant(const std::string& s);
std::string to_string(Variant v);

struct Adjustments {
  Variant variant = Variant::general;
  double df = 0.0;
  double v = 0.0;
  double r2 = 0.0;
  double gamma = 0.0;
  double t2 = 0.0;
  double a2 = 0.0;
  double sigma2 = 0.0;
  double trace_v = 0.0;
  double trace_d = 0.0;
  // psi is numerically D X beta (the derivative formula degenerates there).
  bool degenerate_branch = false;

  double t() const;  // max(0, t2)^{1/2}
  double a() const;  // max(0, a2)^{1/2}
  double r() const;
};

// Picks the natural variant for the fit: unregularized when g = 0, huber /
// square_loss by loss, general otherwise.
Variant default_variant(const FitResult& fit);

// sigma is required for the general, tilde, huber and square_loss variants
// of penalized fits; ahat is required for tilde (through trace(Sigma A)).
Adjustments compute_adjustments(const FitResult& fit, const Dataset& data, const Traces& traces, Variant variant,
                                const Covariance* sigma, const Ahat* ahat = nullptr);

struct OracleQuantities {
  double a_star = 0.0;
  double sigma_star2 = 0.0;
  double gamma_star = 0.0;
  double t_star = 0.0;
};

OracleQuantities compute_oracle(const FitResult& fit, const Dataset& data, const Ahat& ahat, const Traces& traces);

// Omega_jj = (Sigma^{-1})_jj estimated as (n - p + 1) (X'X)^{-1}_jj. Needs p < n.
Vec estimate_omega(const Mat& X);
double estimate_omega_jj(const Mat& X, Index j);

// Partial derivatives with respect to the design entry x_ij.
Vec dbeta_dx(const FitResult& fit, const Dataset& data, const Ahat& ahat, Index i, Index j);
Vec dpsi_dx(const FitResult& fit, const Dataset& data, const Ahat& ahat, Index i, Index j);

struct TraceSandwich {
  double c_hat = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double trace_v = 0.0;
  bool holds(double tol = 1e-6) const { return trace_v >= lower - tol && trace_v <= upper + tol; }
};

// Needs a strongly convex penalty (tau > 0).
TraceSandwich trace_sandwich(const FitResult& fit, const Dataset& data, const Traces& traces,
                             const Covariance& sigma);

}  // namespace obsadj
