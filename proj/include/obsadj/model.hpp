#pragma once

#include "obsadj/common.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

namespace obsadj {

/// Covariance of the Gaussian design rows.
///
/// Either a scaled identity c*I_p (no matrix is stored) or an explicit SPD
/// matrix whose Cholesky factor is computed once at construction and shared
/// between copies.
class Covariance {
 public:
  static Covariance identity_scaled(Index p, double c);
  static Covariance explicit_matrix(const Mat& sigma);
  // Sigma_jk = rho^|j-k|.
  static Covariance ar1(Index p, double rho);

  Index dim() const { return p_; }
  bool is_isotropic() const { return !factor_; }
  // Scale c of c*I_p; only meaningful when is_isotropic().
  double scale() const { return scale_; }

  Vec apply(const Vec& v) const;          // Sigma v
  Vec solve(const Vec& v) const;          // Sigma^{-1} v
  double quad(const Vec& v) const;        // v' Sigma v
  double quad_inv(const Vec& v) const;    // v' Sigma^{-1} v
  Vec omega_diag() const;                 // diag(Sigma^{-1})
  double max_eigenvalue() const;
  Mat dense() const;

  // Maps iid N(0,1) rows to N(0, Sigma) rows in place (X <- Z L').
  void color_rows(Mat& z) const;
  // X <- X L^{-T}, i.e. rows whitened to identity covariance.
  Mat whiten_rows(const Mat& x) const;
  // L^{-1} v and L^{-T} v
  Vec whiten(const Vec& v) const;
  Vec whiten_t(const Vec& v) const;

 private:
  struct Factor {
    Mat sigma;
    Eigen::LLT<Mat> llt;
  };
  Index p_ = 0;
  double scale_ = 1.0;
  std::shared_ptr<const Factor> factor_;
};

/// Index of the single-index model, normalized so that w' Sigma w = 1.
struct IndexVector {
  Vec w;
};

IndexVector normalize_index(const Vec& raw, const Covariance& sigma);

// First `count` entries equispaced in [lo, hi], remaining entries zero.
Vec equispaced_sparse(Index p, Index count, double lo, double hi);
// First `count` entries equal to one, remaining entries zero.
Vec equal_sparse(Index p, Index count);

enum class LinkKind { linear, logistic, one_bit, poisson, binomial };
enum class NoiseKind { gaussian, cauchy };
enum class LabelCoding { zero_one, plus_minus };

/// Response mechanism y_i = F(x_i'w, U_i).
struct LinkSpec {
  LinkKind kind = LinkKind::linear;
  double signal = 1.0;
  NoiseKind noise = NoiseKind::gaussian;
  double sigma = 1.0;   // gaussian noise standard deviation
  double flip = 0.0;    // one-bit: P(U_i = -1)
  int trials = 1;       // binomial q
  LabelCoding coding = LabelCoding::zero_one;

  static LinkSpec linear(double signal, double sigma);
  static LinkSpec linear_cauchy(double signal);
  static LinkSpec logistic(double signal, LabelCoding coding = LabelCoding::zero_one);
  static LinkSpec one_bit(double flip);
  static LinkSpec poisson(double signal = 1.0);
  static LinkSpec binomial(int trials, double signal);

  void validate() const;
  std::string label() const;
};

/// Observed data with optional ground truth.
struct Dataset {
  Mat X;
  Vec y;
  std::optional<Covariance> covariance;
  std::optional<Vec> index;       // w with w' Sigma w = 1
  std::optional<Vec> beta_star;   // signal * w when the link has a natural scale

  Index n() const { return X.rows(); }
  Index p() const { return X.cols(); }
  bool has_truth() const { return covariance.has_value() && index.has_value(); }
  void validate() const;
};

Mat sample_design(const Covariance& sigma, Index n, std::uint64_t seed);
Vec sample_response(const Mat& X, const IndexVector& w, const LinkSpec& link, std::uint64_t seed);

double sigmoid(double t);

}  // namespace obsadj
