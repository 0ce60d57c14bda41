#include "obsadj/model.hpp"

#include "obsadj/random.hpp"

#include <cmath>
#include <sstream>

namespace obsadj {

double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

Covariance Covariance::identity_scaled(Index p, double c) {
  require(p >= 1, ErrorCode::invalid_argument, "covariance dimension must be positive");
  require(c > 0 && std::isfinite(c), ErrorCode::invalid_argument,
          "identity scale must be positive and finite");
  Covariance out;
  out.p_ = p;
  out.scale_ = c;
  return out;
}

Covariance Covariance::explicit_matrix(const Mat& sigma) {
  require(sigma.rows() == sigma.cols() && sigma.rows() >= 1, ErrorCode::dimension_mismatch,
          "covariance matrix must be square and non-empty");
  const double tol = 1e-12 * std::max(1.0, sigma.cwiseAbs().maxCoeff());
  require((sigma - sigma.transpose()).cwiseAbs().maxCoeff() <= tol, ErrorCode::invalid_argument,
          "covariance matrix is not symmetric");
  auto factor = std::make_shared<Factor>();
  factor->sigma = sigma;
  factor->llt.compute(sigma);
  require(factor->llt.info() == Eigen::Success, ErrorCode::invalid_argument,
          "covariance matrix is not positive definite");
  Covariance out;
  out.p_ = sigma.rows();
  out.factor_ = std::move(factor);
  return out;
}

Covariance Covariance::ar1(Index p, double rho) {
  require(std::abs(rho) < 1.0, ErrorCode::invalid_argument, "ar1 correlation must satisfy |rho| < 1");
  Mat s(p, p);
  for (Index j = 0; j < p; ++j)
    for (Index k = 0; k < p; ++k) s(j, k) = std::pow(rho, static_cast<double>(std::abs(j - k)));
  return explicit_matrix(s);
}

Vec Covariance::apply(const Vec& v) const {
  if (!factor_) return scale_ * v;
  return factor_->sigma * v;
}

Vec Covariance::solve(const Vec& v) const {
  if (!factor_) return v / scale_;
  return factor_->llt.solve(v);
}

double Covariance::quad(const Vec& v) const {
  if (!factor_) return scale_ * v.squaredNorm();
  return v.dot(factor_->sigma * v);
}

double Covariance::quad_inv(const Vec& v) const {
  if (!factor_) return v.squaredNorm() / scale_;
  return whiten(v).squaredNorm();
}

Vec Covariance::whiten(const Vec& v) const {
  if (!factor_) return v / std::sqrt(scale_);
  return factor_->llt.matrixL().solve(v);
}

Vec Covariance::whiten_t(const Vec& v) const {
  if (!factor_) return v / std::sqrt(scale_);
  return factor_->llt.matrixU().solve(v);
}

Vec Covariance::omega_diag() const {
  if (!factor_) return Vec::Constant(p_, 1.0 / scale_);
  const Mat inv = factor_->llt.solve(Mat::Identity(p_, p_));
  return inv.diagonal();
}

double Covariance::max_eigenvalue() const {
  if (!factor_) return scale_;
  Eigen::SelfAdjointEigenSolver<Mat> es(factor_->sigma, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

Mat Covariance::dense() const {
  if (!factor_) return scale_ * Mat::Identity(p_, p_);
  return factor_->sigma;
}

void Covariance::color_rows(Mat& z) const {
  if (!factor_) {
    z *= std::sqrt(scale_);
    return;
  }
  z = z * factor_->llt.matrixL().transpose();
}

Mat Covariance::whiten_rows(const Mat& x) const {
  if (!factor_) return x / std::sqrt(scale_);
  // X L^{-T} = (L^{-1} X')'
  return factor_->llt.matrixL().solve(x.transpose()).transpose();
}

IndexVector normalize_index(const Vec& raw, const Covariance& sigma) {
  require(raw.size() == sigma.dim(), ErrorCode::dimension_mismatch,
          "index length does not match covariance dimension");
  require(raw.allFinite(), ErrorCode::invalid_argument, "index must be finite");
  const double q = sigma.quad(raw);
  require(q > 0, ErrorCode::invalid_argument, "index must be nonzero");
  return IndexVector{raw / std::sqrt(q)};
}

Vec equispaced_sparse(Index p, Index count, double lo, double hi) {
  require(count >= 1 && count <= p, ErrorCode::invalid_argument, "sparsity must be in [1, p]");
  Vec v = Vec::Zero(p);
  for (Index j = 0; j < count; ++j)
    v(j) = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(count - 1);
  return v;
}

Vec equal_sparse(Index p, Index count) {
  require(count >= 1 && count <= p, ErrorCode::invalid_argument, "sparsity must be in [1, p]");
  Vec v = Vec::Zero(p);
  v.head(count).setOnes();
  return v;
}

LinkSpec LinkSpec::linear(double signal, double sigma) {
  LinkSpec l;
  l.kind = LinkKind::linear;
  l.signal = signal;
  l.sigma = sigma;
  return l;
}

LinkSpec LinkSpec::linear_cauchy(double signal) {
  LinkSpec l;
  l.kind = LinkKind::linear;
  l.signal = signal;
  l.noise = NoiseKind::cauchy;
  return l;
}

LinkSpec LinkSpec::logistic(double signal, LabelCoding coding) {
  LinkSpec l;
  l.kind = LinkKind::logistic;
  l.signal = signal;
  l.coding = coding;
  return l;
}

LinkSpec LinkSpec::one_bit(double flip) {
  LinkSpec l;
  l.kind = LinkKind::one_bit;
  l.flip = flip;
  l.coding = LabelCoding::plus_minus;
  return l;
}

LinkSpec LinkSpec::poisson(double signal) {
  LinkSpec l;
  l.kind = LinkKind::poisson;
  l.signal = signal;
  return l;
}

LinkSpec LinkSpec::binomial(int trials, double signal) {
  LinkSpec l;
  l.kind = LinkKind::binomial;
  l.trials = trials;
  l.signal = signal;
  return l;
}

void LinkSpec::validate() const {
  require(std::isfinite(signal), ErrorCode::invalid_argument, "link signal must be finite");
  switch (kind) {
    case LinkKind::linear:
      require(signal > 0, ErrorCode::invalid_argument, "linear signal must be positive");
      require(noise == NoiseKind::cauchy || sigma >= 0, ErrorCode::invalid_argument,
              "gaussian noise level must be nonnegative");
      break;
    case LinkKind::logistic:
    case LinkKind::poisson:
      require(signal > 0, ErrorCode::invalid_argument, "link signal must be positive");
      break;
    case LinkKind::one_bit:
      require(flip >= 0 && flip < 1, ErrorCode::invalid_argument, "flip probability must be in [0,1)");
      break;
    case LinkKind::binomial:
      require(trials >= 1, ErrorCode::invalid_argument, "binomial trials must be positive");
      require(signal > 0, ErrorCode::invalid_argument, "binomial signal must be positive");
      break;
  }
}

std::string LinkSpec::label() const {
  std::ostringstream os;
  switch (kind) {
    case LinkKind::linear:
      os << "linear";
      if (noise == NoiseKind::cauchy) os << "-cauchy";
      break;
    case LinkKind::logistic:
      os << (coding == LabelCoding::plus_minus ? "logistic-pm" : "logistic");
      break;
    case LinkKind::one_bit: os << "one-bit"; break;
    case LinkKind::poisson: os << "poisson"; break;
    case LinkKind::binomial: os << "binomial-q" << trials; break;
  }
  return os.str();
}

void Dataset::validate() const {
  require(X.rows() >= 1 && X.cols() >= 1, ErrorCode::dimension_mismatch, "design matrix is empty");
  require(y.size() == X.rows(), ErrorCode::dimension_mismatch,
          "response length does not match the number of design rows");
  require(X.allFinite() && y.allFinite(), ErrorCode::invalid_argument, "data must be finite");
  if (covariance)
    require(covariance->dim() == p(), ErrorCode::dimension_mismatch,
            "covariance dimension does not match design columns");
  if (index) require(index->size() == p(), ErrorCode::dimension_mismatch, "index length mismatch");
  if (beta_star) require(beta_star->size() == p(), ErrorCode::dimension_mismatch, "beta* length mismatch");
}

Mat sample_design(const Covariance& sigma, Index n, std::uint64_t seed) {
  require(n >= 1, ErrorCode::invalid_argument, "sample size must be positive");
  const Index p = sigma.dim();
  Rng rng(seed);
  // Filled row by row so that the stream order does not depend on storage.
  Mat z(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) z(i, j) = rng.normal();
  sigma.color_rows(z);
  return z;
}

Vec sample_response(const Mat& X, const IndexVector& w, const LinkSpec& link, std::uint64_t seed) {
  require(X.cols() == w.w.size(), ErrorCode::dimension_mismatch,
          "index length does not match design columns");
  link.validate();
  Rng rng(seed);
  const Vec u = X * w.w;
  const Index n = X.rows();
  Vec y(n);
  for (Index i = 0; i < n; ++i) {
    const double t = link.signal * u(i);
    switch (link.kind) {
      case LinkKind::linear: {
        const double eps = link.noise == NoiseKind::cauchy ? rng.cauchy() : link.sigma * rng.normal();
        y(i) = t + eps;
        break;
      }
      case LinkKind::logistic: {
        const bool success = rng.bernoulli(sigmoid(t));
        if (link.coding == LabelCoding::plus_minus)
          y(i) = success ? 1.0 : -1.0;
        else
          y(i) = success ? 1.0 : 0.0;
        break;
      }
      case LinkKind::one_bit: {
        const double s = u(i) >= 0 ? 1.0 : -1.0;
        y(i) = rng.bernoulli(link.flip) ? -s : s;
        break;
      }
      case LinkKind::poisson:
        y(i) = static_cast<double>(rng.poisson(std::exp(t)));
        break;
      case LinkKind::binomial:
        y(i) = static_cast<double>(rng.binomial(link.trials, sigmoid(t)));
        break;
    }
  }
  return y;
}

}  // namespace obsadj
