#include "obsadj/adjustments.hpp"

#include <algorithm>
#include <cmath>

namespace obsadj {

namespace {

Mat columns(const Mat& X, const std::vector<Index>& idx) {
  Mat out(X.rows(), static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Index>(k)) = X.col(idx[k]);
  return out;
}

bool full_support(const std::vector<Index>& s, Index p) { return static_cast<Index>(s.size()) == p; }

bool unit_curvature(const Vec& d) { return (d.array() == 1.0).all(); }

// Z = L_C^{-1} S X diag(1/kn), n x p.
Mat kernel_z(const Mat& X, const Vec& kn, const Vec& sqrt_d, const Eigen::LLT<Mat>& c_llt) {
  Mat Z = sqrt_d.asDiagonal() * X * kn.cwiseInverse().asDiagonal();
  c_llt.matrixL().solveInPlace(Z);
  return Z;
}

}  // namespace

Ahat compute_ahat(const FitResult& fit, const Dataset& data, const GramCache* gram) {
  require(!fit.guard_active, ErrorCode::unsupported,
          "the sensitivity matrix is not available when the coercive guard is active");
  const Mat& X = data.X;
  const Index n = X.rows(), p = X.cols();
  require(fit.beta.size() == p && fit.curvature.size() == n, ErrorCode::dimension_mismatch,
          "fit does not match the dataset");
  const Vec& D = fit.curvature;
  const Vec& kappa = fit.form.kappa;
  Ahat a;
  a.p_ = p;
  a.support_ = fit.active;
  const double dn = static_cast<double>(n);

  if (fit.form.smooth() && fit.form.strongly_convex() && p > n) {
    a.kind_ = AhatKind::kernel;
    a.kn_ = dn * kappa;
    a.sqrt_d_ = D.cwiseMax(0.0).cwiseSqrt();
    const Mat Xs = a.sqrt_d_.asDiagonal() * X * a.kn_.cwiseSqrt().cwiseInverse().asDiagonal();
    Mat C = Mat::Identity(n, n);
    C.selfadjointView<Eigen::Lower>().rankUpdate(Xs);
    a.c_llt_.compute(C.selfadjointView<Eigen::Lower>());
    require(a.c_llt_.info() == Eigen::Success, ErrorCode::singular, "kernel system is not positive definite");
    return a;
  }

  a.kind_ = full_support(a.support_, p) ? AhatKind::full : AhatKind::active_set;
  const Index s = static_cast<Index>(a.support_.size());
  a.kappa_s_.resize(s);
  for (Index k = 0; k < s; ++k) a.kappa_s_(k) = kappa(a.support_[static_cast<std::size_t>(k)]);
  if (s == 0) return a;

  if (a.kind_ == AhatKind::full && gram && unit_curvature(D)) {
    if (const auto* f = gram->factor(dn * a.kappa_s_)) {
      a.llt_ = *f;
      return a;
    }
  }
  Mat M;
  if (a.kind_ == AhatKind::full && gram && unit_curvature(D)) {
    M = gram->gram;
  } else {
    const Mat Xd = D.cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                   (a.kind_ == AhatKind::full ? X : columns(X, a.support_));
    M = Mat::Zero(s, s);
    M.selfadjointView<Eigen::Lower>().rankUpdate(Xd.transpose());
  }
  M.diagonal() += dn * a.kappa_s_;
  a.llt_.compute(M.selfadjointView<Eigen::Lower>());
  const bool ok = a.llt_.info() == Eigen::Success;
  double ratio = 0.0;
  if (ok) {
    const Vec ld = a.llt_.matrixLLT().diagonal().cwiseAbs2();
    ratio = ld.minCoeff() / std::max(ld.maxCoeff(), 1e-300);
  }
  require(ok && ratio > 1e-13, ErrorCode::singular,
          "X_S' D X_S is singular on the support; the sensitivity matrix is undefined");
  return a;
}

Vec Ahat::apply(const Vec& v, const Mat& X) const {
  require(v.size() == p_, ErrorCode::dimension_mismatch, "vector length mismatch");
  if (kind_ == AhatKind::kernel) {
    const Vec k1 = v.cwiseQuotient(kn_);
    Vec t = sqrt_d_.cwiseProduct(X * k1);
    t = c_llt_.solve(t);
    return k1 - (X.transpose() * sqrt_d_.cwiseProduct(t)).cwiseQuotient(kn_);
  }
  Vec out = Vec::Zero(p_);
  if (support_.empty()) return out;
  Vec vs(static_cast<Index>(support_.size()));
  for (std::size_t k = 0; k < support_.size(); ++k) vs(static_cast<Index>(k)) = v(support_[k]);
  vs = llt_.solve(vs);
  for (std::size_t k = 0; k < support_.size(); ++k) out(support_[k]) = vs(static_cast<Index>(k));
  return out;
}

Vec Ahat::leverages(const Mat& X) const {
  const Index n = X.rows();
  if (kind_ == AhatKind::kernel) {
    // h = diag(G) - diag(G S C^{-1} S G), G = X diag(1/kn) X'.
    const Mat Xk = X * kn_.cwiseSqrt().cwiseInverse().asDiagonal();
    Mat G = Mat::Zero(n, n);
    G.selfadjointView<Eigen::Lower>().rankUpdate(Xk);
    G.triangularView<Eigen::StrictlyUpper>() = G.transpose();
    Mat B = sqrt_d_.asDiagonal() * G;
    c_llt_.matrixL().solveInPlace(B);
    return G.diagonal() - B.colwise().squaredNorm().transpose();
  }
  if (support_.empty()) return Vec::Zero(n);
  Mat W = kind_ == AhatKind::full ? Mat(X.transpose()) : Mat(columns(X, support_).transpose());
  llt_.matrixL().solveInPlace(W);
  return W.colwise().squaredNorm().transpose();
}

Vec Ahat::support_diagonal(const Mat& X) const {
  if (kind_ == AhatKind::kernel) {
    const Mat Z = kernel_z(X, kn_, sqrt_d_, c_llt_);
    return kn_.cwiseInverse() - Z.colwise().squaredNorm().transpose();
  }
  const Index s = static_cast<Index>(support_.size());
  if (s == 0) return Vec();
  if (!diag_cache_) {
    Mat Linv = Mat::Identity(s, s);
    llt_.matrixL().solveInPlace(Linv);
    diag_cache_ = std::make_shared<const Vec>(Linv.colwise().squaredNorm().transpose());
  }
  return *diag_cache_;
}

double Ahat::trace_sigma(const Covariance& sigma, const Mat& X) const {
  require(sigma.dim() == p_, ErrorCode::dimension_mismatch, "covariance dimension mismatch");
  if (kind_ == AhatKind::kernel) {
    const Mat Z = kernel_z(X, kn_, sqrt_d_, c_llt_);
    if (sigma.is_isotropic()) return sigma.scale() * (kn_.cwiseInverse().sum() - Z.squaredNorm());
    const Mat S = sigma.dense();
    return S.diagonal().cwiseQuotient(kn_).sum() - (Z * S).cwiseProduct(Z).sum();
  }
  const Index s = static_cast<Index>(support_.size());
  if (s == 0) return 0.0;
  if (sigma.is_isotropic()) return sigma.scale() * support_diagonal(X).sum();
  Mat Linv = Mat::Identity(s, s);
  llt_.matrixL().solveInPlace(Linv);
  const Mat Minv = Linv.transpose() * Linv;
  const Mat S = sigma.dense();
  double tr = 0.0;
  for (Index a = 0; a < s; ++a)
    for (Index b = 0; b < s; ++b)
      tr += Minv(a, b) * S(support_[static_cast<std::size_t>(b)], support_[static_cast<std::size_t>(a)]);
  return tr;
}

Mat Ahat::dense(const Mat& X) const {
  Mat out = Mat::Zero(p_, p_);
  if (kind_ == AhatKind::kernel) {
    const Mat Z = kernel_z(X, kn_, sqrt_d_, c_llt_);
    out = -Z.transpose() * Z;
    out.diagonal() += kn_.cwiseInverse();
    return out;
  }
  const Index s = static_cast<Index>(support_.size());
  if (s == 0) return out;
  const Mat Minv = llt_.solve(Mat::Identity(s, s));
  for (Index a = 0; a < s; ++a)
    for (Index b = 0; b < s; ++b)
      out(support_[static_cast<std::size_t>(a)], support_[static_cast<std::size_t>(b)]) = Minv(a, b);
  return out;
}

Traces compute_traces(const Ahat& ahat, const FitResult& fit, const Dataset& data) {
  const Vec& D = fit.curvature;
  const double n = static_cast<double>(data.n());
  Traces t;
  t.trace_d = D.sum();
  if (ahat.support().empty() && ahat.kind() != AhatKind::kernel) {
    t.df = 0.0;
    t.trace_v = t.trace_d;
    return t;
  }
  if (unit_curvature(D) && ahat.kind() != AhatKind::kernel) {
    // D = I: df = |S| - n sum_S kappa_j A_jj and trace V = n - df.
    double df = static_cast<double>(ahat.support().size());
    Vec kappa_s(static_cast<Index>(ahat.support().size()));
    for (std::size_t k = 0; k < ahat.support().size(); ++k)
      kappa_s(static_cast<Index>(k)) = fit.form.kappa(ahat.support()[k]);
    if ((kappa_s.array() != 0.0).any()) df -= n * kappa_s.dot(ahat.support_diagonal(data.X));
    t.df = df;
    t.trace_v = n - df;
    return t;
  }
  const Vec h = ahat.leverages(data.X);
  t.df = D.dot(h);
  t.trace_v = t.trace_d - D.cwiseAbs2().dot(h);
  return t;
}

Variant parse_variant(const std::string& s) {
  if (s == "general") return Variant::general;
  if (s == "tilde") return Variant::tilde;
  if (s == "unregularized") return Variant::unregularized;
  if (s == "square-loss") return Variant::square_loss;
  if (s == "huber") return Variant::huber;
  if (s == "ridge-simplified") return Variant::ridge_simplified;
  fail(ErrorCode::invalid_argument, "unknown adjustment variant: " + s);
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::general: return "general";
    case Variant::tilde: return "tilde";
    case Variant::unregularized: return "unregularized";
    case Variant::square_loss: return "square-loss";
    case Variant::huber: return "huber";
    case Variant::ridge_simplified: return "ridge-simplified";
  }
  return "?";
}

double Adjustments::t() const { return std::sqrt(std::max(0.0, t2)); }
double Adjustments::a() const { return std::sqrt(std::max(0.0, a2)); }
double Adjustments::r() const { return std::sqrt(std::max(0.0, r2)); }

Variant default_variant(const FitResult& fit) {
  if (fit.penalty.kind == PenaltyKind::none) return Variant::unregularized;
  if (fit.loss.kind() == LossKind::square) return Variant::square_loss;
  if (fit.loss.kind() == LossKind::huber) return Variant::huber;
  return Variant::general;
}

namespace {

void fill_unregularized(Adjustments& a, const Vec& u, double n, double p) {
  const double ratio = p / n;
  a.gamma = ratio / a.v;
  a.a2 = u.squaredNorm() / n - ratio * (1.0 - ratio) * a.r2 / (a.v * a.v);
  a.t2 = a.a2 * a.v * a.v;
  a.sigma2 = ratio * a.r2 / (a.v * a.v);
}

// quad_inv_term = |Sigma^{-1/2} X' psi|^2 / n^2
void fill_general(Adjustments& a, const Vec& u, const Vec& psi, double quad_inv_term, double n, double p) {
  a.gamma = a.df / (n * a.v);
  const Vec e = u - a.gamma * psi;
  const double e2 = e.squaredNorm() / n;
  const double psi_u = psi.dot(u) / n;
  a.t2 = quad_inv_term + 2.0 * a.v * psi_u + a.v * a.v * e2 - (p / n) * a.r2;
  const double num = a.v * e2 + psi_u - a.gamma * a.r2;
  a.a2 = a.t2 != 0.0 ? num * num / a.t2 : std::numeric_limits<double>::quiet_NaN();
  a.sigma2 = e2 - a.a2;
}

}  // namespace

Adjustments compute_adjustments(const FitResult& fit, const Dataset& data, const Traces& traces, Variant variant,
                                const Covariance* sigma, const Ahat* ahat) {
  const Index n_i = data.n(), p_i = data.p();
  const double n = static_cast<double>(n_i), p = static_cast<double>(p_i);
  require(fit.psi.size() == n_i && fit.beta.size() == p_i, ErrorCode::dimension_mismatch, "fit does not match the dataset");
  require(!fit.guard_active, ErrorCode::unsupported, "adjustments are not defined while the coercive guard is active");
  if (sigma) require(sigma->dim() == p_i, ErrorCode::dimension_mismatch, "covariance dimension mismatch");
  const bool unpenalized = fit.penalty.kind == PenaltyKind::none;
  const Vec& psi = fit.psi;
  const Vec& u = fit.u;

  Adjustments a;
  a.variant = variant;
  a.trace_v = traces.trace_v;
  a.trace_d = traces.trace_d;
  a.r2 = psi.squaredNorm() / n;
  require(a.r2 > 0, ErrorCode::degenerate, "psi is identically zero; the adjustments are undefined");
  a.df = traces.df;
  a.v = traces.trace_v / n;
  {
    const Vec dxb = fit.curvature.cwiseProduct(u);
    a.degenerate_branch = (psi - dxb).norm() <= 1e-10 * std::max(1.0, psi.norm());
  }

  switch (variant) {
    case Variant::unregularized:
      require(unpenalized, ErrorCode::unsupported, "the unregularized variant needs g = 0");
      a.df = p;
      break;
    case Variant::square_loss:
      require(fit.loss.kind() == LossKind::square, ErrorCode::unsupported, "square-loss variant needs the square loss");
      a.v = 1.0 - a.df / n;
      break;
    case Variant::huber: {
      require(fit.loss.kind() == LossKind::huber, ErrorCode::unsupported, "huber variant needs the Huber loss");
      double inside = 0.0;
      for (Index i = 0; i < n_i; ++i)
        if (std::abs(data.y(i) - u(i)) <= 1.0) inside += 1.0;
      a.v = (inside - a.df) / n;
      break;
    }
    default:
      break;
  }
  require(a.v > 0 && std::isfinite(a.v), ErrorCode::degenerate, "v is not positive; the adjustments are undefined");

  if (variant == Variant::unregularized ||
      (unpenalized && (variant == Variant::square_loss || variant == Variant::huber))) {
    fill_unregularized(a, u, n, p);
    return a;
  }

  if (variant == Variant::ridge_simplified) {
    require(fit.penalty.kind == PenaltyKind::ridge, ErrorCode::unsupported, "ridge-simplified variant needs a ridge penalty");
    const Vec& kappa = fit.form.kappa;
    require((kappa.array() == kappa(0)).all(), ErrorCode::unsupported, "ridge-simplified variant needs a uniform ridge");
    if (sigma)
      require(sigma->is_isotropic() && std::abs(sigma->scale() * p - 1.0) <= 1e-12, ErrorCode::unsupported,
              "ridge-simplified variant assumes Sigma = I/p");
    const double lam = kappa(0) * p;  // lambda in the |b|^2 lambda/(2p) convention
    const double vl = a.v + lam;
    const double b2 = fit.beta.squaredNorm() / p;
    a.gamma = a.df / (n * a.v);
    a.t2 = vl * vl * b2 - (p / n) * a.r2;
    a.a2 = b2 - (p / n) * a.r2 / (vl * vl);
    a.sigma2 = (p / n) * a.r2 / (vl * vl);
    return a;
  }

  const Vec xpsi = data.X.transpose() * psi;
  if (variant == Variant::tilde) {
    require(sigma != nullptr, ErrorCode::missing_truth, "the tilde variant needs Sigma");
    require(ahat != nullptr, ErrorCode::invalid_argument, "the tilde variant needs the sensitivity matrix");
    const double gamma_star = ahat->trace_sigma(*sigma, data.X);
    const double bsb = sigma->quad(fit.beta);
    const double psi_u = psi.dot(u) / n;
    a.gamma = a.df / (n * a.v);
    a.t2 = sigma->quad_inv(xpsi) / (n * n) + 2.0 * a.v * psi_u + a.v * a.v * bsb - (p / n) * a.r2;
    const double num = a.v * bsb + psi_u - gamma_star * a.r2;
    a.a2 = a.t2 != 0.0 ? num * num / a.t2 : std::numeric_limits<double>::quiet_NaN();
    a.sigma2 = bsb - a.a2;
    return a;
  }

  double quad_inv_term = 0.0;
  if (sigma)
    quad_inv_term = sigma->quad_inv(xpsi) / (n * n);
  else
    require(unpenalized, ErrorCode::missing_truth, "penalized adjustments need Sigma for |Sigma^{-1/2} X'psi|");
  fill_general(a, u, psi, quad_inv_term, n, p);
  return a;
}

OracleQuantities compute_oracle(const FitResult& fit, const Dataset& data, const Ahat& ahat, const Traces& traces) {
  require(data.has_truth(), ErrorCode::missing_truth, "oracle quantities need Sigma and the index w");
  const Covariance& S = *data.covariance;
  const Vec& w = *data.index;
  const double n = static_cast<double>(data.n());
  OracleQuantities o;
  const Vec sb = S.apply(fit.beta);
  o.a_star = w.dot(sb);
  o.sigma_star2 = std::max(0.0, fit.beta.dot(sb) - o.a_star * o.a_star);
  o.gamma_star = ahat.trace_sigma(S, data.X);
  o.t_star = w.dot(traces.trace_v * sb + data.X.transpose() * fit.psi) / n;
  return o;
}

Vec estimate_omega(const Mat& X) {
  const Index n = X.rows(), p = X.cols();
  require(p < n, ErrorCode::unsupported, "estimating Omega from residual norms needs p < n");
  Mat G = Mat::Zero(p, p);
  G.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose());
  Eigen::LLT<Mat> llt(G.selfadjointView<Eigen::Lower>());
  require(llt.info() == Eigen::Success, ErrorCode::singular, "design is rank deficient");
  Mat Linv = Mat::Identity(p, p);
  llt.matrixL().solveInPlace(Linv);
  return static_cast<double>(n - p + 1) * Linv.colwise().squaredNorm().transpose();
}

double estimate_omega_jj(const Mat& X, Index j) {
  const Index n = X.rows(), p = X.cols();
  require(j >= 0 && j < p, ErrorCode::invalid_argument, "coordinate out of range");
  require(p < n, ErrorCode::unsupported, "estimating Omega from residual norms needs p < n");
  Vec r = X.col(j);
  if (p > 1) {
    Mat others(n, p - 1);
    others << X.leftCols(j), X.rightCols(p - 1 - j);
    Eigen::HouseholderQR<Mat> qr(others);
    const Vec coef = qr.solve(r);
    r -= others * coef;
  }
  const double rss = r.squaredNorm();
  require(rss > 1e-12 * std::max(1.0, X.col(j).squaredNorm()), ErrorCode::singular, "design is rank deficient");
  return static_cast<double>(n - p + 1) / rss;
}

Vec dbeta_dx(const FitResult& fit, const Dataset& data, const Ahat& ahat, Index i, Index j) {
  const Index n = data.n(), p = data.p();
  require(i >= 0 && i < n && j >= 0 && j < p, ErrorCode::invalid_argument, "entry out of range");
  Vec rhs = -fit.beta(j) * fit.curvature(i) * data.X.row(i).transpose();
  rhs(j) += fit.psi(i);
  return ahat.apply(rhs, data.X);
}

Vec dpsi_dx(const FitResult& fit, const Dataset& data, const Ahat& ahat, Index i, Index j) {
  const Vec db = dbeta_dx(fit, data, ahat, i, j);
  Vec out = -fit.curvature.cwiseProduct(data.X * db);
  out(i) -= fit.curvature(i) * fit.beta(j);
  return out;
}

TraceSandwich trace_sandwich(const FitResult& fit, const Dataset& data, const Traces& traces,
                             const Covariance& sigma) {
  const double tau = fit.form.tau(sigma);
  require(tau > 0, ErrorCode::unsupported, "the trace bound needs a strongly convex penalty");
  const Mat& X = data.X;
  const Vec& D = fit.curvature;
  const Index p = X.cols();
  // Largest eigenvalue of Sigma^{-1/2} X' D X Sigma^{-1/2} by power iteration.
  Vec v(p);
  for (Index j = 0; j < p; ++j) v(j) = 1.0 + 0.37 * std::sin(static_cast<double>(j + 1));
  v.normalize();
  double lam = 0.0;
  for (int it = 0; it < 500; ++it) {
    Vec nv = sigma.whiten(X.transpose() * D.cwiseProduct(X * sigma.whiten_t(v)));
    const double nl = nv.norm();
    if (nl == 0.0) {
      lam = 0.0;
      break;
    }
    v = nv / nl;
    if (std::abs(nl - lam) <= 1e-12 * nl) {
      lam = nl;
      break;
    }
    lam = nl;
  }
  TraceSandwich s;
  s.c_hat = lam / (static_cast<double>(data.n()) * tau);
  s.lower = traces.trace_d / (1.0 + s.c_hat) - 4.0 * s.c_hat;
  s.upper = traces.trace_d + 4.0 * s.c_hat;
  s.trace_v = traces.trace_v;
  return s;
}

}  // namespace obsadj
