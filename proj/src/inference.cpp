#include "obsadj/inference.hpp"

#include "obsadj/stats.hpp"

#include <cmath>

namespace obsadj {

namespace {

const Vec& checked_w(const Vec& signed_w, Index p, Vec& zeros) {
  if (signed_w.size() == 0) {
    zeros = Vec::Zero(p);
    return zeros;
  }
  require(signed_w.size() == p, ErrorCode::dimension_mismatch, "index length mismatch");
  return signed_w;
}

}  // namespace

OmegaSource parse_omega_source(const std::string& s) {
  if (s == "exact") return OmegaSource::exact;
  if (s == "estimate" || s == "estimated") return OmegaSource::estimated;
  fail(ErrorCode::invalid_argument, "unknown omega source: " + s);
}

Vec debias(const FitResult& fit, const Dataset& data, const Adjustments& adj, const Covariance& sigma) {
  require(adj.v != 0.0, ErrorCode::degenerate, "v is zero; the debiased estimate is undefined");
  require(sigma.dim() == data.p(), ErrorCode::dimension_mismatch, "covariance dimension mismatch");
  const double n = static_cast<double>(data.n());
  return fit.beta + sigma.solve(data.X.transpose() * fit.psi) / (adj.v * n);
}

Vec omega_diag(const Dataset& data, OmegaSource source) {
  if (source == OmegaSource::exact) {
    require(data.covariance.has_value(), ErrorCode::missing_truth, "exact Omega needs Sigma");
    return data.covariance->omega_diag();
  }
  return estimate_omega(data.X);
}

std::vector<CoordinateCI> confidence_intervals(const Vec& beta_d, const Adjustments& adj, double alpha,
                                               const Vec& omega, Index n) {
  require(beta_d.size() == omega.size(), ErrorCode::dimension_mismatch, "omega length mismatch");
  const double t = adj.t();
  require(t > 0, ErrorCode::degenerate, "t is zero: no detectable signal, use the test only");
  const double z = z_two_sided(alpha);
  const double scale = adj.r() / t * z / std::sqrt(static_cast<double>(n));
  std::vector<CoordinateCI> out(static_cast<std::size_t>(beta_d.size()));
  for (Index j = 0; j < beta_d.size(); ++j) {
    CoordinateCI& ci = out[static_cast<std::size_t>(j)];
    ci.j = j;
    ci.center = adj.v / t * beta_d(j);
    ci.half_width = scale * std::sqrt(omega(j));
    ci.lo = ci.center - ci.half_width;
    ci.hi = ci.center + ci.half_width;
  }
  return out;
}

NullTest test_null(double beta_d_j, const Adjustments& adj, double alpha, double omega_jj, Index n) {
  require(adj.r2 > 0, ErrorCode::degenerate, "r is zero");
  require(omega_jj > 0, ErrorCode::invalid_argument, "Omega_jj must be positive");
  NullTest res;
  res.stat = adj.v / adj.r() * std::sqrt(static_cast<double>(n)) * std::abs(beta_d_j) / std::sqrt(omega_jj);
  res.reject = res.stat > z_two_sided(alpha);
  return res;
}

Vec pivot_ls(const FitResult& fit, const Dataset& data, const Vec& omega, const Vec& signed_w) {
  require(fit.penalty.kind == PenaltyKind::none && fit.loss.kind() == LossKind::square, ErrorCode::unsupported,
          "the least-squares pivot needs an unpenalized square-loss fit");
  const Index n_i = data.n(), p_i = data.p();
  require(p_i < n_i, ErrorCode::unsupported, "the least-squares pivot needs p < n");
  require(omega.size() == p_i, ErrorCode::dimension_mismatch, "omega length mismatch");
  Vec zeros;
  const Vec& w = checked_w(signed_w, p_i, zeros);
  const double n = static_cast<double>(n_i), p = static_cast<double>(p_i);
  const double res = (data.y - fit.u).norm();
  require(res > 0, ErrorCode::degenerate, "zero residual: the least-squares pivot is undefined");
  const double ratio = fit.u.squaredNorm() / (res * res) - p / (n - p);
  const double amp = std::sqrt(std::max(0.0, ratio)) / std::sqrt(n);
  Vec out(p_i);
  for (Index j = 0; j < p_i; ++j)
    out(j) = (n - p) / std::sqrt(omega(j)) * (fit.beta(j) / res - w(j) * amp);
  return out;
}

Vec pivot_ridge(const FitResult& fit, const Adjustments& adj, const Dataset& data, const Vec& signed_w) {
  require(fit.penalty.kind == PenaltyKind::ridge, ErrorCode::unsupported, "the ridge pivot needs a ridge fit");
  const Vec& kappa = fit.form.kappa;
  require((kappa.array() == kappa(0)).all(), ErrorCode::unsupported, "the ridge pivot needs a uniform ridge");
  const Index p_i = data.p();
  if (data.covariance)
    require(data.covariance->is_isotropic() &&
                std::abs(data.covariance->scale() * static_cast<double>(p_i) - 1.0) <= 1e-12,
            ErrorCode::unsupported, "the ridge pivot assumes Sigma = I/p");
  require(adj.r2 > 0, ErrorCode::degenerate, "r is zero");
  Vec zeros;
  const Vec& w = checked_w(signed_w, p_i, zeros);
  const double n = static_cast<double>(data.n()), p = static_cast<double>(p_i);
  const double lam = kappa(0) * p;
  const double c = std::sqrt(n / p) / adj.r();
  return c * ((adj.v + lam) * fit.beta - adj.t() * w);
}

Vec pivot_general(const Vec& beta_d, const Adjustments& adj, const Vec& omega, const Vec& signed_w, Index n) {
  require(beta_d.size() == omega.size(), ErrorCode::dimension_mismatch, "omega length mismatch");
  require(adj.r2 > 0, ErrorCode::degenerate, "r is zero");
  Vec zeros;
  const Vec& w = checked_w(signed_w, beta_d.size(), zeros);
  const double sn = std::sqrt(static_cast<double>(n));
  const double r = adj.r();
  return (sn * ((adj.v / r) * beta_d - (adj.t() / r) * w).array() / omega.array().sqrt()).matrix();
}

Vec prox_kkt_residual(const FitResult& fit, const Adjustments& adj, const Vec& beta_d, const Covariance& sigma) {
  require(sigma.is_isotropic(), ErrorCode::unsupported, "the proximal identity needs an isotropic Sigma");
  require(adj.v > 0, ErrorCode::degenerate, "v is not positive");
  const double c = 1.0 / (sigma.scale() * adj.v);
  Vec out(beta_d.size());
  for (Index j = 0; j < beta_d.size(); ++j) out(j) = fit.beta(j) - fit.form.prox_coord(j, c, beta_d(j));
  return out;
}

Vec prox_residual_predicted(const FitResult& fit, const Dataset& data, const OracleQuantities& oracle) {
  require(data.has_truth(), ErrorCode::missing_truth, "the predicted-value residual needs the index w");
  require(oracle.gamma_star > 0, ErrorCode::degenerate, "gamma* must be positive");
  const Vec U = data.X * *data.index;
  return fit.u - oracle.gamma_star * fit.psi - oracle.a_star * U;
}

double signal_strength(const Adjustments& adj) {
  require(adj.v > 0, ErrorCode::degenerate, "v is not positive");
  return adj.t() / adj.v;
}

}  // namespace obsadj
