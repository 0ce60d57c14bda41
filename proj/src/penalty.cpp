#include "obsadj/penalty.hpp"

#include <cmath>
#include <sstream>

namespace obsadj {

double SeparableForm::value(const Vec& b) const {
  require(b.size() == dim(), ErrorCode::dimension_mismatch, "penalty dimension mismatch");
  return (alpha.array() * b.array().abs()).sum() + 0.5 * (kappa.array() * b.array().square()).sum();
}

double SeparableForm::prox_coord(Index j, double c, double x) const {
  return soft_threshold(x, c * alpha(j)) / (1.0 + c * kappa(j));
}

Vec SeparableForm::prox(double c, const Vec& x) const {
  require(c >= 0, ErrorCode::invalid_argument, "prox scale must be nonnegative");
  require(x.size() == dim(), ErrorCode::dimension_mismatch, "penalty dimension mismatch");
  Vec out(x.size());
  for (Index j = 0; j < x.size(); ++j) out(j) = prox_coord(j, c, x(j));
  return out;
}

Vec SeparableForm::gradient(const Vec& b) const {
  Vec g = kappa.cwiseProduct(b);
  for (Index j = 0; j < b.size(); ++j)
    if (b(j) != 0.0) g(j) += alpha(j) * (b(j) > 0 ? 1.0 : -1.0);
  return g;
}

Vec SeparableForm::subgradient_gap(const Vec& b, const Vec& z) const {
  Vec gap(b.size());
  for (Index j = 0; j < b.size(); ++j) {
    const double r = z(j) - kappa(j) * b(j);
    if (b(j) != 0.0)
      gap(j) = std::abs(r - alpha(j) * (b(j) > 0 ? 1.0 : -1.0));
    else
      gap(j) = std::max(0.0, std::abs(r) - alpha(j));
  }
  return gap;
}

double SeparableForm::tau(const Covariance& sigma) const {
  if (dim() == 0) return 0.0;
  return kappa.minCoeff() / sigma.max_eigenvalue();
}

Penalty Penalty::ridge(double lambda, RidgeScaling scaling) {
  Penalty g;
  g.kind = PenaltyKind::ridge;
  g.lambda = lambda;
  g.ridge_scaling = scaling;
  g.validate();
  return g;
}

Penalty Penalty::l1(double lambda, L1Scaling scaling) {
  Penalty g;
  g.kind = PenaltyKind::l1;
  g.lambda = lambda;
  g.l1_scaling = scaling;
  g.validate();
  return g;
}

Penalty Penalty::elastic_net(double lambda1, double lambda2, L1Scaling scaling) {
  Penalty g;
  g.kind = PenaltyKind::elastic_net;
  g.lambda = lambda1;
  g.lambda2 = lambda2;
  g.l1_scaling = scaling;
  g.validate();
  return g;
}

Penalty Penalty::separable(const Vec& alpha, const Vec& kappa) {
  Penalty g;
  g.kind = PenaltyKind::separable;
  g.sep_alpha = alpha;
  g.sep_kappa = kappa;
  g.validate();
  return g;
}

void Penalty::validate() const {
  switch (kind) {
    case PenaltyKind::none:
      return;
    case PenaltyKind::ridge:
      require(lambda > 0 && std::isfinite(lambda), ErrorCode::invalid_argument, "ridge level must be positive");
      return;
    case PenaltyKind::l1:
      require(lambda > 0 && std::isfinite(lambda), ErrorCode::invalid_argument, "l1 level must be positive");
      return;
    case PenaltyKind::elastic_net:
      require(lambda >= 0 && lambda2 > 0 && std::isfinite(lambda) && std::isfinite(lambda2),
              ErrorCode::invalid_argument, "elastic-net needs lambda1 >= 0 and lambda2 > 0");
      return;
    case PenaltyKind::separable:
      require(sep_alpha.size() == sep_kappa.size() && sep_alpha.size() > 0, ErrorCode::dimension_mismatch,
              "separable penalty coefficient lengths differ");
      require((sep_alpha.array() >= 0).all() && (sep_kappa.array() >= 0).all() && sep_alpha.allFinite() &&
                  sep_kappa.allFinite(),
              ErrorCode::invalid_argument, "separable penalty coefficients must be nonnegative");
      return;
  }
}

SeparableForm Penalty::resolve(Index n, Index p) const {
  require(n >= 1 && p >= 1, ErrorCode::invalid_argument, "dimensions must be positive");
  SeparableForm f{Vec::Zero(p), Vec::Zero(p)};
  const double dn = static_cast<double>(n), dp = static_cast<double>(p);
  switch (kind) {
    case PenaltyKind::none:
      break;
    case PenaltyKind::ridge:
      switch (ridge_scaling) {
        case RidgeScaling::per_p: f.kappa.setConstant(lambda / dp); break;
        case RidgeScaling::per_p_alt: f.kappa.setConstant(2.0 * lambda / dp); break;
        case RidgeScaling::per_n: f.kappa.setConstant(lambda / dn); break;
      }
      break;
    case PenaltyKind::l1:
    case PenaltyKind::elastic_net:
      switch (l1_scaling) {
        case L1Scaling::per_sqrt_n: f.alpha.setConstant(lambda / std::sqrt(dn)); break;
        case L1Scaling::per_p: f.alpha.setConstant(lambda / dp); break;
        case L1Scaling::plain: f.alpha.setConstant(lambda); break;
      }
      if (kind == PenaltyKind::elastic_net) f.kappa.setConstant(2.0 * lambda2);
      break;
    case PenaltyKind::separable:
      require(sep_alpha.size() == p, ErrorCode::dimension_mismatch,
              "separable penalty length does not match the number of columns");
      f.alpha = sep_alpha;
      f.kappa = sep_kappa;
      break;
  }
  return f;
}

std::string Penalty::describe() const {
  std::ostringstream os;
  os << to_string(kind);
  switch (kind) {
    case PenaltyKind::ridge: os << "(" << lambda << "," << to_string(ridge_scaling) << ")"; break;
    case PenaltyKind::l1: os << "(" << lambda << "," << to_string(l1_scaling) << ")"; break;
    case PenaltyKind::elastic_net:
      os << "(" << lambda << "," << lambda2 << "," << to_string(l1_scaling) << ")";
      break;
    default: break;
  }
  return os.str();
}

RidgeScaling parse_ridge_scaling(const std::string& s) {
  if (s == "per-p") return RidgeScaling::per_p;
  if (s == "per-p-alt") return RidgeScaling::per_p_alt;
  if (s == "per-n") return RidgeScaling::per_n;
  fail(ErrorCode::invalid_argument, "unknown ridge scaling: " + s);
}

L1Scaling parse_l1_scaling(const std::string& s) {
  if (s == "per-sqrt-n") return L1Scaling::per_sqrt_n;
  if (s == "per-p") return L1Scaling::per_p;
  if (s == "plain") return L1Scaling::plain;
  fail(ErrorCode::invalid_argument, "unknown l1 scaling: " + s);
}

std::string to_string(RidgeScaling s) {
  switch (s) {
    case RidgeScaling::per_p: return "per-p";
    case RidgeScaling::per_p_alt: return "per-p-alt";
    case RidgeScaling::per_n: return "per-n";
  }
  return "?";
}

std::string to_string(L1Scaling s) {
  switch (s) {
    case L1Scaling::per_sqrt_n: return "per-sqrt-n";
    case L1Scaling::per_p: return "per-p";
    case L1Scaling::plain: return "plain";
  }
  return "?";
}

PenaltyKind parse_penalty_kind(const std::string& s) {
  if (s == "none") return PenaltyKind::none;
  if (s == "ridge") return PenaltyKind::ridge;
  if (s == "l1") return PenaltyKind::l1;
  if (s == "elastic-net") return PenaltyKind::elastic_net;
  if (s == "separable") return PenaltyKind::separable;
  fail(ErrorCode::invalid_argument, "unknown penalty: " + s);
}

std::string to_string(PenaltyKind k) {
  switch (k) {
    case PenaltyKind::none: return "none";
    case PenaltyKind::ridge: return "ridge";
    case PenaltyKind::l1: return "l1";
    case PenaltyKind::elastic_net: return "elastic-net";
    case PenaltyKind::separable: return "separable";
  }
  return "?";
}

}  // namespace obsadj
