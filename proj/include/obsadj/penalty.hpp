#pragma once

#include "obsadj/common.hpp"
#include "obsadj/model.hpp"

#include <string>

namespace obsadj {

enum class PenaltyKind { none, ridge, l1, elastic_net, separable };

// ridge: per_p = lambda |b|^2 / (2p), per_p_alt = lambda |b|^2 / p,
//        per_n = lambda |b|^2 / (2n)
enum class RidgeScaling { per_p, per_p_alt, per_n };
// l1: per_sqrt_n = lambda |b|_1 / sqrt(n), per_p = lambda |b|_1 / p,
//     plain = lambda |b|_1
enum class L1Scaling { per_sqrt_n, per_p, plain };

/// Coordinate-wise form g(b) = sum_j alpha_j |b_j| + kappa_j b_j^2 / 2.
///
/// Every supported penalty reduces to this once n and p are known.
struct SeparableForm {
  Vec alpha;
  Vec kappa;

  Index dim() const { return alpha.size(); }
  bool smooth() const { return (alpha.array() == 0.0).all(); }
  bool strongly_convex() const { return (kappa.array() > 0.0).all(); }

  double value(const Vec& b) const;
  // prox[c g](x)_j = soft(x_j, c alpha_j) / (1 + c kappa_j)
  Vec prox(double c, const Vec& x) const;
  double prox_coord(Index j, double c, double x) const;
  // Gradient of the smooth part plus alpha_j sign(b_j) on nonzero coordinates.
  Vec gradient(const Vec& b) const;
  // Per-coordinate distance from z to the subdifferential at b.
  Vec subgradient_gap(const Vec& b, const Vec& z) const;
  // min_j kappa_j / lambda_max(Sigma): strong convexity in the Sigma metric.
  double tau(const Covariance& sigma) const;
};

/// Penalty specification with an explicit scaling convention.
struct Penalty {
  PenaltyKind kind = PenaltyKind::none;
  double lambda = 0.0;   // ridge or l1 level
  double lambda2 = 0.0;  // elastic-net: (scaled lambda) |b|_1 + lambda2 |b|^2
  RidgeScaling ridge_scaling = RidgeScaling::per_p;
  L1Scaling l1_scaling = L1Scaling::plain;
  Vec sep_alpha, sep_kappa;  // separable kind only

  static Penalty none() { return Penalty{}; }
  static Penalty ridge(double lambda, RidgeScaling scaling);
  static Penalty l1(double lambda, L1Scaling scaling);
  static Penalty elastic_net(double lambda1, double lambda2, L1Scaling scaling = L1Scaling::plain);
  static Penalty separable(const Vec& alpha, const Vec& kappa);

  SeparableForm resolve(Index n, Index p) const;
  std::string describe() const;
  void validate() const;
};

RidgeScaling parse_ridge_scaling(const std::string& s);
L1Scaling parse_l1_scaling(const std::string& s);
std::string to_string(RidgeScaling s);
std::string to_string(L1Scaling s);
PenaltyKind parse_penalty_kind(const std::string& s);
std::string to_string(PenaltyKind k);

inline double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

}  // namespace obsadj
