#pragma once

#include "obsadj/common.hpp"
#include "obsadj/model.hpp"

#include <string>

namespace obsadj {

enum class LossKind { square, huber, logistic, binomial };

/// Scalar convex data-fitting loss l_y(u), applied row-wise to u = x_i'b.
///
/// Logistic supports both label codings:
///   zero_one:   log(1 + e^u) - y u,   y in {0, 1}
///   plus_minus: log(1 + e^{-y u}),   y in {-1, +1}
/// Binomial with q trials: q log(1 + e^u) - y u, y in {0, ..., q}.
/// Huber uses threshold 1.
class Loss {
 public:
  static Loss square() { return Loss(LossKind::square); }
  static Loss huber() { return Loss(LossKind::huber); }
  static Loss logistic(LabelCoding coding = LabelCoding::zero_one);
  static Loss binomial(int trials);
  // Parses "square", "huber", "logistic", "logistic-pm", "binomial:<q>".
  static Loss parse(const std::string& name);

  LossKind kind() const { return kind_; }
  LabelCoding coding() const { return coding_; }
  int trials() const { return trials_; }
  std::string name() const;

  // Throws invalid_argument when y is outside the response set.
  void check_response(double y) const;
  void check_responses(const Vec& y) const;

  double value(double y, double u) const;
  double d1(double y, double u) const;
  double d2(double y, double u) const;
  // argmin_v (x - v)^2 / 2 + gamma * l_y(v); gamma = 0 returns x.
  double prox(double y, double gamma, double x) const;

  // Lipschitz constant of u -> l'_y(u).
  double lipschitz() const;

  double sum(const Vec& y, const Vec& u) const;
  Vec d1(const Vec& y, const Vec& u) const;
  Vec d2(const Vec& y, const Vec& u) const;

 private:
  explicit Loss(LossKind kind) : kind_(kind) {}
  // Range of l'_y(.) over u, used to bracket the prox equation.
  void d1_range(double y, double& lo, double& hi) const;

  LossKind kind_;
  LabelCoding coding_ = LabelCoding::zero_one;
  int trials_ = 1;
};

// max(-1, min(1, u))
inline double huber_clip(double u) { return u > 1.0 ? 1.0 : (u < -1.0 ? -1.0 : u); }

double softplus(double u);  // log(1 + e^u) without overflow

}  // namespace obsadj
