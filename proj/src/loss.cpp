#include "obsadj/loss.hpp"

#include <cmath>
#include <limits>

namespace obsadj {

double softplus(double u) {
  if (u > 0) return u + std::log1p(std::exp(-u));
  return std::log1p(std::exp(u));
}

Loss Loss::logistic(LabelCoding coding) {
  Loss l(LossKind::logistic);
  l.coding_ = coding;
  return l;
}

Loss Loss::binomial(int trials) {
  require(trials >= 1, ErrorCode::invalid_argument, "binomial loss needs at least one trial");
  Loss l(LossKind::binomial);
  l.trials_ = trials;
  return l;
}

Loss Loss::parse(const std::string& name) {
  if (name == "square") return square();
  if (name == "huber") return huber();
  if (name == "logistic") return logistic(LabelCoding::zero_one);
  if (name == "logistic-pm") return logistic(LabelCoding::plus_minus);
  const std::string prefix = "binomial:";
  if (name.rfind(prefix, 0) == 0) {
    const std::string rest = name.substr(prefix.size());
    std::size_t used = 0;
    int q = 0;
    try {
      q = std::stoi(rest, &used);
    } catch (const std::exception&) {
      fail(ErrorCode::invalid_argument, "bad binomial trial count in loss name: " + name);
    }
    require(used == rest.size(), ErrorCode::invalid_argument, "bad binomial trial count in loss name: " + name);
    return binomial(q);
  }
  fail(ErrorCode::invalid_argument, "unknown loss: " + name);
}

std::string Loss::name() const {
  switch (kind_) {
    case LossKind::square: return "square";
    case LossKind::huber: return "huber";
    case LossKind::logistic: return coding_ == LabelCoding::plus_minus ? "logistic-pm" : "logistic";
    case LossKind::binomial: return "binomial:" + std::to_string(trials_);
  }
  return "?";
}

void Loss::check_response(double y) const {
  require(std::isfinite(y), ErrorCode::invalid_argument, "response must be finite");
  switch (kind_) {
    case LossKind::square:
    case LossKind::huber:
      return;
    case LossKind::logistic:
      if (coding_ == LabelCoding::plus_minus)
        require(y == 1.0 || y == -1.0, ErrorCode::invalid_argument, "logistic-pm response must be -1 or +1");
      else
        require(y == 0.0 || y == 1.0, ErrorCode::invalid_argument, "logistic response must be 0 or 1");
      return;
    case LossKind::binomial:
      require(y >= 0 && y <= trials_ && y == std::floor(y), ErrorCode::invalid_argument,
              "binomial response must be an integer in [0, q]");
      return;
  }
}

void Loss::check_responses(const Vec& y) const {
  for (Index i = 0; i < y.size(); ++i) check_response(y(i));
}

double Loss::value(double y, double u) const {
  switch (kind_) {
    case LossKind::square:
      return 0.5 * (y - u) * (y - u);
    case LossKind::huber: {
      const double r = std::abs(y - u);
      return r <= 1.0 ? 0.5 * r * r : r - 0.5;
    }
    case LossKind::logistic:
      if (coding_ == LabelCoding::plus_minus) return softplus(-y * u);
      return softplus(u) - y * u;
    case LossKind::binomial:
      return trials_ * softplus(u) - y * u;
  }
  return 0.0;
}

double Loss::d1(double y, double u) const {
  switch (kind_) {
    case LossKind::square:
      return u - y;
    case LossKind::huber:
      return huber_clip(u - y);
    case LossKind::logistic:
      if (coding_ == LabelCoding::plus_minus) return -y * sigmoid(-y * u);
      return sigmoid(u) - y;
    case LossKind::binomial:
      return trials_ * sigmoid(u) - y;
  }
  return 0.0;
}

double Loss::d2(double y, double u) const {
  switch (kind_) {
    case LossKind::square:
      return 1.0;
    case LossKind::huber:
      return std::abs(y - u) <= 1.0 ? 1.0 : 0.0;
    case LossKind::logistic: {
      const double s = sigmoid(u);
      return s * (1.0 - s);
    }
    case LossKind::binomial: {
      const double s = sigmoid(u);
      return trials_ * s * (1.0 - s);
    }
  }
  return 0.0;
}

double Loss::lipschitz() const {
  switch (kind_) {
    case LossKind::square:
    case LossKind::huber:
      return 1.0;
    case LossKind::logistic:
      return 0.25;
    case LossKind::binomial:
      return 0.25 * trials_;
  }
  return 1.0;
}

void Loss::d1_range(double y, double& lo, double& hi) const {
  switch (kind_) {
    case LossKind::logistic:
      if (coding_ == LabelCoding::plus_minus) {
        lo = std::min(0.0, -y);
        hi = std::max(0.0, -y);
      } else {
        lo = -y;
        hi = 1.0 - y;
      }
      return;
    case LossKind::binomial:
      lo = -y;
      hi = trials_ - y;
      return;
    default:
      lo = -1.0;
      hi = 1.0;
  }
}

double Loss::prox(double y, double gamma, double x) const {
  require(gamma >= 0 && std::isfinite(gamma), ErrorCode::invalid_argument, "prox step must be nonnegative");
  if (gamma == 0.0) return x;
  switch (kind_) {
    case LossKind::square:
      return (x + gamma * y) / (1.0 + gamma);
    case LossKind::huber:
      if (std::abs(x - y) <= 1.0 + gamma) return (x + gamma * y) / (1.0 + gamma);
      return x - gamma * (x > y ? 1.0 : -1.0);
    default:
      break;
  }
  // Root of f(v) = v + gamma l'(v) - x. f is increasing and the bounded
  // derivative range gives a bracket.
  double dlo, dhi;
  d1_range(y, dlo, dhi);
  double lo = x - gamma * dhi;
  double hi = x - gamma * dlo;
  const double tol = 1e-15 * std::max(1.0, std::abs(x));
  double v = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double f = v + gamma * d1(y, v) - x;
    if (f == 0.0) return v;
    if (f > 0) hi = v; else lo = v;
    if (hi - lo <= tol) break;
    const double fp = 1.0 + gamma * d2(y, v);
    double next = v - f / fp;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - v) <= tol) {
      v = next;
      break;
    }
    v = next;
  }
  return v;
}

double Loss::sum(const Vec& y, const Vec& u) const {
  double s = 0.0;
  for (Index i = 0; i < y.size(); ++i) s += value(y(i), u(i));
  return s;
}

Vec Loss::d1(const Vec& y, const Vec& u) const {
  Vec out(y.size());
  for (Index i = 0; i < y.size(); ++i) out(i) = d1(y(i), u(i));
  return out;
}

Vec Loss::d2(const Vec& y, const Vec& u) const {
  Vec out(y.size());
  for (Index i = 0; i < y.size(); ++i) out(i) = d2(y(i), u(i));
  return out;
}

}  // namespace obsadj
