#include "obsadj/loss.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace obsadj;

namespace {

struct Case {
  Loss loss;
  std::vector<double> ys;
};

std::vector<Case> cases() {
  return {
      {Loss::square(), {-1.3, 0.0, 2.2}},
      {Loss::huber(), {-1.3, 0.0, 2.2}},
      {Loss::logistic(), {0.0, 1.0}},
      {Loss::logistic(LabelCoding::plus_minus), {-1.0, 1.0}},
      {Loss::binomial(4), {0.0, 1.0, 3.0, 4.0}},
  };
}

// Independent closed forms.
double reference_value(const Loss& l, double y, double u) {
  switch (l.kind()) {
    case LossKind::square: return 0.5 * (y - u) * (y - u);
    case LossKind::huber: {
      const double r = std::abs(y - u);
      return r <= 1.0 ? 0.5 * r * r : r - 0.5;
    }
    case LossKind::logistic:
      return l.coding() == LabelCoding::plus_minus ? std::log1p(std::exp(-y * u)) : std::log1p(std::exp(u)) - y * u;
    case LossKind::binomial: return l.trials() * std::log1p(std::exp(u)) - y * u;
  }
  return 0.0;
}

// Solves (v - x) + gamma l'(v) = 0 by bisection.
double bisect_prox(const Loss& l, double y, double gamma, double x) {
  double lo = x - 50.0, hi = x + 50.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    if ((mid - x) + gamma * l.d1(y, mid) > 0)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("loss values match closed forms") {
  for (const auto& c : cases())
    for (double y : c.ys)
      for (double u : {-3.0, -0.4, 0.0, 0.7, 2.5}) {
        CAPTURE(c.loss.name());
        CHECK(c.loss.value(y, u) == doctest::Approx(reference_value(c.loss, y, u)).epsilon(1e-12));
      }
}

TEST_CASE("derivatives match central differences") {
  const double h = 1e-5;
  for (const auto& c : cases())
    for (double y : c.ys)
      for (double u : {-3.0, -0.4, 0.3, 0.7, 2.5}) {
        CAPTURE(c.loss.name());
        CAPTURE(y);
        CAPTURE(u);
        const double fd1 = (c.loss.value(y, u + h) - c.loss.value(y, u - h)) / (2 * h);
        const double fd2 = (c.loss.d1(y, u + h) - c.loss.d1(y, u - h)) / (2 * h);
        CHECK(c.loss.d1(y, u) == doctest::Approx(fd1).epsilon(1e-6));
        CHECK(c.loss.d2(y, u) == doctest::Approx(fd2).epsilon(1e-6));
        CHECK(c.loss.d2(y, u) >= 0.0);
        CHECK(std::abs(c.loss.d1(y, u + 0.1) - c.loss.d1(y, u)) <= c.loss.lipschitz() * 0.1 + 1e-12);
      }
}

TEST_CASE("prox matches a bisection oracle") {
  for (const auto& c : cases())
    for (double y : c.ys)
      for (double gamma : {0.0, 0.3, 2.0, 15.0})
        for (double x : {-4.0, -0.2, 0.0, 1.1, 5.0}) {
          CAPTURE(c.loss.name());
          const double ref = gamma == 0.0 ? x : bisect_prox(c.loss, y, gamma, x);
          CHECK(c.loss.prox(y, gamma, x) == doctest::Approx(ref).epsilon(1e-10));
        }
}

TEST_CASE("vector forms agree with scalar forms") {
  const Loss l = Loss::binomial(3);
  Vec y(3), u(3);
  y << 0, 2, 3;
  u << -1.0, 0.2, 4.0;
  double s = 0.0;
  for (int i = 0; i < 3; ++i) s += l.value(y(i), u(i));
  CHECK(l.sum(y, u) == doctest::Approx(s));
  const Vec d1 = l.d1(y, u), d2 = l.d2(y, u);
  for (int i = 0; i < 3; ++i) {
    CHECK(d1(i) == l.d1(y(i), u(i)));
    CHECK(d2(i) == l.d2(y(i), u(i)));
  }
}

TEST_CASE("tails do not overflow") {
  const Loss l = Loss::logistic();
  CHECK(std::isfinite(l.value(0.0, 800.0)));
  CHECK(l.value(0.0, 800.0) == doctest::Approx(800.0));
  CHECK(l.value(1.0, -800.0) == doctest::Approx(800.0));
  CHECK(softplus(1000.0) == doctest::Approx(1000.0));
  CHECK(softplus(-1000.0) >= 0.0);
  CHECK(std::isfinite(l.d2(1.0, 800.0)));
}

TEST_CASE("response validation and parsing") {
  CHECK_THROWS_AS(Loss::logistic().check_response(0.5), Error);
  CHECK_THROWS_AS(Loss::logistic(LabelCoding::plus_minus).check_response(0.0), Error);
  CHECK_THROWS_AS(Loss::binomial(2).check_response(3.0), Error);
  CHECK_THROWS_AS(Loss::binomial(2).check_response(1.5), Error);
  CHECK_THROWS_AS(Loss::square().check_response(std::nan("")), Error);
  Loss::binomial(2).check_response(2.0);

  CHECK(Loss::parse("binomial:6").trials() == 6);
  CHECK(Loss::parse("logistic-pm").coding() == LabelCoding::plus_minus);
  CHECK(Loss::parse("huber").kind() == LossKind::huber);
  CHECK_THROWS_AS(Loss::parse("binomial:x"), Error);
  CHECK_THROWS_AS(Loss::parse("binomial:2x"), Error);
  CHECK_THROWS_AS(Loss::parse("hinge"), Error);
  CHECK_THROWS_AS(Loss::binomial(0), Error);
  for (const char* name : {"square", "huber", "logistic", "logistic-pm", "binomial:3"})
    CHECK(Loss::parse(name).name() == name);
}
