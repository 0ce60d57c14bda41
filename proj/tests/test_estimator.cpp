#include "obsadj/estimator.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace obsadj;
using testutil::simulate;

namespace {

SolverConfig with_algorithm(Algorithm a, double tol = 1e-10) {
  SolverConfig c;
  c.algorithm = a;
  c.kkt_tol = tol;
  c.max_iter = 200;
  return c;
}

// Plain cyclic coordinate descent for (1/2n)|y - Xb|^2 + alpha |b|_1.
Vec naive_lasso(const Mat& X, const Vec& y, double alpha) {
  const Index n = X.rows(), p = X.cols();
  Vec b = Vec::Zero(p), r = y;
  for (int sweep = 0; sweep < 20000; ++sweep) {
    double change = 0.0;
    for (Index j = 0; j < p; ++j) {
      const double cj = X.col(j).squaredNorm() / n;
      const double zj = X.col(j).dot(r) / n + cj * b(j);
      const double nb = soft_threshold(zj, alpha) / cj;
      r -= (nb - b(j)) * X.col(j);
      change = std::max(change, std::abs(nb - b(j)));
      b(j) = nb;
    }
    if (change < 1e-14) break;
  }
  return b;
}

Dataset separable_logistic(Index n, Index p, std::uint64_t seed) {
  Dataset d = simulate(n, p, 1.0, LinkSpec::linear(1.0, 0.0), seed);
  for (Index i = 0; i < n; ++i) d.y(i) = d.y(i) > 0 ? 1.0 : 0.0;
  return d;
}

}  // namespace

TEST_CASE("unpenalized least squares equals the normal-equation solution") {
  const Dataset d = simulate(80, 10, 1.0, LinkSpec::linear(1.0, 1.0), 1);
  const Vec ols = d.X.colPivHouseholderQr().solve(d.y);
  const FitResult f = fit(d, Loss::square(), Penalty::none(), with_algorithm(Algorithm::automatic));
  CHECK((f.beta - ols).norm() < 1e-9);
  CHECK(f.converged);
  CHECK(f.kkt_residual <= 1e-10);
  CHECK((f.psi - (d.y - d.X * f.beta)).norm() < 1e-12);
  CHECK((f.curvature.array() == 1.0).all());
  CHECK(f.active.size() == 10);

  const GramCache g = make_gram_cache(d.X);
  const FitResult fg = fit(d, Loss::square(), Penalty::none(), with_algorithm(Algorithm::automatic), &g);
  CHECK((fg.beta - ols).norm() < 1e-9);
}

TEST_CASE("ridge least squares equals the closed form") {
  const Index n = 60, p = 90;
  const Dataset d = simulate(n, p, 1.0 / p, LinkSpec::linear(1.0, 0.5), 2);
  const Penalty g = Penalty::ridge(0.7, RidgeScaling::per_p);
  const double kappa = 0.7 / p;
  const Mat M = d.X.transpose() * d.X / n + kappa * Mat::Identity(p, p);
  const Vec ref = M.ldlt().solve(d.X.transpose() * d.y / n);
  for (Algorithm a : {Algorithm::newton, Algorithm::prox_gradient, Algorithm::coordinate_descent}) {
    CAPTURE(to_string(a));
    const FitResult f = fit(d, Loss::square(), g, with_algorithm(a));
    CHECK((f.beta - ref).norm() <= 1e-7 * ref.norm());
  }
  SolverConfig cg = with_algorithm(Algorithm::newton);
  cg.linear_solver = LinearSolver::conjugate_gradient;
  CHECK((fit(d, Loss::square(), g, cg).beta - ref).norm() <= 1e-7 * ref.norm());
}

TEST_CASE("lasso agrees with an independent coordinate descent") {
  const Index n = 100, p = 40;
  const Dataset d = simulate(n, p, 1.0, LinkSpec::linear(2.0, 1.0), 3, 5);
  const double alpha = 0.15;
  const Vec ref = naive_lasso(d.X, d.y, alpha);
  for (Algorithm a : {Algorithm::coordinate_descent, Algorithm::prox_gradient}) {
    CAPTURE(to_string(a));
    const FitResult f = fit(d, Loss::square(), Penalty::l1(alpha, L1Scaling::plain), with_algorithm(a));
    CHECK((f.beta - ref).lpNorm<Eigen::Infinity>() < 1e-7);
    // Support agrees except for coordinates at the threshold boundary.
    for (Index j = 0; j < p; ++j)
      if (std::abs(ref(j)) > 1e-6) CHECK(f.beta(j) != 0.0);
  }
  CHECK_THROWS_AS(fit(d, Loss::square(), Penalty::l1(alpha, L1Scaling::plain), with_algorithm(Algorithm::newton)),
                  Error);
}

TEST_CASE("algorithms agree on logistic ridge and elastic net") {
  const Index n = 150, p = 60;
  const Dataset d = simulate(n, p, 1.0 / p, LinkSpec::logistic(2.0), 4);
  const Penalty ridge = Penalty::ridge(0.5, RidgeScaling::per_p);
  const Penalty en = Penalty::elastic_net(0.02, 0.01);
  for (const Penalty& g : {ridge, en}) {
    CAPTURE(g.describe());
    const FitResult ref = fit(d, Loss::logistic(), g, with_algorithm(Algorithm::coordinate_descent, 1e-12));
    CHECK(ref.kkt_residual <= 1e-12);
    const FitResult fg = fit(d, Loss::logistic(), g, with_algorithm(Algorithm::prox_gradient, 1e-11));
    CHECK((fg.beta - ref.beta).norm() <= 1e-7 * std::max(1.0, ref.beta.norm()));
    if (g.kind == PenaltyKind::ridge) {
      const FitResult fn = fit(d, Loss::logistic(), g, with_algorithm(Algorithm::newton, 1e-12));
      CHECK((fn.beta - ref.beta).norm() <= 1e-8 * std::max(1.0, ref.beta.norm()));
    }
    // The solution is a minimizer: random perturbations raise the objective.
    Rng rng(9);
    for (int k = 0; k < 5; ++k) {
      Vec delta(p);
      for (Index j = 0; j < p; ++j) delta(j) = 1e-3 * rng.normal();
      CHECK(objective(d, Loss::logistic(), ref.form, ref.beta + delta) > ref.objective);
    }
  }
}

TEST_CASE("huber and binomial losses converge") {
  const Dataset dh = simulate(200, 20, 1.0, LinkSpec::linear_cauchy(2.0), 5);
  const FitResult fh = fit(dh, Loss::huber(), Penalty::none(), with_algorithm(Algorithm::automatic));
  CHECK(fh.kkt_residual <= 1e-10);
  const Dataset db = simulate(200, 30, 1.0 / 30, LinkSpec::binomial(4, 1.1), 6);
  const FitResult fb = fit(db, Loss::binomial(4), Penalty::l1(0.5, L1Scaling::per_sqrt_n), {});
  CHECK(fb.converged);
  CHECK(fb.kkt_residual <= 1e-8);
  CHECK(fb.active.size() < 30);
}

TEST_CASE("warm start and determinism") {
  const Dataset d = simulate(120, 50, 1.0 / 50, LinkSpec::logistic(1.5), 7);
  const Penalty g = Penalty::l1(0.5, L1Scaling::per_sqrt_n);
  const FitResult a = fit(d, Loss::logistic(), g, {});
  const FitResult b = fit(d, Loss::logistic(), g, {});
  CHECK(a.beta == b.beta);
  SolverConfig warm;
  warm.warm_start.assign(a.beta.data(), a.beta.data() + a.beta.size());
  const FitResult c = fit(d, Loss::logistic(), g, warm);
  CHECK(c.iterations == 0);
  CHECK(c.beta == a.beta);
  warm.warm_start.pop_back();
  CHECK_THROWS_AS(fit(d, Loss::logistic(), g, warm), Error);
}

TEST_CASE("KKT certificate") {
  const Dataset d = simulate(100, 30, 1.0, LinkSpec::linear(1.0, 1.0), 8, 4);
  const Penalty g = Penalty::l1(0.1, L1Scaling::plain);
  const FitResult f = fit(d, Loss::square(), g, {});
  CHECK(kkt_residual(f, d) == doctest::Approx(f.kkt_residual));
  const Vec z = penalty_subgrad_from_kkt(f, d);
  CHECK(f.form.subgradient_gap(f.beta, z).maxCoeff() <= 1e-8);
  Vec bad = f.beta;
  bad(0) += 0.5;
  const FitResult fb = evaluate_fit(d, Loss::square(), g, bad);
  CHECK_FALSE(fb.converged);
  CHECK_THROWS_AS(penalty_subgrad_from_kkt(fb, d), KktViolation);
  const FitResult same = evaluate_fit(d, Loss::square(), g, f.beta);
  CHECK(same.converged);
  CHECK((same.psi - f.psi).norm() < 1e-12);
}

TEST_CASE("input validation") {
  const Dataset d = simulate(20, 30, 1.0, LinkSpec::linear(1.0, 1.0), 9);
  CHECK_THROWS_AS(fit(d, Loss::square(), Penalty::none(), {}), Error);  // p >= n
  SolverConfig bad;
  bad.kkt_tol = 0.0;
  CHECK_THROWS_AS(fit(d, Loss::square(), Penalty::ridge(1.0, RidgeScaling::per_p), bad), Error);
  CHECK_THROWS_AS(fit(d, Loss::logistic(), Penalty::ridge(1.0, RidgeScaling::per_p), {}), Error);  // y not 0/1
  const GramCache g = make_gram_cache(d.X.leftCols(5));
  CHECK_THROWS_AS(fit(d, Loss::square(), Penalty::ridge(1.0, RidgeScaling::per_p), {}, &g), Error);
}

TEST_CASE("guard step function and its integral") {
  CHECK(guard_h(-0.5) == 0.0);
  CHECK(guard_h(2.0) == 1.0);
  CHECK(guard_H(-1.0) == 0.0);
  CHECK(guard_H(1.0) == doctest::Approx(0.5));
  CHECK(guard_H(3.0) == doctest::Approx(2.5));
  const double h = 1e-6;
  for (double t : {-0.3, 0.1, 0.5, 0.9, 1.7}) {
    CHECK((guard_H(t + h) - guard_H(t - h)) / (2 * h) == doctest::Approx(guard_h(t)).epsilon(1e-6));
    CHECK((guard_h(t + h) - guard_h(t - h)) / (2 * h) == doctest::Approx(guard_hprime(t)).epsilon(1e-5));
  }
}

TEST_CASE("separable data and the coercive guard") {
  const Dataset d = separable_logistic(200, 5, 10);
  try {
    fit(d, Loss::logistic(), Penalty::none(), {});
    FAIL("plain fit should not converge on separable data");
  } catch (const Error& e) {
    CHECK((e.code() == ErrorCode::separable_data || e.code() == ErrorCode::not_converged));
  }
  for (double K : {1.0, 10.0}) {
    const FitResult f = fit_coercive(d, Loss::logistic(), K, {});
    CHECK(f.converged);
    CHECK(f.guard_active);
    CHECK(f.u.squaredNorm() / d.n() <= K + 2.0);
  }

  const Dataset ok = simulate(400, 5, 1.0, LinkSpec::logistic(1.0), 11);
  SolverConfig tight;
  tight.kkt_tol = 1e-12;
  const FitResult plain = fit(ok, Loss::logistic(), Penalty::none(), tight);
  const FitResult guarded = fit_coercive(ok, Loss::logistic(), 10.0, tight);
  CHECK_FALSE(guarded.guard_active);
  CHECK((guarded.beta - plain.beta).lpNorm<Eigen::Infinity>() <= 1e-8);
  CHECK_THROWS_AS(fit_coercive(simulate(20, 30, 1.0, LinkSpec::logistic(1.0), 12), Loss::logistic(), 1.0, {}),
                  Error);
}
