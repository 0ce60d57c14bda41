#include "obsadj/model.hpp"
#include "obsadj/random.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace obsadj;

TEST_CASE("scaled identity covariance") {
  const Covariance c = Covariance::identity_scaled(4, 0.25);
  CHECK(c.is_isotropic());
  const Vec v = Vec::LinSpaced(4, 1, 4);
  CHECK((c.apply(v) - 0.25 * v).norm() < 1e-15);
  CHECK((c.solve(v) - 4.0 * v).norm() < 1e-15);
  CHECK(c.quad(v) == doctest::Approx(0.25 * 30));
  CHECK(c.quad_inv(v) == doctest::Approx(4.0 * 30));
  CHECK((c.omega_diag().array() == 4.0).all());
  CHECK(c.max_eigenvalue() == doctest::Approx(0.25));
  CHECK((c.dense() - 0.25 * Mat::Identity(4, 4)).norm() < 1e-15);
}

TEST_CASE("ar1 covariance agrees with a dense inverse") {
  const Index p = 6;
  const double rho = 0.6;
  const Covariance c = Covariance::ar1(p, rho);
  CHECK_FALSE(c.is_isotropic());
  Mat S(p, p);
  for (Index j = 0; j < p; ++j)
    for (Index k = 0; k < p; ++k) S(j, k) = std::pow(rho, std::abs(static_cast<double>(j - k)));
  CHECK((c.dense() - S).norm() < 1e-14);
  const Mat inv = S.inverse();
  const Vec v = Vec::LinSpaced(p, -1, 2);
  CHECK((c.apply(v) - S * v).norm() < 1e-12);
  CHECK((c.solve(v) - inv * v).norm() < 1e-10);
  CHECK(c.quad(v) == doctest::Approx(v.dot(S * v)));
  CHECK(c.quad_inv(v) == doctest::Approx(v.dot(inv * v)));
  CHECK((c.omega_diag() - inv.diagonal()).norm() < 1e-10);
  Eigen::SelfAdjointEigenSolver<Mat> es(S);
  CHECK(c.max_eigenvalue() == doctest::Approx(es.eigenvalues().maxCoeff()).epsilon(1e-6));
  // whiten / whiten_t invert the Cholesky factor.
  const Mat L = S.llt().matrixL();
  CHECK((L * c.whiten(v) - v).norm() < 1e-12);
  CHECK((L.transpose() * c.whiten_t(v) - v).norm() < 1e-12);
}

TEST_CASE("explicit covariance rejects non-SPD input") {
  Mat bad(2, 2);
  bad << 1, 2, 2, 1;
  CHECK_THROWS_AS(Covariance::explicit_matrix(bad), Error);
}

TEST_CASE("sampled design has the requested covariance") {
  const Covariance c = Covariance::ar1(3, 0.5);
  const Mat X = sample_design(c, 40000, 11);
  const Mat emp = X.transpose() * X / 40000.0;
  CHECK((emp - c.dense()).cwiseAbs().maxCoeff() < 0.03);
  const Mat W = c.whiten_rows(X);
  CHECK((W.transpose() * W / 40000.0 - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() < 0.03);
  CHECK(sample_design(c, 10, 11) == sample_design(c, 10, 11));
}

TEST_CASE("index normalization and sparse patterns") {
  const Covariance c = Covariance::ar1(5, 0.3);
  const IndexVector w = normalize_index(Vec::LinSpaced(5, 1, 5), c);
  CHECK(c.quad(w.w) == doctest::Approx(1.0));
  const Vec e = equispaced_sparse(6, 3, 0.5, 4.0);
  CHECK(e(0) == doctest::Approx(0.5));
  CHECK(e(1) == doctest::Approx(2.25));
  CHECK(e(2) == doctest::Approx(4.0));
  CHECK(e.tail(3).isZero());
  const Vec q = equal_sparse(5, 2);
  CHECK(q.sum() == 2.0);
  CHECK(q(0) == 1.0);
  CHECK(q(4) == 0.0);
  CHECK_THROWS_AS(normalize_index(Vec::Zero(5), c), Error);
}

TEST_CASE("response mechanisms") {
  const Index n = 20000, p = 4;
  const Covariance c = Covariance::identity_scaled(p, 1.0);
  const Mat X = sample_design(c, n, 21);
  const IndexVector w = normalize_index(equal_sparse(p, p), c);
  const Vec u = X * w.w;

  SUBCASE("linear") {
    const Vec y = sample_response(X, w, LinkSpec::linear(2.0, 0.5), 3);
    const Vec r = y - 2.0 * u;
    CHECK(r.mean() == doctest::Approx(0.0).epsilon(0.02));
    CHECK(std::sqrt(r.squaredNorm() / n) == doctest::Approx(0.5).epsilon(0.02));
  }
  SUBCASE("logistic codings") {
    const Vec y01 = sample_response(X, w, LinkSpec::logistic(1.0), 3);
    const Vec ypm = sample_response(X, w, LinkSpec::logistic(1.0, LabelCoding::plus_minus), 3);
    CHECK(((y01.array() == 0.0) || (y01.array() == 1.0)).all());
    CHECK(((ypm.array() == -1.0) || (ypm.array() == 1.0)).all());
    // Same uniforms drive both codings.
    CHECK((2.0 * y01.array() - 1.0 - ypm.array()).abs().maxCoeff() == 0.0);
    double expected = 0.0;
    for (Index i = 0; i < n; ++i) expected += sigmoid(u(i));
    CHECK(y01.sum() / n == doctest::Approx(expected / n).epsilon(0.03));
  }
  SUBCASE("one bit flips with the given probability") {
    const Vec y = sample_response(X, w, LinkSpec::one_bit(0.2), 3);
    Index flips = 0;
    for (Index i = 0; i < n; ++i) flips += (y(i) > 0) != (u(i) >= 0);
    CHECK(static_cast<double>(flips) / n == doctest::Approx(0.2).epsilon(0.05));
  }
  SUBCASE("poisson and binomial ranges") {
    const Vec yp = sample_response(X, w, LinkSpec::poisson(), 3);
    CHECK((yp.array() >= 0).all());
    CHECK((yp.array() == yp.array().round()).all());
    const Vec yb = sample_response(X, w, LinkSpec::binomial(4, 1.1), 3);
    CHECK(((yb.array() >= 0) && (yb.array() <= 4)).all());
  }
  SUBCASE("invalid links") {
    CHECK_THROWS_AS(sample_response(X, w, LinkSpec::one_bit(1.0), 3), Error);
    CHECK_THROWS_AS(sample_response(X, w, LinkSpec::binomial(0, 1.0), 3), Error);
    CHECK_THROWS_AS(sample_response(X.leftCols(3), w, LinkSpec::poisson(), 3), Error);
  }
}

TEST_CASE("dataset validation") {
  Dataset d;
  d.X = Mat::Ones(3, 2);
  d.y = Vec::Ones(2);
  CHECK_THROWS_AS(d.validate(), Error);
  d.y = Vec::Ones(3);
  d.validate();
  d.X(0, 0) = std::nan("");
  CHECK_THROWS_AS(d.validate(), Error);
}

TEST_CASE("sigmoid is stable in the tails") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(800.0) == 1.0);
  CHECK(sigmoid(-800.0) == doctest::Approx(0.0));
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(sigmoid(2.0) + sigmoid(-2.0) == doctest::Approx(1.0));
}
