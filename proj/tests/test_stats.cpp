#include "obsadj/stats.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace obsadj;

namespace {

// Kolmogorov tail through the Jacobi theta form, independent of the
// alternating series used by the library.
double kolmogorov_tail(double lam) {
  const double pi = 3.14159265358979323846;
  double s = 0.0;
  for (int k = 1; k <= 50; ++k) s += std::exp(-(2 * k - 1) * (2 * k - 1) * pi * pi / (8 * lam * lam));
  return 1.0 - std::sqrt(2 * pi) / lam * s;
}

double brute_ks(const std::vector<double>& x) {
  std::vector<double> s = x;
  std::sort(s.begin(), s.end());
  double d = 0.0;
  const double n = static_cast<double>(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double F = 0.5 * std::erfc(-s[i] / std::sqrt(2.0));
    d = std::max({d, std::abs((i + 1) / n - F), std::abs(i / n - F)});
  }
  return d;
}

}  // namespace

TEST_CASE("normal distribution functions") {
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
  CHECK(normal_cdf(-8.0) == doctest::Approx(6.22096057427178e-16).epsilon(1e-6));
  CHECK(z_two_sided(0.05) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(z_two_sided(0.01) == doctest::Approx(2.5758293035489004).epsilon(1e-12));
  for (double p : {1e-12, 1e-5, 0.01, 0.3, 0.5, 0.77, 0.999, 1 - 1e-9})
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  CHECK_THROWS_AS(normal_quantile(0.0), Error);
  CHECK_THROWS_AS(normal_quantile(1.0), Error);
}

TEST_CASE("one-sample KS statistic matches a brute-force scan") {
  std::vector<double> x = {-1.2, 0.3, 0.31, 2.2, -0.05, 0.9, -2.5, 0.0};
  CHECK(ks_statistic_normal(x) == doctest::Approx(brute_ks(x)).epsilon(1e-14));
  CHECK(ks_statistic_normal({0.0}) == doctest::Approx(0.5));
}

TEST_CASE("two-sample KS statistic") {
  CHECK(ks_statistic_two_sample({1, 2, 3}, {1, 2, 3}) == 0.0);
  CHECK(ks_statistic_two_sample({1, 2, 3}, {4, 5, 6}) == 1.0);
  CHECK(ks_statistic_two_sample({1, 2, 3, 4}, {3, 4, 5, 6}) == doctest::Approx(0.5));
  // Ties across samples are stepped over together.
  CHECK(ks_statistic_two_sample({1, 1, 2}, {1, 2, 2}) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("KS p-value") {
  for (double lam : {0.5, 0.8, 1.0, 1.36, 1.63, 2.5}) {
    // Large n makes the small-sample correction negligible.
    const double n = 1e10;
    const double d = lam / (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n));
    CHECK(ks_pvalue(d, n) == doctest::Approx(kolmogorov_tail(lam)).epsilon(1e-10));
  }
  CHECK(ks_pvalue(1.36 / std::sqrt(1e8), 1e8) == doctest::Approx(0.0494).epsilon(0.01));
  CHECK(ks_pvalue(0.0, 100) == 1.0);
  CHECK(ks_pvalue(1.0, 100) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(ks_pvalue(0.1, 0.0), Error);
}

TEST_CASE("summary statistics") {
  const std::vector<double> x = {1, 2, 3, 4};
  CHECK(mean(x) == 2.5);
  CHECK(sample_sd(x) == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(std_error(x) == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
  CHECK(sample_sd({7.0}) == 0.0);
  CHECK_THROWS_AS(mean({}), Error);
}

TEST_CASE("log-log slope") {
  std::vector<double> n = {250, 1000, 4000}, y;
  for (double v : n) y.push_back(3.0 * std::pow(v, -0.5));
  CHECK(loglog_slope(n, y) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK_THROWS_AS(loglog_slope({1, 2}, {1, -1}), Error);
}

TEST_CASE("normal QQ pairs") {
  const auto qq = normal_qq({3.0, -1.0, 0.5, 2.0});
  REQUIRE(qq.size() == 4);
  CHECK(qq[0].second == -1.0);
  CHECK(qq[3].second == 3.0);
  CHECK(qq[0].first == doctest::Approx(normal_quantile(0.125)));
  CHECK(qq[1].first == doctest::Approx(normal_quantile(0.375)));
  CHECK(qq[0].first == doctest::Approx(-qq[3].first));
}
