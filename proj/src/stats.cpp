#include "obsadj/stats.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace obsadj {

namespace {
const boost::math::normal_distribution<double> standard_normal(0.0, 1.0);
}

double normal_cdf(double x) { return boost::math::cdf(standard_normal, x); }

double normal_quantile(double p) {
  require(p > 0 && p < 1, ErrorCode::invalid_argument, "quantile level must be in (0, 1)");
  return boost::math::quantile(standard_normal, p);
}

double z_two_sided(double alpha) {
  require(alpha > 0 && alpha < 1, ErrorCode::invalid_argument, "alpha must be in (0, 1)");
  return boost::math::quantile(boost::math::complement(standard_normal, alpha / 2.0));
}

double ks_statistic_normal(std::vector<double> sample) {
  require(!sample.empty(), ErrorCode::invalid_argument, "empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = normal_cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_statistic_two_sample(std::vector<double> a, std::vector<double> b) {
  require(!a.empty() && !b.empty(), ErrorCode::invalid_argument, "empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_pvalue(double statistic, double effective_n) {
  require(effective_n > 0, ErrorCode::invalid_argument, "sample size must be positive");
  const double sn = std::sqrt(effective_n);
  const double lam = (sn + 0.12 + 0.11 / sn) * statistic;
  if (lam < 1e-3) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lam * lam);
    sum += (k % 2 == 1 ? 1.0 : -1.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double mean(const std::vector<double>& x) {
  require(!x.empty(), ErrorCode::invalid_argument, "mean of an empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_sd(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size() - 1));
}

double std_error(const std::vector<double>& x) {
  return x.empty() ? 0.0 : sample_sd(x) / std::sqrt(static_cast<double>(x.size()));
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorCode::invalid_argument, "slope needs two or more points");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i] > 0 && y[i] > 0, ErrorCode::invalid_argument, "log-log slope needs positive values");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  const double mx = mean(lx), my = mean(ly);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

std::vector<std::pair<double, double>> normal_qq(std::vector<double> sample) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  std::vector<std::pair<double, double>> out;
  out.reserve(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i)
    out.emplace_back(normal_quantile((static_cast<double>(i) + 0.5) / n), sample[i]);
  return out;
}

}  // namespace obsadj
