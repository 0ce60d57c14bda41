#include "obsadj/random.hpp"

#include "obsadj/common.hpp"

#include <cmath>
#include <numbers>

namespace obsadj {

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double scale = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * scale;
  has_spare_ = true;
  return u * scale;
}

double Rng::cauchy() {
  return std::tan(std::numbers::pi * (uniform() - 0.5));
}

std::int64_t Rng::poisson(double mean) {
  require(mean >= 0.0 && std::isfinite(mean), ErrorCode::invalid_argument,
          "poisson mean must be finite and nonnegative");
  if (mean == 0.0) return 0;
  // Inversion in log space avoids underflow of exp(-mean) for large means.
  const double u = uniform();
  std::int64_t k = 0;
  double log_pk = -mean;
  double cdf = std::exp(log_pk);
  while (u > cdf) {
    ++k;
    log_pk += std::log(mean) - std::log(static_cast<double>(k));
    const double pk = std::exp(log_pk);
    cdf += pk;
    if (pk < 1e-300 && static_cast<double>(k) > mean) break;
  }
  return k;
}

std::int64_t Rng::binomial(int trials, double prob) {
  require(trials >= 0, ErrorCode::invalid_argument, "binomial trials must be nonnegative");
  std::int64_t k = 0;
  for (int t = 0; t < trials; ++t) k += bernoulli(prob) ? 1 : 0;
  return k;
}

}  // namespace obsadj
