#pragma once

#include "obsadj/estimator.hpp"
#include "obsadj/model.hpp"
#include "obsadj/random.hpp"

#include <cmath>
#include <cstdint>

namespace testutil {

using obsadj::Index;
using obsadj::Mat;
using obsadj::Vec;

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

// Isotropic Gaussian design with covariance c I, truth attached.
inline obsadj::Dataset simulate(Index n, Index p, double c, const obsadj::LinkSpec& link, std::uint64_t seed,
                                Index nonzeros = -1) {
  using namespace obsadj;
  Dataset d;
  const Covariance cov = Covariance::identity_scaled(p, c);
  d.X = sample_design(cov, n, seed);
  const Index k = nonzeros < 0 ? p : nonzeros;
  const IndexVector w = normalize_index(equal_sparse(p, k), cov);
  d.y = sample_response(d.X, w, link, derive_seed(seed, 1));
  d.covariance = cov;
  d.index = w.w;
  d.beta_star = link.signal * w.w;
  return d;
}

}  // namespace testutil
