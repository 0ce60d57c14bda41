#pragma once

#include "obsadj/common.hpp"

#include <utility>
#include <vector>

namespace obsadj {

double normal_cdf(double x);
double normal_quantile(double p);
// z_{alpha/2}: upper alpha/2 quantile of N(0,1).
double z_two_sided(double alpha);

// sup_x |F_n(x) - Phi(x)|
double ks_statistic_normal(std::vector<double> sample);
// sup_x |F_n(x) - G_m(x)|
double ks_statistic_two_sample(std::vector<double> a, std::vector<double> b);
// Asymptotic Kolmogorov tail with the Stephens small-sample correction;
// `effective_n` is n for one sample and nm/(n+m) for two samples.
double ks_pvalue(double statistic, double effective_n);

double mean(const std::vector<double>& x);
double sample_sd(const std::vector<double>& x);  // n - 1 denominator; 0 for one value
double std_error(const std::vector<double>& x);

// Least-squares slope of log(y) on log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// (theoretical normal quantile, sorted sample) pairs at plotting positions (i - 0.5)/N.
std::vector<std::pair<double, double>> normal_qq(std::vector<double> sample);

}  // namespace obsadj
