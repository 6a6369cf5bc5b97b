#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace jumpctrl {

// Pairwise (cascade) summation. Deterministic for a fixed element order and
// much better conditioned than a running sum; every ensemble reduction in the
// library goes through here so results do not depend on thread count.
double pairwise_sum(std::span<const double> x);

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;  // standard error of the mean
  std::size_t n = 0;
};

MeanSe mean_se(std::span<const double> x);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Ordinary least squares of y against x.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

struct KsResult {
  double statistic = 0.0;  // sup-norm distance D_n
  double p_value = 0.0;
};

// One-sample Kolmogorov-Smirnov test against Exp(rate).
KsResult ks_test_exponential(std::vector<double> sample, double rate);

struct ChiSquareResult {
  double statistic = 0.0;
  std::size_t dof = 0;
  double p_value = 0.0;
};

// Goodness of fit of observed category counts against expected counts.
ChiSquareResult chi_square_test(std::span<const std::size_t> observed,
                                std::span<const double> expected);

// Regularized upper incomplete gamma Q(a, x); used for chi-square p-values.
double gamma_q(double a, double x);

}  // namespace jumpctrl
