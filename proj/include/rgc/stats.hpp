#pragma once

#include <span>
#include <utility>
#include <vector>

namespace rgc {

struct PearsonResult {
  double rho = 0.0;
  // Set when either series is constant; rho is then defined as 0 so channel
  // aggregates stay finite.
  bool constant_series = false;
};

PearsonResult pearson(std::span<const double> x, std::span<const double> y);

double mae(std::span<const double> pred, std::span<const double> target);

// mean ± t(0.975, r-1) · s / sqrt(r); r >= 2 required.
std::pair<double, double> ci95(std::span<const double> values);

struct TestResult {
  double statistic = 0.0;
  double p = 1.0;
};

TestResult anova_oneway(const std::vector<std::vector<double>>& groups);
// Mean-centered Levene test for homogeneity of variance.
TestResult levene(const std::vector<std::vector<double>>& groups);
// Jarque-Bera normality test; p is the exact chi-square(2) tail exp(-JB/2).
TestResult jarque_bera(std::span<const double> residuals);

// Percent change 100·(noisy - clean)/clean; clean must be nonzero.
double relative_diff(double rho_clean, double rho_noisy);

// Distribution plumbing, exposed for the oracle tests.
double ibeta(double a, double b, double x);  // regularized incomplete beta
double student_t_cdf(double t, double dof);
double student_t_quantile(double p, double dof);  // p in (0, 1)
double f_sf(double f, double d1, double d2);      // upper tail of F(d1, d2)

}  // namespace rgc
