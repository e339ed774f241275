#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "godspell/error.hpp"

namespace godspell::stats {

class StatsError : public Error {
 public:
  using Error::Error;
};

// --- special functions -----------------------------------------------------

double digamma(double x);

// Regularized incomplete beta I_x(a, b). Continued fraction (modified Lentz),
// relative convergence 1e-12, at most 300 terms.
double incomplete_beta(double x, double a, double b);

// Student t cumulative distribution function.
double t_cdf(double t, double df);

// P(|T| >= |t|) for T ~ t(df).
double t_two_sided_p(double t, double df);

// --- tests -----------------------------------------------------------------

struct Correlation {
  double r = 0.0;
  double p_two_sided = 1.0;
  std::size_t n = 0;
};

// Pearson product-moment correlation with a two-sided p-value from the
// t distribution on n-2 degrees of freedom. Throws StatsError on length
// mismatch, n < 3, or a constant input ("undefined correlation").
Correlation pearson(std::span<const double> x, std::span<const double> y);

struct TestResult {
  double statistic = 0.0;
  double df = 0.0;
  double p_two_sided = 1.0;
  double mean_a = 0.0;
  double mean_b = 0.0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  bool equal_variance = true;
  // Zero variance in both groups with different means: t is infinite, p = 0.
  bool degenerate = false;
};

// Independent two-sample t-test. Student (pooled variance) by default,
// Welch-Satterthwaite when equal_variance is false. Needs >= 2 values per group.
TestResult ttest_ind(std::span<const double> a, std::span<const double> b, bool equal_variance = true);

double mean(std::span<const double> x);

}  // namespace godspell::stats
