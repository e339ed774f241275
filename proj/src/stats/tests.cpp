#include <cmath>
#include <limits>

#include "godspell/stats.hpp"

namespace godspell::stats {

double mean(std::span<const double> x) {
  double sum = 0.0;
  for (double v : x) sum += v;
  return x.empty() ? 0.0 : sum / static_cast<double>(x.size());
}

Correlation pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw StatsError("pearson: length mismatch (" + std::to_string(x.size()) + " vs " + std::to_string(y.size()) + ")");
  }
  if (x.size() < 3) throw StatsError("pearson: need at least 3 observations");

  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw StatsError("undefined correlation: constant input");

  Correlation c;
  c.n = x.size();
  c.r = std::fmax(-1.0, std::fmin(1.0, sxy / std::sqrt(sxx * syy)));
  const double df = static_cast<double>(c.n) - 2.0;
  if (std::fabs(c.r) == 1.0) {
    c.p_two_sided = 0.0;
  } else {
    const double t = c.r * std::sqrt(df / ((1.0 - c.r) * (1.0 + c.r)));
    c.p_two_sided = t_two_sided_p(t, df);
  }
  return c;
}

TestResult ttest_ind(std::span<const double> a, std::span<const double> b, bool equal_variance) {
  if (a.size() < 2 || b.size() < 2) throw StatsError("ttest_ind: each group needs at least 2 values");

  TestResult res;
  res.n_a = a.size();
  res.n_b = b.size();
  res.equal_variance = equal_variance;
  res.mean_a = mean(a);
  res.mean_b = mean(b);

  auto sum_sq = [](std::span<const double> v, double m) {
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s;
  };
  const double na = static_cast<double>(res.n_a);
  const double nb = static_cast<double>(res.n_b);
  const double var_a = sum_sq(a, res.mean_a) / (na - 1.0);
  const double var_b = sum_sq(b, res.mean_b) / (nb - 1.0);
  const double diff = res.mean_a - res.mean_b;

  double se2;
  if (equal_variance) {
    res.df = na + nb - 2.0;
    const double pooled = ((na - 1.0) * var_a + (nb - 1.0) * var_b) / res.df;
    se2 = pooled * (1.0 / na + 1.0 / nb);
  } else {
    const double va = var_a / na;
    const double vb = var_b / nb;
    se2 = va + vb;
    res.df = se2 > 0.0 ? se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0)) : na + nb - 2.0;
  }

  if (se2 == 0.0) {
    if (diff == 0.0) {
      res.statistic = 0.0;
      res.p_two_sided = 1.0;
    } else {
      res.statistic = std::copysign(std::numeric_limits<double>::infinity(), diff);
      res.p_two_sided = 0.0;
      res.degenerate = true;
    }
    return res;
  }
  res.statistic = diff / std::sqrt(se2);
  res.p_two_sided = t_two_sided_p(res.statistic, res.df);
  return res;
}

}  // namespace godspell::stats
