#include <cmath>
#include <limits>

#include "godspell/stats.hpp"

namespace godspell::stats {
namespace {

constexpr double kEpsilon = 1e-12;
constexpr int kMaxTerms = 300;
constexpr double kTiny = 1e-300;

// Continued fraction for I_x(a, b); converges fast for x < (a+1)/(a+b+2).
double beta_continued_fraction(double x, double a, double b) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxTerms; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;

    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEpsilon) break;
  }
  return h;
}

// I_x(a, b) given both x and y = 1 - x, so callers can pass a complement that
// was computed without cancellation.
double incomplete_beta(double x, double y, double a, double b) {
  if (x <= 0.0) return 0.0;
  if (y <= 0.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log(y);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(x, a, b) / a;
  return 1.0 - front * beta_continued_fraction(y, b, a) / b;
}

// Two-sided tail P(|T| >= |t|) = I_{df/(df+t^2)}(df/2, 1/2).
double two_sided_tail(double t, double df) {
  if (std::isinf(t)) return 0.0;
  const double t2 = t * t;
  const double x = df / (df + t2);
  const double y = t2 / (df + t2);
  return incomplete_beta(x, y, 0.5 * df, 0.5);
}

}  // namespace

double digamma(double x) {
  if (std::isnan(x) || x <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  double result = 0.0;
  while (x < 10.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  result += std::log(x) - 0.5 * inv -
            inv2 * (1.0 / 12 - inv2 * (1.0 / 120 - inv2 * (1.0 / 252 - inv2 * (1.0 / 240 - inv2 * (1.0 / 132)))));
  return result;
}

double incomplete_beta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw StatsError("incomplete_beta: shape parameters must be positive");
  if (x < 0.0 || x > 1.0) throw StatsError("incomplete_beta: x outside [0, 1]");
  return incomplete_beta(x, 1.0 - x, a, b);
}

double t_cdf(double t, double df) {
  if (!(df > 0.0)) throw StatsError("t_cdf: degrees of freedom must be positive");
  if (std::isnan(t)) return t;
  const double tail = 0.5 * two_sided_tail(t, df);
  return t > 0.0 ? 1.0 - tail : tail;
}

double t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw StatsError("t_two_sided_p: degrees of freedom must be positive");
  return std::fmin(1.0, two_sided_tail(t, df));
}

}  // namespace godspell::stats
