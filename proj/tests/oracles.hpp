#pragma once

// Independent reference implementations used only by the test suite.
// These deliberately avoid the library's code paths: series instead of
// continued fractions, quadrature instead of closed forms, enumeration
// instead of formulas, grid search instead of Newton steps.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

// Phi(x) from the odd Taylor ladder: Phi(x) = 1/2 + phi(x) * sum x^(2k+1)/(1*3*...*(2k+1)).
// All terms positive, so no cancellation; good to ~1e-16 for |x| <= 12.
inline long double normal_cdf_series(long double x) {
  const long double ax = std::fabs(x);
  if (ax > 12.0L) return x > 0 ? 1.0L : 0.0L;
  long double term = ax;
  long double sum = ax;
  for (int k = 1; k < 400; ++k) {
    term *= ax * ax / (2.0L * k + 1.0L);
    sum += term;
    if (term < sum * 1e-20L) break;
  }
  const long double pi = 3.14159265358979323846264338327950288L;
  const long double phi = std::exp(-0.5L * ax * ax) / std::sqrt(2.0L * pi);
  const long double upper = 0.5L + phi * sum;
  return x >= 0 ? upper : 1.0L - upper;
}

// Regularized lower incomplete gamma by direct long-double series.
inline long double gamma_p_series(long double a, long double x) {
  if (x <= 0.0L) return 0.0L;
  long double term = 1.0L / a;
  long double sum = term;
  for (int n = 1; n < 10000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (term < sum * 1e-20L) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Adaptive Simpson quadrature.
inline long double simpson(const std::function<long double(long double)>& f, long double a,
                           long double b, long double tol, int depth = 28) {
  const long double c = 0.5L * (a + b);
  const long double fa = f(a), fb = f(b), fc = f(c);
  const long double s = (b - a) / 6.0L * (fa + 4.0L * fc + fb);
  std::function<long double(long double, long double, long double, long double, long double,
                            long double, long double, int)>
      rec = [&](long double a_, long double b_, long double fa_, long double fb_, long double fc_,
                long double s_, long double tol_, int d) -> long double {
    const long double c_ = 0.5L * (a_ + b_);
    const long double lc = 0.5L * (a_ + c_), rc = 0.5L * (c_ + b_);
    const long double flc = f(lc), frc = f(rc);
    const long double sl = (c_ - a_) / 6.0L * (fa_ + 4.0L * flc + fc_);
    const long double sr = (b_ - c_) / 6.0L * (fc_ + 4.0L * frc + fb_);
    if (d <= 0 || std::fabs(sl + sr - s_) < 15.0L * tol_)
      return sl + sr + (sl + sr - s_) / 15.0L;
    return rec(a_, c_, fa_, fc_, flc, sl, 0.5L * tol_, d - 1) +
           rec(c_, b_, fc_, fb_, frc, sr, 0.5L * tol_, d - 1);
  };
  return rec(a, b, fa, fb, fc, s, tol, depth);
}

// Student t CDF by integrating the density (independent of incomplete beta).
inline long double student_t_cdf_quad(long double t, long double df) {
  const long double pi = 3.14159265358979323846264338327950288L;
  auto pdf = [&](long double x) -> long double {
    const long double lg = std::lgamma(0.5L * (df + 1.0L)) - std::lgamma(0.5L * df) -
                           0.5L * std::log(df * pi);
    return std::exp(lg - 0.5L * (df + 1.0L) * std::log1p(x * x / df));
  };
  if (t < 0.0L) return 0.5L - simpson(pdf, t, 0.0L, 1e-16L);
  return 0.5L + simpson(pdf, 0.0L, t, 1e-16L);
}

// Exact Mann-Whitney U null distribution by enumerating every assignment of
// the pooled sample into the two groups.  Returns the two-sided p for the
// observed U of group 1 (doubled smaller tail, capped at 1).
inline double mwu_exact_enumeration(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> pooled(x);
  pooled.insert(pooled.end(), y.begin(), y.end());
  const std::size_t n1 = x.size();
  const std::size_t n = pooled.size();
  auto u_of = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double u = 0.0;
    for (double ai : a)
      for (double bj : b) {
        if (ai > bj) u += 1.0;
        else if (ai == bj) u += 0.5;
      }
    return u;
  };
  const double u_obs = u_of(x, y);
  std::vector<std::size_t> idx(n1);
  std::iota(idx.begin(), idx.end(), 0);
  std::uint64_t total = 0, at_most = 0, at_least = 0;
  // Enumerate all n-choose-n1 index subsets in lexicographic order.
  while (true) {
    std::vector<double> a, b;
    std::vector<bool> in(n, false);
    for (auto i : idx) in[i] = true;
    for (std::size_t i = 0; i < n; ++i) (in[i] ? a : b).push_back(pooled[i]);
    const double u = u_of(a, b);
    ++total;
    if (u <= u_obs + 1e-12) ++at_most;
    if (u >= u_obs - 1e-12) ++at_least;
    // next combination
    std::size_t i = n1;
    while (i > 0 && idx[i - 1] == n - n1 + (i - 1)) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t j = i; j < n1; ++j) idx[j] = idx[j - 1] + 1;
  }
  const double lo = static_cast<double>(at_most) / static_cast<double>(total);
  const double hi = static_cast<double>(at_least) / static_cast<double>(total);
  return std::min(1.0, 2.0 * std::min(lo, hi));
}

// Monte Carlo estimate of P(F' > fcrit) for a noncentral F(df1, df2, lambda).
inline double mc_noncentral_f_tail(double fcrit, int df1, int df2, double lambda,
                                   std::size_t draws, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double mu = std::sqrt(lambda / df1);  // spread noncentrality evenly
  std::size_t exceed = 0;
  for (std::size_t i = 0; i < draws; ++i) {
    double num = 0.0;
    for (int k = 0; k < df1; ++k) {
      const double z = gauss(rng) + mu;
      num += z * z;
    }
    double den = 0.0;
    for (int k = 0; k < df2; ++k) {
      const double z = gauss(rng);
      den += z * z;
    }
    const double f = (num / df1) / (den / df2);
    if (f > fcrit) ++exceed;
  }
  return static_cast<double>(exceed) / static_cast<double>(draws);
}

// Monte Carlo two-sided rejection rate of a two-sample t at effect d0.
inline double mc_two_sample_power(double d0, int n1, int n2, double tcrit, std::size_t draws,
                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::size_t reject = 0;
  for (std::size_t i = 0; i < draws; ++i) {
    double s1 = 0, q1 = 0, s2 = 0, q2 = 0;
    for (int k = 0; k < n1; ++k) {
      const double v = gauss(rng) + d0;
      s1 += v;
      q1 += v * v;
    }
    for (int k = 0; k < n2; ++k) {
      const double v = gauss(rng);
      s2 += v;
      q2 += v * v;
    }
    const double m1 = s1 / n1, m2 = s2 / n2;
    const double v1 = (q1 - n1 * m1 * m1) / (n1 - 1);
    const double v2 = (q2 - n2 * m2 * m2) / (n2 - 1);
    const double sp2 = ((n1 - 1) * v1 + (n2 - 1) * v2) / (n1 + n2 - 2);
    const double t = (m1 - m2) / std::sqrt(sp2 * (1.0 / n1 + 1.0 / n2));
    if (std::fabs(t) > tcrit) ++reject;
  }
  return static_cast<double>(reject) / static_cast<double>(draws);
}

// Efron-tie Cox log partial likelihood for a single covariate, written
// directly from the definition (no shared code with the library).
inline double cox_efron_loglik(const std::vector<double>& time, const std::vector<int>& event,
                               const std::vector<double>& x, double beta) {
  std::vector<double> etimes;
  for (std::size_t i = 0; i < time.size(); ++i)
    if (event[i]) etimes.push_back(time[i]);
  std::sort(etimes.begin(), etimes.end());
  etimes.erase(std::unique(etimes.begin(), etimes.end()), etimes.end());
  double ll = 0.0;
  for (double t : etimes) {
    double s_risk = 0.0, s_tied = 0.0, xsum = 0.0;
    int d = 0;
    for (std::size_t i = 0; i < time.size(); ++i) {
      const double w = std::exp(beta * x[i]);
      if (time[i] >= t) s_risk += w;
      if (event[i] && time[i] == t) {
        s_tied += w;
        xsum += x[i];
        ++d;
      }
    }
    ll += beta * xsum;
    for (int l = 0; l < d; ++l)
      ll -= std::log(s_risk - (static_cast<double>(l) / d) * s_tied);
  }
  return ll;
}

// Grid-search maximizer of the Efron partial likelihood.
inline double cox_grid_search(const std::vector<double>& time, const std::vector<int>& event,
                              const std::vector<double>& x, double lo = -5.0, double hi = 5.0,
                              double step = 1e-4) {
  double best_b = lo, best_ll = -1e300;
  for (double b = lo; b <= hi + 1e-12; b += step) {
    const double ll = cox_efron_loglik(time, event, x, b);
    if (ll > best_ll) {
      best_ll = ll;
      best_b = b;
    }
  }
  return best_b;
}

}  // namespace oracle
