#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "evistat/errors.hpp"
#include "evistat/special_functions.hpp"

// CDFs and quantiles for the six families the pipeline needs.  Central CDFs
// hold absolute error <= 1e-10, noncentral <= 1e-8; quantiles satisfy
// cdf(quantile(p)) = p to within 1e-9.

namespace evistat::num {

enum class DistFamily { normal, student_t, noncentral_t, f, noncentral_f, chi_square };

struct DistributionSpec {
  DistFamily family = DistFamily::normal;
  double df1 = 0.0;            // t/chi-square df, or F numerator df
  double df2 = 0.0;            // F denominator df
  double noncentrality = 0.0;  // delta for noncentral t, lambda for noncentral F
};

inline std::string to_string(DistFamily f) {
  switch (f) {
    case DistFamily::normal: return "normal";
    case DistFamily::student_t: return "student_t";
    case DistFamily::noncentral_t: return "noncentral_t";
    case DistFamily::f: return "f";
    case DistFamily::noncentral_f: return "noncentral_f";
    case DistFamily::chi_square: return "chi_square";
  }
  return "normal";
}

inline double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) throw InvalidSpec("student_t: df must be > 0");
  if (std::isnan(t)) throw DomainError("student_t_cdf: x is NaN");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  // One tail: P(|T| > |t|) = I_{df/(df+t^2)}(df/2, 1/2).
  const double tail = 0.5 * beta_inc(0.5 * df, 0.5, df / (df + t * t));
  return t >= 0.0 ? 1.0 - tail : tail;
}

inline double student_t_pdf(double t, double df) {
  const double lg = std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) -
                    0.5 * std::log(df * kPi);
  return std::exp(lg - 0.5 * (df + 1.0) * std::log1p(t * t / df));
}

inline double chi_square_cdf(double x, double df) {
  if (!(df > 0.0)) throw InvalidSpec("chi_square: df must be > 0");
  if (std::isnan(x)) throw DomainError("chi_square_cdf: x is NaN");
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return gamma_p(0.5 * df, 0.5 * x);
}

inline double chi_square_sf(double x, double df) {
  if (!(df > 0.0)) throw InvalidSpec("chi_square: df must be > 0");
  if (x <= 0.0) return 1.0;
  return gamma_q(0.5 * df, 0.5 * x);
}

inline double chi_square_pdf(double x, double df) {
  if (x <= 0.0) return 0.0;
  const double k = 0.5 * df;
  return std::exp((k - 1.0) * std::log(x) - 0.5 * x - k * std::log(2.0) - std::lgamma(k));
}

inline double f_cdf(double x, double df1, double df2) {
  if (!(df1 > 0.0) || !(df2 > 0.0)) throw InvalidSpec("f: df1 and df2 must be > 0");
  if (std::isnan(x)) throw DomainError("f_cdf: x is NaN");
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return beta_inc(0.5 * df1, 0.5 * df2, df1 * x / (df1 * x + df2));
}

inline double f_pdf(double x, double df1, double df2) {
  if (x <= 0.0) return 0.0;
  const double a = 0.5 * df1, b = 0.5 * df2;
  const double lg = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
  return std::exp(lg + a * std::log(df1 / df2) + (a - 1.0) * std::log(x) -
                  (a + b) * std::log1p(df1 * x / df2));
}

// Noncentral t CDF via the Poisson mixture of incomplete betas
// (half-integer and integer ladders), summed until the remaining Poisson
// mass is negligible relative to the accumulated value.
inline double noncentral_t_cdf(double t, double df, double delta) {
  if (!(df > 0.0)) throw InvalidSpec("noncentral_t: df must be > 0");
  if (std::isnan(t) || std::isnan(delta)) throw DomainError("noncentral_t_cdf: NaN input");
  bool flipped = false;
  if (t < 0.0) {  // P(T <= t; delta) = 1 - P(T <= -t; -delta)
    flipped = true;
    t = -t;
    delta = -delta;
  }
  if (std::isinf(t)) return flipped ? 0.0 : 1.0;
  const double lam = 0.5 * delta * delta;
  if (lam > 650.0) throw DomainError("noncentral_t_cdf: |noncentrality| too large");
  double value = normal_cdf(-delta);
  if (t > 0.0) {
    const double y = t * t / (t * t + df);
    // p_j: Poisson(lam) weights; q_j: companion ladder with Gamma(j+3/2) norm.
    double pj = std::exp(-lam);
    double qj = std::exp(-lam) * delta / (std::sqrt(2.0) * 0.886226925452758013649083741671);
    double sum = 0.0;
    for (int j = 0; j < 20000; ++j) {
      const double dj = static_cast<double>(j);
      sum += pj * beta_inc(dj + 0.5, 0.5 * df, y) + qj * beta_inc(dj + 1.0, 0.5 * df, y);
      if (dj > lam && pj + std::fabs(qj) < 1e-17 * (1.0 + std::fabs(sum))) break;
      pj *= lam / (dj + 1.0);
      qj *= lam / (dj + 1.5);
    }
    value += 0.5 * sum;
  }
  if (value < 0.0) value = 0.0;
  if (value > 1.0) value = 1.0;
  return flipped ? 1.0 - value : value;
}

// Noncentral F CDF: Poisson-weighted central incomplete betas.
inline double noncentral_f_cdf(double x, double df1, double df2, double lambda) {
  if (!(df1 > 0.0) || !(df2 > 0.0)) throw InvalidSpec("noncentral_f: df1 and df2 must be > 0");
  if (!(lambda >= 0.0)) throw InvalidSpec("noncentral_f: noncentrality must be >= 0");
  if (std::isnan(x)) throw DomainError("noncentral_f_cdf: x is NaN");
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  const double hl = 0.5 * lambda;
  if (hl > 650.0) throw DomainError("noncentral_f_cdf: noncentrality too large");
  const double w = df1 * x / (df1 * x + df2);
  double pj = std::exp(-hl);
  double mass = pj;
  double sum = 0.0;
  for (int j = 0; j < 20000; ++j) {
    const double dj = static_cast<double>(j);
    sum += pj * beta_inc(0.5 * df1 + dj, 0.5 * df2, w);
    // Remaining terms are bounded by the unclaimed Poisson mass.
    if (1.0 - mass < 1e-14 && dj >= hl) break;
    pj *= hl / (dj + 1.0);
    mass += pj;
  }
  if (sum < 0.0) sum = 0.0;
  if (sum > 1.0) sum = 1.0;
  return sum;
}

inline void validate(const DistributionSpec& spec) {
  switch (spec.family) {
    case DistFamily::normal:
      break;
    case DistFamily::student_t:
    case DistFamily::chi_square:
      if (!(spec.df1 > 0.0)) throw InvalidSpec(to_string(spec.family) + ": df1 must be > 0");
      break;
    case DistFamily::noncentral_t:
      if (!(spec.df1 > 0.0)) throw InvalidSpec("noncentral_t: df1 must be > 0");
      if (!std::isfinite(spec.noncentrality)) throw InvalidSpec("noncentral_t: noncentrality not finite");
      break;
    case DistFamily::f:
      if (!(spec.df1 > 0.0) || !(spec.df2 > 0.0)) throw InvalidSpec("f: df1 and df2 must be > 0");
      break;
    case DistFamily::noncentral_f:
      if (!(spec.df1 > 0.0) || !(spec.df2 > 0.0))
        throw InvalidSpec("noncentral_f: df1 and df2 must be > 0");
      if (!(spec.noncentrality >= 0.0)) throw InvalidSpec("noncentral_f: noncentrality must be >= 0");
      break;
  }
}

inline double dist_cdf(const DistributionSpec& spec, double x) {
  validate(spec);
  switch (spec.family) {
    case DistFamily::normal: return normal_cdf(x);
    case DistFamily::student_t: return student_t_cdf(x, spec.df1);
    case DistFamily::noncentral_t: return noncentral_t_cdf(x, spec.df1, spec.noncentrality);
    case DistFamily::f: return f_cdf(x, spec.df1, spec.df2);
    case DistFamily::noncentral_f: return noncentral_f_cdf(x, spec.df1, spec.df2, spec.noncentrality);
    case DistFamily::chi_square: return chi_square_cdf(x, spec.df1);
  }
  throw InvalidSpec("dist_cdf: unknown family");
}

namespace detail {

// Bracketed bisection with a Newton polish.  cdf must be nondecreasing.
inline double invert_cdf(const std::function<double(double)>& cdf,
                         const std::function<double(double)>& pdf, double p, double lo,
                         double hi, bool lower_bounded) {
  // Expand the bracket until it encloses p.
  for (int i = 0; i < 400 && cdf(lo) > p; ++i) {
    hi = lo;
    lo = lower_bounded ? lo * 0.5 : (lo < 0.0 ? lo * 2.0 : -1.0);
  }
  for (int i = 0; i < 400 && cdf(hi) < p; ++i) {
    lo = hi;
    hi = hi > 0.0 ? hi * 2.0 : 1.0;
  }
  const double ptol = 1e-13 * std::min(p, 1.0 - p);
  double x = 0.5 * (lo + hi);
  for (int i = 0; i < 300; ++i) {
    const double fx = cdf(x) - p;
    if (std::fabs(fx) <= ptol) return x;
    if (fx > 0.0)
      hi = x;
    else
      lo = x;
    // Newton step when the derivative is usable and stays in bracket.
    double next = 0.5 * (lo + hi);
    const double dx = pdf(x);
    if (dx > 0.0 && std::isfinite(dx)) {
      const double cand = x - fx / dx;
      if (cand > lo && cand < hi) next = cand;
    }
    x = next;
    if (hi - lo < 1e-15 * std::max(1.0, std::fabs(x))) break;
  }
  return x;
}

}  // namespace detail

// Quantiles for the central families.  Noncentral quantiles are not needed
// by the pipeline and are rejected.
inline double dist_quantile(const DistributionSpec& spec, double p) {
  validate(spec);
  if (!(p > 0.0) || !(p < 1.0)) throw DomainError("dist_quantile: p must be in (0,1)");
  switch (spec.family) {
    case DistFamily::normal:
      return detail::invert_cdf([](double x) { return normal_cdf(x); },
                                [](double x) { return normal_pdf(x); }, p, -1.0, 1.0, false);
    case DistFamily::student_t:
      return detail::invert_cdf([&](double x) { return student_t_cdf(x, spec.df1); },
                                [&](double x) { return student_t_pdf(x, spec.df1); }, p, -1.0,
                                1.0, false);
    case DistFamily::chi_square:
      return detail::invert_cdf([&](double x) { return chi_square_cdf(x, spec.df1); },
                                [&](double x) { return chi_square_pdf(x, spec.df1); }, p,
                                spec.df1 / 2.0, spec.df1 * 2.0 + 2.0, true);
    case DistFamily::f:
      return detail::invert_cdf([&](double x) { return f_cdf(x, spec.df1, spec.df2); },
                                [&](double x) { return f_pdf(x, spec.df1, spec.df2); }, p, 0.5,
                                4.0, true);
    case DistFamily::noncentral_t:
    case DistFamily::noncentral_f:
      throw InvalidSpec("dist_quantile: noncentral quantiles are not supported");
  }
  throw InvalidSpec("dist_quantile: unknown family");
}

inline double normal_quantile(double p) {
  return dist_quantile(DistributionSpec{DistFamily::normal}, p);
}

inline double student_t_quantile(double p, double df) {
  DistributionSpec s;
  s.family = DistFamily::student_t;
  s.df1 = df;
  return dist_quantile(s, p);
}

}  // namespace evistat::num
