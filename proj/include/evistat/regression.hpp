#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "evistat/stat_tests.hpp"

// Ordinary least squares with an intercept, fit by Householder QR.

namespace evistat::stats {

struct OlsCoefficient {
  std::string name;
  double estimate = 0.0;
  double se = 0.0;
  double t = 0.0;
  double p = 1.0;
};

struct OlsFit {
  std::vector<OlsCoefficient> coefficients;  // intercept first, then predictors in input order
  double r_squared = 0.0;
  double overall_f = 0.0;
  double overall_f_p = 1.0;
  double overall_df1 = 0.0;
  double residual_df = 0.0;
  double partial_f = 0.0;
  double partial_f_p = 1.0;
  double partial_df1 = 0.0;
  std::vector<std::string> tested;
  double sigma2 = 0.0;
  std::size_t n = 0;
};

namespace detail {

// In-place Householder QR of the n x m column-major design; returns the
// residual sum of squares and fills beta (length m) and rinv (R^{-1}, m x m
// upper triangular, column-major).  Throws RankDeficient when a pivot
// collapses relative to the column norm.
struct QrResult {
  std::vector<double> beta;
  std::vector<double> rinv;
  double rss = 0.0;
};

inline QrResult qr_solve(std::vector<std::vector<double>> cols, std::vector<double> y) {
  const std::size_t n = y.size();
  const std::size_t m = cols.size();
  std::vector<double> colnorm(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    double s = 0.0;
    for (double v : cols[j]) s += v * v;
    colnorm[j] = std::sqrt(s);
  }

  // R is built in place in the top m rows of the transformed columns.
  std::vector<double> r(m * m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    // Householder vector for column j below row j.
    double norm = 0.0;
    for (std::size_t i = j; i < n; ++i) norm += cols[j][i] * cols[j][i];
    norm = std::sqrt(norm);
    if (norm <= 1e-12 * std::max(1.0, colnorm[j]))
      throw RankDeficient("ols: design column " + std::to_string(j) + " is linearly dependent");
    double alpha = cols[j][j] > 0.0 ? -norm : norm;
    std::vector<double> v(n, 0.0);
    for (std::size_t i = j; i < n; ++i) v[i] = cols[j][i];
    v[j] -= alpha;
    double vtv = 0.0;
    for (std::size_t i = j; i < n; ++i) vtv += v[i] * v[i];
    if (vtv > 0.0) {
      // Apply I - 2 vv^T/v^Tv to the remaining columns and to y.
      for (std::size_t k = j; k < m; ++k) {
        double dot = 0.0;
        for (std::size_t i = j; i < n; ++i) dot += v[i] * cols[k][i];
        const double f = 2.0 * dot / vtv;
        for (std::size_t i = j; i < n; ++i) cols[k][i] -= f * v[i];
      }
      double dot = 0.0;
      for (std::size_t i = j; i < n; ++i) dot += v[i] * y[i];
      const double f = 2.0 * dot / vtv;
      for (std::size_t i = j; i < n; ++i) y[i] -= f * v[i];
    }
    for (std::size_t i = 0; i <= j; ++i) r[j * m + i] = cols[j][i];
    if (std::fabs(r[j * m + j]) <= 1e-10 * std::max(1.0, colnorm[j]))
      throw RankDeficient("ols: design column " + std::to_string(j) + " is linearly dependent");
  }

  QrResult out;
  out.beta.assign(m, 0.0);
  for (std::size_t jj = m; jj-- > 0;) {
    double s = y[jj];
    for (std::size_t k = jj + 1; k < m; ++k) s -= r[k * m + jj] * out.beta[k];
    out.beta[jj] = s / r[jj * m + jj];
  }
  for (std::size_t i = m; i < n; ++i) out.rss += y[i] * y[i];

  // R^{-1} by back substitution on unit vectors.
  out.rinv.assign(m * m, 0.0);
  for (std::size_t col = 0; col < m; ++col) {
    for (std::size_t jj = m; jj-- > 0;) {
      double s = (jj == col) ? 1.0 : 0.0;
      for (std::size_t k = jj + 1; k < m; ++k) s -= r[k * m + jj] * out.rinv[col * m + k];
      out.rinv[col * m + jj] = s / r[jj * m + jj];
    }
  }
  return out;
}

}  // namespace detail

// design: one vector per predictor (no intercept column; one is added),
// names parallel to design, tested: subset of names entering the partial F.
inline OlsFit ols_fit(const std::vector<double>& y,
                      const std::vector<std::vector<double>>& design,
                      const std::vector<std::string>& names,
                      const std::vector<std::string>& tested) {
  if (design.empty()) throw DegenerateInput("ols: needs at least one predictor");
  if (design.size() != names.size()) throw LengthMismatch("ols: names do not match design");
  const std::size_t n = y.size();
  for (const auto& col : design)
    if (col.size() != n) throw LengthMismatch("ols: predictor length differs from outcome");
  const std::size_t k = design.size();
  if (n < k + 2) throw TooFewRows("ols: needs n >= predictors + 2");
  for (double v : y)
    if (!std::isfinite(v)) throw DegenerateInput("ols: outcome contains a non-finite value");
  for (const auto& col : design)
    for (double v : col)
      if (!std::isfinite(v)) throw DegenerateInput("ols: design contains a non-finite value");
  if (tested.empty()) throw DegenerateInput("ols: tested predictor set is empty");
  for (const auto& t : tested)
    if (std::find(names.begin(), names.end(), t) == names.end())
      throw DegenerateInput("ols: tested predictor '" + t + "' is not in the design");

  const std::size_t m = k + 1;
  std::vector<std::vector<double>> cols;
  cols.emplace_back(n, 1.0);
  for (const auto& c : design) cols.push_back(c);

  const auto qr = detail::qr_solve(cols, y);
  const double df2 = static_cast<double>(n - m);
  const double sigma2 = qr.rss / df2;

  const double ymean = detail::mean(y);
  double tss = 0.0;
  for (double v : y) tss += (v - ymean) * (v - ymean);

  OlsFit fit;
  fit.n = n;
  fit.sigma2 = sigma2;
  fit.residual_df = df2;
  fit.tested = tested;
  fit.r_squared = tss > 0.0 ? 1.0 - qr.rss / tss : 0.0;

  // cov(beta) = sigma2 * R^{-1} R^{-T}; diagonal entries give the SEs.
  for (std::size_t j = 0; j < m; ++j) {
    double diag = 0.0;
    for (std::size_t c = j; c < m; ++c) diag += qr.rinv[c * m + j] * qr.rinv[c * m + j];
    OlsCoefficient co;
    co.name = j == 0 ? "intercept" : names[j - 1];
    co.estimate = qr.beta[j];
    co.se = std::sqrt(sigma2 * diag);
    if (co.se > 0.0) {
      co.t = co.estimate / co.se;
      co.p = detail::two_sided_from_t(co.t, df2);
    } else {
      co.t = co.estimate == 0.0 ? 0.0
                                : std::copysign(std::numeric_limits<double>::infinity(), co.estimate);
      co.p = co.estimate == 0.0 ? 1.0 : 0.0;
    }
    fit.coefficients.push_back(co);
  }

  fit.overall_df1 = static_cast<double>(k);
  if (qr.rss > 0.0) {
    fit.overall_f = ((tss - qr.rss) / fit.overall_df1) / sigma2;
    fit.overall_f_p = 1.0 - num::f_cdf(fit.overall_f, fit.overall_df1, df2);
  } else {
    fit.overall_f = std::numeric_limits<double>::infinity();
    fit.overall_f_p = 0.0;
  }

  // Partial F: refit without the tested columns.
  fit.partial_df1 = static_cast<double>(tested.size());
  std::vector<std::vector<double>> restricted;
  restricted.emplace_back(n, 1.0);
  for (std::size_t j = 0; j < k; ++j)
    if (std::find(tested.begin(), tested.end(), names[j]) == tested.end())
      restricted.push_back(design[j]);
  const auto qr_r = detail::qr_solve(restricted, y);
  if (qr.rss > 0.0) {
    fit.partial_f = ((qr_r.rss - qr.rss) / fit.partial_df1) / sigma2;
    if (fit.partial_f < 0.0) fit.partial_f = 0.0;
    fit.partial_f_p = 1.0 - num::f_cdf(fit.partial_f, fit.partial_df1, df2);
  } else {
    fit.partial_f = std::numeric_limits<double>::infinity();
    fit.partial_f_p = qr_r.rss > 0.0 ? 0.0 : 1.0;
  }
  return fit;
}

inline TestOutcome ols_regression(const std::vector<double>& y,
                                  const std::vector<std::vector<double>>& design,
                                  const std::vector<std::string>& names,
                                  const std::vector<std::string>& tested) {
  const OlsFit fit = ols_fit(y, design, names, tested);
  TestOutcome out;
  out.test_name = "ols_regression";
  out.statistic = fit.partial_f;
  out.df = fit.residual_df;
  out.p_value = fit.partial_f_p;
  out.effect_size_type = "beta_coefficient";
  for (const auto& co : fit.coefficients)
    if (co.name == fit.tested.front()) out.effect_size = co.estimate;
  return out;
}

}  // namespace evistat::stats
