#pragma once

// A-priori power at the smallest effect size of interest, for the four test
// families.  All powers are two-sided: both rejection tails are summed.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>

#include "evistat/artifacts.hpp"
#include "evistat/distributions.hpp"
#include "evistat/errors.hpp"
#include "evistat/types.hpp"

namespace evistat::power {

struct SesoiTarget {
  AnalysisType family = AnalysisType::group_difference;
  double value = 0.0;  // d0, r0, HR0, or f2 depending on family
  SesoiProfile profile = SesoiProfile::standard;
};

// Echo of the quantities the computation actually used.
struct PowerInputs {
  double effect_target = 0.0;
  std::optional<double> n1, n2, n;
  std::optional<double> events, p1, p2;
  std::optional<double> tested_predictors, total_predictors;
};

struct PowerResult {
  double power = 0.0;
  double noncentrality = 0.0;
  double alpha = 0.0;
  std::string method;
  PowerInputs inputs;
};

// Fixed profile grid: one effect target per (profile, family) cell.
inline SesoiTarget resolve_sesoi(SesoiProfile profile, AnalysisType family) {
  const int row = profile == SesoiProfile::strict ? 0 : profile == SesoiProfile::standard ? 1 : 2;
  double value = 0.0;
  switch (family) {
    case AnalysisType::group_difference: value = row == 0 ? 0.2 : row == 1 ? 0.5 : 0.8; break;
    case AnalysisType::correlation:      value = row == 0 ? 0.2 : row == 1 ? 0.3 : 0.4; break;
    case AnalysisType::regression:       value = row == 0 ? 0.2 : row == 1 ? 0.3 : 0.4; break;
    case AnalysisType::survival:         value = row == 0 ? 1.2 : row == 1 ? 1.5 : 2.0; break;
  }
  return {family, value, profile};
}

namespace detail {

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("power: alpha must lie in (0,1)");
}

}  // namespace detail

// Two-sample t power: P(|T'| > t_crit) with T' noncentral t.
inline PowerResult power_two_sample(double d0, std::size_t n1, std::size_t n2,
                                    double alpha = 0.05) {
  detail::check_alpha(alpha);
  if (n1 < 2 || n2 < 2) throw DomainError("power: each group needs n >= 2");
  if (!(d0 > 0.0)) throw DomainError("power: effect target must be positive");
  const double fn1 = static_cast<double>(n1);
  const double fn2 = static_cast<double>(n2);
  const double df = fn1 + fn2 - 2.0;
  const double lambda = d0 * std::sqrt(fn1 * fn2 / (fn1 + fn2));
  const double tcrit = num::student_t_quantile(1.0 - alpha / 2.0, df);
  const double upper = 1.0 - num::noncentral_t_cdf(tcrit, df, lambda);
  const double lower = num::noncentral_t_cdf(-tcrit, df, lambda);

  PowerResult out;
  out.power = std::min(1.0, std::max(0.0, upper + lower));
  out.noncentrality = lambda;
  out.alpha = alpha;
  out.method = "noncentral_t";
  out.inputs.effect_target = d0;
  out.inputs.n1 = fn1;
  out.inputs.n2 = fn2;
  return out;
}

// Correlation power via the Fisher-z normal approximation.
inline PowerResult power_correlation(double r0, std::size_t n, double alpha = 0.05) {
  detail::check_alpha(alpha);
  if (n < 4) throw DomainError("power: correlation needs n >= 4");
  if (!(r0 > 0.0 && r0 < 1.0)) throw DomainError("power: correlation target must lie in (0,1)");
  const double zr = std::atanh(r0);
  const double se = 1.0 / std::sqrt(static_cast<double>(n) - 3.0);
  const double zc = num::normal_quantile(1.0 - alpha / 2.0);
  const double shift = zr / se;

  PowerResult out;
  out.power = std::min(1.0, num::normal_cdf(shift - zc) + num::normal_cdf(-shift - zc));
  out.noncentrality = shift;
  out.alpha = alpha;
  out.method = "fisher_z";
  out.inputs.effect_target = r0;
  out.inputs.n = static_cast<double>(n);
  return out;
}

// Survival power from the number of events and the group allocation split.
inline PowerResult power_survival(double hr0, std::size_t events, double p1, double p2,
                                  double alpha = 0.05) {
  detail::check_alpha(alpha);
  if (events < 1) throw DomainError("power: survival needs at least one event");
  if (!(hr0 > 0.0) || hr0 == 1.0) throw DomainError("power: hazard-ratio target must be positive and != 1");
  if (!(p1 > 0.0 && p2 > 0.0) || std::fabs(p1 + p2 - 1.0) > 1e-9)
    throw DomainError("power: allocation proportions must be positive and sum to 1");
  const double lambda = std::log(hr0) * std::sqrt(static_cast<double>(events) * p1 * p2);
  const double zc = num::normal_quantile(1.0 - alpha / 2.0);

  PowerResult out;
  out.power = std::min(1.0, num::normal_cdf(lambda - zc) + num::normal_cdf(-lambda - zc));
  out.noncentrality = lambda;
  out.alpha = alpha;
  out.method = "normal_events";
  out.inputs.effect_target = hr0;
  out.inputs.events = static_cast<double>(events);
  out.inputs.p1 = p1;
  out.inputs.p2 = p2;
  return out;
}

// Regression power: P(F' > F_crit) with F' noncentral F and lambda = n * f2.
inline PowerResult power_regression(std::size_t n, std::size_t tested_predictors,
                                    std::size_t total_predictors, double f2 = 0.15,
                                    double alpha = 0.05) {
  detail::check_alpha(alpha);
  if (tested_predictors < 1 || tested_predictors > total_predictors)
    throw DomainError("power: tested predictors must lie in [1, total]");
  if (n <= total_predictors + 1) throw DomainError("power: regression needs n > k + 1");
  if (!(f2 > 0.0)) throw DomainError("power: f2 must be positive");
  const double df1 = static_cast<double>(tested_predictors);
  const double df2 = static_cast<double>(n - total_predictors - 1);
  const double lambda = static_cast<double>(n) * f2;
  num::DistributionSpec fdist;
  fdist.family = num::DistFamily::f;
  fdist.df1 = df1;
  fdist.df2 = df2;
  const double fcrit = num::dist_quantile(fdist, 1.0 - alpha);

  PowerResult out;
  out.power = std::min(1.0, std::max(0.0, 1.0 - num::noncentral_f_cdf(fcrit, df1, df2, lambda)));
  out.noncentrality = lambda;
  out.alpha = alpha;
  out.method = "noncentral_f";
  out.inputs.effect_target = f2;
  out.inputs.n = static_cast<double>(n);
  out.inputs.tested_predictors = df1;
  out.inputs.total_predictors = static_cast<double>(total_predictors);
  return out;
}

namespace detail {

inline std::size_t as_count(double v, const char* what) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError(std::string("power: bad ") + what);
  return static_cast<std::size_t>(v + 0.5);
}

// Total n: explicit n_total if present, else the sample-size map summed.
inline std::optional<double> total_n(const model::StatisticalResults& results) {
  if (results.n_total) return results.n_total;
  if (results.sample_sizes.empty()) return std::nullopt;
  double sum = 0.0;
  for (const auto& [g, n] : results.sample_sizes) sum += n;
  return sum;
}

}  // namespace detail

// Evaluator-side power at the hypothesis's SESOI, computed from the sample
// sizes the run actually realized.  A family input absent from the results
// raises MissingInputs, which classifies as Invalid downstream.
inline PowerResult power_at_sesoi(const model::StatisticalResults& results,
                                  const model::HypothesisRecord& hypothesis,
                                  double alpha = 0.05) {
  const SesoiTarget target = resolve_sesoi(hypothesis.sesoi_profile, hypothesis.analysis_type);
  switch (hypothesis.analysis_type) {
    case AnalysisType::group_difference: {
      if (hypothesis.groups.size() != 2)
        throw MissingInputs("power: group-difference hypothesis without two groups");
      const auto it1 = results.sample_sizes.find(hypothesis.groups[0]);
      const auto it2 = results.sample_sizes.find(hypothesis.groups[1]);
      if (it1 == results.sample_sizes.end() || it2 == results.sample_sizes.end())
        throw MissingInputs("power: results lack per-group sample sizes");
      return power_two_sample(target.value, detail::as_count(it1->second, "n1"),
                              detail::as_count(it2->second, "n2"), alpha);
    }
    case AnalysisType::correlation: {
      const auto n = detail::total_n(results);
      if (!n) throw MissingInputs("power: results lack a sample size");
      return power_correlation(target.value, detail::as_count(*n, "n"), alpha);
    }
    case AnalysisType::survival: {
      if (!results.events_observed)
        throw MissingInputs("power: survival results lack an event count");
      // Allocation split from per-group n when available, else the
      // maximal-variance proxy p1 p2 = 1/4.
      double p1 = 0.5, p2 = 0.5;
      if (hypothesis.groups.size() == 2) {
        const auto it1 = results.sample_sizes.find(hypothesis.groups[0]);
        const auto it2 = results.sample_sizes.find(hypothesis.groups[1]);
        if (it1 != results.sample_sizes.end() && it2 != results.sample_sizes.end() &&
            it1->second > 0.0 && it2->second > 0.0) {
          p1 = it1->second / (it1->second + it2->second);
          p2 = 1.0 - p1;
        }
      }
      return power_survival(target.value, detail::as_count(*results.events_observed, "events"),
                            p1, p2, alpha);
    }
    case AnalysisType::regression: {
      const auto n = detail::total_n(results);
      if (!n) throw MissingInputs("power: results lack a sample size");
      const std::size_t tested = std::max<std::size_t>(1, hypothesis.predictors.size());
      std::size_t total = tested;
      if (results.variables_tested)
        total = std::max(total, results.variables_tested->predictors.size());
      return power_regression(detail::as_count(*n, "n"), tested, total, target.value, alpha);
    }
  }
  throw DomainError("power: unknown analysis type");
}

}  // namespace evistat::power
