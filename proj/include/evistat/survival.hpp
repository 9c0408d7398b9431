#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "evistat/stat_tests.hpp"

// Right-censored survival analysis: product-limit curve, two-group log-rank,
// Cox proportional hazards with Efron tie handling, and a Schoenfeld
// residual check of the proportional-hazards assumption.

namespace evistat::surv {

struct SurvivalSample {
  double time = 0.0;  // must be > 0
  bool event = false; // true = event observed, false = censored
  std::string group;
  std::map<std::string, double> covariates;
};

struct KmPoint {
  double time = 0.0;
  double survival = 1.0;
  std::size_t at_risk = 0;
  std::size_t events = 0;
};

struct KmCurve {
  std::vector<KmPoint> points;  // one per distinct event time, ascending
  std::size_t n = 0;
  std::size_t events = 0;

  // Left-continuous S(t-): the curve value just before t.
  double survival_before(double t) const {
    double s = 1.0;
    for (const auto& p : points) {
      if (p.time >= t) break;
      s = p.survival;
    }
    return s;
  }
};

struct CoxFit {
  std::vector<std::string> names;
  std::vector<double> coefficients;
  std::vector<double> hazard_ratios;
  std::vector<double> se;
  std::vector<double> z;
  std::vector<double> p;
  std::vector<std::pair<double, double>> ci_95;  // hazard-ratio scale
  double log_likelihood = 0.0;
  double null_log_likelihood = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  double score_inf_norm = 0.0;  // max |score component| at the solution
  std::size_t n = 0;
  std::size_t events = 0;
};

namespace detail {

inline void check_samples(const std::vector<SurvivalSample>& samples) {
  if (samples.empty()) throw EmptyGroup("survival: no samples");
  for (const auto& s : samples)
    if (!(s.time > 0.0) || !std::isfinite(s.time))
      throw DegenerateInput("survival: times must be positive and finite");
}

inline std::vector<double> distinct_event_times(const std::vector<SurvivalSample>& samples) {
  std::vector<double> t;
  for (const auto& s : samples)
    if (s.event) t.push_back(s.time);
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

}  // namespace detail

inline KmCurve kaplan_meier(const std::vector<SurvivalSample>& samples) {
  detail::check_samples(samples);
  const auto times = detail::distinct_event_times(samples);
  KmCurve curve;
  curve.n = samples.size();
  double s = 1.0;
  for (double t : times) {
    std::size_t at_risk = 0, d = 0;
    for (const auto& x : samples) {
      if (x.time >= t) ++at_risk;
      if (x.event && x.time == t) ++d;
    }
    s *= 1.0 - static_cast<double>(d) / static_cast<double>(at_risk);
    curve.points.push_back({t, s, at_risk, d});
    curve.events += d;
  }
  return curve;
}

// Two-group log-rank test with the hypergeometric variance.  The first group
// in lexicographic label order plays the role of group 1 for the O/E effect.
inline stats::TestOutcome log_rank(const std::vector<SurvivalSample>& samples) {
  detail::check_samples(samples);
  std::set<std::string> labels;
  for (const auto& s : samples) labels.insert(s.group);
  if (labels.size() != 2)
    throw NotTwoGroups("log_rank: needs exactly 2 groups, got " + std::to_string(labels.size()));
  const std::string g1 = *labels.begin();
  const auto times = detail::distinct_event_times(samples);
  if (times.empty()) throw NoEvents("log_rank: no events observed");

  double o1 = 0.0, e1 = 0.0, var = 0.0, o2 = 0.0, e2 = 0.0;
  for (double t : times) {
    double n_all = 0, n_g1 = 0, d_all = 0, d_g1 = 0;
    for (const auto& s : samples) {
      if (s.time >= t) {
        n_all += 1;
        if (s.group == g1) n_g1 += 1;
      }
      if (s.event && s.time == t) {
        d_all += 1;
        if (s.group == g1) d_g1 += 1;
      }
    }
    o1 += d_g1;
    o2 += d_all - d_g1;
    const double exp1 = d_all * n_g1 / n_all;
    e1 += exp1;
    e2 += d_all - exp1;
    if (n_all > 1.0)
      var += d_all * (n_g1 / n_all) * (1.0 - n_g1 / n_all) * (n_all - d_all) / (n_all - 1.0);
  }
  if (var <= 0.0) throw DegenerateVariance("log_rank: zero variance (one group carries all risk)");
  const double chi2 = (o1 - e1) * (o1 - e1) / var;

  stats::TestOutcome out;
  out.test_name = "log_rank";
  out.statistic = chi2;
  out.df = 1.0;
  out.p_value = num::chi_square_sf(chi2, 1.0);
  // O/E ratio estimate of the hazard ratio, group1 relative to group2.
  if (e1 > 0.0 && e2 > 0.0 && o2 > 0.0)
    out.effect_size = (o1 / e1) / (o2 / e2);
  else
    out.effect_size = std::numeric_limits<double>::quiet_NaN();
  out.effect_size_type = "hazard_ratio_oe";
  return out;
}

namespace detail {

// Tied-event block at one time: indices of failing subjects.
struct EventBlock {
  double time;
  std::vector<std::size_t> failed;
};

// Efron log partial likelihood with score and observed information.
struct PartialLik {
  double ll = 0.0;
  std::vector<double> score;
  std::vector<double> info;  // row-major m x m negative Hessian
};

inline PartialLik efron_loglik(const std::vector<std::vector<double>>& x,
                               const std::vector<double>& time,
                               const std::vector<bool>& event,
                               const std::vector<double>& beta) {
  const std::size_t n = time.size();
  const std::size_t m = beta.size();
  PartialLik out;
  out.score.assign(m, 0.0);
  out.info.assign(m * m, 0.0);

  std::vector<double> eta(n, 0.0), w(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) eta[i] += beta[j] * x[i][j];
    w[i] = std::exp(eta[i]);
  }

  std::vector<double> times;
  for (std::size_t i = 0; i < n; ++i)
    if (event[i]) times.push_back(time[i]);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  std::vector<double> s1r(m), s1d(m), s2r(m * m), s2d(m * m), s1(m);
  for (double t : times) {
    double s0r = 0.0, s0d = 0.0;
    std::fill(s1r.begin(), s1r.end(), 0.0);
    std::fill(s1d.begin(), s1d.end(), 0.0);
    std::fill(s2r.begin(), s2r.end(), 0.0);
    std::fill(s2d.begin(), s2d.end(), 0.0);
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool at_risk = time[i] >= t;
      const bool tied = event[i] && time[i] == t;
      if (!at_risk && !tied) continue;
      for (int pass = 0; pass < 2; ++pass) {
        const bool use = pass == 0 ? at_risk : tied;
        if (!use) continue;
        double& s0 = pass == 0 ? s0r : s0d;
        auto& s1v = pass == 0 ? s1r : s1d;
        auto& s2v = pass == 0 ? s2r : s2d;
        s0 += w[i];
        for (std::size_t a = 0; a < m; ++a) {
          s1v[a] += w[i] * x[i][a];
          for (std::size_t b = 0; b < m; ++b) s2v[a * m + b] += w[i] * x[i][a] * x[i][b];
        }
      }
      if (tied) {
        d += 1.0;
        out.ll += eta[i];
        for (std::size_t a = 0; a < m; ++a) out.score[a] += x[i][a];
      }
    }
    for (double l = 0.0; l < d; l += 1.0) {
      const double c = l / d;
      const double s0 = s0r - c * s0d;
      out.ll -= std::log(s0);
      for (std::size_t a = 0; a < m; ++a) s1[a] = (s1r[a] - c * s1d[a]) / s0;
      for (std::size_t a = 0; a < m; ++a) {
        out.score[a] -= s1[a];
        for (std::size_t b = 0; b < m; ++b) {
          const double s2ab = (s2r[a * m + b] - c * s2d[a * m + b]) / s0;
          out.info[a * m + b] += s2ab - s1[a] * s1[b];
        }
      }
    }
  }
  return out;
}

// Cholesky solve of the symmetric positive definite system A x = b.
inline std::vector<double> chol_solve(std::vector<double> a, std::vector<double> b) {
  const std::size_t m = b.size();
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = 0; k < j; ++k) a[j * m + j] -= a[j * m + k] * a[j * m + k];
    if (a[j * m + j] <= 0.0 || !std::isfinite(a[j * m + j]))
      throw SingularMatrix("cox: information matrix is singular");
    a[j * m + j] = std::sqrt(a[j * m + j]);
    for (std::size_t i = j + 1; i < m; ++i) {
      for (std::size_t k = 0; k < j; ++k) a[i * m + j] -= a[i * m + k] * a[j * m + k];
      a[i * m + j] /= a[j * m + j];
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < i; ++k) b[i] -= a[i * m + k] * b[k];
    b[i] /= a[i * m + i];
  }
  for (std::size_t i = m; i-- > 0;) {
    for (std::size_t k = i + 1; k < m; ++k) b[i] -= a[k * m + i] * b[k];
    b[i] /= a[i * m + i];
  }
  return b;
}

// Inverse of an SPD matrix via Cholesky solves against unit vectors.
inline std::vector<double> spd_inverse(const std::vector<double>& a, std::size_t m) {
  std::vector<double> inv(m * m, 0.0);
  for (std::size_t c = 0; c < m; ++c) {
    std::vector<double> e(m, 0.0);
    e[c] = 1.0;
    const auto col = chol_solve(a, e);
    for (std::size_t r = 0; r < m; ++r) inv[r * m + c] = col[r];
  }
  return inv;
}

}  // namespace detail

// Newton-Raphson on the Efron partial likelihood.  Convergence: max |score|
// below 1e-8 or step below 1e-9, provided the pending step has also shrunk.
// A ridge to infinity (flat score, macroscopic step, or runaway |beta|)
// raises MonotoneLikelihood instead of reporting an infinite estimate.
inline CoxFit cox_ph_fit(const std::vector<SurvivalSample>& samples,
                         const std::vector<std::string>& covariate_names) {
  detail::check_samples(samples);
  if (covariate_names.empty()) throw DegenerateInput("cox: no covariates named");
  const std::size_t n = samples.size();
  const std::size_t m = covariate_names.size();
  std::size_t events = 0;
  for (const auto& s : samples) events += s.event ? 1 : 0;
  if (events == 0) throw NoEvents("cox: no events observed");
  if (events < 3) throw TooFewEvents("cox: needs at least 3 events, got " + std::to_string(events));

  std::vector<std::vector<double>> x(n, std::vector<double>(m, 0.0));
  std::vector<double> time(n);
  std::vector<bool> event(n);
  for (std::size_t i = 0; i < n; ++i) {
    time[i] = samples[i].time;
    event[i] = samples[i].event;
    for (std::size_t j = 0; j < m; ++j) {
      const auto it = samples[i].covariates.find(covariate_names[j]);
      if (it == samples[i].covariates.end())
        throw DegenerateInput("cox: sample missing covariate '" + covariate_names[j] + "'");
      if (!std::isfinite(it->second))
        throw DegenerateInput("cox: non-finite covariate '" + covariate_names[j] + "'");
      x[i][j] = it->second;
    }
  }

  std::vector<double> beta(m, 0.0);
  auto state = detail::efron_loglik(x, time, event, beta);
  const double null_ll = state.ll;
  bool ll_monotone_up = true;
  CoxFit fit;
  fit.names = covariate_names;
  fit.n = n;
  fit.events = events;
  fit.null_log_likelihood = null_ll;

  const std::size_t max_iter = 100;
  std::size_t it = 0;
  for (; it < max_iter; ++it) {
    double score_max = 0.0;
    for (double g : state.score) score_max = std::max(score_max, std::fabs(g));
    auto step = detail::chol_solve(state.info, state.score);
    double step_max = 0.0;
    for (double s : step) step_max = std::max(step_max, std::fabs(s));
    double beta_max = 0.0;
    for (double b : beta) beta_max = std::max(beta_max, std::fabs(b));
    if (score_max < 1e-8 || step_max < 1e-9) {
      // An interior maximum has a vanishing gradient and a vanishing step.  A
      // flat gradient with a step that is still macroscopic means the
      // information has collapsed at the same rate as the score: the
      // likelihood is a ridge running to infinity, not a maximum.
      if (step_max > 1e-3 * (1.0 + beta_max))
        throw MonotoneLikelihood(
            "cox: likelihood flat but coefficient still moving; no finite maximum");
      fit.converged = true;
      break;
    }
    // Step halving keeps the likelihood nondecreasing.
    double scale = 1.0;
    std::vector<double> cand(m);
    detail::PartialLik next;
    for (int h = 0; h < 40; ++h) {
      for (std::size_t j = 0; j < m; ++j) cand[j] = beta[j] + scale * step[j];
      next = detail::efron_loglik(x, time, event, cand);
      if (next.ll >= state.ll - 1e-12) break;
      scale *= 0.5;
      ll_monotone_up = false;
    }
    beta = cand;
    state = next;
    for (double b : beta)
      if (std::fabs(b) > 25.0)
        throw MonotoneLikelihood(
            "cox: coefficient diverging; the partial likelihood has no finite maximum");
  }
  if (!fit.converged) {
    if (ll_monotone_up)
      throw MonotoneLikelihood(
          "cox: no convergence with monotone likelihood; no finite maximum");
    throw DomainError("cox: Newton iteration failed to converge");
  }

  fit.iterations = it;
  for (double g : state.score) fit.score_inf_norm = std::max(fit.score_inf_norm, std::fabs(g));
  fit.log_likelihood = state.ll;
  fit.coefficients = beta;

  const auto inv = detail::spd_inverse(state.info, m);
  const double zc = num::normal_quantile(0.975);
  for (std::size_t j = 0; j < m; ++j) {
    const double se = std::sqrt(inv[j * m + j]);
    const double z = se > 0.0 ? beta[j] / se : 0.0;
    fit.hazard_ratios.push_back(std::exp(beta[j]));
    fit.se.push_back(se);
    fit.z.push_back(z);
    fit.p.push_back(std::min(1.0, 2.0 * num::normal_sf(std::fabs(z))));
    fit.ci_95.emplace_back(std::exp(beta[j] - zc * se), std::exp(beta[j] + zc * se));
  }
  return fit;
}

enum class TimeTransform { identity, km };

struct SchoenfeldPoint {
  double time = 0.0;
  double residual = 0.0;
};

// Schoenfeld residual at each event: the failing subject's covariate minus
// the Efron-weighted expected covariate over the risk set, evaluated at the
// given coefficients.  At the fitted coefficients the residuals sum to the
// partial-likelihood score, i.e. approximately zero.
inline std::vector<SchoenfeldPoint> schoenfeld_residuals(
    const std::vector<SurvivalSample>& samples, const std::vector<std::string>& names,
    const std::vector<double>& coefficients, const std::string& covariate) {
  detail::check_samples(samples);
  if (names.size() != coefficients.size())
    throw LengthMismatch("schoenfeld: names and coefficients differ in length");
  std::size_t cidx = names.size();
  for (std::size_t j = 0; j < names.size(); ++j)
    if (names[j] == covariate) cidx = j;
  if (cidx == names.size())
    throw DegenerateInput("schoenfeld: covariate '" + covariate + "' not in the fit");

  const std::size_t n = samples.size();
  const std::size_t m = names.size();
  std::vector<double> w(n, 0.0);
  std::vector<std::vector<double>> x(n, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    double eta = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const auto it = samples[i].covariates.find(names[j]);
      if (it == samples[i].covariates.end())
        throw DegenerateInput("schoenfeld: sample missing covariate '" + names[j] + "'");
      x[i][j] = it->second;
      eta += coefficients[j] * x[i][j];
    }
    w[i] = std::exp(eta);
  }

  const auto times = detail::distinct_event_times(samples);
  std::vector<SchoenfeldPoint> out;
  for (double t : times) {
    double s0r = 0.0, s0d = 0.0, s1r = 0.0, s1d = 0.0;
    std::vector<std::size_t> tied;
    for (std::size_t i = 0; i < n; ++i) {
      if (samples[i].time >= t) {
        s0r += w[i];
        s1r += w[i] * x[i][cidx];
      }
      if (samples[i].event && samples[i].time == t) {
        tied.push_back(i);
        s0d += w[i];
        s1d += w[i] * x[i][cidx];
      }
    }
    const double d = static_cast<double>(tied.size());
    // l-th tied subject in input order measures against the l-th Efron stage
    for (std::size_t l = 0; l < tied.size(); ++l) {
      const double c = static_cast<double>(l) / d;
      const double expect = (s1r - c * s1d) / (s0r - c * s0d);
      out.push_back({t, x[tied[l]][cidx] - expect});
    }
  }
  return out;
}

// Proportional-hazards check: Pearson correlation between the scaled
// Schoenfeld residuals of one covariate and (transformed) event time,
// with the usual t-transform p-value.
inline stats::TestOutcome schoenfeld_test(const std::vector<SurvivalSample>& samples,
                                          const CoxFit& fit, const std::string& covariate,
                                          TimeTransform transform = TimeTransform::identity) {
  const auto points = schoenfeld_residuals(samples, fit.names, fit.coefficients, covariate);
  if (points.size() < 3) throw TooFewEvents("schoenfeld: needs at least 3 events");

  std::vector<double> when, res;
  for (const auto& p : points) {
    when.push_back(p.time);
    res.push_back(p.residual);
  }
  if (transform == TimeTransform::km) {
    const auto curve = kaplan_meier(samples);
    for (auto& t : when) t = 1.0 - curve.survival_before(t);
  }

  auto out = stats::correlation(when, res, stats::CorrelationMethod::pearson);
  out.test_name = "schoenfeld_ph";
  return out;
}

}  // namespace evistat::surv
