#pragma once

// Ground-truth computation: run the canonical test for a hypothesis against
// a cohort, record the full statistics, resolve SESOI power, and classify.
// There is exactly one classification path: the label always comes from
// classify_evidence over the statistics recorded here.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evistat/artifacts.hpp"
#include "evistat/cohort.hpp"
#include "evistat/eco.hpp"
#include "evistat/power.hpp"
#include "evistat/regression.hpp"
#include "evistat/stat_tests.hpp"
#include "evistat/survival.hpp"

namespace evistat::bench {

struct OracleOptions {
  double alpha = 0.05;
  double power_threshold = 0.80;
  std::size_t bootstrap_replicates = 2000;
};

namespace detail {

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline bool any_row_has_measurement(const Cohort& cohort, const std::string& name) {
  for (const auto& r : cohort.rows)
    if (r.measurements.count(name)) return true;
  return false;
}

inline bool any_row_has_field(const Cohort& cohort, const std::string& name) {
  for (const auto& r : cohort.rows)
    if (r.measurements.count(name) || r.metadata.count(name)) return true;
  return false;
}

inline std::vector<std::string> missing_requirements(const model::HypothesisRecord& h,
                                                     const Cohort& cohort) {
  std::vector<std::string> missing;
  const auto need_measurement = [&](const std::string& name) {
    if (!name.empty() && !any_row_has_measurement(cohort, name)) missing.push_back(name);
  };

  if (h.analysis_type == AnalysisType::survival) {
    bool any = false;
    for (const auto& r : cohort.rows) any = any || r.survival.has_value();
    if (!any) missing.push_back("survival_data");
  } else {
    need_measurement(h.metric);
  }
  for (const auto& p : h.predictors) need_measurement(p);
  for (const auto& a : h.adjust_for)
    if (a.level == Requirement::required) need_measurement(a.variable);
  if (h.restrict_to && !any_row_has_field(cohort, h.restrict_to->field))
    missing.push_back(h.restrict_to->field);
  for (const auto& g : h.groups) {
    if (g == "ALL") continue;
    bool found = false;
    for (const auto& r : cohort.rows) found = found || r.group == g;
    if (!found) missing.push_back("group:" + g);
  }
  return missing;
}

inline bool row_matches_restriction(const CohortRow& row, const model::RestrictTo& r) {
  if (r.value.is_string()) {
    const auto it = row.metadata.find(r.field);
    return it != row.metadata.end() && it->second == r.value.get<std::string>();
  }
  if (r.value.is_number()) {
    const auto it = row.measurements.find(r.field);
    return it != row.measurements.end() && it->second == r.value.get<double>();
  }
  if (r.value.is_boolean()) {
    const auto it = row.measurements.find(r.field);
    return it != row.measurements.end() && (it->second != 0.0) == r.value.get<bool>();
  }
  return false;
}

// Complete-case rows of one group carrying every named variable.
inline std::vector<const CohortRow*> complete_rows(const std::vector<const CohortRow*>& rows,
                                                   const std::vector<std::string>& variables,
                                                   bool need_survival) {
  std::vector<const CohortRow*> out;
  for (const CohortRow* r : rows) {
    bool ok = !need_survival || r->survival.has_value();
    for (const auto& v : variables) ok = ok && r->measurements.count(v) > 0;
    if (ok) out.push_back(r);
  }
  return out;
}

inline std::vector<double> column(const std::vector<const CohortRow*>& rows,
                                  const std::string& name) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const CohortRow* r : rows) out.push_back(r->measurements.at(name));
  return out;
}

inline model::GroupStats to_group_stats(const stats::GroupSummary& s) {
  model::GroupStats out;
  out.mean = s.mean;
  out.sd = s.sd;
  out.median = s.median;
  out.n = static_cast<double>(s.n);
  return out;
}

}  // namespace detail

// Canonical test execution: the full statistics a perfect agent would have
// reported for this hypothesis on this cohort.
inline model::StatisticalResults oracle_statistics(const model::HypothesisRecord& h,
                                                   const Cohort& cohort,
                                                   const OracleOptions& opt = {}) {
  // Restrict the population first; excluded rows must not touch anything.
  std::vector<const CohortRow*> pool;
  for (const auto& row : cohort.rows)
    if (!h.restrict_to || detail::row_matches_restriction(row, *h.restrict_to))
      pool.push_back(&row);
  if (pool.empty()) throw DegenerateCohort("oracle: restriction leaves no rows");

  std::vector<std::string> required_adjust;
  for (const auto& a : h.adjust_for)
    if (a.level == Requirement::required) required_adjust.push_back(a.variable);

  const auto resolve_group = [&](const std::string& label) {
    std::vector<const CohortRow*> rows;
    for (const CohortRow* r : pool)
      if (label == "ALL" || r->group == label) rows.push_back(r);
    return rows;
  };

  model::StatisticalResults out;
  out.analysis_type = h.analysis_type;

  switch (h.analysis_type) {
    case AnalysisType::group_difference: {
      if (h.groups.size() != 2)
        throw InvalidSpec("oracle: group difference needs exactly two groups");
      const std::vector<std::string> needed = {h.metric};
      const auto rows1 = detail::complete_rows(resolve_group(h.groups[0]), needed, false);
      const auto rows2 = detail::complete_rows(resolve_group(h.groups[1]), needed, false);
      if (rows1.empty() || rows2.empty())
        throw DegenerateCohort("oracle: empty group after restriction");
      const auto v1 = detail::column(rows1, h.metric);
      const auto v2 = detail::column(rows2, h.metric);
      const auto test = stats::mann_whitney_u(v1, v2);
      out.test_performed = test.test_name;
      out.p_value = test.p_value;
      out.effect_size = test.effect_size;
      out.effect_size_type = test.effect_size_type;
      const auto boot =
          stats::bootstrap_ci(stats::BootstrapStat::rank_biserial, v1, v2,
                              opt.bootstrap_replicates, detail::fnv1a(h.id));
      out.ci_95 = boot.ci;
      out.sample_sizes = {{h.groups[0], static_cast<double>(v1.size())},
                          {h.groups[1], static_cast<double>(v2.size())}};
      out.n_total = static_cast<double>(v1.size() + v2.size());
      std::map<std::string, model::GroupStats> gs;
      gs[h.groups[0]] = detail::to_group_stats(stats::detail::summarize(v1));
      gs[h.groups[1]] = detail::to_group_stats(stats::detail::summarize(v2));
      out.group_statistics = std::move(gs);
      model::TargetVariables tv;
      tv.outcome = h.metric;
      tv.predictors = {"group"};
      out.variables_tested = tv;
      break;
    }
    case AnalysisType::correlation: {
      if (h.predictors.empty())
        throw InvalidSpec("oracle: correlation hypothesis names no predictor");
      const std::string& x = h.predictors.front();
      const auto rows = detail::complete_rows(
          resolve_group(h.groups.empty() ? "ALL" : h.groups.front()), {h.metric, x}, false);
      if (rows.size() < 4) throw DegenerateCohort("oracle: too few complete rows");
      const auto test = stats::correlation(detail::column(rows, x),
                                           detail::column(rows, h.metric),
                                           stats::CorrelationMethod::spearman);
      out.test_performed = test.test_name;
      out.p_value = test.p_value;
      out.effect_size = test.effect_size;
      out.effect_size_type = test.effect_size_type;
      out.ci_95 = test.ci_95;
      out.n_total = static_cast<double>(rows.size());
      out.sample_sizes = {{h.groups.empty() ? "ALL" : h.groups.front(),
                           static_cast<double>(rows.size())}};
      model::TargetVariables tv;
      tv.outcome = h.metric;
      tv.predictors = {x};
      out.variables_tested = tv;
      break;
    }
    case AnalysisType::survival: {
      if (h.groups.size() != 2)
        throw InvalidSpec("oracle: survival contrast needs exactly two groups");
      const auto rows1 = detail::complete_rows(resolve_group(h.groups[0]), required_adjust, true);
      const auto rows2 = detail::complete_rows(resolve_group(h.groups[1]), required_adjust, true);
      if (rows1.empty() || rows2.empty())
        throw DegenerateCohort("oracle: empty group after restriction");

      std::vector<surv::SurvivalSample> samples;
      double events = 0.0;
      const auto add = [&](const std::vector<const CohortRow*>& rows, double indicator) {
        for (const CohortRow* r : rows) {
          surv::SurvivalSample s;
          s.time = r->survival->time;
          s.event = r->survival->event;
          s.group = r->group;
          s.covariates["group_indicator"] = indicator;
          for (const auto& a : required_adjust) s.covariates[a] = r->measurements.at(a);
          events += s.event ? 1.0 : 0.0;
          samples.push_back(std::move(s));
        }
      };
      add(rows1, 1.0);
      add(rows2, 0.0);

      std::vector<std::string> covariates = {"group_indicator"};
      covariates.insert(covariates.end(), required_adjust.begin(), required_adjust.end());
      const auto cox = surv::cox_ph_fit(samples, covariates);
      if (required_adjust.empty()) {
        // Unadjusted two-group contrast: log-rank p, Cox hazard ratio effect.
        const auto lr = surv::log_rank(samples);
        out.test_performed = lr.test_name;
        out.p_value = lr.p_value;
      } else {
        out.test_performed = "cox_ph";
        out.p_value = cox.p[0];
      }
      out.effect_size = cox.hazard_ratios[0];
      out.effect_size_type = "hazard_ratio";
      out.ci_95 = cox.ci_95[0];
      out.events_observed = events;
      out.sample_sizes = {{h.groups[0], static_cast<double>(rows1.size())},
                          {h.groups[1], static_cast<double>(rows2.size())}};
      out.n_total = static_cast<double>(rows1.size() + rows2.size());
      model::TargetVariables tv;
      tv.outcome = "survival";
      tv.predictors = {"group"};
      tv.predictors.insert(tv.predictors.end(), required_adjust.begin(), required_adjust.end());
      out.variables_tested = tv;
      break;
    }
    case AnalysisType::regression: {
      if (h.predictors.empty())
        throw InvalidSpec("oracle: regression hypothesis names no predictor");
      std::vector<std::string> design_names = h.predictors;
      for (const auto& a : required_adjust)
        if (std::find(design_names.begin(), design_names.end(), a) == design_names.end())
          design_names.push_back(a);
      std::vector<std::string> needed = design_names;
      needed.push_back(h.metric);
      const auto rows = detail::complete_rows(
          resolve_group(h.groups.empty() ? "ALL" : h.groups.front()), needed, false);
      if (rows.size() < design_names.size() + 2)
        throw DegenerateCohort("oracle: too few complete rows for regression");
      std::vector<std::vector<double>> design;
      for (const auto& name : design_names) design.push_back(detail::column(rows, name));
      const auto y = detail::column(rows, h.metric);
      const auto fit = stats::ols_fit(y, design, design_names, h.predictors);
      out.test_performed = "ols_regression";
      out.p_value = fit.partial_f_p;
      for (const auto& co : fit.coefficients)
        if (co.name == h.predictors.front()) {
          out.effect_size = co.estimate;
          const double tcrit = num::student_t_quantile(0.975, fit.residual_df);
          out.ci_95 = {{co.estimate - tcrit * co.se, co.estimate + tcrit * co.se}};
        }
      out.effect_size_type = "beta_coefficient";
      out.n_total = static_cast<double>(rows.size());
      out.sample_sizes = {{h.groups.empty() ? "ALL" : h.groups.front(),
                           static_cast<double>(rows.size())}};
      model::TargetVariables tv;
      tv.outcome = h.metric;
      tv.predictors = design_names;
      out.variables_tested = tv;
      break;
    }
  }
  return out;
}

inline model::GroundTruthBlock compute_ground_truth(const model::HypothesisRecord& h,
                                                    const Cohort& cohort,
                                                    const OracleOptions& opt = {}) {
  model::GroundTruthBlock gt;

  const auto missing = detail::missing_requirements(h, cohort);
  if (h.tier == Tier::L0 || !missing.empty()) {
    gt.label = EvidenceLabel::invalid;
    gt.missing_requirements = missing;
    return gt;
  }

  const auto results = oracle_statistics(h, cohort, opt);
  const auto power = power::power_at_sesoi(results, h, opt.alpha);

  eco::ClassificationInput in;
  in.p_value = results.p_value;
  in.alpha = opt.alpha;
  in.direction_match = eco::verify_direction(results, eco::direction_spec_for(h));
  in.power_at_sesoi = power.power;
  in.validity = eco::Validity::valid;
  const auto cls = eco::classify_evidence(in, opt.power_threshold);

  gt.label = cls.label;
  gt.p_value = results.p_value;
  gt.effect_size = results.effect_size;
  gt.effect_size_type = results.effect_size_type;
  gt.sample_sizes = results.sample_sizes;
  gt.power_at_sesoi = power.power;
  return gt;
}

// Fills ground_truth on every record; processing order is by id so batch
// output is deterministic regardless of bank order.
inline void annotate_bank(std::vector<model::HypothesisRecord>& bank, const Cohort& cohort,
                          const OracleOptions& opt = {}) {
  std::vector<std::size_t> order(bank.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return bank[a].id < bank[b].id; });
  for (std::size_t i : order) bank[i].ground_truth = compute_ground_truth(bank[i], cohort, opt);
}

}  // namespace evistat::bench
