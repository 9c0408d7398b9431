#pragma once

// Scoring agent runs against annotated ground truth, then aggregating the
// benchmark metrics: run-level and majority-vote accuracy, completion rate,
// L0 feasibility, diagnostic failure rates, and the underpowered-collapse
// sensitivity re-score.  The predicted label is always recomputed here from
// the run's own statistics; verdict files never reveal it.

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "evistat/artifacts.hpp"
#include "evistat/audit.hpp"
#include "evistat/eco.hpp"
#include "evistat/errors.hpp"
#include "evistat/power.hpp"

namespace evistat::eval {

struct RunDiagnostics {
  bool overclaim = false;
  bool false_refutation = false;
  bool hallucinated_significance = false;
  bool literal_p = false;
  bool synthetic = false;
  bool grounded = false;
};

struct RunScore {
  std::string run_id;
  std::string hypothesis_id;
  std::optional<EvidenceLabel> predicted_label;
  std::optional<Verdict> verdict;
  // For testable ground truth: predicted label vs ground-truth label, defined
  // only when a label could be computed.  For Invalid ground truth the
  // comparison is feasibility-only: correct means the run abstained.
  std::optional<bool> label_correct;
  std::optional<bool> verdict_correct;
  RunDiagnostics diagnostics;
  bool completed = false;
  bool code_present = false;  // pool membership for the code-scan rates

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["run_id"] = run_id;
    j["hypothesis_id"] = hypothesis_id;
    j["predicted_label"] =
        predicted_label ? nlohmann::json(to_string(*predicted_label)) : nlohmann::json();
    j["verdict"] = verdict ? nlohmann::json(to_string(*verdict)) : nlohmann::json();
    j["label_correct"] = label_correct ? nlohmann::json(*label_correct) : nlohmann::json();
    j["verdict_correct"] = verdict_correct ? nlohmann::json(*verdict_correct) : nlohmann::json();
    j["diagnostics"] = {{"overclaim", diagnostics.overclaim},
                        {"false_refutation", diagnostics.false_refutation},
                        {"hallucinated_significance", diagnostics.hallucinated_significance},
                        {"literal_p", diagnostics.literal_p},
                        {"synthetic", diagnostics.synthetic},
                        {"grounded", diagnostics.grounded}};
    j["completed"] = completed;
    j["code_present"] = code_present;
    return j;
  }
};

// Recompute the evidence label a run's own reported statistics support. Gaps
// (no direction statistics, no power inputs) degrade to Invalid rather than
// throwing, so a sloppy run is scored, not skipped.
inline eco::Classification classify_results(const model::StatisticalResults& results,
                                            const model::HypothesisRecord& hypothesis,
                                            double alpha = 0.05,
                                            double power_threshold = eco::kDefaultPowerThreshold) {
  eco::ClassificationInput in;
  in.p_value = results.p_value;
  in.alpha = alpha;
  try {
    in.direction_match = eco::verify_direction(results, eco::direction_spec_for(hypothesis));
  } catch (const MissingGroupStatistics&) {
    in.direction_match = eco::DirectionMatch::undefined;
  } catch (const MissingInputs&) {
    in.direction_match = eco::DirectionMatch::undefined;
  }
  try {
    in.power_at_sesoi = power::power_at_sesoi(results, hypothesis, alpha).power;
  } catch (const MissingInputs&) {
  } catch (const DomainError&) {
  }
  return eco::classify_evidence(in, power_threshold);
}

inline RunScore score_run(const model::RunRecord& run,
                          const model::HypothesisRecord& hypothesis, double alpha = 0.05,
                          double power_threshold = eco::kDefaultPowerThreshold,
                          const audit::PatternConfig* patterns = nullptr) {
  if (!hypothesis.ground_truth)
    throw MissingGroundTruth("score: hypothesis '" + hypothesis.id + "' has no ground truth");
  const auto& gt = *hypothesis.ground_truth;

  RunScore score;
  score.run_id = run.run_id;
  score.hypothesis_id = run.hypothesis_id;
  score.completed = run.verdict.has_value();
  if (run.verdict) score.verdict = run.verdict->verdict;
  score.code_present = run.analysis_code.has_value();

  if (run.results)
    score.predicted_label =
        classify_results(*run.results, hypothesis, alpha, power_threshold).label;

  if (gt.label == EvidenceLabel::invalid) {
    // Feasibility-only comparison: the correct move on an untestable
    // hypothesis is to abstain from a verdict.
    score.label_correct = !run.verdict.has_value();
  } else {
    if (score.predicted_label) score.label_correct = *score.predicted_label == gt.label;
    const auto expected = eco::label_to_expected_verdict(gt.label);
    if (score.verdict && expected) score.verdict_correct = *score.verdict == *expected;
  }

  const bool yes = score.verdict && *score.verdict == Verdict::yes;
  const std::optional<double> run_p =
      run.results ? run.results->p_value : std::optional<double>{};
  score.diagnostics.overclaim =
      yes && !(score.predicted_label && *score.predicted_label == EvidenceLabel::supported);
  score.diagnostics.false_refutation =
      score.predicted_label.has_value() &&
      *score.predicted_label == EvidenceLabel::refuted && gt.label != EvidenceLabel::refuted;
  score.diagnostics.hallucinated_significance = yes && (!run_p || !(*run_p < alpha));
  score.diagnostics.grounded = audit::audit_run(run).grounded;
  if (run.analysis_code) {
    try {
      const audit::PatternConfig config =
          patterns ? *patterns : audit::builtin_pattern_config();
      const auto diag = audit::scan_analysis_code(*run.analysis_code, config);
      score.diagnostics.literal_p = diag.literal_p_assignment;
      score.diagnostics.synthetic = diag.synthetic_data;
    } catch (const DecodeError&) {
      // Undecodable code cannot be scanned; the flags stay unset.
    }
  }
  return score;
}

// ---------------------------------------------------------------------------
// Aggregation

// Every rate travels with its pool so a report can never silently print a
// ratio over an empty or unexpected denominator.
struct Rate {
  std::size_t numerator = 0;
  std::size_t denominator = 0;

  void add(bool hit) {
    denominator += 1;
    if (hit) numerator += 1;
  }
  std::optional<double> value() const {
    if (denominator == 0) return std::nullopt;
    return static_cast<double>(numerator) / static_cast<double>(denominator);
  }
  nlohmann::json to_json() const {
    const auto v = value();
    return {{"numerator", numerator},
            {"denominator", denominator},
            {"value", v ? nlohmann::json(*v) : nlohmann::json()}};
  }
};

struct RunLevelMetrics {
  Rate evidence_accuracy;        // label_correct over runs with a computed label, L1-L5
  Rate verdict_accuracy;         // verdict_correct over runs that issued one, L1-L5
  Rate completion_rate;          // completed over runs on testable hypotheses
  Rate l0_feasibility_accuracy;  // abstention over runs on L0 hypotheses
};

struct MajorityVoteMetrics {
  Rate evidence_accuracy;
  Rate verdict_accuracy;
};

struct DiagnosticRates {
  Rate overclaim;                  // over YES verdicts
  Rate false_refutation;           // over predicted-Refuted runs
  Rate hallucinated_significance;  // over YES verdicts
  Rate literal_p;                  // over runs shipping analysis code
  Rate synthetic_data;             // over runs shipping analysis code
  Rate grounding;                  // over all runs
};

struct CollapseMetrics {
  Rate evidence_accuracy;       // Underpowered merged into Refuted on both sides
  std::optional<double> delta;  // collapsed minus plain evidence accuracy
};

struct StratumMetrics {
  Rate evidence_accuracy;
  Rate verdict_accuracy;
};

struct EvaluationReport {
  std::size_t total_runs = 0;
  std::size_t total_hypotheses = 0;  // distinct hypotheses referenced by runs
  RunLevelMetrics run_level;
  MajorityVoteMetrics majority_vote;
  CollapseMetrics underpowered_collapse;
  DiagnosticRates diagnostics;
  std::map<std::string, StratumMetrics> by_tier;
  std::map<std::string, StratumMetrics> by_dataset;
  std::map<std::string, StratumMetrics> by_control_type;

  nlohmann::json to_json() const {
    const auto stratum_json = [](const std::map<std::string, StratumMetrics>& m) {
      nlohmann::json j = nlohmann::json::object();
      for (const auto& [key, s] : m)
        j[key] = {{"evidence_accuracy", s.evidence_accuracy.to_json()},
                  {"verdict_accuracy", s.verdict_accuracy.to_json()}};
      return j;
    };
    nlohmann::json j;
    j["counts"] = {{"runs", total_runs}, {"hypotheses", total_hypotheses}};
    j["run_level"] = {
        {"evidence_accuracy", run_level.evidence_accuracy.to_json()},
        {"verdict_accuracy", run_level.verdict_accuracy.to_json()},
        {"completion_rate", run_level.completion_rate.to_json()},
        {"l0_feasibility_accuracy", run_level.l0_feasibility_accuracy.to_json()}};
    j["majority_vote"] = {
        {"evidence_accuracy", majority_vote.evidence_accuracy.to_json()},
        {"verdict_accuracy", majority_vote.verdict_accuracy.to_json()}};
    j["underpowered_collapse"] = {
        {"evidence_accuracy", underpowered_collapse.evidence_accuracy.to_json()},
        {"delta", underpowered_collapse.delta ? nlohmann::json(*underpowered_collapse.delta)
                                              : nlohmann::json()}};
    j["diagnostics"] = {
        {"overclaim_rate", diagnostics.overclaim.to_json()},
        {"false_refutation_rate", diagnostics.false_refutation.to_json()},
        {"hallucinated_significance_rate", diagnostics.hallucinated_significance.to_json()},
        {"literal_p_rate", diagnostics.literal_p.to_json()},
        {"synthetic_data_rate", diagnostics.synthetic_data.to_json()},
        {"grounding_rate", diagnostics.grounding.to_json()}};
    j["stratified"] = {{"tier", stratum_json(by_tier)},
                       {"dataset", stratum_json(by_dataset)},
                       {"control_type", stratum_json(by_control_type)}};
    return j;
  }
};

namespace detail {

inline EvidenceLabel collapse_underpowered(EvidenceLabel l) {
  return l == EvidenceLabel::underpowered ? EvidenceLabel::refuted : l;
}

// Modal element of vote counts; a tie between distinct leaders yields nullopt.
template <typename T>
std::optional<T> modal(const std::map<T, std::size_t>& votes) {
  std::optional<T> best;
  std::size_t best_count = 0;
  bool tied = false;
  for (const auto& [value, count] : votes) {
    if (count > best_count) {
      best = value;
      best_count = count;
      tied = false;
    } else if (count == best_count && best_count > 0) {
      tied = true;
    }
  }
  if (!best || tied) return std::nullopt;
  return best;
}

}  // namespace detail

inline EvaluationReport aggregate(const std::vector<RunScore>& scores,
                                  const std::vector<model::HypothesisRecord>& hypotheses) {
  std::map<std::string, const model::HypothesisRecord*> by_id;
  for (const auto& h : hypotheses) by_id[h.id] = &h;

  // Deterministic fold regardless of input order.
  std::vector<const RunScore*> ordered;
  ordered.reserve(scores.size());
  for (const auto& s : scores) ordered.push_back(&s);
  std::sort(ordered.begin(), ordered.end(), [](const RunScore* a, const RunScore* b) {
    return std::tie(a->hypothesis_id, a->run_id) < std::tie(b->hypothesis_id, b->run_id);
  });

  EvaluationReport rep;
  rep.total_runs = scores.size();
  std::set<std::string> seen_hypotheses;
  std::map<std::string, std::vector<const RunScore*>> testable_runs;

  for (const RunScore* s : ordered) {
    const auto it = by_id.find(s->hypothesis_id);
    if (it == by_id.end())
      throw UnknownHypothesis("aggregate: no hypothesis '" + s->hypothesis_id + "'");
    const auto& h = *it->second;
    if (!h.ground_truth)
      throw MissingGroundTruth("aggregate: hypothesis '" + h.id + "' has no ground truth");
    seen_hypotheses.insert(s->hypothesis_id);
    const auto& gt = *h.ground_truth;

    if (gt.label == EvidenceLabel::invalid) {
      // L0 pool: feasibility accuracy only; no completion penalty, no
      // membership in the evidence or verdict pools.
      rep.run_level.l0_feasibility_accuracy.add(s->label_correct.value_or(false));
    } else {
      rep.run_level.completion_rate.add(s->completed);
      if (s->label_correct) rep.run_level.evidence_accuracy.add(*s->label_correct);
      if (s->verdict_correct) rep.run_level.verdict_accuracy.add(*s->verdict_correct);
      if (s->predicted_label)
        rep.underpowered_collapse.evidence_accuracy.add(
            detail::collapse_underpowered(*s->predicted_label) ==
            detail::collapse_underpowered(gt.label));
      testable_runs[s->hypothesis_id].push_back(s);

      for (auto* stratum : {&rep.by_tier[to_string(h.tier)], &rep.by_dataset[h.dataset],
                            &rep.by_control_type[to_string(h.control_type)]}) {
        if (s->label_correct) stratum->evidence_accuracy.add(*s->label_correct);
        if (s->verdict_correct) stratum->verdict_accuracy.add(*s->verdict_correct);
      }
    }

    const bool yes = s->verdict && *s->verdict == Verdict::yes;
    if (yes) {
      rep.diagnostics.overclaim.add(s->diagnostics.overclaim);
      rep.diagnostics.hallucinated_significance.add(s->diagnostics.hallucinated_significance);
    }
    if (s->predicted_label && *s->predicted_label == EvidenceLabel::refuted)
      rep.diagnostics.false_refutation.add(s->diagnostics.false_refutation);
    rep.diagnostics.grounding.add(s->diagnostics.grounded);
    if (s->code_present) {
      rep.diagnostics.literal_p.add(s->diagnostics.literal_p);
      rep.diagnostics.synthetic_data.add(s->diagnostics.synthetic);
    }
  }
  rep.total_hypotheses = seen_hypotheses.size();

  // Majority vote per testable hypothesis; hypotheses with no votes of a
  // kind stay out of that pool, ties resolve conservatively.
  for (const auto& [id, runs] : testable_runs) {
    const auto& gt = *by_id.at(id)->ground_truth;
    std::map<Verdict, std::size_t> verdict_votes;
    std::map<EvidenceLabel, std::size_t> label_votes;
    for (const RunScore* s : runs) {
      if (s->verdict) verdict_votes[*s->verdict] += 1;
      if (s->predicted_label) label_votes[*s->predicted_label] += 1;
    }
    if (!verdict_votes.empty()) {
      const Verdict modal = detail::modal(verdict_votes).value_or(Verdict::inconclusive);
      rep.majority_vote.verdict_accuracy.add(modal == *eco::label_to_expected_verdict(gt.label));
    }
    if (!label_votes.empty()) {
      const EvidenceLabel modal = detail::modal(label_votes).value_or(EvidenceLabel::invalid);
      rep.majority_vote.evidence_accuracy.add(modal == gt.label);
    }
  }

  const auto plain = rep.run_level.evidence_accuracy.value();
  const auto collapsed = rep.underpowered_collapse.evidence_accuracy.value();
  if (plain && collapsed) rep.underpowered_collapse.delta = *collapsed - *plain;
  return rep;
}

// ---------------------------------------------------------------------------
// Rendering

enum class ReportFormat { json, text_table };

namespace detail {

inline std::string format_rate(const Rate& r) {
  char buf[64];
  const auto v = r.value();
  if (v)
    std::snprintf(buf, sizeof buf, "%.4f  %zu/%zu", *v, r.numerator, r.denominator);
  else
    std::snprintf(buf, sizeof buf, "n/a     %zu/%zu", r.numerator, r.denominator);
  return buf;
}

}  // namespace detail

inline std::string emit_report(const EvaluationReport& rep, ReportFormat format) {
  if (format == ReportFormat::json) return rep.to_json().dump(2) + "\n";

  std::string out;
  char buf[192];
  const auto row = [&](const std::string& name, const Rate& r) {
    std::snprintf(buf, sizeof buf, "  %-34s %s\n", name.c_str(),
                  detail::format_rate(r).c_str());
    out += buf;
  };

  std::snprintf(buf, sizeof buf, "evaluation report: %zu runs over %zu hypotheses\n",
                rep.total_runs, rep.total_hypotheses);
  out += buf;

  out += "\nrun-level\n";
  row("evidence_accuracy", rep.run_level.evidence_accuracy);
  row("verdict_accuracy", rep.run_level.verdict_accuracy);
  row("completion_rate", rep.run_level.completion_rate);
  row("l0_feasibility_accuracy", rep.run_level.l0_feasibility_accuracy);

  out += "\nmajority-vote\n";
  row("evidence_accuracy", rep.majority_vote.evidence_accuracy);
  row("verdict_accuracy", rep.majority_vote.verdict_accuracy);

  out += "\nunderpowered collapse\n";
  row("evidence_accuracy", rep.underpowered_collapse.evidence_accuracy);
  if (rep.underpowered_collapse.delta)
    std::snprintf(buf, sizeof buf, "  %-34s %+.4f\n", "delta", *rep.underpowered_collapse.delta);
  else
    std::snprintf(buf, sizeof buf, "  %-34s n/a\n", "delta");
  out += buf;

  out += "\ndiagnostics\n";
  row("overclaim_rate", rep.diagnostics.overclaim);
  row("false_refutation_rate", rep.diagnostics.false_refutation);
  row("hallucinated_significance_rate", rep.diagnostics.hallucinated_significance);
  row("literal_p_rate", rep.diagnostics.literal_p);
  row("synthetic_data_rate", rep.diagnostics.synthetic_data);
  row("grounding_rate", rep.diagnostics.grounding);

  const auto strata = [&](const char* title,
                          const std::map<std::string, StratumMetrics>& m) {
    out += "\nstratified by ";
    out += title;
    out += "\n";
    for (const auto& [key, s] : m) {
      std::snprintf(buf, sizeof buf, "  %-14s evidence %s   verdict %s\n", key.c_str(),
                    detail::format_rate(s.evidence_accuracy).c_str(),
                    detail::format_rate(s.verdict_accuracy).c_str());
      out += buf;
    }
  };
  strata("tier", rep.by_tier);
  strata("dataset", rep.by_dataset);
  strata("control_type", rep.by_control_type);
  return out;
}

}  // namespace evistat::eval
