#pragma once

// Typed artifacts for the provenance trail: analysis plan, statistical
// results, final verdict, hypothesis bank, and assembled run records.
//
// Loading is strict on structure (required keys, value types) and lenient on
// values: out-of-range probabilities, swapped CI bounds, or an UNTESTABLE
// plan without a subtype all parse fine, because the audit layer diagnoses
// them and can only do so on artifacts that parsed.  Unknown keys are
// preserved in `extras` and survive a save/load round trip.  Serialization
// is canonical: sorted keys, two-space indent, trailing newline.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "evistat/errors.hpp"
#include "evistat/types.hpp"

namespace evistat::model {

using json = nlohmann::json;

namespace detail {

inline std::string joined(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

inline const json& require_key(const json& j, const std::string& key, const std::string& prefix) {
  if (!j.is_object())
    throw SchemaError(prefix.empty() ? std::string("root: not an object")
                                     : prefix + ": not an object");
  const auto it = j.find(key);
  if (it == j.end()) throw SchemaError(joined(prefix, key));
  return *it;
}

inline double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw SchemaError(path + ": not a number");
  return v.get<double>();
}

inline std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw SchemaError(path + ": not a string");
  return v.get<std::string>();
}

inline bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) throw SchemaError(path + ": not a boolean");
  return v.get<bool>();
}

inline std::vector<std::string> as_string_list(const json& v, const std::string& path) {
  if (!v.is_array()) throw SchemaError(path + ": not a list");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(as_string(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline std::optional<double> opt_number(const json& j, const char* key,
                                        const std::string& prefix) {
  if (!j.is_object()) return std::nullopt;
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return as_number(*it, joined(prefix, key));
}

inline std::optional<std::string> opt_string(const json& j, const char* key,
                                             const std::string& prefix) {
  if (!j.is_object()) return std::nullopt;
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return as_string(*it, joined(prefix, key));
}

inline std::vector<std::string> opt_string_list(const json& j, const char* key,
                                                const std::string& prefix) {
  if (!j.is_object()) return {};
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return {};
  return as_string_list(*it, joined(prefix, key));
}

inline std::map<std::string, double> opt_number_map(const json& j, const char* key,
                                                    const std::string& prefix) {
  std::map<std::string, double> out;
  if (!j.is_object()) return out;
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return out;
  if (!it->is_object()) throw SchemaError(joined(prefix, key) + ": not an object");
  for (const auto& [k, v] : it->items()) out[k] = as_number(v, joined(prefix, key) + "." + k);
  return out;
}

// Counts print as integers when integral so files look like hand-written JSON.
inline json count_json(double v) {
  if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 9.0e15)
    return static_cast<std::int64_t>(v);
  return v;
}

inline json number_map_json(const std::map<std::string, double>& m, bool counts) {
  json out = json::object();
  for (const auto& [k, v] : m) out[k] = counts ? count_json(v) : json(v);
  return out;
}

// Leftover keys after the known ones are extracted.
inline json take_extras(json j, std::initializer_list<const char*> known) {
  if (!j.is_object()) return json::object();
  for (const char* k : known) j.erase(k);
  return j;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Pieces

enum class FeasibilityStatus { testable, untestable };

inline std::string to_string(FeasibilityStatus s) {
  return s == FeasibilityStatus::testable ? "TESTABLE" : "UNTESTABLE";
}

inline FeasibilityStatus feasibility_status_from_string(const std::string& s) {
  std::string u;
  for (char c : s) u.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (u == "TESTABLE") return FeasibilityStatus::testable;
  if (u == "UNTESTABLE") return FeasibilityStatus::untestable;
  throw SchemaError("feasibility.status: unknown value '" + s + "'");
}

struct Feasibility {
  FeasibilityStatus status = FeasibilityStatus::testable;
  std::optional<std::string> invalid_subtype;
  std::vector<std::string> missing_requirements;
  json extras = json::object();

  static Feasibility parse(const json& j, const std::string& path) {
    Feasibility out;
    out.status =
        feasibility_status_from_string(detail::as_string(detail::require_key(j, "status", path),
                                                         detail::joined(path, "status")));
    out.invalid_subtype = detail::opt_string(j, "invalid_subtype", path);
    out.missing_requirements = detail::opt_string_list(j, "missing_requirements", path);
    out.extras = detail::take_extras(j, {"status", "invalid_subtype", "missing_requirements"});
    return out;
  }

  json to_json() const {
    json j = extras;
    j["status"] = to_string(status);
    if (invalid_subtype) j["invalid_subtype"] = *invalid_subtype;
    if (!missing_requirements.empty()) j["missing_requirements"] = missing_requirements;
    return j;
  }
};

struct AdjustTerm {
  std::string variable;
  Requirement level = Requirement::required;
};

namespace detail {

inline std::vector<AdjustTerm> parse_adjust_for(const json& j, const std::string& prefix) {
  std::vector<AdjustTerm> out;
  if (!j.is_object()) return out;
  const auto it = j.find("adjust_for");
  if (it == j.end() || it->is_null()) return out;
  const std::string path = joined(prefix, "adjust_for");
  if (!it->is_array()) throw SchemaError(path + ": not a list");
  for (std::size_t i = 0; i < it->size(); ++i) {
    const json& e = (*it)[i];
    const std::string epath = path + "[" + std::to_string(i) + "]";
    if (e.is_string()) {
      // bare name: strictest reading
      out.push_back({e.get<std::string>(), Requirement::required});
    } else if (e.is_object()) {
      AdjustTerm t;
      t.variable = as_string(require_key(e, "variable", epath), epath + ".variable");
      if (const auto lvl = opt_string(e, "level", epath))
        t.level = requirement_from_string(*lvl);
      out.push_back(t);
    } else {
      throw SchemaError(epath + ": not a string or object");
    }
  }
  return out;
}

inline json adjust_for_json(const std::vector<AdjustTerm>& terms) {
  json out = json::array();
  for (const auto& t : terms)
    out.push_back({{"variable", t.variable}, {"level", to_string(t.level)}});
  return out;
}

}  // namespace detail

struct TargetVariables {
  std::string outcome;
  std::vector<std::string> predictors;
  json extras = json::object();

  static TargetVariables parse(const json& j, const std::string& path) {
    TargetVariables out;
    out.outcome = detail::opt_string(j, "outcome", path).value_or("");
    out.predictors = detail::opt_string_list(j, "predictors", path);
    out.extras = detail::take_extras(j, {"outcome", "predictors"});
    return out;
  }

  json to_json() const {
    json j = extras;
    j["outcome"] = outcome;
    j["predictors"] = predictors;
    return j;
  }
};

struct GroupStats {
  std::optional<double> mean, sd, median, n;
  json extras = json::object();

  static GroupStats parse(const json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path + ": not an object");
    GroupStats out;
    out.mean = detail::opt_number(j, "mean", path);
    out.sd = detail::opt_number(j, "sd", path);
    out.median = detail::opt_number(j, "median", path);
    out.n = detail::opt_number(j, "n", path);
    out.extras = detail::take_extras(j, {"mean", "sd", "median", "n"});
    return out;
  }

  json to_json() const {
    json j = extras;
    if (mean) j["mean"] = *mean;
    if (sd) j["sd"] = *sd;
    if (median) j["median"] = *median;
    if (n) j["n"] = detail::count_json(*n);
    return j;
  }
};

// ---------------------------------------------------------------------------
// AnalysisPlan

struct AnalysisPlan {
  Feasibility feasibility;
  std::vector<std::string> groups;
  std::vector<std::string> structures;
  std::vector<std::string> observations;
  std::vector<std::string> metrics;
  std::string statistical_test;
  std::optional<AnalysisType> analysis_type;
  std::string grouping_field;
  std::vector<std::string> predictors;
  std::vector<AdjustTerm> adjust_for;
  std::optional<TargetVariables> target_variables;
  std::map<std::string, double> a_priori_power;
  json extras = json::object();

  static AnalysisPlan parse(const json& j) {
    AnalysisPlan out;
    out.feasibility = Feasibility::parse(detail::require_key(j, "feasibility", ""), "feasibility");
    out.groups = detail::as_string_list(detail::require_key(j, "groups", ""), "groups");
    out.structures = detail::opt_string_list(j, "structures", "");
    out.observations = detail::opt_string_list(j, "observations", "");
    out.metrics = detail::opt_string_list(j, "metrics", "");
    out.statistical_test = detail::opt_string(j, "statistical_test", "").value_or("");
    if (const auto t = detail::opt_string(j, "analysis_type", ""))
      out.analysis_type = analysis_type_from_string(*t);
    out.grouping_field = detail::opt_string(j, "grouping_field", "").value_or("");
    out.predictors = detail::opt_string_list(j, "predictors", "");
    out.adjust_for = detail::parse_adjust_for(j, "");
    if (j.contains("target_variables") && !j.at("target_variables").is_null())
      out.target_variables = TargetVariables::parse(j.at("target_variables"), "target_variables");
    out.a_priori_power = detail::opt_number_map(j, "a_priori_power", "");
    out.extras = detail::take_extras(
        j, {"feasibility", "groups", "structures", "observations", "metrics", "statistical_test",
            "analysis_type", "grouping_field", "predictors", "adjust_for", "target_variables",
            "a_priori_power"});
    return out;
  }

  json to_json() const {
    json j = extras;
    j["feasibility"] = feasibility.to_json();
    j["groups"] = groups;
    j["structures"] = structures;
    j["observations"] = observations;
    j["metrics"] = metrics;
    j["statistical_test"] = statistical_test;
    if (analysis_type) j["analysis_type"] = to_string(*analysis_type);
    if (!grouping_field.empty()) j["grouping_field"] = grouping_field;
    if (!predictors.empty()) j["predictors"] = predictors;
    if (!adjust_for.empty()) j["adjust_for"] = detail::adjust_for_json(adjust_for);
    if (target_variables) j["target_variables"] = target_variables->to_json();
    if (!a_priori_power.empty()) {
      json p = json::object();
      for (const auto& [k, v] : a_priori_power)
        p[k] = (k == "n1" || k == "n2" || k == "n" || k == "events") ? detail::count_json(v)
                                                                     : json(v);
      j["a_priori_power"] = p;
    }
    return j;
  }
};

// ---------------------------------------------------------------------------
// StatisticalResults

struct StatisticalResults {
  std::optional<AnalysisType> analysis_type;
  std::optional<std::string> test_performed;
  std::optional<double> p_value;
  std::optional<double> effect_size;
  std::optional<std::string> effect_size_type;
  std::optional<std::pair<double, double>> ci_95;
  std::optional<double> n_total;
  std::map<std::string, double> sample_sizes;
  std::optional<std::map<std::string, GroupStats>> group_statistics;
  std::optional<TargetVariables> variables_tested;
  std::optional<double> events_observed;  // survival only; power needs it
  json extras = json::object();

  static StatisticalResults parse(const json& j) {
    if (!j.is_object()) throw SchemaError("root: not an object");
    StatisticalResults out;
    if (const auto t = detail::opt_string(j, "analysis_type", ""))
      out.analysis_type = analysis_type_from_string(*t);
    out.test_performed = detail::opt_string(j, "test_performed", "");
    out.p_value = detail::opt_number(j, "p_value", "");
    out.effect_size = detail::opt_number(j, "effect_size", "");
    out.effect_size_type = detail::opt_string(j, "effect_size_type", "");
    if (j.contains("ci_95") && !j.at("ci_95").is_null()) {
      const json& ci = j.at("ci_95");
      if (!ci.is_array() || ci.size() != 2)
        throw SchemaError("ci_95: not a two-element list");
      out.ci_95 = {detail::as_number(ci[0], "ci_95[0]"), detail::as_number(ci[1], "ci_95[1]")};
    }
    out.n_total = detail::opt_number(j, "n_total", "");
    out.sample_sizes = detail::opt_number_map(j, "sample_sizes", "");
    if (j.contains("group_statistics") && !j.at("group_statistics").is_null()) {
      const json& gs = j.at("group_statistics");
      if (!gs.is_object()) throw SchemaError("group_statistics: not an object");
      std::map<std::string, GroupStats> m;
      for (const auto& [k, v] : gs.items()) m[k] = GroupStats::parse(v, "group_statistics." + k);
      out.group_statistics = std::move(m);
    }
    if (j.contains("variables_tested") && !j.at("variables_tested").is_null())
      out.variables_tested = TargetVariables::parse(j.at("variables_tested"), "variables_tested");
    out.events_observed = detail::opt_number(j, "events_observed", "");
    out.extras = detail::take_extras(
        j, {"analysis_type", "test_performed", "p_value", "effect_size", "effect_size_type",
            "ci_95", "n_total", "sample_sizes", "group_statistics", "variables_tested",
            "events_observed"});
    return out;
  }

  json to_json() const {
    json j = extras;
    if (analysis_type) j["analysis_type"] = to_string(*analysis_type);
    if (test_performed) j["test_performed"] = *test_performed;
    if (p_value) j["p_value"] = *p_value;
    if (effect_size) j["effect_size"] = *effect_size;
    if (effect_size_type) j["effect_size_type"] = *effect_size_type;
    if (ci_95) j["ci_95"] = {ci_95->first, ci_95->second};
    if (n_total) j["n_total"] = detail::count_json(*n_total);
    if (!sample_sizes.empty()) j["sample_sizes"] = detail::number_map_json(sample_sizes, true);
    if (group_statistics) {
      json gs = json::object();
      for (const auto& [k, v] : *group_statistics) gs[k] = v.to_json();
      j["group_statistics"] = gs;
    }
    if (variables_tested) j["variables_tested"] = variables_tested->to_json();
    if (events_observed) j["events_observed"] = detail::count_json(*events_observed);
    return j;
  }
};

// ---------------------------------------------------------------------------
// FinalVerdict

struct FinalVerdict {
  Verdict verdict = Verdict::inconclusive;
  std::optional<EvidenceLabel> evidence_label;
  std::optional<double> p_value;
  std::optional<double> effect_size;
  std::optional<std::string> test_used;
  std::map<std::string, double> sample_sizes;
  std::optional<std::string> confidence;  // high | medium | low
  std::string reasoning;
  json extras = json::object();

  static FinalVerdict parse(const json& j) {
    FinalVerdict out;
    out.verdict = verdict_from_string(
        detail::as_string(detail::require_key(j, "verdict", ""), "verdict"));
    if (const auto l = detail::opt_string(j, "evidence_label", ""))
      out.evidence_label = evidence_label_from_string(*l);
    out.p_value = detail::opt_number(j, "p_value", "");
    out.effect_size = detail::opt_number(j, "effect_size", "");
    out.test_used = detail::opt_string(j, "test_used", "");
    out.sample_sizes = detail::opt_number_map(j, "sample_sizes", "");
    if (const auto c = detail::opt_string(j, "confidence", "")) {
      std::string lc;
      for (char ch : *c)
        lc.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
      if (lc != "high" && lc != "medium" && lc != "low")
        throw SchemaError("confidence: unknown value '" + *c + "'");
      out.confidence = lc;
    }
    out.reasoning = detail::opt_string(j, "reasoning", "").value_or("");
    out.extras = detail::take_extras(j, {"verdict", "evidence_label", "p_value", "effect_size",
                                         "test_used", "sample_sizes", "confidence", "reasoning"});
    return out;
  }

  json to_json() const {
    json j = extras;
    j["verdict"] = to_string(verdict);
    if (evidence_label) j["evidence_label"] = to_upper_string(*evidence_label);
    if (p_value) j["p_value"] = *p_value;
    if (effect_size) j["effect_size"] = *effect_size;
    if (test_used) j["test_used"] = *test_used;
    if (!sample_sizes.empty()) j["sample_sizes"] = detail::number_map_json(sample_sizes, true);
    if (confidence) j["confidence"] = *confidence;
    if (!reasoning.empty()) j["reasoning"] = reasoning;
    return j;
  }
};

// ---------------------------------------------------------------------------
// Hypothesis bank

struct RestrictTo {
  std::string field;
  json value;  // equality predicate on a metadata field
};

struct GroundTruthBlock {
  EvidenceLabel label = EvidenceLabel::invalid;
  std::optional<double> p_value;
  std::optional<double> effect_size;
  std::optional<std::string> effect_size_type;
  std::map<std::string, double> sample_sizes;
  std::optional<double> power_at_sesoi;
  std::vector<std::string> missing_requirements;  // set when label is Invalid
  json extras = json::object();

  static GroundTruthBlock parse(const json& j, const std::string& path) {
    GroundTruthBlock out;
    out.label = evidence_label_from_string(detail::as_string(
        detail::require_key(j, "label", path), detail::joined(path, "label")));
    out.p_value = detail::opt_number(j, "p_value", path);
    out.effect_size = detail::opt_number(j, "effect_size", path);
    out.effect_size_type = detail::opt_string(j, "effect_size_type", path);
    out.sample_sizes = detail::opt_number_map(j, "sample_sizes", path);
    out.power_at_sesoi = detail::opt_number(j, "power_at_sesoi", path);
    out.missing_requirements = detail::opt_string_list(j, "missing_requirements", path);
    out.extras = detail::take_extras(j, {"label", "p_value", "effect_size", "effect_size_type",
                                         "sample_sizes", "power_at_sesoi",
                                         "missing_requirements"});
    return out;
  }

  json to_json() const {
    json j = extras;
    j["label"] = to_string(label);
    if (p_value) j["p_value"] = *p_value;
    if (effect_size) j["effect_size"] = *effect_size;
    if (effect_size_type) j["effect_size_type"] = *effect_size_type;
    if (!sample_sizes.empty()) j["sample_sizes"] = detail::number_map_json(sample_sizes, true);
    if (power_at_sesoi) j["power_at_sesoi"] = *power_at_sesoi;
    if (!missing_requirements.empty()) j["missing_requirements"] = missing_requirements;
    return j;
  }
};

struct HypothesisRecord {
  std::string id;
  std::string text;
  Tier tier = Tier::L1;
  ControlType control_type = ControlType::positive;
  std::string dataset;
  AnalysisType analysis_type = AnalysisType::group_difference;
  std::vector<std::string> groups;
  std::optional<RestrictTo> restrict_to;
  std::string metric;
  std::vector<std::string> predictors;
  std::vector<AdjustTerm> adjust_for;
  SesoiProfile sesoi_profile = SesoiProfile::standard;
  std::optional<DirectionClaim> direction;
  std::optional<GroundTruthBlock> ground_truth;
  json extras = json::object();

  static HypothesisRecord parse(const json& j, const std::string& path) {
    HypothesisRecord out;
    const auto str = [&](const char* key) {
      return detail::as_string(detail::require_key(j, key, path), detail::joined(path, key));
    };
    out.id = str("id");
    out.text = str("text");
    out.tier = tier_from_string(str("tier"));
    out.control_type = control_type_from_string(str("control_type"));
    out.dataset = str("dataset");
    out.analysis_type = analysis_type_from_string(str("analysis_type"));
    out.groups = detail::as_string_list(detail::require_key(j, "groups", path),
                                        detail::joined(path, "groups"));
    out.metric = str("metric");
    out.sesoi_profile = sesoi_profile_from_string(str("sesoi_profile"));
    if (j.contains("restrict_to") && !j.at("restrict_to").is_null()) {
      const json& r = j.at("restrict_to");
      const std::string rpath = detail::joined(path, "restrict_to");
      RestrictTo rt;
      rt.field = detail::as_string(detail::require_key(r, "field", rpath), rpath + ".field");
      rt.value = detail::require_key(r, "value", rpath);
      out.restrict_to = std::move(rt);
    }
    out.predictors = detail::opt_string_list(j, "predictors", path);
    out.adjust_for = detail::parse_adjust_for(j, path);
    if (const auto d = detail::opt_string(j, "direction", path))
      out.direction = direction_claim_from_string(*d);
    if (j.contains("ground_truth") && !j.at("ground_truth").is_null())
      out.ground_truth =
          GroundTruthBlock::parse(j.at("ground_truth"), detail::joined(path, "ground_truth"));
    out.extras = detail::take_extras(
        j, {"id", "text", "tier", "control_type", "dataset", "analysis_type", "groups",
            "restrict_to", "metric", "predictors", "adjust_for", "sesoi_profile", "direction",
            "ground_truth"});
    out.check_invariants(path);
    return out;
  }

  void check_invariants(const std::string& path) const {
    const bool l0 = tier == Tier::L0;
    const bool untestable = control_type == ControlType::untestable;
    if (l0 != untestable)
      throw SchemaError(detail::joined(path, "control_type") +
                        ": tier L0 and control_type untestable must coincide");
    if (ground_truth && (ground_truth->label == EvidenceLabel::invalid) != l0)
      throw SchemaError(detail::joined(path, "ground_truth.label") +
                        ": Invalid if and only if tier is L0");
    if (groups.size() > 1)
      for (const auto& g : groups)
        if (g == kAllGroups)
          throw SchemaError(detail::joined(path, "groups") +
                            ": reserved token ALL must stand alone");
    if (direction) {
      const bool group_claim = *direction == DirectionClaim::group1_higher ||
                               *direction == DirectionClaim::group1_lower;
      if (group_claim && analysis_type != AnalysisType::group_difference)
        throw SchemaError(detail::joined(path, "direction") +
                          ": group claims only fit group_difference hypotheses");
      if (!group_claim && *direction != DirectionClaim::any_association &&
          analysis_type == AnalysisType::group_difference)
        throw SchemaError(detail::joined(path, "direction") +
                          ": association claims do not fit group_difference hypotheses");
    }
  }

  json to_json() const {
    json j = extras;
    j["id"] = id;
    j["text"] = text;
    j["tier"] = to_string(tier);
    j["control_type"] = to_string(control_type);
    j["dataset"] = dataset;
    j["analysis_type"] = to_string(analysis_type);
    j["groups"] = groups;
    if (restrict_to) j["restrict_to"] = {{"field", restrict_to->field}, {"value", restrict_to->value}};
    j["metric"] = metric;
    if (!predictors.empty()) j["predictors"] = predictors;
    if (!adjust_for.empty()) j["adjust_for"] = detail::adjust_for_json(adjust_for);
    j["sesoi_profile"] = to_string(sesoi_profile);
    if (direction) j["direction"] = to_string(*direction);
    if (ground_truth) j["ground_truth"] = ground_truth->to_json();
    return j;
  }
};

// ---------------------------------------------------------------------------
// Run record: one benchmark run assembled from its artifact directory.

struct RunRecord {
  std::string run_id;
  std::string hypothesis_id;
  std::optional<AnalysisPlan> plan;
  std::optional<StatisticalResults> results;
  std::optional<FinalVerdict> verdict;
  std::optional<std::string> analysis_code;
  bool completed = false;  // verdict present

  json to_json() const {
    json j = json::object();
    j["run_id"] = run_id;
    j["hypothesis_id"] = hypothesis_id;
    j["completed"] = completed;
    if (plan) j["plan"] = plan->to_json();
    if (results) j["results"] = results->to_json();
    if (verdict) j["verdict"] = verdict->to_json();
    if (analysis_code) j["analysis_code"] = *analysis_code;
    return j;
  }
};

// run_id "cardiac_02__r1" belongs to hypothesis "cardiac_02".
inline std::string hypothesis_id_from_run_id(const std::string& run_id) {
  const auto pos = run_id.rfind("__");
  if (pos == std::string::npos || pos == 0) return run_id;
  return run_id.substr(0, pos);
}

// ---------------------------------------------------------------------------
// Files

namespace detail {

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw SchemaError(path.filename().string() + ": invalid JSON: " + e.what());
  }
  return j;
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << "\n";
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace detail

inline AnalysisPlan load_plan(const std::filesystem::path& path) {
  return AnalysisPlan::parse(detail::read_json_file(path));
}

inline StatisticalResults load_results(const std::filesystem::path& path) {
  return StatisticalResults::parse(detail::read_json_file(path));
}

inline FinalVerdict load_verdict(const std::filesystem::path& path) {
  return FinalVerdict::parse(detail::read_json_file(path));
}

inline std::vector<HypothesisRecord> load_hypothesis_bank(const std::filesystem::path& path) {
  const json j = detail::read_json_file(path);
  const json* arr = &j;
  if (j.is_object()) {
    const auto it = j.find("hypotheses");
    if (it == j.end()) throw SchemaError("hypotheses");
    arr = &*it;
  }
  if (!arr->is_array()) throw SchemaError("hypotheses: not a list");
  std::vector<HypothesisRecord> out;
  for (std::size_t i = 0; i < arr->size(); ++i)
    out.push_back(HypothesisRecord::parse((*arr)[i], "hypotheses[" + std::to_string(i) + "]"));
  return out;
}

inline void save_plan(const AnalysisPlan& plan, const std::filesystem::path& path) {
  detail::write_json_file(path, plan.to_json());
}

inline void save_results(const StatisticalResults& results, const std::filesystem::path& path) {
  detail::write_json_file(path, results.to_json());
}

inline void save_verdict(const FinalVerdict& verdict, const std::filesystem::path& path) {
  detail::write_json_file(path, verdict.to_json());
}

inline void save_hypothesis_bank(const std::vector<HypothesisRecord>& bank,
                                 const std::filesystem::path& path) {
  json arr = json::array();
  for (const auto& h : bank) arr.push_back(h.to_json());
  detail::write_json_file(path, json{{"hypotheses", arr}});
}

// A run directory holds analysis_plan.json, statistical_results.json,
// final_verdict.json, and analysis_code.py, any of which may be missing.
// An optional run.json carries explicit ids; otherwise the directory name is
// the run id and the hypothesis id is the run id minus its replicate suffix.
inline RunRecord load_run_dir(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError("not a run directory: " + dir.string());
  RunRecord run;
  run.run_id = dir.filename().string();
  run.hypothesis_id = hypothesis_id_from_run_id(run.run_id);
  const fs::path meta = dir / "run.json";
  if (fs::exists(meta)) {
    const json j = detail::read_json_file(meta);
    if (const auto r = detail::opt_string(j, "run_id", "run")) run.run_id = *r;
    if (const auto h = detail::opt_string(j, "hypothesis_id", "run")) run.hypothesis_id = *h;
  }
  if (fs::exists(dir / "analysis_plan.json")) run.plan = load_plan(dir / "analysis_plan.json");
  if (fs::exists(dir / "statistical_results.json"))
    run.results = load_results(dir / "statistical_results.json");
  if (fs::exists(dir / "final_verdict.json"))
    run.verdict = load_verdict(dir / "final_verdict.json");
  if (fs::exists(dir / "analysis_code.py"))
    run.analysis_code = detail::read_text_file(dir / "analysis_code.py");
  run.completed = run.verdict.has_value();
  return run;
}

inline void save_run_dir(const RunRecord& run, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  if (run.plan) save_plan(*run.plan, dir / "analysis_plan.json");
  if (run.results) save_results(*run.results, dir / "statistical_results.json");
  if (run.verdict) save_verdict(*run.verdict, dir / "final_verdict.json");
  if (run.analysis_code) {
    std::ofstream out(dir / "analysis_code.py", std::ios::binary);
    if (!out) throw IoError("cannot write analysis_code.py in " + dir.string());
    out << *run.analysis_code;
  }
}

// ---------------------------------------------------------------------------
// Kind-dispatched variant interface

enum class ArtifactKind { plan, results, verdict, hypothesis_bank, run_record };

using Artifact = std::variant<AnalysisPlan, StatisticalResults, FinalVerdict,
                              std::vector<HypothesisRecord>, RunRecord>;

inline Artifact load_artifact(const std::filesystem::path& path, ArtifactKind kind) {
  switch (kind) {
    case ArtifactKind::plan: return load_plan(path);
    case ArtifactKind::results: return load_results(path);
    case ArtifactKind::verdict: return load_verdict(path);
    case ArtifactKind::hypothesis_bank: return load_hypothesis_bank(path);
    case ArtifactKind::run_record: return load_run_dir(path);
  }
  throw DomainError("unknown artifact kind");
}

inline void save_artifact(const Artifact& artifact, const std::filesystem::path& path) {
  std::visit(
      [&](const auto& a) {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, AnalysisPlan>) save_plan(a, path);
        else if constexpr (std::is_same_v<T, StatisticalResults>) save_results(a, path);
        else if constexpr (std::is_same_v<T, FinalVerdict>) save_verdict(a, path);
        else if constexpr (std::is_same_v<T, std::vector<HypothesisRecord>>)
          save_hypothesis_bank(a, path);
        else save_run_dir(a, path);
      },
      artifact);
}

inline bool operator==(const Feasibility& a, const Feasibility& b) {
  return a.to_json() == b.to_json();
}
inline bool operator==(const AnalysisPlan& a, const AnalysisPlan& b) {
  return a.to_json() == b.to_json();
}
inline bool operator==(const StatisticalResults& a, const StatisticalResults& b) {
  return a.to_json() == b.to_json();
}
inline bool operator==(const FinalVerdict& a, const FinalVerdict& b) {
  return a.to_json() == b.to_json();
}
inline bool operator==(const GroundTruthBlock& a, const GroundTruthBlock& b) {
  return a.to_json() == b.to_json();
}
inline bool operator==(const HypothesisRecord& a, const HypothesisRecord& b) {
  return a.to_json() == b.to_json();
}
inline bool operator==(const RunRecord& a, const RunRecord& b) {
  return a.to_json() == b.to_json();
}

}  // namespace evistat::model
