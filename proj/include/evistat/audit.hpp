#pragma once

// Programmatic validity checks over artifacts, auditability criteria over a
// run's provenance trail, and static diagnostics over analysis code.
//
// All validators report findings rather than throw: a malformed value is a
// result to audit, not an exceptional state.  passed ⟺ no blocking finding.

#include <cmath>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "evistat/artifacts.hpp"
#include "evistat/eco.hpp"
#include "evistat/errors.hpp"

namespace evistat::audit {

enum class Severity { blocking, warning };

inline std::string to_string(Severity s) {
  return s == Severity::blocking ? "blocking" : "warning";
}

struct Finding {
  std::string code;
  Severity severity = Severity::blocking;
  std::string path;
  std::string message;
};

struct ValidationReport {
  std::vector<Finding> findings;
  bool passed = true;  // no blocking finding

  void add(std::string code, Severity severity, std::string path, std::string message) {
    if (severity == Severity::blocking) passed = false;
    findings.push_back({std::move(code), severity, std::move(path), std::move(message)});
  }

  bool has(const std::string& code) const {
    for (const auto& f : findings)
      if (f.code == code) return true;
    return false;
  }
};

inline nlohmann::json to_json(const ValidationReport& report) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& f : report.findings)
    arr.push_back({{"code", f.code},
                   {"severity", to_string(f.severity)},
                   {"path", f.path},
                   {"message", f.message}});
  return {{"findings", arr}, {"passed", report.passed}};
}

// ---------------------------------------------------------------------------
// Plan validation against the dataset registry

struct DatasetRegistry {
  std::vector<std::string> groups;
  std::vector<std::string> structures;
  std::vector<std::string> observations;
  std::vector<std::string> metadata_fields;

  bool empty() const {
    return groups.empty() && structures.empty() && observations.empty() &&
           metadata_fields.empty();
  }
};

inline DatasetRegistry load_dataset_registry(const std::filesystem::path& path) {
  const nlohmann::json j = model::detail::read_json_file(path);
  DatasetRegistry reg;
  reg.groups = model::detail::opt_string_list(j, "groups", "");
  reg.structures = model::detail::opt_string_list(j, "structures", "");
  reg.observations = model::detail::opt_string_list(j, "observations", "");
  reg.metadata_fields = model::detail::opt_string_list(j, "metadata_fields", "");
  return reg;
}

namespace detail {

inline bool contains(const std::vector<std::string>& xs, const std::string& x) {
  for (const auto& v : xs)
    if (v == x) return true;
  return false;
}

}  // namespace detail

inline ValidationReport validate_plan(const model::AnalysisPlan& plan,
                                      const DatasetRegistry& registry) {
  if (registry.empty()) throw InvalidSpec("validate_plan: empty dataset registry");
  ValidationReport report;

  if (plan.feasibility.status == model::FeasibilityStatus::untestable) {
    if (!plan.feasibility.invalid_subtype)
      report.add("FEASIBILITY_MISSING_SUBTYPE", Severity::blocking, "feasibility.invalid_subtype",
                 "status UNTESTABLE requires an invalid_subtype");
    // A well-formed untestable plan is a valid early stop; the testable
    // contract keys do not apply to it.
    return report;
  }

  for (std::size_t i = 0; i < plan.groups.size(); ++i) {
    const auto& g = plan.groups[i];
    if (g == "ALL") continue;  // pooled pseudo-group, always resolvable
    if (!detail::contains(registry.groups, g))
      report.add("GROUP_UNKNOWN", Severity::blocking, "groups[" + std::to_string(i) + "]",
                 "group '" + g + "' is not in the dataset");
  }
  for (std::size_t i = 0; i < plan.structures.size(); ++i) {
    const auto& s = plan.structures[i];
    if (!detail::contains(registry.structures, s))
      report.add("STRUCTURE_UNKNOWN", Severity::blocking, "structures[" + std::to_string(i) + "]",
                 "structure '" + s + "' is not in the dataset");
  }
  for (std::size_t i = 0; i < plan.observations.size(); ++i) {
    const auto& o = plan.observations[i];
    if (detail::contains(registry.metadata_fields, o))
      report.add("OBSERVATION_IS_METADATA", Severity::blocking,
                 "observations[" + std::to_string(i) + "]",
                 "'" + o + "' is a metadata field, not an observation");
    else if (!detail::contains(registry.observations, o))
      report.add("OBSERVATION_UNKNOWN", Severity::blocking,
                 "observations[" + std::to_string(i) + "]",
                 "observation '" + o + "' is not in the dataset");
  }

  const auto require_nonempty = [&](bool present, const char* key) {
    if (!present)
      report.add("PLAN_MISSING_FIELD", Severity::blocking, key,
                 std::string("testable plan must specify ") + key);
  };
  require_nonempty(!plan.groups.empty(), "groups");
  require_nonempty(!plan.structures.empty(), "structures");
  require_nonempty(!plan.observations.empty(), "observations");
  require_nonempty(!plan.metrics.empty(), "metrics");
  require_nonempty(!plan.statistical_test.empty(), "statistical_test");
  require_nonempty(plan.analysis_type.has_value(), "analysis_type");
  return report;
}

// ---------------------------------------------------------------------------
// Results validation

inline ValidationReport validate_results(const model::StatisticalResults& results,
                                         const model::AnalysisPlan& plan,
                                         const eco::DirectionSpec& direction,
                                         const model::FinalVerdict* verdict = nullptr,
                                         double alpha = 0.05) {
  ValidationReport report;

  // 1. Feasibility fields.
  if (plan.feasibility.status == model::FeasibilityStatus::untestable &&
      !plan.feasibility.invalid_subtype)
    report.add("FEASIBILITY_MISSING_SUBTYPE", Severity::blocking, "feasibility.invalid_subtype",
               "status UNTESTABLE requires an invalid_subtype");

  // 2. Numeric ranges.
  if (results.p_value) {
    const double p = *results.p_value;
    if (!std::isfinite(p) || p < 0.0 || p > 1.0)
      report.add("NUMERIC_OUT_OF_RANGE", Severity::blocking, "p_value",
                 "p-value must lie in [0, 1]");
  }
  if (results.effect_size && !std::isfinite(*results.effect_size))
    report.add("NUMERIC_OUT_OF_RANGE", Severity::blocking, "effect_size",
               "effect size must be finite");

  // 3. Confidence-interval consistency.
  if (results.ci_95) {
    const auto [lo, hi] = *results.ci_95;
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi)
      report.add("CI_INCONSISTENT", Severity::blocking, "ci_95", "interval bounds not ordered");
    else if (results.effect_size && std::isfinite(*results.effect_size) &&
             (*results.effect_size < lo || *results.effect_size > hi))
      report.add("CI_INCONSISTENT", Severity::blocking, "ci_95",
                 "effect size lies outside its own interval");
  }

  // 4. Sign consistency: group-difference effects whose sign is defined by the
  // two group means.  Hazard ratios and correlations carry their own sign
  // semantics and are exempt.
  if (results.effect_size && std::isfinite(*results.effect_size) && results.effect_size_type &&
      results.group_statistics) {
    const std::string type = evistat::detail::lower(*results.effect_size_type);
    if (type == "cohens_d" || type == "rank_biserial") {
      std::optional<std::string> g1 = direction.group1, g2 = direction.group2;
      if ((!g1 || !g2) && plan.groups.size() == 2) {
        g1 = plan.groups[0];
        g2 = plan.groups[1];
      }
      if (g1 && g2) {
        const auto& stats = *results.group_statistics;
        const auto i1 = stats.find(*g1);
        const auto i2 = stats.find(*g2);
        if (i1 != stats.end() && i2 != stats.end() && i1->second.mean && i2->second.mean) {
          const double diff = *i1->second.mean - *i2->second.mean;
          if (diff * *results.effect_size < 0.0)
            report.add("SIGN_INCONSISTENT", Severity::blocking, "effect_size",
                       "effect size sign contradicts the group mean difference");
        }
      }
    }
  }

  // 5. Logic consistency.  Full verdict alignment is an evaluation-time
  // concern; when a verdict is supplied here, only the unambiguous rule is
  // enforced: a YES verdict needs a significant p-value to stand on.
  if (verdict && verdict->verdict == Verdict::yes &&
      (!results.p_value || !(*results.p_value < alpha)))
    report.add("LOGIC_INCONSISTENT", Severity::blocking, "verdict.verdict",
               "YES verdict without a significant p-value");

  // 6. Confound handling per the plan's requirement levels.
  for (const auto& term : plan.adjust_for) {
    if (term.level == Requirement::optional_) continue;
    const bool adjusted = results.variables_tested &&
                          detail::contains(results.variables_tested->predictors, term.variable);
    if (adjusted) continue;
    const auto severity =
        term.level == Requirement::required ? Severity::blocking : Severity::warning;
    report.add("CONFOUND_UNADJUSTED", severity, "variables_tested.predictors",
               "adjustment variable '" + term.variable + "' (" + to_string(term.level) +
                   ") missing from tested predictors");
  }

  // Sample-size bookkeeping.
  if (results.n_total && !results.sample_sizes.empty()) {
    double sum = 0.0;
    for (const auto& [_, n] : results.sample_sizes) sum += n;
    if (std::fabs(sum - *results.n_total) > 1e-9)
      report.add("SAMPLE_SIZE_MISMATCH", Severity::blocking, "n_total",
                 "n_total does not equal the sum of per-group sample sizes");
  }
  return report;
}

// ---------------------------------------------------------------------------
// Static analysis-code diagnostics
//
// Patterns are data, not constants: they ship in a versioned config file so
// the active rule set is auditable.  builtin_pattern_config() mirrors the
// shipped file for callers with no config on disk.

enum class PatternClass { literal_p, synthetic_data };

struct CodePattern {
  std::string pattern_id;
  PatternClass classification = PatternClass::literal_p;
  std::string regex;
  std::vector<std::string> allowlist_contexts;  // regexes marking benign use
};

struct PatternConfig {
  int version = 1;
  std::vector<CodePattern> patterns;
};

inline PatternConfig parse_pattern_config(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("patterns") || !j.at("patterns").is_array())
    throw SchemaError("pattern config: expected object with a patterns list");
  PatternConfig config;
  config.version = j.value("version", 1);
  for (const auto& pj : j.at("patterns")) {
    CodePattern p;
    p.pattern_id = model::detail::as_string(model::detail::require_key(pj, "pattern_id", ""),
                                            "pattern_id");
    const std::string cls = model::detail::as_string(
        model::detail::require_key(pj, "classification", p.pattern_id), "classification");
    if (cls == "literal_p")
      p.classification = PatternClass::literal_p;
    else if (cls == "synthetic_data")
      p.classification = PatternClass::synthetic_data;
    else
      throw SchemaError(p.pattern_id + ": unknown classification '" + cls + "'");
    p.regex = model::detail::as_string(model::detail::require_key(pj, "regex", p.pattern_id),
                                       "regex");
    p.allowlist_contexts = model::detail::opt_string_list(pj, "allowlist_contexts", p.pattern_id);
    try {
      std::regex probe(p.regex, std::regex::ECMAScript | std::regex::icase);
      for (const auto& a : p.allowlist_contexts)
        std::regex aprobe(a, std::regex::ECMAScript | std::regex::icase);
    } catch (const std::regex_error& e) {
      throw SchemaError(p.pattern_id + ": invalid regex: " + e.what());
    }
    config.patterns.push_back(std::move(p));
  }
  return config;
}

inline PatternConfig load_pattern_config(const std::filesystem::path& path) {
  return parse_pattern_config(model::detail::read_json_file(path));
}

inline nlohmann::json to_json(const PatternConfig& config) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : config.patterns)
    arr.push_back(
        {{"pattern_id", p.pattern_id},
         {"classification", p.classification == PatternClass::literal_p ? "literal_p"
                                                                        : "synthetic_data"},
         {"regex", p.regex},
         {"allowlist_contexts", p.allowlist_contexts}});
  return {{"version", config.version}, {"patterns", arr}};
}

// Mirrors config/code_patterns.json; a test pins the two together.
inline const PatternConfig& builtin_pattern_config() {
  static const PatternConfig config = [] {
    PatternConfig c;
    c.version = 1;
    const std::vector<std::string> resampling = {"bootstrap", "resampl", "jitter", "permut",
                                                 "shuffle"};
    c.patterns.push_back(
        {"literal-p-assignment", PatternClass::literal_p,
         R"(^\s*(p|pval|p_val|p_value|pvalue|p_adj|adj_p|pv)\s*=\s*-?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?\s*(#.*)?$)",
         {}});
    c.patterns.push_back(
        {"numpy-random-generator", PatternClass::synthetic_data,
         R"(^\s*\w[\w.\['"\]]*\s*=(?!=).*\b(np|numpy)\.random\.(normal|uniform|rand|randn|randint|exponential|poisson|binomial|lognormal|choice)\s*\()",
         resampling});
    c.patterns.push_back(
        {"generator-object", PatternClass::synthetic_data,
         R"(^\s*\w[\w.\['"\]]*\s*=(?!=).*\brng\.(normal|uniform|random|integers|exponential|poisson|binomial|lognormal|choice)\s*\()",
         resampling});
    // The prefix group keeps bare random.* calls from also matching the
    // numpy pattern's np.random.* hits (ECMAScript regex has no lookbehind).
    c.patterns.push_back(
        {"stdlib-random-generator", PatternClass::synthetic_data,
         R"(^\s*\w[\w.\['"\]]*\s*=(?!=)(.*[^.\w])?random\.(gauss|normalvariate|uniform|random|randint|choice|expovariate|betavariate|sample)\s*\()",
         resampling});
    c.patterns.push_back(
        {"mock-data-call", PatternClass::synthetic_data,
         R"(^\s*\w[\w.\['"\]]*\s*=(?!=).*\b(mock|simulate|synthesize|fabricate|make_fake)\w*\s*\()",
         resampling});
    return c;
  }();
  return config;
}

struct PatternMatch {
  std::string pattern_id;
  int line = 0;  // 1-based
  std::string excerpt;
};

struct CodeDiagnostics {
  bool literal_p_assignment = false;
  bool synthetic_data = false;
  std::vector<std::string> benign_stochastic_warnings;
  std::vector<PatternMatch> matched_patterns;
};

inline nlohmann::json to_json(const CodeDiagnostics& d) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& m : d.matched_patterns)
    arr.push_back({{"pattern_id", m.pattern_id}, {"line", m.line}, {"excerpt", m.excerpt}});
  return {{"literal_p_assignment", d.literal_p_assignment},
          {"synthetic_data", d.synthetic_data},
          {"benign_stochastic_warnings", d.benign_stochastic_warnings},
          {"matched_patterns", arr}};
}

namespace detail {

inline void check_utf8(const std::string& text) {
  std::size_t i = 0;
  const auto fail = [&] { throw DecodeError("analysis code is not valid UTF-8 text"); };
  while (i < text.size()) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    if (c == 0x00) fail();
    std::size_t extra = 0;
    if (c < 0x80)
      extra = 0;
    else if ((c & 0xe0) == 0xc0)
      extra = 1;
    else if ((c & 0xf0) == 0xe0)
      extra = 2;
    else if ((c & 0xf8) == 0xf0)
      extra = 3;
    else
      fail();
    if (i + extra >= text.size() && extra > 0) fail();
    for (std::size_t k = 1; k <= extra; ++k)
      if ((static_cast<unsigned char>(text[i + k]) & 0xc0) != 0x80) fail();
    i += extra + 1;
  }
}

inline std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string current;
  for (char ch : text) {
    if (ch == '\n') {
      if (!current.empty() && current.back() == '\r') current.pop_back();
      lines.push_back(current);
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  if (!current.empty()) lines.push_back(current);
  return lines;
}

inline std::string trim_excerpt(const std::string& line) {
  std::size_t b = 0, e = line.size();
  while (b < e && std::isspace(static_cast<unsigned char>(line[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(line[e - 1]))) --e;
  std::string out = line.substr(b, e - b);
  if (out.size() > 120) out = out.substr(0, 117) + "...";
  return out;
}

}  // namespace detail

// Line-oriented static scan.  A generator hit whose surrounding window (the
// line itself or the five lines above it) names a resampling idiom from the
// pattern's allowlist counts as a benign stochastic warning, not fabrication.
inline CodeDiagnostics scan_analysis_code(const std::string& code,
                                          const PatternConfig& config) {
  detail::check_utf8(code);
  const auto lines = detail::split_lines(code);
  CodeDiagnostics diag;

  for (const auto& pattern : config.patterns) {
    const std::regex re(pattern.regex, std::regex::ECMAScript | std::regex::icase);
    std::vector<std::regex> allow;
    allow.reserve(pattern.allowlist_contexts.size());
    for (const auto& a : pattern.allowlist_contexts)
      allow.emplace_back(a, std::regex::ECMAScript | std::regex::icase);

    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (!std::regex_search(lines[i], re)) continue;
      const int lineno = static_cast<int>(i) + 1;
      diag.matched_patterns.push_back({pattern.pattern_id, lineno,
                                       detail::trim_excerpt(lines[i])});
      if (pattern.classification == PatternClass::literal_p) {
        diag.literal_p_assignment = true;
        continue;
      }
      bool benign = false;
      const std::size_t lo = i >= 5 ? i - 5 : 0;
      for (std::size_t k = lo; k <= i && !benign; ++k)
        for (const auto& a : allow)
          if (std::regex_search(lines[k], a)) {
            benign = true;
            break;
          }
      if (benign)
        diag.benign_stochastic_warnings.push_back(
            pattern.pattern_id + " at line " + std::to_string(lineno) +
            " inside a resampling context");
      else
        diag.synthetic_data = true;
    }
  }
  return diag;
}

// ---------------------------------------------------------------------------
// Run-level auditability

struct AuditSummary {
  bool grounded = false;        // all four core outputs present and numeric
  bool trail_complete = false;  // plan, results, verdict all present
  std::vector<Finding> findings;
};

inline nlohmann::json to_json(const AuditSummary& a) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& f : a.findings)
    arr.push_back({{"code", f.code},
                   {"severity", to_string(f.severity)},
                   {"path", f.path},
                   {"message", f.message}});
  return {{"grounded", a.grounded}, {"trail_complete", a.trail_complete}, {"findings", arr}};
}

inline AuditSummary audit_run(const model::RunRecord& run) {
  AuditSummary out;
  const auto note = [&](const char* code, std::string path, std::string message) {
    out.findings.push_back({code, Severity::warning, std::move(path), std::move(message)});
  };

  out.trail_complete = run.plan.has_value() && run.results.has_value() && run.verdict.has_value();
  if (!run.plan) note("TRAIL_INCOMPLETE", "plan", "analysis plan missing");
  if (!run.results) note("TRAIL_INCOMPLETE", "results", "statistical results missing");
  if (!run.verdict) note("TRAIL_INCOMPLETE", "verdict", "final verdict missing");

  bool grounded = run.results.has_value();
  if (run.results) {
    const auto& r = *run.results;
    if (!r.test_performed || r.test_performed->empty()) {
      grounded = false;
      note("MISSING_CORE_OUTPUT", "results.test_performed", "statistical test type missing");
    }
    bool sizes_ok = !r.sample_sizes.empty();
    for (const auto& [g, n] : r.sample_sizes)
      if (!std::isfinite(n) || n <= 0.0) sizes_ok = false;
    if (!sizes_ok) {
      grounded = false;
      note("MISSING_CORE_OUTPUT", "results.sample_sizes",
           "per-group sample sizes missing or non-numeric");
    }
    if (!r.effect_size || !std::isfinite(*r.effect_size)) {
      grounded = false;
      note("MISSING_CORE_OUTPUT", "results.effect_size", "effect size missing or non-numeric");
    }
    if (!r.p_value || !std::isfinite(*r.p_value)) {
      grounded = false;
      note("MISSING_CORE_OUTPUT", "results.p_value", "p-value missing or non-numeric");
    }
  } else {
    grounded = false;
  }
  out.grounded = grounded;
  return out;
}

}  // namespace evistat::audit
