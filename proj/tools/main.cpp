// evistat command-line front end.
//
// One subcommand per pipeline stage so the whole flow can be driven from a
// shell: gen-cohort -> oracle -> (agents produce run dirs) -> evaluate, with
// test / power / classify / measure / validate / audit-code as desk tools.
//
// Exit codes: 0 success, 1 blocking validation findings, 2 usage error,
// 3 runtime failure (unreadable file, bad data, internal error).

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "evistat/artifacts.hpp"
#include "evistat/audit.hpp"
#include "evistat/cohort.hpp"
#include "evistat/eco.hpp"
#include "evistat/errors.hpp"
#include "evistat/evaluation.hpp"
#include "evistat/measurements.hpp"
#include "evistat/oracle.hpp"
#include "evistat/power.hpp"
#include "evistat/types.hpp"

namespace {

using namespace evistat;
using nlohmann::json;

constexpr const char* kPatternEnv = "EVISTAT_PATTERNS";

// Text mode prints six significant digits; JSON mode keeps full precision.
std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

int usage_error(const std::string& msg) {
  std::cerr << "usage error: " << msg << "\n";
  return 2;
}

std::pair<std::string, std::string> split_kv(const std::string& s, const std::string& what) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0)
    throw SchemaError(what + ": expected key=value, got '" + s + "'");
  return {s.substr(0, eq), s.substr(eq + 1)};
}

std::optional<double> try_number(const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos == s.size()) return v;
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

double parse_number(const std::string& s, const std::string& what) {
  if (const auto v = try_number(s)) return *v;
  throw SchemaError(what + ": '" + s + "' is not a number");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Explicit flag beats the environment beats the built-in set.
audit::PatternConfig resolve_patterns(const std::string& flag) {
  if (!flag.empty()) return audit::load_pattern_config(flag);
  if (const char* env = std::getenv(kPatternEnv); env && *env)
    return audit::load_pattern_config(env);
  return audit::builtin_pattern_config();
}

const model::HypothesisRecord& find_hypothesis(const std::vector<model::HypothesisRecord>& bank,
                                               const std::string& id, const std::string& where) {
  for (const auto& h : bank)
    if (h.id == id) return h;
  throw UnknownHypothesis(where + ": no hypothesis '" + id + "' in the bank");
}

json power_inputs_json(const power::PowerInputs& in) {
  json j;
  j["effect_target"] = in.effect_target;
  const auto put = [&](const char* key, const std::optional<double>& v) {
    if (v) j[key] = *v;
  };
  put("n1", in.n1);
  put("n2", in.n2);
  put("n", in.n);
  put("events", in.events);
  put("p1", in.p1);
  put("p2", in.p2);
  put("tested_predictors", in.tested_predictors);
  put("total_predictors", in.total_predictors);
  return j;
}

json power_json(const power::PowerResult& r) {
  json j;
  j["power"] = r.power;
  j["noncentrality"] = r.noncentrality;
  j["alpha"] = r.alpha;
  j["method"] = r.method;
  j["inputs"] = power_inputs_json(r.inputs);
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"statistical evidence toolkit"};
  app.require_subcommand(1);

  // --- power -------------------------------------------------------------
  struct {
    std::string family;
    double d0 = 0.0, r0 = 0.0, hr0 = 0.0, f2 = 0.15, p1 = 0.5, p2 = 0.5, alpha = 0.05;
    std::size_t n1 = 0, n2 = 0, n = 0, events = 0, tested = 0, total = 0;
    bool as_json = false;
  } pw;
  auto* power_cmd = app.add_subcommand("power", "power to detect a target effect");
  power_cmd->add_option("--family", pw.family, "analysis family")
      ->required()
      ->check(CLI::IsMember({"group_difference", "correlation", "survival", "regression"}));
  power_cmd->add_option("--d0", pw.d0, "standardized mean difference target");
  power_cmd->add_option("--n1", pw.n1, "group 1 size");
  power_cmd->add_option("--n2", pw.n2, "group 2 size");
  power_cmd->add_option("--r0", pw.r0, "correlation target");
  power_cmd->add_option("--n", pw.n, "sample size");
  power_cmd->add_option("--hr0", pw.hr0, "hazard ratio target");
  power_cmd->add_option("--events", pw.events, "observed event count");
  power_cmd->add_option("--p1", pw.p1, "group 1 allocation fraction");
  power_cmd->add_option("--p2", pw.p2, "group 2 allocation fraction");
  power_cmd->add_option("--f2", pw.f2, "Cohen's f-squared target");
  power_cmd->add_option("--tested", pw.tested, "predictors under test");
  power_cmd->add_option("--total", pw.total, "predictors in the full model");
  power_cmd->add_option("--alpha", pw.alpha, "significance level");
  power_cmd->add_flag("--json", pw.as_json, "emit the full result as JSON");

  // --- classify ------------------------------------------------------------
  struct {
    std::string results, bank, id;
    double alpha = 0.05, threshold = eco::kDefaultPowerThreshold;
    bool as_json = false;
  } cl;
  auto* classify_cmd = app.add_subcommand("classify", "evidence label for a results artifact");
  classify_cmd->add_option("--results", cl.results, "statistical results JSON")->required();
  classify_cmd->add_option("--bank", cl.bank, "hypothesis bank JSON")->required();
  classify_cmd->add_option("--id", cl.id, "hypothesis id")->required();
  classify_cmd->add_option("--alpha", cl.alpha, "significance level");
  classify_cmd->add_option("--power-threshold", cl.threshold, "adequate-power cutoff");
  classify_cmd->add_flag("--json", cl.as_json, "emit label and rationale as JSON");

  // --- measure -------------------------------------------------------------
  struct {
    std::string mask, metric = "volume_ml";
    double density = 1.05;
    std::vector<std::string> inputs, params;
    bool as_json = false;
  } me;
  auto* measure_cmd = app.add_subcommand("measure", "mask or derived imaging metric");
  measure_cmd->add_option("--mask", me.mask, "segmentation mask file");
  measure_cmd->add_option("--metric", me.metric, "metric name");
  measure_cmd->add_option("--density", me.density, "tissue density for mass (g/ml)");
  measure_cmd->add_option("--input", me.inputs, "derived-metric input key=value")
      ->take_all();
  measure_cmd->add_option("--param", me.params, "derived-metric parameter key=value")
      ->take_all();
  measure_cmd->add_flag("--json", me.as_json, "emit metric and value as JSON");

  // --- test ----------------------------------------------------------------
  struct {
    std::string table, procedure, metric, out, restrict;
    std::vector<std::string> groups, predictors, adjust;
    double alpha = 0.05;
    std::size_t bootstrap = 2000;
  } ts;
  auto* test_cmd = app.add_subcommand("test", "run a procedure against a measurement table");
  test_cmd->add_option("--table", ts.table, "measurement table CSV")->required();
  test_cmd->add_option("--procedure", ts.procedure, "statistical procedure")
      ->required()
      ->check(CLI::IsMember({"mann_whitney", "spearman", "log_rank", "cox_ph", "ols"}));
  test_cmd->add_option("--metric", ts.metric, "outcome measurement");
  test_cmd->add_option("--groups", ts.groups, "comma-separated group names")->delimiter(',');
  test_cmd->add_option("--predictors", ts.predictors, "comma-separated predictors")->delimiter(',');
  test_cmd->add_option("--adjust", ts.adjust, "comma-separated adjustment covariates")
      ->delimiter(',');
  test_cmd->add_option("--restrict", ts.restrict, "row filter field=value");
  test_cmd->add_option("--alpha", ts.alpha, "significance level");
  test_cmd->add_option("--bootstrap", ts.bootstrap, "bootstrap replicates for effect CIs");
  test_cmd->add_option("--out", ts.out, "also save the results artifact here");

  // --- validate ------------------------------------------------------------
  struct {
    std::string plan, registry, results, verdict, bank, id;
    double alpha = 0.05;
  } va;
  auto* validate_cmd = app.add_subcommand("validate", "check plan and results artifacts");
  validate_cmd->add_option("--plan", va.plan, "analysis plan JSON")->required();
  validate_cmd->add_option("--registry", va.registry, "dataset registry JSON")->required();
  validate_cmd->add_option("--results", va.results, "statistical results JSON");
  validate_cmd->add_option("--verdict", va.verdict, "final verdict JSON");
  validate_cmd->add_option("--bank", va.bank, "hypothesis bank (for the direction claim)");
  validate_cmd->add_option("--id", va.id, "hypothesis id within --bank");
  validate_cmd->add_option("--alpha", va.alpha, "significance level");

  // --- audit-code ------------------------------------------------------
  struct {
    std::string code, patterns;
  } au;
  auto* audit_cmd = app.add_subcommand("audit-code", "scan analysis code for red flags");
  audit_cmd->add_option("--code", au.code, "analysis source file")->required();
  audit_cmd->add_option("--patterns", au.patterns,
                        std::string("pattern config JSON (default: $") + kPatternEnv + ")");

  // --- oracle ----------------------------------------------------------
  struct {
    std::string bank, cohort_spec, table, out;
    double alpha = 0.05, threshold = eco::kDefaultPowerThreshold;
    std::size_t bootstrap = 2000;
  } oc;
  auto* oracle_cmd = app.add_subcommand("oracle", "annotate a hypothesis bank with ground truth");
  oracle_cmd->add_option("--bank", oc.bank, "hypothesis bank JSON")->required();
  oracle_cmd->add_option("--cohort-spec", oc.cohort_spec, "generator spec JSON");
  oracle_cmd->add_option("--table", oc.table, "existing measurement table CSV");
  oracle_cmd->add_option("--out", oc.out, "output bank path (default: overwrite --bank)");
  oracle_cmd->add_option("--alpha", oc.alpha, "significance level");
  oracle_cmd->add_option("--power-threshold", oc.threshold, "adequate-power cutoff");
  oracle_cmd->add_option("--bootstrap", oc.bootstrap, "bootstrap replicates for effect CIs");

  // --- gen-cohort ------------------------------------------------------
  struct {
    std::string spec, out;
  } gc;
  auto* gen_cmd = app.add_subcommand("gen-cohort", "generate a synthetic cohort table");
  gen_cmd->add_option("--spec", gc.spec, "generator spec JSON")->required();
  gen_cmd->add_option("--out", gc.out, "output table CSV")->required();

  // --- evaluate --------------------------------------------------------
  struct {
    std::string runs, bank, patterns, format = "text", scores;
    double alpha = 0.05, threshold = eco::kDefaultPowerThreshold;
  } ev;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "score run artifacts against a bank");
  evaluate_cmd->add_option("--runs", ev.runs, "directory of run subdirectories")->required();
  evaluate_cmd->add_option("--bank", ev.bank, "annotated hypothesis bank JSON")->required();
  evaluate_cmd->add_option("--alpha", ev.alpha, "significance level");
  evaluate_cmd->add_option("--power-threshold", ev.threshold, "adequate-power cutoff");
  evaluate_cmd->add_option("--patterns", ev.patterns,
                           std::string("pattern config JSON (default: $") + kPatternEnv + ")");
  evaluate_cmd->add_option("--format", ev.format, "report format")
      ->check(CLI::IsMember({"text", "json"}));
  evaluate_cmd->add_option("--scores", ev.scores, "also write per-run scores JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*power_cmd) {
      const AnalysisType family = analysis_type_from_string(pw.family);
      power::PowerResult res;
      switch (family) {
        case AnalysisType::group_difference:
          if (!power_cmd->count("--d0") || !power_cmd->count("--n1") || !power_cmd->count("--n2"))
            return usage_error("power --family group_difference needs --d0 --n1 --n2");
          res = power::power_two_sample(pw.d0, pw.n1, pw.n2, pw.alpha);
          break;
        case AnalysisType::correlation:
          if (!power_cmd->count("--r0") || !power_cmd->count("--n"))
            return usage_error("power --family correlation needs --r0 --n");
          res = power::power_correlation(pw.r0, pw.n, pw.alpha);
          break;
        case AnalysisType::survival:
          if (!power_cmd->count("--hr0") || !power_cmd->count("--events"))
            return usage_error("power --family survival needs --hr0 --events (and optionally --p1 --p2)");
          res = power::power_survival(pw.hr0, pw.events, pw.p1, pw.p2, pw.alpha);
          break;
        case AnalysisType::regression:
          if (!power_cmd->count("--n") || !power_cmd->count("--tested") ||
              !power_cmd->count("--total"))
            return usage_error("power --family regression needs --n --tested --total (and optionally --f2)");
          res = power::power_regression(pw.n, pw.tested, pw.total, pw.f2, pw.alpha);
          break;
      }
      if (pw.as_json)
        print_json(power_json(res));
      else
        std::cout << fmt6(res.power) << "\n";
      return 0;
    }

    if (*classify_cmd) {
      const auto bank = model::load_hypothesis_bank(cl.bank);
      const auto& hyp = find_hypothesis(bank, cl.id, "classify");
      const auto results = model::load_results(cl.results);
      const auto cls = eval::classify_results(results, hyp, cl.alpha, cl.threshold);
      if (cl.as_json) {
        json j;
        j["label"] = to_string(cls.label);
        j["rationale"] = cls.rationale;
        print_json(j);
      } else {
        std::cout << upper(to_string(cls.label)) << "\n";
      }
      return 0;
    }

    if (*measure_cmd) {
      double value = 0.0;
      if (!me.mask.empty()) {
        const auto mask = meas::load_mask(me.mask);
        if (me.metric == "volume_ml")
          value = meas::mask_volume(mask);
        else if (me.metric == "mass_g")
          value = meas::mask_mass(mask, me.density);
        else
          return usage_error("measure --mask supports --metric volume_ml or mass_g");
      } else {
        meas::MetricSpec spec;
        try {
          spec.name = meas::metric_name_from_string(me.metric);
        } catch (const SchemaError& e) {
          return usage_error(e.what());
        }
        if (measure_cmd->count("--density")) spec.parameters["density_g_per_ml"] = me.density;
        for (const auto& p : me.params) {
          const auto [key, raw] = split_kv(p, "--param");
          spec.parameters[key] = parse_number(raw, "--param " + key);
        }
        std::map<std::string, double> inputs;
        for (const auto& p : me.inputs) {
          const auto [key, raw] = split_kv(p, "--input");
          inputs[key] = parse_number(raw, "--input " + key);
        }
        value = meas::derived_metric(spec, inputs);
      }
      if (me.as_json) {
        json j;
        j["metric"] = me.metric;
        j["value"] = value;
        print_json(j);
      } else {
        std::cout << fmt6(value) << "\n";
      }
      return 0;
    }

    if (*test_cmd) {
      model::HypothesisRecord h;
      h.id = "cli";
      h.text = "ad hoc query";
      h.tier = Tier::L1;
      h.dataset = "cli";
      h.direction = DirectionClaim::any_association;
      h.sesoi_profile = SesoiProfile::standard;
      h.groups = ts.groups;
      if (ts.procedure == "mann_whitney") {
        if (ts.metric.empty() || ts.groups.size() != 2)
          return usage_error("test --procedure mann_whitney needs --metric and exactly two --groups");
        h.analysis_type = AnalysisType::group_difference;
        h.metric = ts.metric;
      } else if (ts.procedure == "spearman") {
        if (ts.metric.empty() || ts.predictors.size() != 1)
          return usage_error("test --procedure spearman needs --metric and exactly one predictor");
        h.analysis_type = AnalysisType::correlation;
        h.metric = ts.metric;
        h.predictors = ts.predictors;
      } else if (ts.procedure == "log_rank" || ts.procedure == "cox_ph") {
        if (ts.groups.size() != 2)
          return usage_error("test --procedure " + ts.procedure + " needs exactly two --groups");
        if (ts.procedure == "cox_ph" && ts.adjust.empty())
          return usage_error("test --procedure cox_ph needs --adjust; use log_rank for the plain contrast");
        if (ts.procedure == "log_rank" && !ts.adjust.empty())
          return usage_error("test --procedure log_rank takes no --adjust; use cox_ph");
        h.analysis_type = AnalysisType::survival;
      } else {  // ols
        if (ts.metric.empty() || ts.predictors.empty())
          return usage_error("test --procedure ols needs --metric and --predictors");
        h.analysis_type = AnalysisType::regression;
        h.metric = ts.metric;
        h.predictors = ts.predictors;
      }
      for (const auto& a : ts.adjust) h.adjust_for.push_back({a, Requirement::required});
      if (!ts.restrict.empty()) {
        const auto [field, raw] = split_kv(ts.restrict, "--restrict");
        model::RestrictTo rt;
        rt.field = field;
        if (raw == "true")
          rt.value = true;
        else if (raw == "false")
          rt.value = false;
        else if (const auto num = try_number(raw))
          rt.value = *num;
        else
          rt.value = raw;
        h.restrict_to = rt;
      }
      const auto table = meas::load_measurement_table(ts.table);
      const auto cohort = bench::cohort_from_table(table);
      bench::OracleOptions opt;
      opt.alpha = ts.alpha;
      opt.bootstrap_replicates = ts.bootstrap;
      const auto results = bench::oracle_statistics(h, cohort, opt);
      if (!ts.out.empty()) model::save_results(results, ts.out);
      print_json(results.to_json());
      return 0;
    }

    if (*validate_cmd) {
      const auto plan = model::load_plan(va.plan);
      const auto registry = audit::load_dataset_registry(va.registry);
      audit::ValidationReport report = audit::validate_plan(plan, registry);
      if (!va.results.empty()) {
        const auto results = model::load_results(va.results);
        eco::DirectionSpec spec = eco::direction_spec_for(DirectionClaim::any_association);
        if (!va.bank.empty()) {
          if (va.id.empty()) return usage_error("validate --bank needs --id");
          const auto bank = model::load_hypothesis_bank(va.bank);
          spec = eco::direction_spec_for(find_hypothesis(bank, va.id, "validate"));
        }
        std::optional<model::FinalVerdict> verdict;
        if (!va.verdict.empty()) verdict = model::load_verdict(va.verdict);
        const auto more =
            audit::validate_results(results, plan, spec, verdict ? &*verdict : nullptr, va.alpha);
        for (const auto& f : more.findings) report.findings.push_back(f);
        report.passed = report.passed && more.passed;
      }
      print_json(audit::to_json(report));
      return report.passed ? 0 : 1;
    }

    if (*audit_cmd) {
      const auto config = resolve_patterns(au.patterns);
      print_json(audit::to_json(audit::scan_analysis_code(read_file(au.code), config)));
      return 0;
    }

    if (*oracle_cmd) {
      if (oc.cohort_spec.empty() == oc.table.empty())
        return usage_error("oracle needs exactly one of --cohort-spec or --table");
      auto bank = model::load_hypothesis_bank(oc.bank);
      const bench::Cohort cohort =
          !oc.cohort_spec.empty()
              ? bench::generate_cohort(bench::load_cohort_spec(oc.cohort_spec))
              : bench::cohort_from_table(meas::load_measurement_table(oc.table));
      bench::OracleOptions opt;
      opt.alpha = oc.alpha;
      opt.power_threshold = oc.threshold;
      opt.bootstrap_replicates = oc.bootstrap;
      bench::annotate_bank(bank, cohort, opt);
      const std::string out = oc.out.empty() ? oc.bank : oc.out;
      model::save_hypothesis_bank(bank, out);
      json labels = json::object();
      for (const auto& h : bank)
        if (h.ground_truth) {
          const auto key = to_string(h.ground_truth->label);
          labels[key] = labels.value(key, 0) + 1;
        }
      json j;
      j["hypotheses"] = bank.size();
      j["labels"] = labels;
      j["path"] = out;
      print_json(j);
      return 0;
    }

    if (*gen_cmd) {
      const auto cohort = bench::generate_cohort(bench::load_cohort_spec(gc.spec));
      const auto table = bench::to_measurement_table(cohort);
      meas::save_measurement_table(table, gc.out);
      json j;
      j["rows"] = table.rows.size();
      j["columns"] = table.columns.size();
      j["path"] = gc.out;
      print_json(j);
      return 0;
    }

    if (*evaluate_cmd) {
      const auto bank = model::load_hypothesis_bank(ev.bank);
      std::map<std::string, const model::HypothesisRecord*> by_id;
      for (const auto& h : bank) by_id[h.id] = &h;
      std::vector<std::filesystem::path> dirs;
      for (const auto& entry : std::filesystem::directory_iterator(ev.runs))
        if (entry.is_directory()) dirs.push_back(entry.path());
      std::sort(dirs.begin(), dirs.end());
      const auto config = resolve_patterns(ev.patterns);
      std::vector<eval::RunScore> scores;
      scores.reserve(dirs.size());
      for (const auto& dir : dirs) {
        const auto run = model::load_run_dir(dir);
        const auto it = by_id.find(run.hypothesis_id);
        if (it == by_id.end())
          throw UnknownHypothesis("evaluate: run '" + run.run_id + "' names unknown hypothesis '" +
                                  run.hypothesis_id + "'");
        scores.push_back(eval::score_run(run, *it->second, ev.alpha, ev.threshold, &config));
      }
      if (!ev.scores.empty()) {
        json arr = json::array();
        for (const auto& s : scores) arr.push_back(s.to_json());
        std::ofstream out(ev.scores);
        if (!out) throw IoError("cannot open " + ev.scores + " for writing");
        out << arr.dump(2) << "\n";
      }
      const auto report = eval::aggregate(scores, bank);
      const auto format =
          ev.format == "json" ? eval::ReportFormat::json : eval::ReportFormat::text_table;
      std::cout << eval::emit_report(report, format);
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
