#pragma once

// Seeded synthetic-cohort generation and the in-memory cohort shape the
// oracle tests against.  Generation is bit-reproducible across platforms:
// mt19937_64 has a fixed algorithm and all variates go through our own
// uniform/inverse-CDF transforms, never std::*_distribution.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "evistat/artifacts.hpp"
#include "evistat/distributions.hpp"
#include "evistat/errors.hpp"
#include "evistat/measurements.hpp"

namespace evistat::bench {

struct SurvivalObs {
  double time = 0.0;
  bool event = false;
};

struct CohortRow {
  std::string patient_id;
  std::string group;
  std::map<std::string, std::string> metadata;    // categorical fields
  std::map<std::string, double> measurements;     // all numeric per-patient values
  std::optional<SurvivalObs> survival;
};

struct Cohort {
  std::vector<CohortRow> rows;

  void validate() const {
    std::set<std::string> ids;
    for (const auto& r : rows) {
      if (r.patient_id.empty() || !ids.insert(r.patient_id).second)
        throw DomainError("cohort: patient ids must be unique and nonempty");
      if (r.group.empty()) throw DomainError("cohort: group labels must be nonempty");
    }
  }

  std::vector<std::string> group_labels() const {
    std::vector<std::string> out;
    for (const auto& r : rows)
      if (std::find(out.begin(), out.end(), r.group) == out.end()) out.push_back(r.group);
    return out;
  }
};

// ---------------------------------------------------------------------------
// Generation spec

struct Gaussian {
  double mean = 0.0;
  double sd = 1.0;
};

// Exactly one of constant / choices / numeric.
struct MetadataSpec {
  std::optional<std::string> constant;
  std::vector<std::string> choices;
  std::vector<double> weights;  // optional, parallel to choices
  std::optional<Gaussian> numeric;
};

struct GroupSpec {
  std::string label;
  std::size_t n = 0;
  std::map<std::string, Gaussian> measurements;
  std::map<std::string, MetadataSpec> metadata;
  std::optional<double> hazard_rate;  // events per time unit
};

struct Injection {
  std::string group;
  std::string measurement;         // empty for survival injections
  double shift = 0.0;              // added to the measurement mean
  double hazard_multiplier = 1.0;  // scales the group hazard
};

// target = intercept + sum(coef * source) + N(0, noise_sd), per row.
struct Derivation {
  std::string target;
  std::vector<std::pair<std::string, double>> terms;
  double intercept = 0.0;
  double noise_sd = 0.0;
};

struct CohortGenSpec {
  std::uint64_t seed = 0;
  std::vector<GroupSpec> groups;
  double censoring_rate = 0.0;
  std::vector<Injection> injections;
  std::vector<Derivation> derivations;
};

namespace detail {

// Uniform in (0,1): 53-bit mantissa, zero excluded so inverse CDFs stay finite.
struct Rng {
  std::mt19937_64 g;
  explicit Rng(std::uint64_t seed) : g(seed) {}

  double uniform() {
    double u;
    do {
      u = static_cast<double>(g() >> 11) * 0x1.0p-53;
    } while (u == 0.0);
    return u;
  }
  double normal() { return num::normal_quantile(uniform()); }
  double exponential(double rate) { return -std::log(uniform()) / rate; }
  std::size_t weighted_choice(const std::vector<double>& cumulative) {
    const double u = uniform() * cumulative.back();
    for (std::size_t i = 0; i < cumulative.size(); ++i)
      if (u <= cumulative[i]) return i;
    return cumulative.size() - 1;
  }
};

inline void validate_spec(const CohortGenSpec& spec) {
  if (spec.groups.empty()) throw DomainError("cohort spec: no groups");
  if (!(spec.censoring_rate >= 0.0 && spec.censoring_rate <= 1.0))
    throw DomainError("cohort spec: censoring_rate must lie in [0,1]");
  std::set<std::string> labels;
  for (const auto& g : spec.groups) {
    if (g.label.empty() || !labels.insert(g.label).second)
      throw DomainError("cohort spec: group labels must be unique and nonempty");
    if (g.n < 1) throw DomainError("cohort spec: each group needs n >= 1");
    for (const auto& [name, m] : g.measurements)
      if (!(m.sd >= 0.0) || !std::isfinite(m.mean))
        throw DomainError("cohort spec: bad distribution for " + name);
    if (g.hazard_rate && !(*g.hazard_rate > 0.0))
      throw DomainError("cohort spec: hazard_rate must be positive");
    for (const auto& [name, m] : g.metadata) {
      const int forms = (m.constant ? 1 : 0) + (m.choices.empty() ? 0 : 1) + (m.numeric ? 1 : 0);
      if (forms != 1)
        throw DomainError("cohort spec: metadata '" + name +
                          "' needs exactly one of constant/choices/numeric");
      if (!m.weights.empty() && m.weights.size() != m.choices.size())
        throw DomainError("cohort spec: weights for '" + name + "' do not match choices");
      for (double w : m.weights)
        if (!(w >= 0.0)) throw DomainError("cohort spec: negative weight for '" + name + "'");
    }
  }
  for (const auto& inj : spec.injections) {
    const auto it = std::find_if(spec.groups.begin(), spec.groups.end(),
                                 [&](const GroupSpec& g) { return g.label == inj.group; });
    if (it == spec.groups.end())
      throw DomainError("cohort spec: injection targets unknown group '" + inj.group + "'");
    if (!inj.measurement.empty() && !it->measurements.count(inj.measurement))
      throw DomainError("cohort spec: injection targets unknown measurement '" +
                        inj.measurement + "'");
    if (inj.measurement.empty() && !it->hazard_rate)
      throw DomainError("cohort spec: hazard injection into group without survival");
    if (!(inj.hazard_multiplier > 0.0))
      throw DomainError("cohort spec: hazard_multiplier must be positive");
  }
}

}  // namespace detail

inline Cohort generate_cohort(const CohortGenSpec& spec) {
  detail::validate_spec(spec);
  detail::Rng rng(spec.seed);
  Cohort cohort;

  for (const auto& group : spec.groups) {
    double hazard = group.hazard_rate.value_or(0.0);
    std::map<std::string, double> mean_shift;
    for (const auto& inj : spec.injections) {
      if (inj.group != group.label) continue;
      if (inj.measurement.empty())
        hazard *= inj.hazard_multiplier;
      else
        mean_shift[inj.measurement] += inj.shift;
    }

    for (std::size_t i = 0; i < group.n; ++i) {
      CohortRow row;
      char idx[8];
      std::snprintf(idx, sizeof idx, "%03zu", i + 1);
      row.patient_id = group.label + "_" + idx;
      row.group = group.label;

      for (const auto& [name, dist] : group.measurements) {
        double shift = 0.0;
        if (const auto it = mean_shift.find(name); it != mean_shift.end()) shift = it->second;
        row.measurements[name] = dist.mean + shift + dist.sd * rng.normal();
      }
      for (const auto& [name, md] : group.metadata) {
        if (md.constant) {
          row.metadata[name] = *md.constant;
        } else if (!md.choices.empty()) {
          std::vector<double> cumulative;
          double acc = 0.0;
          for (std::size_t k = 0; k < md.choices.size(); ++k) {
            acc += md.weights.empty() ? 1.0 : md.weights[k];
            cumulative.push_back(acc);
          }
          row.metadata[name] = md.choices[rng.weighted_choice(cumulative)];
        } else {
          row.measurements[name] = md.numeric->mean + md.numeric->sd * rng.normal();
        }
      }
      for (const auto& d : spec.derivations) {
        if (row.measurements.count(d.target))
          throw DomainError("cohort spec: derivation target '" + d.target + "' already exists");
        double v = d.intercept;
        for (const auto& [source, coef] : d.terms) {
          const auto it = row.measurements.find(source);
          if (it == row.measurements.end())
            throw DomainError("cohort spec: derivation source '" + source +
                              "' missing in group " + group.label);
          v += coef * it->second;
        }
        if (d.noise_sd > 0.0) v += d.noise_sd * rng.normal();
        row.measurements[d.target] = v;
      }
      if (group.hazard_rate) {
        SurvivalObs s;
        s.time = rng.exponential(hazard);
        s.event = true;
        if (spec.censoring_rate > 0.0 && rng.uniform() < spec.censoring_rate) {
          // Censor at an independent uniform fraction of the latent event time.
          s.time *= rng.uniform();
          s.event = false;
        }
        if (s.time <= 0.0) s.time = 1e-12;
        row.survival = s;
      }
      cohort.rows.push_back(std::move(row));
    }
  }
  cohort.validate();
  return cohort;
}

// ---------------------------------------------------------------------------
// Spec file format (JSON)

inline CohortGenSpec parse_cohort_spec(const nlohmann::json& j) {
  using model::detail::as_number;
  using model::detail::as_string;
  using model::detail::require_key;
  if (!j.is_object()) throw SchemaError("cohort spec: not an object");
  CohortGenSpec spec;
  spec.seed = static_cast<std::uint64_t>(as_number(require_key(j, "seed", ""), "seed"));
  spec.censoring_rate = j.contains("censoring_rate")
                            ? as_number(j.at("censoring_rate"), "censoring_rate")
                            : 0.0;
  const nlohmann::json& groups = require_key(j, "groups", "");
  if (!groups.is_array() || groups.empty())
    throw SchemaError("groups: expected a nonempty list");
  for (const auto& gj : groups) {
    GroupSpec g;
    g.label = as_string(require_key(gj, "label", "groups"), "groups.label");
    g.n = static_cast<std::size_t>(as_number(require_key(gj, "n", g.label), g.label + ".n"));
    if (gj.contains("measurements")) {
      for (const auto& [name, mj] : gj.at("measurements").items())
        g.measurements[name] = {as_number(require_key(mj, "mean", name), name + ".mean"),
                                as_number(require_key(mj, "sd", name), name + ".sd")};
    }
    if (gj.contains("metadata")) {
      for (const auto& [name, mj] : gj.at("metadata").items()) {
        MetadataSpec md;
        if (mj.is_string()) {
          md.constant = mj.get<std::string>();
        } else if (mj.is_object() && mj.contains("choices")) {
          md.choices = model::detail::as_string_list(mj.at("choices"), name + ".choices");
          if (mj.contains("weights"))
            for (const auto& w : mj.at("weights"))
              md.weights.push_back(as_number(w, name + ".weights"));
        } else if (mj.is_object() && mj.contains("mean")) {
          md.numeric = Gaussian{as_number(mj.at("mean"), name + ".mean"),
                                as_number(require_key(mj, "sd", name), name + ".sd")};
        } else {
          throw SchemaError(name + ": metadata spec must be a string, choices, or mean/sd");
        }
        g.metadata[name] = std::move(md);
      }
    }
    if (gj.contains("hazard_rate"))
      g.hazard_rate = as_number(gj.at("hazard_rate"), g.label + ".hazard_rate");
    spec.groups.push_back(std::move(g));
  }
  if (j.contains("injections")) {
    for (const auto& ij : j.at("injections")) {
      Injection inj;
      inj.group = as_string(require_key(ij, "group", "injections"), "injections.group");
      if (ij.contains("measurement"))
        inj.measurement = as_string(ij.at("measurement"), "injections.measurement");
      if (ij.contains("shift")) inj.shift = as_number(ij.at("shift"), "injections.shift");
      if (ij.contains("hazard_multiplier"))
        inj.hazard_multiplier =
            as_number(ij.at("hazard_multiplier"), "injections.hazard_multiplier");
      spec.injections.push_back(std::move(inj));
    }
  }
  if (j.contains("derivations")) {
    for (const auto& dj : j.at("derivations")) {
      Derivation d;
      d.target = as_string(require_key(dj, "target", "derivations"), "derivations.target");
      for (const auto& [source, coef] : require_key(dj, "terms", d.target).items())
        d.terms.emplace_back(source, as_number(coef, d.target + ".terms"));
      if (dj.contains("intercept"))
        d.intercept = as_number(dj.at("intercept"), d.target + ".intercept");
      if (dj.contains("noise_sd"))
        d.noise_sd = as_number(dj.at("noise_sd"), d.target + ".noise_sd");
      spec.derivations.push_back(std::move(d));
    }
  }
  return spec;
}

inline CohortGenSpec load_cohort_spec(const std::filesystem::path& path) {
  return parse_cohort_spec(model::detail::read_json_file(path));
}

// ---------------------------------------------------------------------------
// Table bridge

inline meas::MeasurementTable to_measurement_table(const Cohort& cohort) {
  std::set<std::string> meas_names, meta_names;
  bool any_survival = false;
  for (const auto& r : cohort.rows) {
    for (const auto& [k, _] : r.measurements) meas_names.insert(k);
    for (const auto& [k, _] : r.metadata) meta_names.insert(k);
    any_survival = any_survival || r.survival.has_value();
  }
  if (any_survival && (meas_names.count("survival_days") || meas_names.count("survival_status")))
    throw DomainError("cohort: measurement names collide with survival columns");

  meas::MeasurementTable table;
  table.columns.assign(meas_names.begin(), meas_names.end());
  table.columns.insert(table.columns.end(), meta_names.begin(), meta_names.end());
  if (any_survival) {
    table.columns.push_back("survival_days");
    table.columns.push_back("survival_status");
  }
  for (const auto& r : cohort.rows) {
    meas::MeasurementTable::Row row;
    row.patient_id = r.patient_id;
    row.group = r.group;
    for (const auto& name : meas_names) {
      const auto it = r.measurements.find(name);
      row.values.push_back(it == r.measurements.end() ? meas::Cell{} : meas::Cell{it->second});
    }
    for (const auto& name : meta_names) {
      const auto it = r.metadata.find(name);
      row.values.push_back(it == r.metadata.end() ? meas::Cell{} : meas::Cell{it->second});
    }
    if (any_survival) {
      if (r.survival) {
        row.values.push_back(meas::Cell{r.survival->time});
        row.values.push_back(meas::Cell{r.survival->event ? 1.0 : 0.0});
      } else {
        row.values.push_back(meas::Cell{});
        row.values.push_back(meas::Cell{});
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

inline Cohort cohort_from_table(const meas::MeasurementTable& table) {
  const auto days_idx = table.column_index("survival_days");
  const auto status_idx = table.column_index("survival_status");
  Cohort cohort;
  for (const auto& trow : table.rows) {
    CohortRow row;
    row.patient_id = trow.patient_id;
    row.group = trow.group;
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
      if ((days_idx && i == *days_idx) || (status_idx && i == *status_idx)) continue;
      const meas::Cell& cell = trow.values[i];
      if (std::holds_alternative<double>(cell))
        row.measurements[table.columns[i]] = std::get<double>(cell);
      else if (std::holds_alternative<std::string>(cell))
        row.metadata[table.columns[i]] = std::get<std::string>(cell);
    }
    if (days_idx && status_idx) {
      const meas::Cell& days = trow.values[*days_idx];
      const meas::Cell& status = trow.values[*status_idx];
      if (std::holds_alternative<double>(days) && std::holds_alternative<double>(status))
        row.survival = SurvivalObs{std::get<double>(days), std::get<double>(status) != 0.0};
    }
    cohort.rows.push_back(std::move(row));
  }
  cohort.validate();
  return cohort;
}

}  // namespace evistat::bench
