#pragma once

#include <cctype>
#include <optional>
#include <string>

#include "evistat/errors.hpp"

// Shared enums for the analysis pipeline.  Parsing accepts any case;
// to_string emits the canonical lowercase token unless noted.

namespace evistat {

enum class AnalysisType { group_difference, correlation, survival, regression };

enum class Tier { L0, L1, L2, L3, L4, L5 };

enum class ControlType { positive, negative, no_effect, nonsense, underpowered, untestable };

enum class SesoiProfile { strict, standard, loose };

enum class DirectionClaim {
  group1_higher,
  group1_lower,
  positive_association,
  negative_association,
  any_association,
};

enum class EvidenceLabel { supported, refuted, underpowered, invalid };

enum class Verdict { yes, no, inconclusive };

enum class Requirement { required, recommended, optional_ };

namespace detail {

inline std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace detail

inline std::string to_string(AnalysisType t) {
  switch (t) {
    case AnalysisType::group_difference: return "group_difference";
    case AnalysisType::correlation: return "correlation";
    case AnalysisType::survival: return "survival";
    case AnalysisType::regression: return "regression";
  }
  return "group_difference";
}

inline AnalysisType analysis_type_from_string(const std::string& s) {
  const std::string v = detail::lower(s);
  if (v == "group_difference") return AnalysisType::group_difference;
  if (v == "correlation") return AnalysisType::correlation;
  if (v == "survival") return AnalysisType::survival;
  if (v == "regression") return AnalysisType::regression;
  throw SchemaError("analysis_type: unknown value '" + s + "'");
}

inline std::string to_string(Tier t) {
  switch (t) {
    case Tier::L0: return "L0";
    case Tier::L1: return "L1";
    case Tier::L2: return "L2";
    case Tier::L3: return "L3";
    case Tier::L4: return "L4";
    case Tier::L5: return "L5";
  }
  return "L0";
}

inline Tier tier_from_string(const std::string& s) {
  std::string v = detail::lower(s);
  if (v.size() == 2 && v[0] == 'l' && v[1] >= '0' && v[1] <= '5')
    return static_cast<Tier>(v[1] - '0');
  throw SchemaError("tier: unknown value '" + s + "'");
}

inline std::string to_string(ControlType t) {
  switch (t) {
    case ControlType::positive: return "positive";
    case ControlType::negative: return "negative";
    case ControlType::no_effect: return "no_effect";
    case ControlType::nonsense: return "nonsense";
    case ControlType::underpowered: return "underpowered";
    case ControlType::untestable: return "untestable";
  }
  return "positive";
}

inline ControlType control_type_from_string(const std::string& s) {
  const std::string v = detail::lower(s);
  if (v == "positive") return ControlType::positive;
  if (v == "negative") return ControlType::negative;
  if (v == "no_effect") return ControlType::no_effect;
  if (v == "nonsense") return ControlType::nonsense;
  if (v == "underpowered") return ControlType::underpowered;
  if (v == "untestable") return ControlType::untestable;
  throw SchemaError("control_type: unknown value '" + s + "'");
}

inline std::string to_string(SesoiProfile p) {
  switch (p) {
    case SesoiProfile::strict: return "strict";
    case SesoiProfile::standard: return "standard";
    case SesoiProfile::loose: return "loose";
  }
  return "standard";
}

inline SesoiProfile sesoi_profile_from_string(const std::string& s) {
  const std::string v = detail::lower(s);
  if (v == "strict") return SesoiProfile::strict;
  if (v == "standard") return SesoiProfile::standard;
  if (v == "loose") return SesoiProfile::loose;
  throw SchemaError("sesoi_profile: unknown value '" + s + "'");
}

inline std::string to_string(DirectionClaim c) {
  switch (c) {
    case DirectionClaim::group1_higher: return "group1_higher";
    case DirectionClaim::group1_lower: return "group1_lower";
    case DirectionClaim::positive_association: return "positive_association";
    case DirectionClaim::negative_association: return "negative_association";
    case DirectionClaim::any_association: return "any_association";
  }
  return "any_association";
}

inline DirectionClaim direction_claim_from_string(const std::string& s) {
  const std::string v = detail::lower(s);
  if (v == "group1_higher") return DirectionClaim::group1_higher;
  if (v == "group1_lower") return DirectionClaim::group1_lower;
  if (v == "positive_association") return DirectionClaim::positive_association;
  if (v == "negative_association") return DirectionClaim::negative_association;
  if (v == "any_association") return DirectionClaim::any_association;
  throw SchemaError("direction: unknown value '" + s + "'");
}

// Capitalized form ("Supported") used in ground truth blocks and reports.
inline std::string to_string(EvidenceLabel l) {
  switch (l) {
    case EvidenceLabel::supported: return "Supported";
    case EvidenceLabel::refuted: return "Refuted";
    case EvidenceLabel::underpowered: return "Underpowered";
    case EvidenceLabel::invalid: return "Invalid";
  }
  return "Invalid";
}

// Uppercase form ("SUPPORTED") used inside final_verdict.json.
inline std::string to_upper_string(EvidenceLabel l) {
  std::string s = to_string(l);
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

inline EvidenceLabel evidence_label_from_string(const std::string& s) {
  const std::string v = detail::lower(s);
  if (v == "supported") return EvidenceLabel::supported;
  if (v == "refuted") return EvidenceLabel::refuted;
  if (v == "underpowered") return EvidenceLabel::underpowered;
  if (v == "invalid") return EvidenceLabel::invalid;
  throw SchemaError("evidence_label: unknown value '" + s + "'");
}

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::yes: return "YES";
    case Verdict::no: return "NO";
    case Verdict::inconclusive: return "INCONCLUSIVE";
  }
  return "INCONCLUSIVE";
}

inline Verdict verdict_from_string(const std::string& s) {
  const std::string v = detail::lower(s);
  if (v == "yes") return Verdict::yes;
  if (v == "no") return Verdict::no;
  if (v == "inconclusive") return Verdict::inconclusive;
  throw SchemaError("verdict: unknown value '" + s + "'");
}

inline std::string to_string(Requirement r) {
  switch (r) {
    case Requirement::required: return "REQUIRED";
    case Requirement::recommended: return "RECOMMENDED";
    case Requirement::optional_: return "OPTIONAL";
  }
  return "OPTIONAL";
}

inline Requirement requirement_from_string(const std::string& s) {
  const std::string v = detail::lower(s);
  if (v == "required") return Requirement::required;
  if (v == "recommended") return Requirement::recommended;
  if (v == "optional") return Requirement::optional_;
  throw SchemaError("adjust_for_level: unknown value '" + s + "'");
}

// Reserved group sentinel: expand to every group present in the dataset.
inline constexpr const char* kAllGroups = "ALL";

}  // namespace evistat
