#pragma once

// Evidence classification: the mechanical map from observed statistics
// (p, direction, power at the smallest effect of interest) to the four-label
// evidence framework, plus direction verification against the claim.

#include <optional>
#include <string>

#include "evistat/artifacts.hpp"
#include "evistat/errors.hpp"
#include "evistat/types.hpp"

namespace evistat::eco {

enum class DirectionBasis { group_means, effect_sign };

// Group claims are judged from observed group means, never from the effect
// size sign; association claims are judged from the effect sign.
struct DirectionSpec {
  DirectionClaim claim = DirectionClaim::any_association;
  DirectionBasis basis = DirectionBasis::effect_sign;
  std::optional<std::string> group1;  // required for group claims
  std::optional<std::string> group2;
};

inline DirectionSpec direction_spec_for(DirectionClaim claim) {
  const bool group_claim =
      claim == DirectionClaim::group1_higher || claim == DirectionClaim::group1_lower;
  DirectionSpec spec;
  spec.claim = claim;
  spec.basis = group_claim ? DirectionBasis::group_means : DirectionBasis::effect_sign;
  return spec;
}

// Group1 is the first group named in the hypothesis, by convention.
inline DirectionSpec direction_spec_for(const model::HypothesisRecord& hypothesis) {
  auto spec = direction_spec_for(hypothesis.direction.value_or(DirectionClaim::any_association));
  if (spec.basis == DirectionBasis::group_means) {
    if (hypothesis.groups.size() != 2)
      throw InvalidSpec("direction: group claim needs exactly two groups on the hypothesis");
    spec.group1 = hypothesis.groups[0];
    spec.group2 = hypothesis.groups[1];
  }
  return spec;
}

enum class DirectionMatch { match, opposite, undefined };

inline std::string to_string(DirectionMatch m) {
  switch (m) {
    case DirectionMatch::match: return "match";
    case DirectionMatch::opposite: return "opposite";
    case DirectionMatch::undefined: return "undefined";
  }
  return "undefined";
}

namespace detail {

// Hazard ratios sit on a multiplicative scale: the null is 1, not 0.
inline double effect_sign(double effect, const std::string& effect_type) {
  const bool hazard = effect_type == "hazard_ratio" || effect_type == "hazard_ratio_oe";
  const double centered = hazard ? effect - 1.0 : effect;
  if (centered > 0.0) return 1.0;
  if (centered < 0.0) return -1.0;
  return 0.0;
}

}  // namespace detail

inline DirectionMatch verify_direction(const model::StatisticalResults& results,
                                       const DirectionSpec& spec) {
  if (spec.claim == DirectionClaim::any_association) return DirectionMatch::match;

  if (spec.basis == DirectionBasis::group_means) {
    if (!spec.group1 || !spec.group2)
      throw InvalidSpec("direction: group claim without group names");
    if (!results.group_statistics)
      throw MissingGroupStatistics("direction: results carry no group_statistics");
    const auto& gs = *results.group_statistics;
    const auto it1 = gs.find(*spec.group1);
    const auto it2 = gs.find(*spec.group2);
    if (it1 == gs.end() || it2 == gs.end())
      throw MissingGroupStatistics("direction: group_statistics missing a claimed group");
    if (!it1->second.mean || !it2->second.mean)
      throw MissingGroupStatistics("direction: group mean missing");
    const double m1 = *it1->second.mean;
    const double m2 = *it2->second.mean;
    if (m1 == m2) return DirectionMatch::undefined;
    const bool group1_higher = m1 > m2;
    const bool wants_higher = spec.claim == DirectionClaim::group1_higher;
    return group1_higher == wants_higher ? DirectionMatch::match : DirectionMatch::opposite;
  }

  if (!results.effect_size)
    throw MissingInputs("direction: association claim needs an effect size");
  const double sign =
      detail::effect_sign(*results.effect_size, results.effect_size_type.value_or(""));
  if (sign == 0.0) return DirectionMatch::undefined;
  const bool positive = sign > 0.0;
  const bool wants_positive = spec.claim == DirectionClaim::positive_association;
  return positive == wants_positive ? DirectionMatch::match : DirectionMatch::opposite;
}

// ---------------------------------------------------------------------------
// Classification

enum class Validity { valid, untestable, execution_failure, validation_failure };

inline std::string to_string(Validity v) {
  switch (v) {
    case Validity::valid: return "valid";
    case Validity::untestable: return "untestable";
    case Validity::execution_failure: return "execution_failure";
    case Validity::validation_failure: return "validation_failure";
  }
  return "valid";
}

struct ClassificationInput {
  std::optional<double> p_value;
  double alpha = 0.05;
  DirectionMatch direction_match = DirectionMatch::undefined;
  std::optional<double> power_at_sesoi;
  Validity validity = Validity::valid;
};

struct Classification {
  EvidenceLabel label = EvidenceLabel::invalid;
  std::string rationale;
};

constexpr double kDefaultPowerThreshold = 0.80;

// Total over its input space.  Boundary conventions: p equal to alpha falls
// in the non-significant branch; power equal to the threshold counts as
// adequately powered.  A significant result whose direction cannot be
// determined is Invalid, not Supported or Refuted.
inline Classification classify_evidence(const ClassificationInput& in,
                                        double power_threshold = kDefaultPowerThreshold) {
  if (in.validity != Validity::valid)
    return {EvidenceLabel::invalid, "validity_" + to_string(in.validity)};
  if (!in.p_value) return {EvidenceLabel::invalid, "missing_p"};

  if (*in.p_value < in.alpha) {
    switch (in.direction_match) {
      case DirectionMatch::match: return {EvidenceLabel::supported, "significant_match"};
      case DirectionMatch::opposite: return {EvidenceLabel::refuted, "significant_opposite"};
      case DirectionMatch::undefined:
        return {EvidenceLabel::invalid, "significant_direction_undefined"};
    }
  }
  if (!in.power_at_sesoi) return {EvidenceLabel::invalid, "missing_power"};
  if (*in.power_at_sesoi >= power_threshold)
    return {EvidenceLabel::refuted, "adequately_powered_null"};
  return {EvidenceLabel::underpowered, "insufficient_power"};
}

// Supported runs should say YES, refuted NO, underpowered INCONCLUSIVE;
// Invalid runs carry no expected verdict and are excluded from verdict scoring.
inline std::optional<Verdict> label_to_expected_verdict(EvidenceLabel label) {
  switch (label) {
    case EvidenceLabel::supported: return Verdict::yes;
    case EvidenceLabel::refuted: return Verdict::no;
    case EvidenceLabel::underpowered: return Verdict::inconclusive;
    case EvidenceLabel::invalid: return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace evistat::eco
