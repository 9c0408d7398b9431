#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "evistat/eco.hpp"
#include "evistat/power.hpp"

using namespace evistat;
using namespace evistat::eco;
using evistat::model::GroupStats;
using evistat::model::HypothesisRecord;
using evistat::model::StatisticalResults;

namespace {

StatisticalResults two_group_results(double mean1, double mean2, double effect) {
  StatisticalResults r;
  r.effect_size = effect;
  r.effect_size_type = "cohens_d";
  std::map<std::string, GroupStats> gs;
  GroupStats a, b;
  a.mean = mean1;
  b.mean = mean2;
  gs["DCM"] = a;
  gs["NOR"] = b;
  r.group_statistics = gs;
  return r;
}

DirectionSpec group_spec(DirectionClaim claim) {
  auto spec = direction_spec_for(claim);
  spec.group1 = "DCM";
  spec.group2 = "NOR";
  return spec;
}

}  // namespace

TEST_CASE("direction from group means, not effect sign") {
  // effect deliberately contradicts the means: the means must win
  const auto results = two_group_results(18.6, 61.2, +2.0);
  REQUIRE(verify_direction(results, group_spec(DirectionClaim::group1_lower)) ==
          DirectionMatch::match);
  REQUIRE(verify_direction(results, group_spec(DirectionClaim::group1_higher)) ==
          DirectionMatch::opposite);
  const auto tied = two_group_results(50.0, 50.0, 0.3);
  REQUIRE(verify_direction(tied, group_spec(DirectionClaim::group1_lower)) ==
          DirectionMatch::undefined);
}

TEST_CASE("direction for association claims uses the effect sign") {
  StatisticalResults r;
  r.effect_size = 0.42;
  r.effect_size_type = "spearman_rho";
  REQUIRE(verify_direction(r, direction_spec_for(DirectionClaim::positive_association)) ==
          DirectionMatch::match);
  REQUIRE(verify_direction(r, direction_spec_for(DirectionClaim::negative_association)) ==
          DirectionMatch::opposite);
  r.effect_size = 0.0;
  REQUIRE(verify_direction(r, direction_spec_for(DirectionClaim::positive_association)) ==
          DirectionMatch::undefined);
}

TEST_CASE("hazard ratios are centered at one") {
  StatisticalResults r;
  r.effect_size = 0.712;
  r.effect_size_type = "hazard_ratio";
  REQUIRE(verify_direction(r, direction_spec_for(DirectionClaim::negative_association)) ==
          DirectionMatch::match);
  r.effect_size = 2.56;
  REQUIRE(verify_direction(r, direction_spec_for(DirectionClaim::positive_association)) ==
          DirectionMatch::match);
  r.effect_size = 1.0;
  REQUIRE(verify_direction(r, direction_spec_for(DirectionClaim::positive_association)) ==
          DirectionMatch::undefined);
}

TEST_CASE("any_association always matches") {
  StatisticalResults empty;
  REQUIRE(verify_direction(empty, direction_spec_for(DirectionClaim::any_association)) ==
          DirectionMatch::match);
}

TEST_CASE("direction verification failures are typed") {
  StatisticalResults no_stats;
  REQUIRE_THROWS_AS(verify_direction(no_stats, group_spec(DirectionClaim::group1_lower)),
                    MissingGroupStatistics);
  auto one_group = two_group_results(18.6, 61.2, -2.0);
  one_group.group_statistics->erase("NOR");
  REQUIRE_THROWS_AS(verify_direction(one_group, group_spec(DirectionClaim::group1_lower)),
                    MissingGroupStatistics);
  auto no_mean = two_group_results(18.6, 61.2, -2.0);
  no_mean.group_statistics->at("DCM").mean.reset();
  REQUIRE_THROWS_AS(verify_direction(no_mean, group_spec(DirectionClaim::group1_lower)),
                    MissingGroupStatistics);
  StatisticalResults no_effect;
  REQUIRE_THROWS_AS(
      verify_direction(no_effect, direction_spec_for(DirectionClaim::positive_association)),
      MissingInputs);
  auto nameless = group_spec(DirectionClaim::group1_lower);
  nameless.group1.reset();
  REQUIRE_THROWS_AS(verify_direction(two_group_results(1, 2, 0), nameless), InvalidSpec);
}

TEST_CASE("direction spec from a hypothesis record") {
  HypothesisRecord h;
  h.analysis_type = AnalysisType::group_difference;
  h.groups = {"DCM", "NOR"};
  h.direction = DirectionClaim::group1_lower;
  const auto spec = direction_spec_for(h);
  REQUIRE(spec.basis == DirectionBasis::group_means);
  REQUIRE(spec.group1.value() == "DCM");
  REQUIRE(spec.group2.value() == "NOR");
  const auto assoc = direction_spec_for(DirectionClaim::negative_association);
  REQUIRE(assoc.basis == DirectionBasis::effect_sign);
}

TEST_CASE("classification spec examples") {
  ClassificationInput in;
  in.p_value = 0.001;
  in.direction_match = DirectionMatch::match;
  in.power_at_sesoi = 0.99;
  REQUIRE(classify_evidence(in).label == EvidenceLabel::supported);

  in.p_value = 0.20;
  in.power_at_sesoi = 0.38;
  for (auto d : {DirectionMatch::match, DirectionMatch::opposite, DirectionMatch::undefined}) {
    in.direction_match = d;
    REQUIRE(classify_evidence(in).label == EvidenceLabel::underpowered);
  }

  in.p_value = 0.01;
  in.direction_match = DirectionMatch::opposite;
  in.power_at_sesoi = 0.90;
  REQUIRE(classify_evidence(in).label == EvidenceLabel::refuted);
  REQUIRE(classify_evidence(in).rationale == "significant_opposite");
}

TEST_CASE("exhaustive truth table") {
  const double ps[] = {0.01, 0.05, 0.20};          // below, at, above alpha
  const double powers[] = {0.40, 0.80, 0.95};      // below, at, above threshold
  const DirectionMatch dirs[] = {DirectionMatch::match, DirectionMatch::opposite,
                                 DirectionMatch::undefined};
  const Validity vals[] = {Validity::valid, Validity::untestable, Validity::execution_failure,
                           Validity::validation_failure};
  for (Validity v : vals)
    for (double p : ps)
      for (DirectionMatch d : dirs)
        for (double pw : powers) {
          ClassificationInput in;
          in.p_value = p;
          in.direction_match = d;
          in.power_at_sesoi = pw;
          in.validity = v;
          const auto got = classify_evidence(in).label;
          EvidenceLabel want;
          if (v != Validity::valid) {
            want = EvidenceLabel::invalid;
          } else if (p < 0.05) {
            want = d == DirectionMatch::match      ? EvidenceLabel::supported
                   : d == DirectionMatch::opposite ? EvidenceLabel::refuted
                                                   : EvidenceLabel::invalid;
          } else {
            want = pw >= 0.80 ? EvidenceLabel::refuted : EvidenceLabel::underpowered;
          }
          REQUIRE(got == want);
        }
}

TEST_CASE("boundary conventions") {
  ClassificationInput in;
  in.p_value = 0.05;  // exactly alpha: non-significant branch
  in.direction_match = DirectionMatch::match;
  in.power_at_sesoi = 0.80;  // exactly threshold: adequately powered
  REQUIRE(classify_evidence(in).label == EvidenceLabel::refuted);
  REQUIRE(classify_evidence(in).rationale == "adequately_powered_null");
  in.power_at_sesoi = 0.7999999;
  REQUIRE(classify_evidence(in).label == EvidenceLabel::underpowered);
  in.p_value = 0.049999;
  REQUIRE(classify_evidence(in).label == EvidenceLabel::supported);
}

TEST_CASE("missing inputs classify as invalid with distinct codes") {
  ClassificationInput in;
  in.direction_match = DirectionMatch::match;
  in.power_at_sesoi = 0.9;
  REQUIRE(classify_evidence(in).label == EvidenceLabel::invalid);
  REQUIRE(classify_evidence(in).rationale == "missing_p");
  in.p_value = 0.5;
  in.power_at_sesoi.reset();
  REQUIRE(classify_evidence(in).label == EvidenceLabel::invalid);
  REQUIRE(classify_evidence(in).rationale == "missing_power");
  // significant branch never needs power
  in.p_value = 0.001;
  REQUIRE(classify_evidence(in).label == EvidenceLabel::supported);
  in.validity = Validity::execution_failure;
  REQUIRE(classify_evidence(in).rationale == "validity_execution_failure");
}

TEST_CASE("expected verdict mapping") {
  REQUIRE(label_to_expected_verdict(EvidenceLabel::supported).value() == Verdict::yes);
  REQUIRE(label_to_expected_verdict(EvidenceLabel::refuted).value() == Verdict::no);
  REQUIRE(label_to_expected_verdict(EvidenceLabel::underpowered).value() ==
          Verdict::inconclusive);
  REQUIRE_FALSE(label_to_expected_verdict(EvidenceLabel::invalid).has_value());
}

TEST_CASE("power at sesoi dispatches on the hypothesis family") {
  HypothesisRecord h;
  h.analysis_type = AnalysisType::group_difference;
  h.sesoi_profile = SesoiProfile::standard;
  h.groups = {"small", "large"};
  StatisticalResults r;
  r.sample_sizes = {{"small", 13.0}, {"large", 86.0}};
  REQUIRE(std::fabs(power::power_at_sesoi(r, h).power - 0.38) < 0.01);

  h.sesoi_profile = SesoiProfile::loose;  // d0 = 0.8
  r.sample_sizes = {{"small", 10.0}, {"large", 46.0}};
  REQUIRE(std::fabs(power::power_at_sesoi(r, h).power - 0.61) < 0.01);

  HypothesisRecord hc;
  hc.analysis_type = AnalysisType::correlation;
  hc.sesoi_profile = SesoiProfile::standard;  // r0 = 0.3
  StatisticalResults rc;
  rc.n_total = 150.0;
  REQUIRE(std::fabs(power::power_at_sesoi(rc, hc).power - 0.96) < 0.01);
  rc.n_total.reset();
  rc.sample_sizes = {{"ALL", 150.0}};
  REQUIRE(std::fabs(power::power_at_sesoi(rc, hc).power - 0.96) < 0.01);

  HypothesisRecord hs;
  hs.analysis_type = AnalysisType::survival;
  hs.sesoi_profile = SesoiProfile::standard;  // HR0 = 1.5
  hs.groups = {"methylated", "unmethylated"};
  StatisticalResults rs;
  rs.sample_sizes = {{"methylated", 50.0}, {"unmethylated", 50.0}};
  REQUIRE_THROWS_AS(power::power_at_sesoi(rs, hs), MissingInputs);
  rs.events_observed = 229.0;
  const auto ps = power::power_at_sesoi(rs, hs);
  REQUIRE(std::fabs(ps.power - power::power_survival(1.5, 229, 0.5, 0.5).power) < 1e-12);

  HypothesisRecord hr;
  hr.analysis_type = AnalysisType::regression;
  hr.sesoi_profile = SesoiProfile::strict;  // f2 = 0.2
  hr.predictors = {"age"};
  StatisticalResults rr;
  rr.n_total = 100.0;
  model::TargetVariables tv;
  tv.outcome = "lvef";
  tv.predictors = {"age", "sex", "bsa"};
  rr.variables_tested = tv;
  const auto pr = power::power_at_sesoi(rr, hr);
  REQUIRE(std::fabs(pr.power - power::power_regression(100, 1, 3, 0.2).power) < 1e-12);
  REQUIRE(std::fabs(pr.noncentrality - 20.0) < 1e-12);

  StatisticalResults nothing;
  REQUIRE_THROWS_AS(power::power_at_sesoi(nothing, hc), MissingInputs);
  REQUIRE_THROWS_AS(power::power_at_sesoi(nothing, h), MissingInputs);
}
