#pragma once

// Discrete causal models for bounding the value of a treatment rule, and the two
// graph transformations the bounding strategies rely on:
//
//   * reduction: X is dropped from the observed set and merged with U into a single
//     latent U* = (U, X); the recommendation f(X) (and g(X)) stays observed.
//   * stratification: within X = x the rule collapses to a constant level f(x).
//
// The supported graph family is fixed and selected by roles: U confounds A and Y and
// may cause X and W; X affects A and Y; an instrument Z affects A only; a guideline
// G = g(X) may affect A.

#include <algorithm>
#include <cstddef>
#include <iterator>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "itrbounds/errors.hpp"
#include "itrbounds/radix.hpp"

namespace itrb {

enum class Role {
  treatment,
  outcome,
  rule_covariate,
  instrument,
  extra_covariate,
  latent,                  // SCM-only (U)
  recommendation,          // computed f(X) column of a reduced model
  guideline_recommendation // computed g(X) column of a reduced model
};

inline std::string_view to_string(Role role) {
  switch (role) {
    case Role::treatment: return "treatment";
    case Role::outcome: return "outcome";
    case Role::rule_covariate: return "rule_covariate";
    case Role::instrument: return "instrument";
    case Role::extra_covariate: return "extra_covariate";
    case Role::latent: return "latent";
    case Role::recommendation: return "recommendation";
    case Role::guideline_recommendation: return "guideline_recommendation";
  }
  return "unknown";
}

inline std::optional<Role> parse_role(std::string_view text) {
  for (Role r : {Role::treatment, Role::outcome, Role::rule_covariate, Role::instrument,
                 Role::extra_covariate, Role::latent})
    if (to_string(r) == text) return r;
  return std::nullopt;
}

inline constexpr std::string_view kRecommendationName = "f(X)";
inline constexpr std::string_view kGuidelineName = "g(X)";

struct VariableSpec {
  std::string name;
  int cardinality = 1;
  Role role = Role::rule_covariate;

  friend bool operator==(const VariableSpec&, const VariableSpec&) = default;
};

inline std::vector<std::string> names_of(std::span<const VariableSpec> vars) {
  std::vector<std::string> out;
  out.reserve(vars.size());
  for (const auto& v : vars) out.push_back(v.name);
  return out;
}

// Deterministic map from rule-covariate tuples to treatment levels, stored densely in
// row-major order over the covariate domain, so it is total by construction.
class TreatmentRule {
 public:
  TreatmentRule() = default;

  TreatmentRule(std::vector<int> covariate_cardinalities, std::vector<int> table)
      : radix_(std::move(covariate_cardinalities)), table_(std::move(table)) {
    for (int c : radix_.bases())
      if (c < 1) throw ModelError("rule covariate cardinality must be positive");
    if (table_.size() != radix_.size())
      throw ModelError("rule table has " + std::to_string(table_.size()) +
                       " entries but the covariate domain has " + std::to_string(radix_.size()));
  }

  static TreatmentRule constant(std::vector<int> covariate_cardinalities, int level) {
    Radix r(covariate_cardinalities);
    return TreatmentRule(std::move(covariate_cardinalities), std::vector<int>(r.size(), level));
  }

  int operator()(std::span<const int> covariates) const {
    if (!radix_.contains(covariates)) throw ModelError("covariate tuple outside the rule domain");
    return table_[radix_.encode(covariates)];
  }
  int at_index(std::size_t index) const { return table_.at(index); }

  std::size_t domain_size() const noexcept { return table_.size(); }
  const std::vector<int>& covariate_cardinalities() const noexcept { return radix_.bases(); }
  const std::vector<int>& table() const noexcept { return table_; }
  const Radix& radix() const noexcept { return radix_; }

  friend bool operator==(const TreatmentRule& a, const TreatmentRule& b) {
    return a.radix_.bases() == b.radix_.bases() && a.table_ == b.table_;
  }

 private:
  Radix radix_;
  std::vector<int> table_;
};

struct Violation {
  std::string variable;
  std::string rule;

  std::string message() const { return variable.empty() ? rule : variable + ": " + rule; }
};

class CausalModel {
 public:
  std::vector<VariableSpec> variables;
  bool has_latent_confounder = true;
  TreatmentRule rule;
  std::optional<TreatmentRule> guideline;

  const VariableSpec& treatment() const { return only(Role::treatment, "treatment"); }
  const VariableSpec& outcome() const { return only(Role::outcome, "outcome"); }

  std::optional<VariableSpec> instrument() const {
    auto found = with_role(Role::instrument);
    if (found.empty()) return std::nullopt;
    return found.front();
  }
  std::vector<VariableSpec> rule_covariates() const { return with_role(Role::rule_covariate); }
  std::vector<VariableSpec> extra_covariates() const { return with_role(Role::extra_covariate); }

  int treatment_levels() const { return treatment().cardinality; }
  int instrument_levels() const {
    auto z = instrument();
    return z ? z->cardinality : 1;
  }
  std::size_t covariate_levels() const { return joint_size(rule_covariates()); }
  std::size_t extra_levels() const { return joint_size(extra_covariates()); }

  // Canonical observed order: [Z], A, Y, X..., W...
  std::vector<VariableSpec> observed() const {
    std::vector<VariableSpec> out;
    if (auto z = instrument()) out.push_back(*z);
    out.push_back(treatment());
    out.push_back(outcome());
    for (const auto& v : rule_covariates()) out.push_back(v);
    for (const auto& v : extra_covariates()) out.push_back(v);
    return out;
  }

  std::vector<VariableSpec> with_role(Role role) const {
    std::vector<VariableSpec> out;
    std::copy_if(variables.begin(), variables.end(), std::back_inserter(out),
                 [role](const VariableSpec& v) { return v.role == role; });
    return out;
  }

 private:
  const VariableSpec& only(Role role, const char* what) const {
    const VariableSpec* hit = nullptr;
    for (const auto& v : variables) {
      if (v.role != role) continue;
      if (hit) throw ModelError(std::string("model has more than one ") + what);
      hit = &v;
    }
    if (!hit) throw ModelError(std::string("model has no ") + what);
    return *hit;
  }

  static std::size_t joint_size(const std::vector<VariableSpec>& vars) {
    std::size_t n = 1;
    for (const auto& v : vars) n *= static_cast<std::size_t>(std::max(v.cardinality, 1));
    return n;
  }
};

inline std::vector<Violation> validate_model(const CausalModel& model) {
  std::vector<Violation> out;
  int treatments = 0, outcomes = 0, instruments = 0, covariates = 0;
  std::vector<std::string> seen;

  for (const auto& v : model.variables) {
    if (v.name.empty()) out.push_back({"", "variable names must be non-empty"});
    if (std::find(seen.begin(), seen.end(), v.name) != seen.end())
      out.push_back({v.name, "variable names must be unique"});
    seen.push_back(v.name);
    if (v.name == kRecommendationName || v.name == kGuidelineName)
      out.push_back({v.name, "name is reserved for computed rule columns"});
    if (v.cardinality < 1) out.push_back({v.name, "cardinality must be at least 1"});

    switch (v.role) {
      case Role::treatment: ++treatments; break;
      case Role::outcome:
        ++outcomes;
        if (v.cardinality != 2) out.push_back({v.name, "outcome must be binary"});
        break;
      case Role::instrument: ++instruments; break;
      case Role::rule_covariate: ++covariates; break;
      case Role::extra_covariate: break;
      default: out.push_back({v.name, "role " + std::string(to_string(v.role)) + " is not allowed in a causal model"});
    }
  }
  if (treatments != 1) out.push_back({"", "exactly one treatment required"});
  if (outcomes != 1) out.push_back({"", "exactly one outcome required"});
  if (instruments > 1) out.push_back({"", "at most one instrument allowed"});
  if (covariates < 1) out.push_back({"", "at least one rule covariate required"});
  if (treatments != 1 || covariates < 1) return out;

  std::vector<int> cards;
  for (const auto& v : model.rule_covariates()) cards.push_back(v.cardinality);
  int k = model.treatment_levels();

  auto check_rule = [&](const TreatmentRule& r, const std::string& label) {
    if (r.covariate_cardinalities() != cards) {
      out.push_back({label, "domain must equal the joint domain of the rule covariates"});
      return;
    }
    for (std::size_t i = 0; i < r.domain_size(); ++i) {
      int level = r.at_index(i);
      if (level < 0 || level >= k) {
        out.push_back({label, "entry " + std::to_string(i) + " maps to level " + std::to_string(level) +
                                  " outside the treatment domain"});
      }
    }
  };
  check_rule(model.rule, "rule");
  if (model.guideline) check_rule(*model.guideline, "guideline");
  return out;
}

inline void require_valid(const CausalModel& model) {
  auto violations = validate_model(model);
  if (violations.empty()) return;
  std::string msg = "invalid model:";
  for (const auto& v : violations) msg += "\n  " + v.message();
  throw ModelError(msg);
}

// X merged into the latent U* = (U, X); observed [Z], A, Y, f(X), [g(X)], W...
struct ReducedModel {
  std::vector<VariableSpec> observed;
  std::string latent = "U*=(U,X)";

  bool has(Role role) const {
    return std::any_of(observed.begin(), observed.end(), [role](const auto& v) { return v.role == role; });
  }
  bool has_instrument() const { return has(Role::instrument); }
  bool has_guideline() const { return has(Role::guideline_recommendation); }
  bool has_extra() const { return has(Role::extra_covariate); }
};

inline ReducedModel build_reduced_model(const CausalModel& model) {
  require_valid(model);
  ReducedModel out;
  const int k = model.treatment_levels();
  if (auto z = model.instrument()) out.observed.push_back(*z);
  out.observed.push_back(model.treatment());
  out.observed.push_back(model.outcome());
  out.observed.push_back({std::string(kRecommendationName), k, Role::recommendation});
  if (model.guideline) out.observed.push_back({std::string(kGuidelineName), k, Role::guideline_recommendation});
  for (const auto& w : model.extra_covariates()) out.observed.push_back(w);
  return out;
}

// Within X = x (and optionally W = w): the rule is a constant level.
struct StratumModel {
  std::vector<int> covariates;
  std::vector<int> extras;
  std::vector<VariableSpec> observed;  // [Z], A, Y
  int assigned_f = 0;
  std::optional<int> assigned_g;
};

inline StratumModel build_stratum_model(const CausalModel& model, std::span<const int> x,
                                        std::span<const int> w = {}) {
  require_valid(model);
  if (!model.rule.radix().contains(x)) throw ModelError("stratum covariate tuple outside the declared domain");
  if (!w.empty()) {
    std::vector<int> wc;
    for (const auto& v : model.extra_covariates()) wc.push_back(v.cardinality);
    if (!Radix(wc).contains(w)) throw ModelError("stratum extra-covariate tuple outside the declared domain");
  }
  StratumModel out;
  out.covariates.assign(x.begin(), x.end());
  out.extras.assign(w.begin(), w.end());
  if (auto z = model.instrument()) out.observed.push_back(*z);
  out.observed.push_back(model.treatment());
  out.observed.push_back(model.outcome());
  out.assigned_f = model.rule(x);
  if (model.guideline) out.assigned_g = (*model.guideline)(x);
  return out;
}

}  // namespace itrb
