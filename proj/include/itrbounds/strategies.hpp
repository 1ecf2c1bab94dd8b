#pragma once

// The two bounding strategies for theta_f = E[Y(f(X))] and CU(f, g) = theta_f - theta_g.
//
// Reduction: replace X by the computed recommendation column(s), drop X, and solve one
// LP on the reduced graph. Conditioning: solve one LP per stratum X = x (jointly with
// W = w when extra covariates exist) and average the endpoints with weights P(x, w).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "itrbounds/distribution.hpp"
#include "itrbounds/errors.hpp"
#include "itrbounds/model.hpp"
#include "itrbounds/response_lp.hpp"

namespace itrb {

enum class StrategySelection { reduction, conditioning, both, with_oracle };

inline std::string_view to_string(StrategySelection s) {
  switch (s) {
    case StrategySelection::reduction: return "reduction";
    case StrategySelection::conditioning: return "conditioning";
    case StrategySelection::both: return "both";
    case StrategySelection::with_oracle: return "with_oracle";
  }
  return "unknown";
}

inline std::optional<StrategySelection> parse_strategy_selection(std::string_view s) {
  for (auto v : {StrategySelection::reduction, StrategySelection::conditioning, StrategySelection::both,
                 StrategySelection::with_oracle})
    if (to_string(v) == s) return v;
  return std::nullopt;
}

struct StrategyRequest {
  CausalModel model;
  JointTable observed;  // over the model's declared variables, any order
  Query query = Query::theta_f;
  StrategySelection strategy = StrategySelection::both;
  std::uint64_t oracle_cap = kDefaultClassCap;
};

inline void validate_request(const StrategyRequest& req) {
  require_valid(req.model);
  if (req.query != Query::theta_f && !req.model.guideline)
    throw ModelError(std::string("query ") + std::string(to_string(req.query)) + " requires a guideline");
  const auto declared = req.model.observed();
  if (req.observed.variables().size() != declared.size())
    throw DataError("observed table has " + std::to_string(req.observed.variables().size()) +
                    " variables, the model declares " + std::to_string(declared.size()));
  for (const auto& v : declared) {
    auto axis = req.observed.find(v.name);
    if (!axis) throw DataError("observed table lacks model variable " + v.name);
    if (req.observed.variables()[*axis].cardinality != v.cardinality)
      throw DataError("observed variable " + v.name + " has cardinality " +
                      std::to_string(req.observed.variables()[*axis].cardinality) + ", model declares " +
                      std::to_string(v.cardinality));
  }
}

// P([Z], A, Y, f(X), [g(X)], W...) computed from P([Z], A, Y, X..., W...).
inline JointTable reduced_observed_table(const CausalModel& model, const ReducedModel& reduced,
                                         const JointTable& observed) {
  const auto declared = model.observed();
  const auto names = names_of(declared);
  const JointTable canonical = marginalize(observed, std::span<const std::string>(names));

  const bool iv = model.instrument().has_value();
  const std::size_t nx = model.rule_covariates().size();
  const std::size_t nw = model.extra_covariates().size();
  const std::size_t x_at = iv ? 3 : 2;

  std::vector<int> cards;
  for (const auto& v : reduced.observed) cards.push_back(v.cardinality);
  Radix target(cards);
  std::vector<double> out(target.size(), 0.0);
  std::vector<int> digits(declared.size()), cell;
  auto probs = canonical.probabilities();
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] == 0.0) continue;
    canonical.radix().decode(i, digits);
    std::span<const int> x(digits.data() + x_at, nx);
    cell.assign(digits.begin(), digits.begin() + static_cast<std::ptrdiff_t>(x_at));
    cell.push_back(model.rule(x));
    if (model.guideline) cell.push_back((*model.guideline)(x));
    for (std::size_t j = 0; j < nw; ++j) cell.push_back(digits[x_at + nx + j]);
    out[target.encode(cell)] += probs[i];
  }
  JointTable result(reduced.observed, std::move(out), 1e-10);
  result.sample_size = observed.sample_size;
  return result;
}

inline BoundsResult reduction_bounds(const StrategyRequest& req) {
  validate_request(req);
  const ReducedModel reduced = build_reduced_model(req.model);
  const JointTable table = reduced_observed_table(req.model, reduced, req.observed);
  const auto space = enumerate_response_types(shape_of(reduced));
  BoundsResult out = solve_bounds(build_lp(space, table, req.query));
  out.strategy = Strategy::reduction;
  return out;
}

namespace detail {

inline std::string stratum_label(const CausalModel& model, std::span<const int> x, std::span<const int> w) {
  std::string out;
  const auto xs = model.rule_covariates();
  const auto ws = model.extra_covariates();
  for (std::size_t i = 0; i < xs.size(); ++i) out += (out.empty() ? "" : ",") + xs[i].name + "=" + std::to_string(x[i]);
  for (std::size_t i = 0; i < w.size(); ++i) out += "," + ws[i].name + "=" + std::to_string(w[i]);
  return out;
}

}  // namespace detail

inline BoundsResult conditioning_bounds(const StrategyRequest& req) {
  validate_request(req);
  const auto xs = req.model.rule_covariates();
  const auto ws = req.model.extra_covariates();
  std::vector<std::string> stratum_names;
  std::vector<int> stratum_cards;
  for (const auto& v : xs) stratum_names.push_back(v.name), stratum_cards.push_back(v.cardinality);
  for (const auto& v : ws) stratum_names.push_back(v.name), stratum_cards.push_back(v.cardinality);

  const JointTable weights = marginalize(req.observed, std::span<const std::string>(stratum_names));
  const Radix strata(stratum_cards);

  BoundsResult out;
  out.query = req.query;
  out.strategy = Strategy::conditioning;
  out.diagnostics.solver_status = "optimal";
  out.diagnostics.observed = names_of(req.model.observed());

  std::vector<Assignment> on(stratum_names.size());
  double lower = 0.0, upper = 0.0;
  for (std::size_t s = 0; s < strata.size(); ++s) {
    const auto digits = strata.decode(s);
    std::span<const int> x(digits.data(), xs.size());
    std::span<const int> w(digits.data() + xs.size(), ws.size());
    StratumBound sb;
    sb.covariates.assign(x.begin(), x.end());
    sb.extras.assign(w.begin(), w.end());
    sb.weight = weights.probabilities()[s];
    if (sb.weight == 0.0) {
      sb.skipped = true;
      out.diagnostics.strata.push_back(std::move(sb));
      continue;
    }
    for (std::size_t j = 0; j < stratum_names.size(); ++j) on[j] = {stratum_names[j], digits[j]};
    const auto conditioned = condition(req.observed, std::span<const Assignment>(on));
    if (conditioned.degenerate())
      throw DataError("stratum " + detail::stratum_label(req.model, x, w) + " has positive weight but no mass");

    const StratumModel stratum = build_stratum_model(req.model, x, w);
    const auto space = enumerate_response_types(shape_of(stratum));
    BoundsResult local;
    try {
      local = solve_bounds(build_lp(space, *conditioned.table, req.query));
    } catch (const InfeasibleError& e) {
      throw InfeasibleError(e.constraint() + " in stratum " + detail::stratum_label(req.model, x, w), e.violation());
    }
    sb.lower = local.lower;
    sb.upper = local.upper;
    sb.class_count = local.diagnostics.class_count;
    out.diagnostics.class_count += local.diagnostics.class_count;
    out.diagnostics.lp_rows += local.diagnostics.lp_rows;
    out.diagnostics.lp_columns += local.diagnostics.lp_columns;
    lower += sb.weight * sb.lower;
    upper += sb.weight * sb.upper;
    out.diagnostics.strata.push_back(std::move(sb));
  }
  out.lower = lower;
  out.upper = upper;
  return out;
}

struct StrategyComparison {
  std::optional<BoundsResult> reduction;
  std::optional<BoundsResult> conditioning;
  std::optional<BoundsResult> oracle;
  std::string oracle_note;
  // conditioning width minus reduction width
  double width_difference = 0.0;
  bool conditioning_within_reduction = false;
  bool oracle_within_reduction = false;
  bool oracle_within_conditioning = false;
  // Conditioning no wider than reduction (monitored, not guaranteed).
  bool conditioning_not_wider = false;
};

inline constexpr double kContainmentTolerance = 1e-8;

inline StrategyComparison compare_strategies(const StrategyRequest& req) {
  StrategyComparison out;
  out.reduction = reduction_bounds(req);
  out.conditioning = conditioning_bounds(req);
  try {
    out.oracle = direct_sharp_bounds(req.model, req.observed, req.query, req.oracle_cap);
  } catch (const CapExceededError& e) {
    out.oracle_note = std::string("oracle unavailable: ") + e.what();
  }
  out.width_difference = out.conditioning->width() - out.reduction->width();
  out.conditioning_within_reduction = out.conditioning->within(*out.reduction, kContainmentTolerance);
  out.conditioning_not_wider = out.width_difference <= kContainmentTolerance;
  if (out.oracle) {
    out.oracle_within_reduction = out.oracle->within(*out.reduction, kContainmentTolerance);
    out.oracle_within_conditioning = out.oracle->within(*out.conditioning, kContainmentTolerance);
  }
  return out;
}

// Runs whatever the request's strategy selection asks for.
inline StrategyComparison run_strategies(const StrategyRequest& req) {
  switch (req.strategy) {
    case StrategySelection::with_oracle: return compare_strategies(req);
    case StrategySelection::reduction: {
      StrategyComparison out;
      out.reduction = reduction_bounds(req);
      return out;
    }
    case StrategySelection::conditioning: {
      StrategyComparison out;
      out.conditioning = conditioning_bounds(req);
      return out;
    }
    case StrategySelection::both: {
      StrategyComparison out;
      out.reduction = reduction_bounds(req);
      out.conditioning = conditioning_bounds(req);
      out.width_difference = out.conditioning->width() - out.reduction->width();
      out.conditioning_within_reduction = out.conditioning->within(*out.reduction, kContainmentTolerance);
      out.conditioning_not_wider = out.width_difference <= kContainmentTolerance;
      return out;
    }
  }
  return {};
}

}  // namespace itrb
