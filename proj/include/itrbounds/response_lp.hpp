#pragma once

// Canonical response-type parameterization and the LPs over it.
//
// Every latent class fixes the value of each latent-determined observed root (f(X),
// g(X), W, or X itself for the full-model oracle) and one response function per
// endogenous variable: A as a function of its observed parents, Y as a function of the
// treatment level (and X, W in the oracle). A distribution q over classes reproduces
// the observed table cell by cell; the query is linear in q, so its sharp bounds are
// the minimum and maximum of a linear objective over that polytope.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "itrbounds/distribution.hpp"
#include "itrbounds/errors.hpp"
#include "itrbounds/model.hpp"
#include "itrbounds/radix.hpp"
#include "itrbounds/simplex.hpp"

namespace itrb {

inline constexpr std::uint64_t kDefaultClassCap = 10'000'000;
inline constexpr double kBoundsTolerance = 1e-9;

enum class Query { theta_f, theta_g, cu };
enum class Strategy { reduction, conditioning, direct_oracle, closed_form };
enum class ShapeKind { reduced, stratum, full };

inline std::string_view to_string(Query q) {
  switch (q) {
    case Query::theta_f: return "theta_f";
    case Query::theta_g: return "theta_g";
    case Query::cu: return "cu";
  }
  return "unknown";
}

inline std::optional<Query> parse_query(std::string_view s) {
  for (Query q : {Query::theta_f, Query::theta_g, Query::cu})
    if (to_string(q) == s) return q;
  return std::nullopt;
}

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::reduction: return "reduction";
    case Strategy::conditioning: return "conditioning";
    case Strategy::direct_oracle: return "direct_oracle";
    case Strategy::closed_form: return "closed_form";
  }
  return "unknown";
}

inline std::string_view to_string(ShapeKind k) {
  switch (k) {
    case ShapeKind::reduced: return "reduced";
    case ShapeKind::stratum: return "stratum";
    case ShapeKind::full: return "full";
  }
  return "unknown";
}

struct StratumBound {
  std::vector<int> covariates;
  std::vector<int> extras;
  double weight = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool skipped = false;
  std::uint64_t class_count = 0;
};

struct Diagnostics {
  std::uint64_t class_count = 0;
  std::size_t lp_rows = 0;
  std::size_t lp_columns = 0;
  std::string solver_status;
  std::vector<std::string> observed;
  std::vector<StratumBound> strata;
};

struct BoundsResult {
  double lower = 0.0;
  double upper = 0.0;
  Query query = Query::theta_f;
  Strategy strategy = Strategy::reduction;
  Diagnostics diagnostics;

  double width() const noexcept { return upper - lower; }
  bool contains(double value, double tol = kBoundsTolerance) const noexcept {
    return lower - tol <= value && value <= upper + tol;
  }
  bool within(const BoundsResult& outer, double tol) const noexcept {
    return outer.lower - tol <= lower && upper <= outer.upper + tol;
  }
};

inline std::vector<std::string> check_bounds_invariants(const BoundsResult& r) {
  std::vector<std::string> out;
  if (!(r.lower <= r.upper + kBoundsTolerance)) out.push_back("lower exceeds upper");
  const double lo = r.query == Query::cu ? -1.0 : 0.0;
  if (r.lower < lo - kBoundsTolerance || r.upper > 1.0 + kBoundsTolerance)
    out.push_back("bounds outside the query range");
  return out;
}

// What the LP is built over: which components exist and how classes map to cells.
struct ProblemShape {
  ShapeKind kind = ShapeKind::reduced;
  int treatment_levels = 2;
  int instrument_levels = 1;  // arms; 1 without an instrument
  bool has_instrument = false;
  bool has_guideline = false;
  std::size_t covariate_levels = 1;  // joint |X|, oracle only
  std::size_t extra_levels = 1;      // joint |W|
  bool has_extra = false;
  // Oracle: f and g per joint covariate index. Stratum: the single assigned level.
  std::vector<int> rule_levels;
  std::vector<int> guideline_levels;
  std::vector<VariableSpec> observed;  // canonical order, instrument first
};

inline ProblemShape shape_of(const ReducedModel& reduced) {
  ProblemShape s;
  s.kind = ShapeKind::reduced;
  s.observed = reduced.observed;
  for (const auto& v : reduced.observed) {
    switch (v.role) {
      case Role::treatment: s.treatment_levels = v.cardinality; break;
      case Role::instrument:
        s.has_instrument = true;
        s.instrument_levels = v.cardinality;
        break;
      case Role::guideline_recommendation: s.has_guideline = true; break;
      case Role::extra_covariate:
        s.has_extra = true;
        s.extra_levels *= static_cast<std::size_t>(v.cardinality);
        break;
      default: break;
    }
  }
  return s;
}

inline ProblemShape shape_of(const StratumModel& stratum) {
  ProblemShape s;
  s.kind = ShapeKind::stratum;
  s.observed = stratum.observed;
  for (const auto& v : stratum.observed) {
    if (v.role == Role::treatment) s.treatment_levels = v.cardinality;
    if (v.role == Role::instrument) {
      s.has_instrument = true;
      s.instrument_levels = v.cardinality;
    }
  }
  s.rule_levels = {stratum.assigned_f};
  if (stratum.assigned_g) {
    s.has_guideline = true;
    s.guideline_levels = {*stratum.assigned_g};
  }
  return s;
}

// Full DAG without reduction: the naive LP, a sharpness oracle for small |X|.
inline ProblemShape oracle_shape(const CausalModel& model) {
  require_valid(model);
  ProblemShape s;
  s.kind = ShapeKind::full;
  s.observed = model.observed();
  s.treatment_levels = model.treatment_levels();
  if (auto z = model.instrument()) {
    s.has_instrument = true;
    s.instrument_levels = z->cardinality;
  }
  s.covariate_levels = model.covariate_levels();
  s.extra_levels = model.extra_levels();
  s.has_extra = !model.extra_covariates().empty();
  s.rule_levels = model.rule.table();
  if (model.guideline) {
    s.has_guideline = true;
    s.guideline_levels = model.guideline->table();
  }
  return s;
}

struct ResponseComponent {
  std::string name;
  std::size_t inputs = 1;  // input configurations; 1 for a plain value
  int outputs = 1;

  SaturatingCount count() const { return SaturatingCount::power(static_cast<std::uint64_t>(outputs), inputs); }
};

class ResponseTypeSpace {
 public:
  ProblemShape shape;
  std::vector<ResponseComponent> components;
  std::uint64_t class_count = 1;

  // Component slots; -1 when absent.
  int slot_recommendation = -1, slot_guideline = -1, slot_extra = -1, slot_covariate = -1;
  int slot_treatment = -1, slot_outcome = -1;

  void finalize() {
    counts_.clear();
    place_.clear();
    for (const auto& c : components) {
      counts_.push_back(c.count().value);
      std::vector<std::uint64_t> place(c.inputs, 1);
      for (std::size_t i = c.inputs; i-- > 1;) place[i - 1] = place[i] * static_cast<std::uint64_t>(c.outputs);
      place_.push_back(std::move(place));
    }
  }

  // Lexicographic: the first component is the most significant digit.
  void decode(std::uint64_t index, std::span<std::uint64_t> codes) const {
    for (std::size_t c = components.size(); c-- > 0;) {
      codes[c] = index % counts_[c];
      index /= counts_[c];
    }
  }

  // Output of response function `code` of component `c` at input configuration `input`.
  int evaluate(std::size_t c, std::uint64_t code, std::size_t input) const {
    return static_cast<int>((code / place_[c][input]) % static_cast<std::uint64_t>(components[c].outputs));
  }

 private:
  std::vector<std::uint64_t> counts_;
  std::vector<std::vector<std::uint64_t>> place_;
};

inline ResponseTypeSpace enumerate_response_types(const ProblemShape& shape, std::uint64_t cap = kDefaultClassCap) {
  ResponseTypeSpace space;
  space.shape = shape;
  const int k = shape.treatment_levels;
  const auto z = static_cast<std::size_t>(shape.instrument_levels);
  auto add = [&](std::string name, std::size_t inputs, int outputs) {
    space.components.push_back({std::move(name), inputs, outputs});
    return static_cast<int>(space.components.size() - 1);
  };

  switch (shape.kind) {
    case ShapeKind::reduced: {
      space.slot_recommendation = add(std::string(kRecommendationName), 1, k);
      if (shape.has_guideline) space.slot_guideline = add(std::string(kGuidelineName), 1, k);
      if (shape.has_extra) space.slot_extra = add("W", 1, static_cast<int>(shape.extra_levels));
      const std::size_t a_inputs = z * (shape.has_guideline ? static_cast<std::size_t>(k) : 1);
      space.slot_treatment = add("A", a_inputs, k);
      space.slot_outcome = add("Y", static_cast<std::size_t>(k), 2);
      break;
    }
    case ShapeKind::stratum:
      space.slot_treatment = add("A", z, k);
      space.slot_outcome = add("Y", static_cast<std::size_t>(k), 2);
      break;
    case ShapeKind::full: {
      space.slot_covariate = add("X", 1, static_cast<int>(shape.covariate_levels));
      if (shape.has_extra) space.slot_extra = add("W", 1, static_cast<int>(shape.extra_levels));
      const std::size_t xw = shape.covariate_levels * shape.extra_levels;
      space.slot_treatment = add("A", z * xw, k);
      space.slot_outcome = add("Y", static_cast<std::size_t>(k) * xw, 2);
      break;
    }
  }

  SaturatingCount total;
  for (const auto& c : space.components) total *= c.count();
  if (total.saturated || total.value > cap) throw CapExceededError(total.value, total.saturated, cap);
  space.class_count = total.value;
  space.finalize();
  return space;
}

// Equality constraints are one row per observed cell per instrument arm, right-hand
// side P(cell | Z = z); each class hits exactly one row per arm.
struct LpProblem {
  ShapeKind kind = ShapeKind::reduced;
  Query query = Query::theta_f;
  std::vector<VariableSpec> observed;
  std::size_t arms = 1;
  std::size_t cells_per_arm = 1;
  std::vector<double> rhs;
  std::uint64_t class_count = 0;
  std::vector<std::uint32_t> class_rows;  // class_count x arms
  std::vector<std::int8_t> objective;     // per class, in {-1, 0, 1}

  std::string row_label(std::size_t row) const {
    std::vector<int> cards;
    std::size_t first = observed.empty() || observed.front().role != Role::instrument ? 0 : 1;
    for (std::size_t i = first; i < observed.size(); ++i) cards.push_back(observed[i].cardinality);
    const auto digits = Radix(cards).decode(row % cells_per_arm);
    std::string out = "P(";
    for (std::size_t i = 0; i < digits.size(); ++i) {
      if (i) out += ",";
      out += observed[first + i].name + "=" + std::to_string(digits[i]);
    }
    if (first == 1) out += " | " + observed.front().name + "=" + std::to_string(row / cells_per_arm);
    return out + ")";
  }
};

namespace detail {

inline void require_query_supported(const ProblemShape& shape, Query query) {
  if (query != Query::theta_f && !shape.has_guideline)
    throw ModelError(std::string("query ") + std::string(to_string(query)) + " requires a guideline");
}

inline int objective_coefficient(Query query, int y_rule, int y_guideline) {
  switch (query) {
    case Query::theta_f: return y_rule;
    case Query::theta_g: return y_guideline;
    case Query::cu: return y_rule - y_guideline;
  }
  return 0;
}

}  // namespace detail

inline LpProblem build_lp(const ResponseTypeSpace& space, const JointTable& observed, Query query) {
  const ProblemShape& shape = space.shape;
  detail::require_query_supported(shape, query);

  const auto names = names_of(shape.observed);
  for (const auto& v : shape.observed) {
    auto axis = observed.find(v.name);
    if (!axis || observed.variables()[*axis].cardinality != v.cardinality)
      throw DataError("observed table does not match the LP shape: missing or mis-sized variable " + v.name);
  }
  if (observed.variables().size() != shape.observed.size())
    throw DataError("observed table does not match the LP shape: unexpected extra variables");
  const JointTable table = marginalize(observed, std::span<const std::string>(names));

  LpProblem lp;
  lp.kind = shape.kind;
  lp.query = query;
  lp.observed = shape.observed;
  lp.arms = static_cast<std::size_t>(shape.instrument_levels);
  lp.cells_per_arm = table.size() / lp.arms;
  lp.class_count = space.class_count;
  lp.rhs.assign(table.size(), 0.0);
  auto probs = table.probabilities();
  for (std::size_t z = 0; z < lp.arms; ++z) {
    double mass = 0.0;
    for (std::size_t c = 0; c < lp.cells_per_arm; ++c) mass += probs[z * lp.cells_per_arm + c];
    if (!(mass > 0.0))
      throw DataError("instrument arm " + std::to_string(z) + " has zero probability");
    for (std::size_t c = 0; c < lp.cells_per_arm; ++c) lp.rhs[z * lp.cells_per_arm + c] = probs[z * lp.cells_per_arm + c] / mass;
  }

  const int k = shape.treatment_levels;
  const std::size_t ku = static_cast<std::size_t>(k);
  const std::size_t n_g = shape.has_guideline ? ku : 1;
  const std::size_t n_x = shape.covariate_levels;
  const std::size_t n_w = shape.extra_levels;
  const auto slot_a = static_cast<std::size_t>(space.slot_treatment);
  const auto slot_y = static_cast<std::size_t>(space.slot_outcome);

  lp.class_rows.resize(space.class_count * lp.arms);
  lp.objective.resize(space.class_count);
  std::vector<std::uint64_t> codes(space.components.size());

  for (std::uint64_t cls = 0; cls < space.class_count; ++cls) {
    space.decode(cls, codes);
    const std::uint64_t code_a = codes[slot_a], code_y = codes[slot_y];
    auto y_at = [&](std::size_t input) { return space.evaluate(slot_y, code_y, input); };
    std::uint32_t* rows = &lp.class_rows[cls * lp.arms];
    int coefficient = 0;

    switch (shape.kind) {
      case ShapeKind::reduced: {
        const auto b = static_cast<std::size_t>(codes[static_cast<std::size_t>(space.slot_recommendation)]);
        const std::size_t g = space.slot_guideline >= 0 ? codes[static_cast<std::size_t>(space.slot_guideline)] : 0;
        const std::size_t w = space.slot_extra >= 0 ? codes[static_cast<std::size_t>(space.slot_extra)] : 0;
        for (std::size_t z = 0; z < lp.arms; ++z) {
          const auto a = static_cast<std::size_t>(space.evaluate(slot_a, code_a, z * n_g + g));
          const auto y = static_cast<std::size_t>(y_at(a));
          const std::size_t cell = (((a * 2 + y) * ku + b) * n_g + g) * n_w + w;
          rows[z] = static_cast<std::uint32_t>(z * lp.cells_per_arm + cell);
        }
        coefficient = detail::objective_coefficient(query, y_at(b), shape.has_guideline ? y_at(g) : 0);
        break;
      }
      case ShapeKind::stratum: {
        for (std::size_t z = 0; z < lp.arms; ++z) {
          const auto a = static_cast<std::size_t>(space.evaluate(slot_a, code_a, z));
          const auto y = static_cast<std::size_t>(y_at(a));
          rows[z] = static_cast<std::uint32_t>(z * lp.cells_per_arm + a * 2 + y);
        }
        const int y_f = y_at(static_cast<std::size_t>(shape.rule_levels.at(0)));
        const int y_g = shape.has_guideline ? y_at(static_cast<std::size_t>(shape.guideline_levels.at(0))) : 0;
        coefficient = detail::objective_coefficient(query, y_f, y_g);
        break;
      }
      case ShapeKind::full: {
        const auto x = static_cast<std::size_t>(codes[static_cast<std::size_t>(space.slot_covariate)]);
        const std::size_t w = space.slot_extra >= 0 ? codes[static_cast<std::size_t>(space.slot_extra)] : 0;
        auto y_given = [&](std::size_t level) { return y_at((level * n_x + x) * n_w + w); };
        for (std::size_t z = 0; z < lp.arms; ++z) {
          const auto a = static_cast<std::size_t>(space.evaluate(slot_a, code_a, (z * n_x + x) * n_w + w));
          const auto y = static_cast<std::size_t>(y_given(a));
          const std::size_t cell = ((a * 2 + y) * n_x + x) * n_w + w;
          rows[z] = static_cast<std::uint32_t>(z * lp.cells_per_arm + cell);
        }
        const int y_f = y_given(static_cast<std::size_t>(shape.rule_levels.at(x)));
        const int y_g = shape.has_guideline ? y_given(static_cast<std::size_t>(shape.guideline_levels.at(x))) : 0;
        coefficient = detail::objective_coefficient(query, y_f, y_g);
        break;
      }
    }
    lp.objective[cls] = static_cast<std::int8_t>(coefficient);
  }
  return lp;
}

inline Strategy strategy_for(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::reduced: return Strategy::reduction;
    case ShapeKind::stratum: return Strategy::conditioning;
    case ShapeKind::full: return Strategy::direct_oracle;
  }
  return Strategy::reduction;
}

// Minimum and maximum of the LP objective over the feasible class distributions.
// Classes with identical constraint rows and objective are merged, and classes that
// touch a zero-probability cell are dropped; neither changes the optimum.
inline BoundsResult solve_bounds(const LpProblem& lp) {
  const std::size_t arms = lp.arms;
  std::vector<std::size_t> active_row(lp.rhs.size(), SIZE_MAX);
  std::vector<std::size_t> active_rows;
  for (std::size_t r = 0; r < lp.rhs.size(); ++r)
    if (lp.rhs[r] != 0.0) {
      active_row[r] = active_rows.size();
      active_rows.push_back(r);
    }

  std::map<std::vector<std::uint32_t>, std::size_t> column_of;
  std::vector<std::vector<std::uint32_t>> columns;
  std::vector<double> cost;
  std::vector<std::uint32_t> key(arms + 1);
  for (std::uint64_t cls = 0; cls < lp.class_count; ++cls) {
    bool zero = false;
    for (std::size_t z = 0; z < arms && !zero; ++z) {
      const std::uint32_t row = lp.class_rows[cls * arms + z];
      zero = active_row[row] == SIZE_MAX;
      key[z] = static_cast<std::uint32_t>(active_row[row]);
    }
    if (zero) continue;
    key[arms] = static_cast<std::uint32_t>(lp.objective[cls] + 1);
    auto [it, inserted] = column_of.try_emplace(key, columns.size());
    if (inserted) {
      columns.emplace_back(key.begin(), key.begin() + static_cast<std::ptrdiff_t>(arms));
      cost.push_back(static_cast<double>(lp.objective[cls]));
    }
  }

  const std::size_t m = active_rows.size(), n = columns.size();
  std::vector<double> a(m * n, 0.0), b(m);
  for (std::size_t i = 0; i < m; ++i) b[i] = lp.rhs[active_rows[i]];
  for (std::size_t j = 0; j < n; ++j)
    for (std::uint32_t row : columns[j]) a[row * n + j] = 1.0;

  lp::DenseSimplex simplex(m, n, a, b);
  if (!simplex.feasible()) {
    // Without any columns every positive row is violated; report the largest.
    std::size_t worst = simplex.worst_row();
    double residual = simplex.worst_residual();
    if (n == 0)
      for (std::size_t i = 0; i < m; ++i)
        if (b[i] > residual) residual = b[i], worst = i;
    throw InfeasibleError(lp.row_label(active_rows.at(worst)), residual);
  }
  const auto low = simplex.minimize(cost);
  const auto high = simplex.maximize(cost);
  if (low.status != lp::SimplexStatus::optimal || high.status != lp::SimplexStatus::optimal)
    throw Error("LP solve did not reach optimality (" + std::string(lp::to_string(low.status)) + "/" +
                std::string(lp::to_string(high.status)) + ")");

  BoundsResult out;
  out.lower = low.objective;
  out.upper = high.objective;
  out.query = lp.query;
  out.strategy = strategy_for(lp.kind);
  out.diagnostics.class_count = lp.class_count;
  out.diagnostics.lp_rows = m;
  out.diagnostics.lp_columns = n;
  out.diagnostics.solver_status = "optimal";
  out.diagnostics.observed = names_of(lp.observed);
  return out;
}

// Closed-form sharp bounds for binary A, Y, f(X) without an instrument:
//   L = P(A=0,Y=1,B=0) + P(A=1,Y=1,B=1),  U = 1 - P(A=0,Y=0,B=0) - P(A=1,Y=0,B=1).
inline BoundsResult closed_form_eq2(const JointTable& observed) {
  if (observed.variables().size() != 3) throw ModelError("closed form needs a table over exactly (A, Y, f(X))");
  std::optional<std::string> a, y, b;
  for (const auto& v : observed.variables()) {
    if (v.cardinality != 2) throw ModelError("closed form needs binary variables; " + v.name + " is not");
    if (v.role == Role::treatment) a = v.name;
    if (v.role == Role::outcome) y = v.name;
    if (v.role == Role::recommendation) b = v.name;
  }
  if (!a || !y || !b) throw ModelError("closed form needs treatment, outcome and recommendation variables");
  const JointTable t = marginalize(observed, {*a, *y, *b});
  BoundsResult out;
  out.lower = t.at({0, 1, 0}) + t.at({1, 1, 1});
  out.upper = 1.0 - t.at({0, 0, 0}) - t.at({1, 0, 1});
  out.strategy = Strategy::closed_form;
  out.diagnostics.solver_status = "closed_form";
  out.diagnostics.observed = {*a, *y, *b};
  return out;
}

// No-assumption bounds on P(Y(a)=1 | x) from P(A, Y | x):
//   [P(Y=1, A=a), P(Y=1, A=a) + P(A != a)].
inline BoundsResult manski_stratum(const JointTable& observed, int level) {
  std::optional<std::string> a, y;
  for (const auto& v : observed.variables()) {
    if (v.role == Role::treatment) a = v.name;
    if (v.role == Role::outcome) y = v.name;
  }
  if (!a || !y || observed.variables().size() != 2)
    throw ModelError("stratum closed form needs a table over exactly (A, Y)");
  const JointTable t = marginalize(observed, {*a, *y});
  const int k = t.variables()[0].cardinality;
  if (level < 0 || level >= k) throw ModelError("treatment level " + std::to_string(level) + " outside the domain");
  const double hit = t.at({level, 1});
  const double arm = t.at({level, 0}) + hit;
  BoundsResult out;
  out.lower = hit;
  out.upper = hit + (1.0 - arm);
  out.strategy = Strategy::closed_form;
  out.diagnostics.solver_status = "closed_form";
  out.diagnostics.observed = {*a, *y};
  return out;
}

inline BoundsResult direct_sharp_bounds(const CausalModel& model, const JointTable& observed,
                                        Query query = Query::theta_f, std::uint64_t cap = kDefaultClassCap) {
  const auto space = enumerate_response_types(oracle_shape(model), cap);
  return solve_bounds(build_lp(space, observed, query));
}

}  // namespace itrb
