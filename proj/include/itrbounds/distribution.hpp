#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "itrbounds/errors.hpp"
#include "itrbounds/model.hpp"
#include "itrbounds/radix.hpp"

namespace itrb {

inline constexpr double kSumTolerance = 1e-12;
inline constexpr double kCompareTolerance = 1e-9;

// Exact finite joint distribution over an ordered tuple of discrete variables,
// stored densely in row-major order.
class JointTable {
 public:
  JointTable() : probs_{1.0} {}

  JointTable(std::vector<VariableSpec> variables, std::vector<double> probabilities,
             double tolerance = kSumTolerance)
      : variables_(std::move(variables)), probs_(std::move(probabilities)) {
    std::vector<int> cards;
    for (const auto& v : variables_) {
      if (v.cardinality < 1) throw DataError("variable " + v.name + " has non-positive cardinality");
      cards.push_back(v.cardinality);
    }
    for (std::size_t i = 0; i < variables_.size(); ++i)
      for (std::size_t j = 0; j < i; ++j)
        if (variables_[i].name == variables_[j].name) throw DataError("duplicate variable " + variables_[i].name);
    radix_ = Radix(std::move(cards));
    if (probs_.size() != radix_.size())
      throw DataError("table has " + std::to_string(probs_.size()) + " cells, expected " +
                      std::to_string(radix_.size()));
    double sum = 0.0;
    for (double p : probs_) {
      if (!(p >= 0.0) || p > 1.0 + tolerance) throw DataError("table entry outside [0, 1]");
      sum += p;
    }
    if (std::abs(sum - 1.0) > tolerance) throw DataError("table entries sum to " + std::to_string(sum) + ", not 1");
  }

  const std::vector<VariableSpec>& variables() const noexcept { return variables_; }
  std::span<const double> probabilities() const noexcept { return probs_; }
  const Radix& radix() const noexcept { return radix_; }
  std::size_t size() const noexcept { return probs_.size(); }

  double at(std::span<const int> tuple) const {
    if (!radix_.contains(tuple)) throw DataError("value tuple outside the table domain");
    return probs_[radix_.encode(tuple)];
  }
  double at(std::initializer_list<int> tuple) const { return at(std::span<const int>(tuple.begin(), tuple.size())); }

  std::optional<std::size_t> find(std::string_view name) const {
    for (std::size_t i = 0; i < variables_.size(); ++i)
      if (variables_[i].name == name) return i;
    return std::nullopt;
  }
  std::size_t index_of(std::string_view name) const {
    auto i = find(name);
    if (!i) throw DataError("unknown variable " + std::string(name));
    return *i;
  }

  // Number of records behind an empirical table.
  std::optional<std::size_t> sample_size;

 private:
  std::vector<VariableSpec> variables_;
  Radix radix_;
  std::vector<double> probs_;
};

// Sum over all coordinates not in `keep`; the result follows the order of `keep`.
inline JointTable marginalize(const JointTable& table, std::span<const std::string> keep) {
  std::vector<std::size_t> axes;
  std::vector<VariableSpec> vars;
  for (const auto& name : keep) {
    std::size_t axis = table.index_of(name);
    for (auto a : axes)
      if (a == axis) throw DataError("variable " + name + " listed twice");
    axes.push_back(axis);
    vars.push_back(table.variables()[axis]);
  }
  std::vector<int> cards;
  for (const auto& v : vars) cards.push_back(v.cardinality);
  Radix target(cards);
  std::vector<double> out(target.size(), 0.0);
  std::vector<int> digits(table.variables().size()), kept(axes.size());
  auto probs = table.probabilities();
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] == 0.0) continue;
    table.radix().decode(i, digits);
    for (std::size_t j = 0; j < axes.size(); ++j) kept[j] = digits[axes[j]];
    out[target.encode(kept)] += probs[i];
  }
  JointTable result(std::move(vars), std::move(out), 1e-10);
  result.sample_size = table.sample_size;
  return result;
}

inline JointTable marginalize(const JointTable& table, std::initializer_list<std::string> keep) {
  std::vector<std::string> k(keep);
  return marginalize(table, std::span<const std::string>(k));
}

struct Assignment {
  std::string variable;
  int value = 0;
};

struct ConditionResult {
  // Empty when the conditioning event has probability zero.
  std::optional<JointTable> table;
  double mass = 0.0;

  bool degenerate() const noexcept { return !table.has_value(); }
};

inline ConditionResult condition(const JointTable& table, std::span<const Assignment> on) {
  std::vector<std::pair<std::size_t, int>> fixed;
  for (const auto& a : on) {
    std::size_t axis = table.index_of(a.variable);
    if (a.value < 0 || a.value >= table.variables()[axis].cardinality)
      throw DataError("value " + std::to_string(a.value) + " outside the domain of " + a.variable);
    fixed.emplace_back(axis, a.value);
  }
  std::vector<VariableSpec> rest;
  std::vector<std::size_t> rest_axes;
  for (std::size_t i = 0; i < table.variables().size(); ++i) {
    bool is_fixed = false;
    for (const auto& f : fixed) is_fixed = is_fixed || f.first == i;
    if (!is_fixed) {
      rest.push_back(table.variables()[i]);
      rest_axes.push_back(i);
    }
  }
  std::vector<int> cards;
  for (const auto& v : rest) cards.push_back(v.cardinality);
  Radix target(cards);
  std::vector<double> out(target.size(), 0.0);
  std::vector<int> digits(table.variables().size()), kept(rest_axes.size());
  double mass = 0.0;
  auto probs = table.probabilities();
  for (std::size_t i = 0; i < probs.size(); ++i) {
    table.radix().decode(i, digits);
    bool match = true;
    for (const auto& f : fixed) match = match && digits[f.first] == f.second;
    if (!match) continue;
    for (std::size_t j = 0; j < rest_axes.size(); ++j) kept[j] = digits[rest_axes[j]];
    out[target.encode(kept)] += probs[i];
    mass += probs[i];
  }
  ConditionResult result;
  result.mass = mass;
  if (mass <= 0.0) return result;
  for (double& p : out) p /= mass;
  result.table.emplace(std::move(rest), std::move(out), 1e-10);
  return result;
}

inline ConditionResult condition(const JointTable& table, std::initializer_list<Assignment> on) {
  std::vector<Assignment> a(on);
  return condition(table, std::span<const Assignment>(a));
}

// Plug-in frequency estimate; each record lists values in the order of `variables`.
inline JointTable empirical_joint(std::span<const std::vector<int>> records, std::vector<VariableSpec> variables) {
  if (records.empty()) throw DataError("no records: cannot estimate a distribution from N = 0");
  std::vector<int> cards;
  for (const auto& v : variables) cards.push_back(v.cardinality);
  Radix radix(cards);
  std::vector<double> counts(radix.size(), 0.0);
  for (std::size_t row = 0; row < records.size(); ++row) {
    const auto& r = records[row];
    if (r.size() != variables.size())
      throw DataError("record " + std::to_string(row + 1) + " has " + std::to_string(r.size()) + " values, expected " +
                      std::to_string(variables.size()));
    for (std::size_t j = 0; j < r.size(); ++j)
      if (r[j] < 0 || r[j] >= cards[j])
        throw DataError("record " + std::to_string(row + 1) + ": value " + std::to_string(r[j]) +
                        " outside the domain of " + variables[j].name);
    counts[radix.encode(r)] += 1.0;
  }
  const double n = static_cast<double>(records.size());
  for (double& c : counts) c /= n;
  JointTable out(std::move(variables), std::move(counts), 1e-10);
  out.sample_size = records.size();
  return out;
}

// P(child | parents) with one probability row per parent tuple (row-major).
struct Cpt {
  VariableSpec child;
  std::vector<VariableSpec> parents;
  std::vector<double> rows;  // (parent tuples) x child cardinality

  std::size_t row_count() const {
    std::size_t m = 1;
    for (const auto& p : parents) m *= static_cast<std::size_t>(p.cardinality);
    return m;
  }
  std::span<const double> row(std::size_t parent_index) const {
    const auto d = static_cast<std::size_t>(child.cardinality);
    return std::span<const double>(rows).subspan(parent_index * d, d);
  }
  double probability(int value, std::span<const int> parent_values) const {
    std::vector<int> cards;
    for (const auto& p : parents) cards.push_back(p.cardinality);
    return row(Radix(cards).encode(parent_values))[static_cast<std::size_t>(value)];
  }

  void validate() const {
    const auto d = static_cast<std::size_t>(child.cardinality);
    if (rows.size() != row_count() * d) throw ModelError("CPT for " + child.name + " has the wrong number of entries");
    for (std::size_t r = 0; r < row_count(); ++r) {
      double sum = 0.0;
      for (double p : row(r)) {
        if (!(p >= 0.0)) throw ModelError("CPT for " + child.name + " has a negative entry");
        sum += p;
      }
      if (std::abs(sum - 1.0) > kSumTolerance)
        throw ModelError("CPT row " + std::to_string(r) + " for " + child.name + " does not sum to 1");
    }
  }
};

// Structural model over discrete variables given as CPTs in topological order.
struct Scm {
  std::vector<Cpt> cpts;

  std::vector<VariableSpec> variables() const {
    std::vector<VariableSpec> out;
    for (const auto& c : cpts) out.push_back(c.child);
    return out;
  }

  const Cpt& cpt(std::string_view name) const {
    for (const auto& c : cpts)
      if (c.child.name == name) return c;
    throw ModelError("SCM has no variable " + std::string(name));
  }

  void validate() const {
    for (std::size_t i = 0; i < cpts.size(); ++i) {
      cpts[i].validate();
      if (cpts[i].child.role == Role::latent && !cpts[i].parents.empty())
        throw ModelError("latent variable " + cpts[i].child.name + " must have no parents");
      for (const auto& p : cpts[i].parents) {
        bool earlier = false;
        for (std::size_t j = 0; j < i; ++j) earlier = earlier || (cpts[j].child == p);
        if (!earlier) throw ModelError("parent " + p.name + " of " + cpts[i].child.name + " is not earlier in topological order");
      }
    }
  }
};

inline JointTable joint_from_scm(const Scm& scm) {
  scm.validate();
  const auto vars = scm.variables();
  std::vector<int> cards;
  for (const auto& v : vars) cards.push_back(v.cardinality);
  Radix radix(cards);

  // Parent positions and row radices, resolved once.
  struct Plan {
    std::vector<std::size_t> parent_axes;
    Radix parent_radix;
  };
  std::vector<Plan> plans;
  for (const auto& c : scm.cpts) {
    Plan p;
    std::vector<int> pc;
    for (const auto& parent : c.parents) {
      for (std::size_t j = 0; j < vars.size(); ++j)
        if (vars[j].name == parent.name) p.parent_axes.push_back(j);
      pc.push_back(parent.cardinality);
    }
    p.parent_radix = Radix(pc);
    plans.push_back(std::move(p));
  }

  std::vector<double> probs(radix.size());
  std::vector<int> digits(vars.size()), parent_digits;
  for (std::size_t i = 0; i < radix.size(); ++i) {
    radix.decode(i, digits);
    double p = 1.0;
    for (std::size_t v = 0; v < scm.cpts.size() && p != 0.0; ++v) {
      parent_digits.resize(plans[v].parent_axes.size());
      for (std::size_t j = 0; j < parent_digits.size(); ++j) parent_digits[j] = digits[plans[v].parent_axes[j]];
      p *= scm.cpts[v].row(plans[v].parent_radix.encode(parent_digits))[static_cast<std::size_t>(digits[v])];
    }
    probs[i] = p;
  }
  return JointTable(vars, std::move(probs), 1e-10);
}

}  // namespace itrb
