#pragma once

// Simulation study: random discrete SCMs of the confounded (optionally instrumented)
// rule-evaluation graph, exact ground-truth policy values, and per-replication checks
// of bound validity and of the conditioning-vs-reduction width ordering.
//
// Reproducibility contract: replication i draws all of its randomness from its own
// std::mt19937_64 seeded with derive_seed(master_seed, i). CPTs are drawn in the order
// U, Z, X, A, Y; within a CPT, rows follow row-major order over the parents, and each
// row consumes `cardinality` uniforms.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "itrbounds/distribution.hpp"
#include "itrbounds/errors.hpp"
#include "itrbounds/model.hpp"
#include "itrbounds/response_lp.hpp"
#include "itrbounds/strategies.hpp"

namespace itrb::sim {

inline constexpr double kValidityTolerance = 1e-9;
inline constexpr double kConjectureTolerance = 1e-8;

// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index) {
  return mix64(master_seed ^ mix64(index + 0x9E3779B97F4A7C15ULL));
}

// Uniform(0, 1) from the top 53 bits of each engine output, offset by half a step so
// that 0 is never produced.
class UniformStream {
 public:
  explicit UniformStream(std::uint64_t seed) : engine_(seed) {}
  double operator()() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

inline std::vector<double> normalize_draws(std::span<const double> draws) {
  double total = 0.0;
  for (double r : draws) total += r;
  std::vector<double> out(draws.begin(), draws.end());
  for (double& p : out) p /= total;
  return out;
}

// m rows of d normalized uniforms each.
template <typename Uniform>
Cpt random_cpt(VariableSpec child, std::vector<VariableSpec> parents, Uniform&& uniform) {
  Cpt cpt{std::move(child), std::move(parents), {}};
  const auto d = static_cast<std::size_t>(cpt.child.cardinality);
  const std::size_t m = cpt.row_count();
  cpt.rows.reserve(m * d);
  std::vector<double> draws(d);
  for (std::size_t row = 0; row < m; ++row) {
    for (auto& r : draws) r = uniform();
    auto normalized = normalize_draws(draws);
    cpt.rows.insert(cpt.rows.end(), normalized.begin(), normalized.end());
  }
  return cpt;
}

inline TreatmentRule default_rule() { return TreatmentRule({6}, {0, 0, 1, 1, 2, 2}); }

struct SimConfig {
  std::size_t replications = 10'000;
  int z_levels = 2;
  int u_levels = 2;
  int a_levels = 3;
  int x_levels = 6;
  bool with_instrument = true;
  TreatmentRule rule = default_rule();
  std::uint64_t master_seed = 20250704;
  bool run_reduction = true;
  bool run_conditioning = true;
  bool oracle_enabled = false;
  std::uint64_t oracle_cap = kDefaultClassCap;
  unsigned threads = 1;  // 0: hardware concurrency

  void validate() const {
    if (replications < 1) throw ModelError("replications must be at least 1");
    if (u_levels < 1 || a_levels < 1 || x_levels < 1 || (with_instrument && z_levels < 1))
      throw ModelError("cardinalities must be positive");
    if (rule.covariate_cardinalities() != std::vector<int>{x_levels})
      throw ModelError("rule domain must be {0.." + std::to_string(x_levels - 1) + "}");
    for (int level : rule.table())
      if (level < 0 || level >= a_levels) throw ModelError("rule maps outside the treatment domain");
  }

  VariableSpec u() const { return {"U", u_levels, Role::latent}; }
  VariableSpec z() const { return {"Z", z_levels, Role::instrument}; }
  VariableSpec x() const { return {"X", x_levels, Role::rule_covariate}; }
  VariableSpec a() const { return {"A", a_levels, Role::treatment}; }
  VariableSpec y() const { return {"Y", 2, Role::outcome}; }

  CausalModel model() const {
    CausalModel m;
    if (with_instrument) m.variables.push_back(z());
    m.variables.push_back(a());
    m.variables.push_back(y());
    m.variables.push_back(x());
    m.rule = rule;
    return m;
  }
};

inline Scm random_scm(const SimConfig& config, std::uint64_t index) {
  UniformStream stream(derive_seed(config.master_seed, index));
  Scm scm;
  scm.cpts.push_back(random_cpt(config.u(), {}, stream));
  if (config.with_instrument) scm.cpts.push_back(random_cpt(config.z(), {}, stream));
  scm.cpts.push_back(random_cpt(config.x(), {config.u()}, stream));
  std::vector<VariableSpec> a_parents;
  if (config.with_instrument) a_parents.push_back(config.z());
  a_parents.push_back(config.x());
  a_parents.push_back(config.u());
  scm.cpts.push_back(random_cpt(config.a(), std::move(a_parents), stream));
  scm.cpts.push_back(random_cpt(config.y(), {config.a(), config.x(), config.u()}, stream));
  return scm;
}

// E[Y(f(X))]: replace A's mechanism by A = f(X) and read P(Y = 1) off the joint.
inline double true_policy_value(const Scm& scm, const TreatmentRule& rule) {
  std::vector<VariableSpec> covariates;
  for (const auto& c : scm.cpts)
    if (c.child.role == Role::rule_covariate) covariates.push_back(c.child);
  Scm intervened = scm;
  bool replaced = false;
  std::string outcome;
  for (auto& c : intervened.cpts) {
    if (c.child.role == Role::outcome) outcome = c.child.name;
    if (c.child.role != Role::treatment) continue;
    Cpt forced{c.child, covariates, {}};
    const auto k = static_cast<std::size_t>(c.child.cardinality);
    forced.rows.assign(forced.row_count() * k, 0.0);
    if (forced.row_count() != rule.domain_size()) throw ModelError("rule domain does not match the SCM covariates");
    for (std::size_t x = 0; x < forced.row_count(); ++x) forced.rows[x * k + static_cast<std::size_t>(rule.at_index(x))] = 1.0;
    c = std::move(forced);
    replaced = true;
  }
  if (!replaced || outcome.empty()) throw ModelError("SCM needs a treatment and an outcome");
  const auto y = marginalize(joint_from_scm(intervened), {outcome});
  return y.probabilities()[1];
}

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  double width() const { return upper - lower; }
};

struct SimRecord {
  std::size_t index = 0;
  double theta_true = 0.0;
  std::optional<Interval> reduction;
  std::optional<Interval> conditioning;
  std::optional<Interval> oracle;
  bool reduction_valid = false;
  bool conditioning_valid = false;
  bool oracle_valid = false;
  bool conditioning_within_reduction = false;
  bool conjecture_violation = false;
  std::string anomaly;
};

struct SimAggregates {
  std::size_t replications = 0;
  double reduction_validity_rate = 0.0;
  double conditioning_validity_rate = 0.0;
  double oracle_validity_rate = 0.0;
  std::size_t oracle_runs = 0;
  double mean_reduction_width = 0.0;
  double mean_conditioning_width = 0.0;
  // reduction width minus conditioning width
  double mean_width_gain = 0.0;
  // largest conditioning-minus-reduction width; positive values breach the conjecture
  double max_width_excess = 0.0;
  std::size_t conjecture_violations = 0;
  std::size_t containment_failures = 0;
  std::size_t anomalies = 0;
};

struct SimReport {
  SimConfig config;
  std::vector<SimRecord> records;
  SimAggregates aggregates;
};

namespace detail {

// Order-independent sum: sort first so any permutation of records agrees bit for bit.
inline double sorted_mean(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  double total = 0.0;
  for (double v : values) total += v;
  return total / static_cast<double>(values.size());
}

}  // namespace detail

inline SimAggregates summarize(std::span<const SimRecord> records) {
  SimAggregates a;
  a.replications = records.size();
  if (records.empty()) return a;
  std::size_t red_ok = 0, cond_ok = 0, oracle_ok = 0;
  std::vector<double> red_w, cond_w, gain;
  bool have_excess = false;
  for (const auto& r : records) {
    red_ok += r.reduction_valid;
    cond_ok += r.conditioning_valid;
    if (r.oracle) {
      ++a.oracle_runs;
      oracle_ok += r.oracle_valid;
    }
    if (!r.anomaly.empty()) ++a.anomalies;
    if (r.reduction) red_w.push_back(r.reduction->width());
    if (r.conditioning) cond_w.push_back(r.conditioning->width());
    if (r.reduction && r.conditioning) {
      const double excess = r.conditioning->width() - r.reduction->width();
      gain.push_back(-excess);
      a.max_width_excess = have_excess ? std::max(a.max_width_excess, excess) : excess;
      have_excess = true;
      a.conjecture_violations += r.conjecture_violation;
      a.containment_failures += !r.conditioning_within_reduction;
    }
  }
  const auto n = static_cast<double>(records.size());
  a.reduction_validity_rate = static_cast<double>(red_ok) / n;
  a.conditioning_validity_rate = static_cast<double>(cond_ok) / n;
  a.oracle_validity_rate = a.oracle_runs ? static_cast<double>(oracle_ok) / static_cast<double>(a.oracle_runs) : 0.0;
  a.mean_reduction_width = detail::sorted_mean(std::move(red_w));
  a.mean_conditioning_width = detail::sorted_mean(std::move(cond_w));
  a.mean_width_gain = detail::sorted_mean(std::move(gain));
  return a;
}

inline SimRecord run_replication(const SimConfig& config, const CausalModel& model, std::size_t index) {
  SimRecord rec;
  rec.index = index;
  try {
    const Scm scm = random_scm(config, index);
    rec.theta_true = true_policy_value(scm, config.rule);
    const auto names = names_of(model.observed());
    StrategyRequest req{model, marginalize(joint_from_scm(scm), std::span<const std::string>(names)), Query::theta_f,
                        StrategySelection::both, config.oracle_cap};
    auto to_interval = [](const BoundsResult& b) { return Interval{b.lower, b.upper}; };
    if (config.run_reduction) {
      rec.reduction = to_interval(reduction_bounds(req));
      rec.reduction_valid = rec.reduction->lower - kValidityTolerance <= rec.theta_true &&
                            rec.theta_true <= rec.reduction->upper + kValidityTolerance;
    }
    if (config.run_conditioning) {
      rec.conditioning = to_interval(conditioning_bounds(req));
      rec.conditioning_valid = rec.conditioning->lower - kValidityTolerance <= rec.theta_true &&
                               rec.theta_true <= rec.conditioning->upper + kValidityTolerance;
    }
    if (rec.reduction && rec.conditioning) {
      rec.conjecture_violation = rec.conditioning->width() > rec.reduction->width() + kConjectureTolerance;
      rec.conditioning_within_reduction = rec.reduction->lower - kConjectureTolerance <= rec.conditioning->lower &&
                                          rec.conditioning->upper <= rec.reduction->upper + kConjectureTolerance;
    }
    if (config.oracle_enabled) {
      try {
        rec.oracle = to_interval(direct_sharp_bounds(model, req.observed, Query::theta_f, config.oracle_cap));
        rec.oracle_valid = rec.oracle->lower - kValidityTolerance <= rec.theta_true &&
                           rec.theta_true <= rec.oracle->upper + kValidityTolerance;
      } catch (const CapExceededError&) {
        // Reported at study level; the per-replication checks stand without it.
      }
    }
  } catch (const Error& e) {
    rec.anomaly = e.what();
  }
  return rec;
}

inline SimReport run_study(const SimConfig& config) {
  config.validate();
  const CausalModel model = config.model();
  SimReport report;
  report.config = config;
  report.records.resize(config.replications);

  unsigned workers = config.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : config.threads;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, config.replications));
  if (workers <= 1) {
    for (std::size_t i = 0; i < config.replications; ++i) report.records[i] = run_replication(config, model, i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        try {
          for (std::size_t i = next++; i < config.replications; i = next++)
            report.records[i] = run_replication(config, model, i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }
  report.aggregates = summarize(report.records);
  return report;
}

}  // namespace itrb::sim
