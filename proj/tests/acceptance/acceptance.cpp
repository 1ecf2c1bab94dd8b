// Acceptance gate: one PASS / FAIL / SKIP line per criterion, nonzero exit on any FAIL.

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "itrbounds/io.hpp"
#include "support/oracles.hpp"

namespace {

namespace fs = std::filesystem;
using itrb::CausalModel;
using itrb::JointTable;
using itrb::Query;
using itrb::Role;
using itrb::TreatmentRule;
using itrb::VariableSpec;

enum class Outcome { pass, fail, skip };

struct Verdict {
  Outcome outcome = Outcome::pass;
  std::string detail;
};

Verdict check(bool ok, std::string detail) { return {ok ? Outcome::pass : Outcome::fail, std::move(detail)}; }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

CausalModel make_model(int k, int nx, bool instrument, std::vector<int> rule) {
  CausalModel m;
  if (instrument) m.variables.push_back({"Z", 2, Role::instrument});
  m.variables.push_back({"A", k, Role::treatment});
  m.variables.push_back({"Y", 2, Role::outcome});
  m.variables.push_back({"X", nx, Role::rule_covariate});
  m.rule = TreatmentRule({nx}, std::move(rule));
  return m;
}

// 1. Reduced binary LP against the closed form.
Verdict reduction_matches_closed_form() {
  std::mt19937_64 rng(101);
  const std::vector<VariableSpec> vars{
      {"A", 2, Role::treatment}, {"Y", 2, Role::outcome}, {"f(X)", 2, Role::recommendation}};
  itrb::ProblemShape shape;
  shape.observed = vars;
  const auto space = itrb::enumerate_response_types(shape);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto flat = oracle::sparse_dirichlet(8, i % 5 == 0 ? 0.35 : 0.0, rng);
    oracle::BinaryTable p{};
    for (int c = 0; c < 8; ++c) p[c / 4][(c / 2) % 2][c % 2] = flat[static_cast<std::size_t>(c)];
    const auto expected = oracle::eq2(p);
    const auto got = itrb::solve_bounds(itrb::build_lp(space, JointTable(vars, flat, 1e-10), Query::theta_f));
    worst = std::max({worst, std::abs(got.lower - expected.lower), std::abs(got.upper - expected.upper)});
  }
  return check(worst <= 1e-8, "1000 tables, max endpoint error " + fmt("%.2e", worst));
}

// 2. Stratum LP against the per-stratum closed form.
Verdict stratum_matches_closed_form() {
  std::mt19937_64 rng(202);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int k = 2 + i % 2, level = (i / 2) % k;
    itrb::StratumModel s;
    s.observed = {{"A", k, Role::treatment}, {"Y", 2, Role::outcome}};
    s.assigned_f = level;
    const auto flat = oracle::sparse_dirichlet(static_cast<std::size_t>(2 * k), i % 4 == 0 ? 0.3 : 0.0, rng);
    const auto expected = oracle::manski(flat, level);
    const auto space = itrb::enumerate_response_types(itrb::shape_of(s));
    const auto got = itrb::solve_bounds(itrb::build_lp(space, JointTable(s.observed, flat, 1e-10), Query::theta_f));
    worst = std::max({worst, std::abs(got.lower - expected.lower), std::abs(got.upper - expected.upper)});
  }
  return check(worst <= 1e-8, "1000 tables (k = 2, 3), max endpoint error " + fmt("%.2e", worst));
}

// 3 and 4 share one default study.
struct StudyOutcome {
  itrb::sim::SimReport report;
  double worst_theta_error = 0.0;
};

const StudyOutcome& default_study() {
  static const StudyOutcome out = [] {
    StudyOutcome o;
    itrb::sim::SimConfig cfg;
    cfg.threads = 0;
    o.report = itrb::sim::run_study(cfg);
    const std::vector<int> rule{0, 0, 1, 1, 2, 2};
    for (const auto& r : o.report.records) {
      const auto raw = oracle::draw_scm(cfg.master_seed, r.index, true, 2, 2, 6, 3);
      o.worst_theta_error = std::max(o.worst_theta_error, std::abs(raw.theta(rule) - r.theta_true));
    }
    return o;
  }();
  return out;
}

Verdict simulation_validity() {
  const auto& s = default_study();
  const auto& a = s.report.aggregates;
  const bool ok = a.replications == 10000 && a.reduction_validity_rate == 1.0 && a.conditioning_validity_rate == 1.0 &&
                  a.anomalies == 0 && s.worst_theta_error <= 1e-12;
  return check(ok, std::to_string(a.replications) + " replications, validity reduction " +
                       fmt("%.4f", a.reduction_validity_rate) + " conditioning " +
                       fmt("%.4f", a.conditioning_validity_rate) + ", anomalies " + std::to_string(a.anomalies) +
                       ", ground truth vs independent oracle " + fmt("%.1e", s.worst_theta_error));
}

Verdict simulation_conjecture() {
  const auto& a = default_study().report.aggregates;
  return check(a.conjecture_violations == 0,
               std::to_string(a.conjecture_violations) + " violations, max width excess " +
                   fmt("%.2e", a.max_width_excess) + ", mean width gain " + fmt("%.4f", a.mean_width_gain) +
                   ", containment failures " + std::to_string(a.containment_failures));
}

// 5. Binary, no instrument: the strategies coincide.
Verdict binary_strategies_coincide() {
  std::mt19937_64 rng(505);
  std::uniform_int_distribution<int> bit(0, 1), levels(2, 6);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int nx = levels(rng);
    std::vector<int> rule(static_cast<std::size_t>(nx));
    for (auto& r : rule) r = bit(rng);
    const auto m = make_model(2, nx, false, rule);
    const JointTable t(m.observed(), oracle::sparse_dirichlet(static_cast<std::size_t>(4 * nx), i % 3 == 0 ? 0.3 : 0.0, rng),
                       1e-10);
    const itrb::StrategyRequest req{m, t};
    const auto red = itrb::reduction_bounds(req);
    const auto cond = itrb::conditioning_bounds(req);
    worst = std::max({worst, std::abs(red.lower - cond.lower), std::abs(red.upper - cond.upper)});
  }
  return check(worst <= 1e-8, "1000 instances, max endpoint difference " + fmt("%.2e", worst));
}

// 6. Small shapes: the direct oracle sits inside both strategies, all contain the truth.
Verdict oracle_containment() {
  std::mt19937_64 rng(606);
  std::uniform_int_distribution<int> bit(0, 1);
  int failures = 0, runs = 0;
  double worst = 0.0;
  for (bool instrument : {false, true}) {
    for (int i = 0; i < 200; ++i) {
      const auto scm = oracle::dirichlet_scm(rng, instrument, 2, 2, 2, 2);
      const std::vector<int> rule{bit(rng), bit(rng)};
      const auto m = make_model(2, 2, instrument, rule);
      const JointTable t(m.observed(), scm.observed(), 1e-10);
      const double theta = scm.theta(rule);
      const auto c = itrb::compare_strategies({m, t});
      ++runs;
      if (!c.oracle) {
        ++failures;
        continue;
      }
      const bool ok = c.oracle_within_reduction && c.oracle_within_conditioning && c.reduction->contains(theta, 1e-9) &&
                      c.conditioning->contains(theta, 1e-9) && c.oracle->contains(theta, 1e-9);
      failures += !ok;
      worst = std::max({worst, c.reduction->lower - c.oracle->lower, c.oracle->upper - c.reduction->upper,
                        c.conditioning->lower - c.oracle->lower, c.oracle->upper - c.conditioning->upper});
    }
  }
  return check(failures == 0, std::to_string(runs) + " instances (200 without, 200 with instrument), " +
                                  std::to_string(failures) + " failures, max containment breach " + fmt("%.2e", worst));
}

// 7. Conditioning on the instrument arm never loosens reduction bounds.
Verdict instrument_tightens() {
  std::mt19937_64 rng(707);
  std::uniform_int_distribution<int> level(0, 2);
  int failures = 0;
  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    const auto scm = oracle::dirichlet_scm(rng, true, 2, 2, 6, 3);
    std::vector<int> rule(6);
    for (auto& r : rule) r = level(rng);
    const auto with_z = make_model(3, 6, true, rule);
    const auto without_z = make_model(3, 6, false, rule);
    const JointTable t(with_z.observed(), scm.observed(), 1e-10);
    const auto iv = itrb::reduction_bounds({with_z, t});
    const auto plain = itrb::reduction_bounds({without_z, itrb::marginalize(t, {"A", "Y", "X"})});
    failures += !iv.within(plain, 1e-8);
    worst = std::max({worst, plain.lower - iv.lower, iv.upper - plain.upper});
  }
  return check(failures == 0,
               "500 instances, " + std::to_string(failures) + " failures, max breach " + fmt("%.2e", worst));
}

// 8. LEAP clinical utility intervals.
Verdict leap_reproduction() {
  const fs::path root = ITRB_SOURCE_DIR;
  const auto data_path = root / "data" / "leap" / "leap.csv";
  if (!fs::exists(data_path)) return {Outcome::skip, "dataset absent at " + data_path.string()};
  struct Case {
    const char* config;
    double red_lo, red_hi, cond_lo, cond_hi;
  };
  std::string detail;
  bool ok = true;
  for (const Case& c : {Case{"leap_f1.json", -0.154, -0.109, -0.153, -0.108},
                        Case{"leap_f2.json", -0.164, 0.234, -0.163, 0.237}}) {
    auto cfg = itrb::io::load_analysis_config(root / "configs" / c.config);
    cfg.query = Query::cu;
    cfg.strategy = itrb::StrategySelection::both;
    const auto data = itrb::io::load_data(data_path, cfg);
    const auto r = itrb::run_strategies(itrb::io::make_request(cfg, data));
    auto near = [](double a, double b) { return std::abs(a - b) <= 0.005; };
    ok = ok && near(r.reduction->lower, c.red_lo) && near(r.reduction->upper, c.red_hi) &&
         near(r.conditioning->lower, c.cond_lo) && near(r.conditioning->upper, c.cond_hi);
    char buf[200];
    std::snprintf(buf, sizeof buf, "%s N=%zu reduction [%.3f, %.3f] conditioning [%.3f, %.3f]; ", c.config,
                  data.records.size(), r.reduction->lower, r.reduction->upper, r.conditioning->lower,
                  r.conditioning->upper);
    detail += buf;
  }
  return check(ok, detail);
}

// 9. Reports are reproducible, and parallel runs match serial ones.
int run_cli(const std::string& args) {
  const std::string cmd = std::string(ITRB_CLI_PATH) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Verdict reproducible_reports() {
  std::random_device rd;
  const auto dir = fs::temp_directory_path() / ("itrbounds-acceptance-" + std::to_string(rd()));
  fs::create_directories(dir);
  auto path = [&](const char* name) { return (dir / name).string(); };
  const std::string base = "simulate -n 500 -s 8675309 ";
  bool ok = run_cli(base + "--no-timestamp -o " + path("a.json")) == 0 &&
            run_cli(base + "--no-timestamp -o " + path("b.json")) == 0 &&
            run_cli(base + "--no-timestamp -t 4 -o " + path("par.json")) == 0 &&
            run_cli(base + "-o " + path("ts1.json")) == 0 && run_cli(base + "-o " + path("ts2.json")) == 0;
  std::string detail = "500-replication simulate reports";
  if (ok) {
    using itrb::io::detail::read_file;
    const auto a = read_file(path("a.json"));
    const bool same = a == read_file(path("b.json"));
    const bool parallel = a == read_file(path("par.json"));
    auto t1 = itrb::io::json::parse(read_file(path("ts1.json")));
    auto t2 = itrb::io::json::parse(read_file(path("ts2.json")));
    const bool stamped = t1["provenance"].contains("timestamp");
    t1["provenance"].erase("timestamp");
    t2["provenance"].erase("timestamp");
    const bool modulo_timestamp = stamped && t1 == t2 && itrb::io::render(t1) == a;
    ok = same && parallel && modulo_timestamp;
    detail += std::string(": repeat ") + (same ? "identical" : "DIFFERENT") + ", 4 threads vs serial " +
              (parallel ? "identical" : "DIFFERENT") + ", timestamped runs " +
              (modulo_timestamp ? "identical modulo timestamp" : "DIFFERENT");
  } else {
    detail += ": simulate command failed";
  }
  fs::remove_all(dir);
  return check(ok, detail);
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria{
      {"reduction LP equals closed form on binary tables", reduction_matches_closed_form},
      {"stratum LP equals closed form for k in {2, 3}", stratum_matches_closed_form},
      {"simulation bounds valid for both strategies", simulation_validity},
      {"conditioning never wider than reduction in simulation", simulation_conjecture},
      {"strategies coincide on binary non-instrumented data", binary_strategies_coincide},
      {"direct oracle inside both strategies, all contain the truth", oracle_containment},
      {"instrument-conditioned reduction inside marginal reduction", instrument_tightens},
      {"LEAP clinical utility intervals", leap_reproduction},
      {"simulation reports reproducible, parallel equals serial", reproducible_reports},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].run();
    } catch (const std::exception& e) {
      v = {Outcome::fail, std::string("exception: ") + e.what()};
    }
    const char* tag = v.outcome == Outcome::pass ? "PASS" : v.outcome == Outcome::fail ? "FAIL" : "SKIP";
    std::printf("%s  %zu  %s: %s\n", tag, i + 1, criteria[i].name, v.detail.c_str());
    std::fflush(stdout);
    failed += v.outcome == Outcome::fail;
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
