// itrbounds: bounds on the value of a treatment rule under unmeasured confounding.
//
//   itrbounds bounds   --config cfg.json --data data.csv [--output report.json]
//   itrbounds compare  --config cfg.json --data data.csv [--output report.json]
//   itrbounds simulate [--config sim.json] [--replications N] [--seed S] [--output report.json]
//
// Exit codes: 0 ok, 1 internal error, 2 invalid config or arguments, 3 data
// inconsistency, 4 LP infeasible.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "itrbounds/io.hpp"

namespace {

using itrb::io::json;

enum ExitCode { kOk = 0, kInternal = 1, kInvalidConfig = 2, kDataError = 3, kInfeasible = 4 };

struct AnalysisArgs {
  std::string config;
  std::string data;
  std::string output;
  std::string strategy;
  std::string query;
  std::optional<std::uint64_t> oracle_cap;
  std::string strata_csv;
  bool no_timestamp = false;
  bool quiet = false;
};

struct SimArgs {
  std::string config;
  std::optional<std::size_t> replications;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string strategy;
  bool oracle = false;
  std::string output;
  bool no_records = false;
  bool no_timestamp = false;
};

void emit(const json& report, const std::string& path) {
  const std::string text = itrb::io::render(report);
  if (path.empty()) {
    std::cout << text;
  } else {
    itrb::io::write_file_atomically(path, text);
  }
}

void print_interval(const char* label, const json& results, const char* key) {
  if (!results.contains(key)) return;
  const auto& r = results.at(key);
  std::fprintf(stderr, "%-13s [%.3f, %.3f]  width %.3f\n", label, r.at("lower").get<double>(),
               r.at("upper").get<double>(), r.at("width").get<double>());
}

int run_analysis(const AnalysisArgs& args, bool compare) {
  auto cfg = itrb::io::load_analysis_config(args.config);
  if (!args.strategy.empty()) {
    auto s = itrb::parse_strategy_selection(args.strategy);
    if (!s) throw itrb::ModelError("unknown strategy " + args.strategy);
    cfg.strategy = *s;
  }
  if (!args.query.empty()) {
    auto q = itrb::parse_query(args.query);
    if (!q) throw itrb::ModelError("unknown query " + args.query);
    if (*q != itrb::Query::theta_f && !cfg.guideline_table)
      throw itrb::ModelError("query " + args.query + " requires a guideline");
    cfg.query = *q;
  }
  if (args.oracle_cap) cfg.oracle_cap = *args.oracle_cap;

  const auto data = itrb::io::load_data(args.data, cfg, args.quiet ? nullptr : &std::clog);
  const json report = compare ? itrb::io::cmd_compare(cfg, data, !args.no_timestamp)
                              : itrb::io::cmd_bounds(cfg, data, !args.no_timestamp);

  if (!args.strata_csv.empty()) {
    const auto req = itrb::io::make_request(cfg, data);
    itrb::StrategyComparison c;
    c.conditioning = itrb::conditioning_bounds(req);
    itrb::io::write_file_atomically(args.strata_csv, itrb::io::strata_csv(c, cfg.model()));
  }
  std::string output = args.output;
  if (output.empty() && cfg.output) output = *cfg.output;
  emit(report, output);

  if (!args.quiet) {
    const auto& results = report.at("results");
    print_interval("reduction", results, "reduction");
    print_interval("conditioning", results, "conditioning");
    print_interval("direct_oracle", results, "direct_oracle");
    if (results.contains("oracle_note")) std::clog << results.at("oracle_note").get<std::string>() << "\n";
  }
  return kOk;
}

int run_simulation(const SimArgs& args) {
  json doc = json::object();
  if (!args.config.empty()) {
    std::ifstream in(args.config);
    if (!in) throw itrb::ModelError("cannot open " + args.config);
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw itrb::ModelError("simulation config is not valid JSON: " + std::string(e.what()));
    }
  }
  if (args.replications) doc["replications"] = *args.replications;
  if (args.seed) doc["seed"] = *args.seed;
  if (args.threads) doc["threads"] = *args.threads;
  if (args.oracle) doc["oracle"] = true;
  if (!args.strategy.empty()) {
    if (args.strategy == "both") doc["strategies"] = {"reduction", "conditioning"};
    else doc["strategies"] = {args.strategy};
  }
  const auto config = itrb::io::parse_sim_config(doc);
  const json report = itrb::io::cmd_simulate(config, !args.no_records, !args.no_timestamp);
  emit(report, args.output);
  const auto& a = report.at("aggregates");
  std::fprintf(stderr, "replications %zu  validity reduction %.6f conditioning %.6f  conjecture violations %zu\n",
               a.at("replications").get<std::size_t>(), a.at("reduction_validity_rate").get<double>(),
               a.at("conditioning_validity_rate").get<double>(), a.at("conjecture_violations").get<std::size_t>());
  return kOk;
}

void add_analysis_options(CLI::App* cmd, AnalysisArgs& args) {
  cmd->add_option("-c,--config", args.config, "analysis config (JSON)")->required();
  cmd->add_option("-d,--data", args.data, "data file (CSV, integer codes)")->required();
  cmd->add_option("-o,--output", args.output, "report path (default: config output, else stdout)");
  cmd->add_option("--strategy", args.strategy, "reduction | conditioning | both | with_oracle");
  cmd->add_option("--query", args.query, "theta_f | theta_g | cu");
  cmd->add_option("--oracle-cap", args.oracle_cap, "maximum response-type classes for the direct oracle");
  cmd->add_option("--strata-csv", args.strata_csv, "also write per-stratum conditioning bounds as CSV");
  cmd->add_flag("--no-timestamp", args.no_timestamp, "omit the timestamp from the report");
  cmd->add_flag("-q,--quiet", args.quiet, "no log output");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Partial-identification bounds for individualized treatment rules"};
  app.set_version_flag("--version", std::string(itrb::kVersion));
  app.require_subcommand(1);

  AnalysisArgs bounds_args, compare_args;
  auto* bounds = app.add_subcommand("bounds", "bound theta_f, theta_g or CU(f,g) from data");
  add_analysis_options(bounds, bounds_args);
  auto* compare = app.add_subcommand("compare", "run both strategies and the direct oracle when feasible");
  add_analysis_options(compare, compare_args);

  SimArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "simulation study on random structural models");
  simulate->add_option("-c,--config", sim_args.config, "simulation config (JSON)");
  simulate->add_option("-n,--replications", sim_args.replications, "number of replications");
  simulate->add_option("-s,--seed", sim_args.seed, "master seed");
  simulate->add_option("-t,--threads", sim_args.threads, "worker threads (0: all cores)");
  simulate->add_option("--strategy", sim_args.strategy, "reduction | conditioning | both");
  simulate->add_flag("--oracle", sim_args.oracle, "also run the direct oracle when within the cap");
  simulate->add_option("-o,--output", sim_args.output, "report path (default: stdout)");
  simulate->add_flag("--no-records", sim_args.no_records, "aggregates only");
  simulate->add_flag("--no-timestamp", sim_args.no_timestamp, "omit the timestamp from the report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalidConfig;
  }

  try {
    if (*bounds) return run_analysis(bounds_args, false);
    if (*compare) return run_analysis(compare_args, true);
    if (*simulate) return run_simulation(sim_args);
  } catch (const itrb::ModelError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalidConfig;
  } catch (const itrb::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const itrb::InfeasibleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}
