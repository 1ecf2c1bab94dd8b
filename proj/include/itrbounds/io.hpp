#pragma once

// Config files, CSV data and JSON reports.
//
// Analysis config (JSON):
//   {
//     "variables": [{"name": "Z", "cardinality": 2, "role": "instrument", "column": "arm"}, ...],
//     "rule": {"table": [1, 2]},            // row-major over the rule covariates
//     "guideline": {"table": [0, 0]},       // optional
//     "query": "theta_f" | "theta_g" | "cu",
//     "strategy": "reduction" | "conditioning" | "both" | "with_oracle",
//     "oracle_cap": 10000000,
//     "output": "report.json"               // optional
//   }
// Data: comma-separated, header row, integer codes 0..d-1, no missing cells.

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "itrbounds/distribution.hpp"
#include "itrbounds/errors.hpp"
#include "itrbounds/model.hpp"
#include "itrbounds/response_lp.hpp"
#include "itrbounds/simulation.hpp"
#include "itrbounds/strategies.hpp"
#include "itrbounds/version.hpp"

namespace itrb::io {

using json = nlohmann::json;

struct VariableDeclaration {
  VariableSpec spec;
  std::string column;
};

struct AnalysisConfig {
  std::vector<VariableDeclaration> variables;
  std::vector<int> rule_table;
  std::optional<std::vector<int>> guideline_table;
  Query query = Query::theta_f;
  StrategySelection strategy = StrategySelection::both;
  std::uint64_t oracle_cap = kDefaultClassCap;
  std::optional<std::string> output;

  CausalModel model() const {
    CausalModel m;
    std::vector<int> cards;
    for (const auto& v : variables) {
      m.variables.push_back(v.spec);
      if (v.spec.role == Role::rule_covariate) cards.push_back(v.spec.cardinality);
    }
    m.rule = TreatmentRule(cards, rule_table);
    if (guideline_table) m.guideline = TreatmentRule(cards, *guideline_table);
    return m;
  }
};

namespace detail {

inline std::vector<int> parse_table(const json& node, const char* what) {
  const json& table = node.is_object() ? node.at("table") : node;
  if (!table.is_array()) throw ModelError(std::string(what) + " table must be an array of treatment levels");
  std::vector<int> out;
  for (const auto& v : table) {
    if (!v.is_number_integer()) throw ModelError(std::string(what) + " table entries must be integers");
    out.push_back(v.get<int>());
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace detail

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  std::ostringstream out;
  for (unsigned int i = 0; i < length; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return out.str();
}

inline AnalysisConfig parse_analysis_config(const json& doc) {
  try {
    AnalysisConfig cfg;
    for (const auto& v : doc.at("variables")) {
      VariableDeclaration d;
      d.spec.name = v.at("name").get<std::string>();
      d.spec.cardinality = v.at("cardinality").get<int>();
      const auto role_text = v.at("role").get<std::string>();
      const auto role = parse_role(role_text);
      if (!role || *role == Role::latent) throw ModelError("unknown role '" + role_text + "' for " + d.spec.name);
      d.spec.role = *role;
      d.column = v.value("column", d.spec.name);
      cfg.variables.push_back(std::move(d));
    }
    cfg.rule_table = detail::parse_table(doc.at("rule"), "rule");
    if (doc.contains("guideline") && !doc.at("guideline").is_null())
      cfg.guideline_table = detail::parse_table(doc.at("guideline"), "guideline");
    if (doc.contains("query")) {
      auto q = parse_query(doc.at("query").get<std::string>());
      if (!q) throw ModelError("unknown query " + doc.at("query").dump());
      cfg.query = *q;
    }
    if (doc.contains("strategy")) {
      auto s = parse_strategy_selection(doc.at("strategy").get<std::string>());
      if (!s) throw ModelError("unknown strategy " + doc.at("strategy").dump());
      cfg.strategy = *s;
    }
    if (doc.contains("oracle_cap")) cfg.oracle_cap = doc.at("oracle_cap").get<std::uint64_t>();
    if (doc.contains("output")) cfg.output = doc.at("output").get<std::string>();

    const CausalModel m = cfg.model();
    auto violations = validate_model(m);
    if (!violations.empty()) {
      std::string msg = "invalid model:";
      for (const auto& v : violations) msg += "\n  " + v.message();
      throw ModelError(msg);
    }
    if (cfg.query != Query::theta_f && !cfg.guideline_table)
      throw ModelError(std::string("query ") + std::string(to_string(cfg.query)) + " requires a guideline");
    return cfg;
  } catch (const json::exception& e) {
    throw ModelError(std::string("malformed config: ") + e.what());
  }
}

inline AnalysisConfig load_analysis_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = detail::read_file(path);
  } catch (const DataError& e) {
    throw ModelError(e.what());
  }
  try {
    return parse_analysis_config(json::parse(text));
  } catch (const json::exception& e) {
    throw ModelError("config " + path.string() + " is not valid JSON: " + e.what());
  }
}

inline json to_json(const AnalysisConfig& cfg) {
  json vars = json::array();
  for (const auto& v : cfg.variables)
    vars.push_back({{"name", v.spec.name},
                    {"cardinality", v.spec.cardinality},
                    {"role", std::string(to_string(v.spec.role))},
                    {"column", v.column}});
  json out = {{"variables", vars},
              {"rule", {{"table", cfg.rule_table}}},
              {"query", std::string(to_string(cfg.query))},
              {"strategy", std::string(to_string(cfg.strategy))},
              {"oracle_cap", cfg.oracle_cap}};
  out["guideline"] = cfg.guideline_table ? json{{"table", *cfg.guideline_table}} : json(nullptr);
  return out;
}

struct Dataset {
  std::vector<VariableSpec> variables;          // config order
  std::vector<std::vector<int>> records;        // one per data row
  std::map<std::string, std::vector<std::size_t>> value_counts;
  std::string digest;                           // SHA-256 of the file bytes
};

inline Dataset parse_data(const std::string& text, const AnalysisConfig& cfg) {
  Dataset out;
  out.digest = sha256_hex(text);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError("data file is empty: header row missing");
  const auto header = detail::split_csv_line(line);

  std::vector<std::size_t> column_of;
  for (const auto& v : cfg.variables) {
    auto it = std::find(header.begin(), header.end(), v.column);
    if (it == header.end()) throw DataError("data has no column '" + v.column + "' for variable " + v.spec.name);
    column_of.push_back(static_cast<std::size_t>(it - header.begin()));
    out.variables.push_back(v.spec);
    out.value_counts[v.spec.name].assign(static_cast<std::size_t>(v.spec.cardinality), 0);
  }

  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    std::vector<int> record;
    for (std::size_t j = 0; j < cfg.variables.size(); ++j) {
      const auto& decl = cfg.variables[j];
      const std::string where = "row " + std::to_string(row) + ", column '" + decl.column + "'";
      if (column_of[j] >= cells.size() || cells[column_of[j]].empty())
        throw DataError(where + ": missing value");
      const std::string& cell = cells[column_of[j]];
      std::size_t used = 0;
      int value = 0;
      try {
        value = std::stoi(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != cell.size() || used == 0) throw DataError(where + ": '" + cell + "' is not an integer code");
      if (value < 0 || value >= decl.spec.cardinality)
        throw DataError(where + ": code " + std::to_string(value) + " outside 0.." +
                        std::to_string(decl.spec.cardinality - 1));
      ++out.value_counts[decl.spec.name][static_cast<std::size_t>(value)];
      record.push_back(value);
    }
    out.records.push_back(std::move(record));
  }
  if (out.records.empty()) throw DataError("data file has no records");
  return out;
}

inline Dataset load_data(const std::filesystem::path& path, const AnalysisConfig& cfg, std::ostream* log = nullptr) {
  Dataset d = parse_data(detail::read_file(path), cfg);
  if (log) {
    *log << "loaded " << d.records.size() << " records from " << path.string() << "\n";
    for (const auto& [name, counts] : d.value_counts) {
      *log << "  " << name << ":";
      for (std::size_t v = 0; v < counts.size(); ++v) *log << " " << v << "=" << counts[v];
      *log << "\n";
    }
  }
  return d;
}

inline json to_json(const StratumBound& s) {
  return {{"x", s.covariates}, {"w", s.extras},   {"weight", s.weight},          {"lower", s.lower},
          {"upper", s.upper},  {"skipped", s.skipped}, {"class_count", s.class_count}};
}

inline json to_json(const BoundsResult& r) {
  json strata = json::array();
  for (const auto& s : r.diagnostics.strata) strata.push_back(to_json(s));
  return {{"lower", r.lower},
          {"upper", r.upper},
          {"width", r.width()},
          {"query", std::string(to_string(r.query))},
          {"strategy", std::string(to_string(r.strategy))},
          {"diagnostics",
           {{"class_count", r.diagnostics.class_count},
            {"lp_rows", r.diagnostics.lp_rows},
            {"lp_columns", r.diagnostics.lp_columns},
            {"solver_status", r.diagnostics.solver_status},
            {"observed", r.diagnostics.observed},
            {"strata", strata}}}};
}

inline json to_json(const StrategyComparison& c) {
  json results = json::object();
  if (c.reduction) results["reduction"] = to_json(*c.reduction);
  if (c.conditioning) results["conditioning"] = to_json(*c.conditioning);
  if (c.oracle) results["direct_oracle"] = to_json(*c.oracle);
  if (!c.oracle_note.empty()) results["oracle_note"] = c.oracle_note;
  return results;
}

inline json comparison_json(const StrategyComparison& c) {
  json out = {{"width_difference", c.width_difference},
              {"conditioning_within_reduction", c.conditioning_within_reduction},
              {"conditioning_not_wider", c.conditioning_not_wider}};
  if (c.oracle) {
    out["oracle_within_reduction"] = c.oracle_within_reduction;
    out["oracle_within_conditioning"] = c.oracle_within_conditioning;
  } else {
    out["oracle"] = c.oracle_note.empty() ? "not requested" : c.oracle_note;
  }
  return out;
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

// Everything except provenance.timestamp is a function of the inputs.
inline void stamp(json& report, bool with_timestamp) {
  json body = report;
  body.erase("provenance");
  report["provenance"]["report_sha256"] = sha256_hex(body.dump());
  if (with_timestamp) report["provenance"]["timestamp"] = utc_timestamp();
}

inline std::string render(const json& report) { return report.dump(2) + "\n"; }

inline StrategyRequest make_request(const AnalysisConfig& cfg, const Dataset& data) {
  return StrategyRequest{cfg.model(), empirical_joint(data.records, data.variables), cfg.query, cfg.strategy,
                         cfg.oracle_cap};
}

inline json base_report(const char* command, const AnalysisConfig& cfg, const Dataset& data) {
  json counts = json::object();
  for (const auto& [name, c] : data.value_counts) counts[name] = c;
  return {{"command", command},
          {"tool", {{"name", "itrbounds"}, {"version", kVersion}}},
          {"config", to_json(cfg)},
          {"data", {{"records", data.records.size()}, {"value_counts", counts}}},
          {"provenance", {{"config_sha256", sha256_hex(to_json(cfg).dump())}, {"data_sha256", data.digest}}}};
}

inline json cmd_bounds(const AnalysisConfig& cfg, const Dataset& data, bool with_timestamp = true) {
  const auto req = make_request(cfg, data);
  const auto result = run_strategies(req);
  json report = base_report("bounds", cfg, data);
  report["results"] = to_json(result);
  if (result.reduction && result.conditioning) report["comparison"] = comparison_json(result);
  stamp(report, with_timestamp);
  return report;
}

inline json cmd_compare(const AnalysisConfig& cfg, const Dataset& data, bool with_timestamp = true) {
  const auto result = compare_strategies(make_request(cfg, data));
  json report = base_report("compare", cfg, data);
  report["results"] = to_json(result);
  report["comparison"] = comparison_json(result);
  stamp(report, with_timestamp);
  return report;
}

// Flat per-stratum table for plotting.
inline std::string strata_csv(const StrategyComparison& c, const CausalModel& model) {
  std::ostringstream out;
  out << std::setprecision(17) << "strategy";
  for (const auto& v : model.rule_covariates()) out << "," << v.name;
  for (const auto& v : model.extra_covariates()) out << "," << v.name;
  out << ",weight,lower,upper,skipped\n";
  if (c.conditioning)
    for (const auto& s : c.conditioning->diagnostics.strata) {
      out << "conditioning";
      for (int x : s.covariates) out << "," << x;
      for (int w : s.extras) out << "," << w;
      out << "," << s.weight << "," << s.lower << "," << s.upper << "," << (s.skipped ? 1 : 0) << "\n";
    }
  return out.str();
}

// Simulation config (JSON), every field optional:
//   {"replications": 10000, "seed": 20250704, "instrument": true,
//    "cardinalities": {"Z": 2, "U": 2, "A": 3, "X": 6}, "rule": [0, 0, 1, 1, 2, 2],
//    "strategies": ["reduction", "conditioning"], "oracle": false, "oracle_cap": 10000000, "threads": 1}
inline sim::SimConfig parse_sim_config(const json& doc) {
  try {
    sim::SimConfig c;
    c.replications = doc.value("replications", c.replications);
    c.master_seed = doc.value("seed", c.master_seed);
    c.with_instrument = doc.value("instrument", c.with_instrument);
    if (doc.contains("cardinalities")) {
      const auto& card = doc.at("cardinalities");
      c.z_levels = card.value("Z", c.z_levels);
      c.u_levels = card.value("U", c.u_levels);
      c.a_levels = card.value("A", c.a_levels);
      c.x_levels = card.value("X", c.x_levels);
    }
    if (doc.contains("rule")) {
      c.rule = TreatmentRule({c.x_levels}, detail::parse_table(doc.at("rule"), "rule"));
    } else if (c.x_levels != 6 || c.a_levels != 3) {
      throw ModelError("a rule is required when X or A differ from the default 6/3 levels");
    }
    if (doc.contains("strategies")) {
      c.run_reduction = c.run_conditioning = false;
      for (const auto& s : doc.at("strategies")) {
        const auto name = s.get<std::string>();
        if (name == "reduction") c.run_reduction = true;
        else if (name == "conditioning") c.run_conditioning = true;
        else throw ModelError("unknown simulation strategy " + name);
      }
    }
    c.oracle_enabled = doc.value("oracle", c.oracle_enabled);
    c.oracle_cap = doc.value("oracle_cap", c.oracle_cap);
    c.threads = doc.value("threads", c.threads);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ModelError(std::string("malformed simulation config: ") + e.what());
  }
}

inline json to_json(const sim::SimConfig& c) {
  json strategies = json::array();
  if (c.run_reduction) strategies.push_back("reduction");
  if (c.run_conditioning) strategies.push_back("conditioning");
  // Thread count is deliberately absent: it does not affect the results.
  return {{"replications", c.replications},
          {"seed", c.master_seed},
          {"instrument", c.with_instrument},
          {"cardinalities", {{"Z", c.with_instrument ? c.z_levels : 0}, {"U", c.u_levels}, {"A", c.a_levels}, {"X", c.x_levels}}},
          {"rule", c.rule.table()},
          {"strategies", strategies},
          {"oracle", c.oracle_enabled},
          {"oracle_cap", c.oracle_cap}};
}

inline json to_json(const sim::SimAggregates& a) {
  return {{"replications", a.replications},
          {"reduction_validity_rate", a.reduction_validity_rate},
          {"conditioning_validity_rate", a.conditioning_validity_rate},
          {"oracle_runs", a.oracle_runs},
          {"oracle_validity_rate", a.oracle_validity_rate},
          {"mean_reduction_width", a.mean_reduction_width},
          {"mean_conditioning_width", a.mean_conditioning_width},
          {"mean_width_gain", a.mean_width_gain},
          {"max_width_excess", a.max_width_excess},
          {"conjecture_violations", a.conjecture_violations},
          {"containment_failures", a.containment_failures},
          {"anomalies", a.anomalies}};
}

inline json to_json(const sim::SimRecord& r) {
  auto interval = [](const std::optional<sim::Interval>& i) {
    return i ? json{{"lower", i->lower}, {"upper", i->upper}} : json(nullptr);
  };
  json out = {{"index", r.index},
              {"theta_true", r.theta_true},
              {"reduction", interval(r.reduction)},
              {"conditioning", interval(r.conditioning)},
              {"reduction_valid", r.reduction_valid},
              {"conditioning_valid", r.conditioning_valid},
              {"conditioning_within_reduction", r.conditioning_within_reduction},
              {"conjecture_violation", r.conjecture_violation}};
  if (r.oracle) {
    out["oracle"] = interval(r.oracle);
    out["oracle_valid"] = r.oracle_valid;
  }
  if (!r.anomaly.empty()) out["anomaly"] = r.anomaly;
  return out;
}

inline json cmd_simulate(const sim::SimConfig& config, bool include_records = true, bool with_timestamp = true) {
  const auto report = sim::run_study(config);
  json out = {{"command", "simulate"},
              {"tool", {{"name", "itrbounds"}, {"version", kVersion}}},
              {"config", to_json(config)},
              {"aggregates", to_json(report.aggregates)},
              {"provenance", {{"seed", config.master_seed}, {"config_sha256", sha256_hex(to_json(config).dump())}}}};
  if (config.oracle_enabled && report.aggregates.oracle_runs == 0)
    out["oracle_note"] = "oracle unavailable: class count exceeds the cap for this shape";
  if (include_records) {
    json records = json::array();
    for (const auto& r : report.records) records.push_back(to_json(r));
    out["records"] = std::move(records);
  }
  stamp(out, with_timestamp);
  return out;
}

// Write via a temporary sibling and rename, so failures never leave a partial file.
inline void write_file_atomically(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    if (!out) throw Error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace itrb::io
