#pragma once

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>

#include "fairval/error.hpp"
#include "fairval/experiment.hpp"

namespace fairval {

enum class ReportFormat { csv, json };

inline ReportFormat parse_report_format(std::string_view s) {
  if (s == "csv") return ReportFormat::csv;
  if (s == "json") return ReportFormat::json;
  throw ConfigError("unknown report format '" + std::string(s) + "' (expected csv or json)");
}

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc{}) throw NumericalError("cannot format number");
  return std::string(buf, end);
}

inline Json report_to_json(const RunReport& r) {
  Json out;
  out["config"] = r.config;
  out["metadata"] = {{"config_hash", r.config_hash},
                     {"seed", r.seed},
                     {"wall_time_seconds", r.wall_seconds}};
  out["dvf"] = r.dvf;
  out["post_processing"] = r.post;
  out["estimator"] = r.estimator;
  out["sweep_axis"] = to_string(r.axis);
  out["points"] = Json::array();
  for (const auto& p : r.points) {
    Json jp;
    jp["label"] = p.label;
    if (p.sweep_value) jp["sweep_value"] = *p.sweep_value;
    jp["strategies"] = p.strategies;
    jp["weights"] = p.weights;
    if (!p.flagged.empty()) jp["flagged_coalitions"] = p.flagged;
    jp["repeats"] = Json::array();
    for (const auto& rep : p.repeats) {
      Json jr;
      jr["repeat"] = rep.repeat;
      jr["sources"] = Json::array();
      for (const auto& s : rep.sources) {
        Json js = {{"source", s.source},
                   {"strategy", s.strategy},
                   {"value", s.value},
                   {"semivalue", s.semivalue},
                   {"reward", s.reward}};
        if (s.std_error) js["std_error"] = *s.std_error;
        jr["sources"].push_back(std::move(js));
      }
      jp["repeats"].push_back(std::move(jr));
    }
    jp["summary"] = Json::array();
    for (const auto& s : p.summary) {
      Json js = {{"source", s.source},
                 {"mean_value", s.mean_value},
                 {"mean_semivalue", s.mean_semivalue},
                 {"mean_reward", s.mean_reward}};
      if (s.ci_value) js["ci95_value"] = *s.ci_value;
      if (s.ci_semivalue) js["ci95_semivalue"] = *s.ci_semivalue;
      if (s.ci_reward) js["ci95_reward"] = *s.ci_reward;
      jp["summary"].push_back(std::move(js));
    }
    out["points"].push_back(std::move(jp));
  }
  return out;
}

/// One row per (point, repeat, source). A sweep_value column is added for
/// numeric sweeps; strategy and weight sweeps are told apart by the strategy
/// column and the JSON report respectively.
inline void write_csv(const RunReport& r, std::ostream& os) {
  const bool numeric = r.axis != SweepAxis::none && r.axis != SweepAxis::strategy &&
                       r.axis != SweepAxis::weights;
  os << "repeat,source,strategy,value,reward";
  if (numeric) os << ",sweep_value";
  os << '\n';
  for (const auto& p : r.points) {
    for (const auto& rep : p.repeats) {
      for (const auto& s : rep.sources) {
        std::string strategy = s.strategy;
        if (strategy.find_first_of(",\"") != std::string::npos) {
          std::string q = "\"";
          for (char c : strategy) q += c == '"' ? std::string("\"\"") : std::string(1, c);
          strategy = q + "\"";
        }
        os << rep.repeat << ',' << s.source << ',' << strategy << ',' << format_double(s.value) << ','
           << format_double(s.reward);
        if (numeric) os << ',' << (p.sweep_value ? format_double(*p.sweep_value) : "");
        os << '\n';
      }
    }
  }
}

inline std::string report_text(const RunReport& r, ReportFormat f) {
  if (f == ReportFormat::json) return report_to_json(r).dump(2) + "\n";
  std::ostringstream os;
  write_csv(r, os);
  return os.str();
}

/// Writes the report to `path`, or to stdout when path is "-".
inline void emit_report(const RunReport& r, ReportFormat f, const std::string& path,
                        std::ostream& stdout_stream) {
  std::string text = report_text(r, f);
  if (path == "-") {
    stdout_stream << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw InputError("failed writing report to '" + path + "'");
}

}  // namespace fairval
