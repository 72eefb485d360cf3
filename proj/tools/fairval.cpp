// Command-line experiment runner.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "fairval/fairval.hpp"

namespace {

enum Exit { ok = 0, config_error = 1, input_error = 2, numerical_error = 3 };

fairval::Json read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw fairval::ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return fairval::Json::parse(buf.str());
  } catch (const fairval::Json::parse_error& e) {
    throw fairval::ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Truthful data valuation experiments"};
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "-";
  std::string format = "csv";
  std::optional<int> threads;
  app.add_option("--config", config_path, "experiment configuration (JSON)")->required();
  app.add_option("--seed", seed, "override the configured seed");
  app.add_option("--out", out, "report path, '-' for stdout");
  app.add_option("--format", format, "report format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--threads", threads, "worker threads (default: FAIRVAL_THREADS or 1)")
      ->check(CLI::PositiveNumber);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return config_error;
  }

  try {
    fairval::Json doc = read_config(config_path);
    if (!doc.is_object()) throw fairval::ConfigError("config must be a JSON object");
    if (seed) doc["seed"] = *seed;
    if (threads) doc["threads"] = *threads;
    else if (!doc.contains("threads")) doc["threads"] = fairval::default_threads();
    auto cfg = fairval::parse_config(doc);
    auto report = fairval::run_experiment(cfg);
    fairval::emit_report(report, fairval::parse_report_format(format), out, std::cout);
  } catch (const fairval::ConfigError& e) {
    std::cerr << "fairval: configuration error: " << e.what() << '\n';
    return config_error;
  } catch (const fairval::InputError& e) {
    std::cerr << "fairval: input error: " << e.what() << '\n';
    return input_error;
  } catch (const fairval::NumericalError& e) {
    std::cerr << "fairval: numerical error: " << e.what() << '\n';
    return numerical_error;
  }
  return ok;
}
