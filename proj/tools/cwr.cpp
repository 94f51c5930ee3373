// Experiment runner.
//
//   cwr --config run.json [--seed N] [--replicas N] [--out PATH]
//       [--format csv|jsonl] [--threads N]
//
// Exit codes: 0 success, 2 invalid config, 3 some row failed, 4 I/O error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cwr/experiment.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitSampler = 3;
constexpr int kExitIo = 4;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-type continuum Widom-Rowlinson experiments"};
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicas;
  std::optional<std::size_t> threads;
  std::string out;
  std::string format;
  app.add_option("--config", config_path, "experiment config (JSON)")->required();
  app.add_option("--seed", seed, "master seed, overrides the config");
  app.add_option("--replicas", replicas, "replicas per sweep point, overrides the config");
  app.add_option("--out", out, "output path, overrides the config");
  app.add_option("--format", format, "csv or jsonl")->check(CLI::IsMember({"csv", "jsonl"}));
  app.add_option("--threads", threads, "worker threads (0 = all cores)");
  app.set_version_flag("--version", cwr::kToolVersion);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  cwr::ExperimentConfig config;
  try {
    std::ifstream in(config_path);
    if (!in) throw cwr::IoError("cannot read config " + config_path);
    cwr::json j;
    try {
      j = cwr::json::parse(in, nullptr, true, true);
    } catch (const cwr::json::parse_error& e) {
      throw cwr::ValidationError({std::string("config: not valid JSON: ") + e.what()});
    }
    if (j.is_object()) {
      if (seed) j["seed"] = *seed;
      if (replicas) j["replicas"] = *replicas;
      if (threads) j["threads"] = *threads;
      if (!out.empty()) j["output"] = out;
      if (!format.empty()) j["format"] = format;
    }
    config = cwr::parse_experiment_config(j);
    if (config.output.empty()) throw cwr::ValidationError({"output: required (config key or --out)"});
  } catch (const cwr::ValidationError& e) {
    std::cerr << e.what() << '\n';
    return kExitValidation;
  } catch (const cwr::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }

  try {
    cwr::RecordSink sink(config.output, config.format);
    const auto result = cwr::run_experiment(config);
    sink.emit(config, result);
    const std::size_t failed = result.failed_rows();
    std::cerr << cwr::to_string(config.kind) << ": " << result.records.size() << " rows, " << failed
              << " failed -> " << config.output << '\n';
    for (const auto& r : result.records) {
      if (r.failed) std::cerr << "  point " << r.point << " replica " << r.replica << ": " << r.error << '\n';
    }
    return failed > 0 ? kExitSampler : 0;
  } catch (const cwr::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
}
