// Command-line driver: one subcommand per experiment, JSON config files with
// dotted-path overrides, CSV output per sweep.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "starsec/config.hpp"
#include "starsec/harness.hpp"

namespace {

using starsec::harness::ExperimentId;
using starsec::harness::ExperimentSpec;

struct CliArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<std::string> out_dir;
};

ExperimentSpec make_spec(ExperimentId id, const CliArgs& args) {
  nlohmann::json j = nlohmann::json::object();
  if (!args.config_path.empty()) {
    std::ifstream is(args.config_path);
    if (!is) throw std::invalid_argument("config: cannot open '" + args.config_path + "'");
    try {
      is >> j;
    } catch (const nlohmann::json::parse_error& e) {
      throw std::invalid_argument("config: parse error in '" + args.config_path +
                                  "': " + e.what());
    }
  }
  for (const std::string& ov : args.overrides) starsec::config::apply_override(j, ov);
  ExperimentSpec spec = starsec::config::spec_from_json(j);
  spec.id = id;
  if (args.seed) spec.seed = *args.seed;
  if (args.trials) spec.trials = *args.trials;
  if (args.out_dir) spec.out_dir = *args.out_dir;
  return spec;
}

int run(ExperimentId id, const CliArgs& args) {
  ExperimentSpec spec = make_spec(id, args);
  if (id == ExperimentId::SolveOne) {
    std::cout << starsec::harness::solve_one_json(spec) << "\n";
    return 0;
  }
  spec.apply_defaults();
  auto records = starsec::harness::run_experiment(spec);
  for (const auto& r : records) {
    if (r.metric.rfind("trace_iter_", 0) == 0) continue;
    std::printf("%s x=%g %s mean=%.6g std=%.3g trials=%d infeasible=%d\n", r.scheme.c_str(),
                r.x, r.metric.c_str(), r.mean, r.stddev, r.trials, r.infeasible);
  }
  std::filesystem::create_directories(spec.out_dir);
  const std::string path =
      (std::filesystem::path(spec.out_dir) / (std::string(to_string(id)) + ".csv")).string();
  starsec::harness::emit_csv(records, path);
  std::printf("wrote %s (%zu rows)\n", path.c_str(), records.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"STAR surface uplink secrecy simulator"};
  app.require_subcommand(1);

  CliArgs args;
  app.add_option("--config", args.config_path, "JSON experiment description");
  app.add_option("--override", args.overrides,
                 "dotted.path=value applied onto the config document");
  std::uint64_t seed_opt = 0;
  int trials_opt = 0;
  std::string out_opt;
  auto* seed_flag = app.add_option("--seed", seed_opt, "root seed");
  auto* trials_flag = app.add_option("--trials", trials_opt, "Monte-Carlo trials per point");
  auto* out_flag = app.add_option("--out", out_opt, "output directory for CSV files");

  std::vector<std::pair<ExperimentId, CLI::App*>> subs;
  for (ExperimentId id :
       {ExperimentId::SopTightness, ExperimentId::ConvergeFull, ExperimentId::ConvergeStat,
        ExperimentId::SweepPower, ExperimentId::SweepElements, ExperimentId::Quantization,
        ExperimentId::Placement, ExperimentId::SolveOne}) {
    CLI::App* sub = app.add_subcommand(to_string(id));
    sub->fallthrough();
    subs.emplace_back(id, sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (seed_flag->count()) args.seed = seed_opt;
  if (trials_flag->count()) args.trials = trials_opt;
  if (out_flag->count()) args.out_dir = out_opt;

  try {
    for (const auto& [id, sub] : subs)
      if (sub->parsed()) return run(id, args);
    std::fprintf(stderr, "no experiment selected\n");
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
