#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "yieldnav/image.hpp"
#include "yieldnav/metrics.hpp"
#include "yieldnav/pipeline.hpp"
#include "yieldnav/scenario.hpp"

namespace fs = std::filesystem;
using namespace yieldnav;

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

struct RunOutcome {
  Metrics metrics;
  int exit_code;
};

RunOutcome run_one(const Scenario& scenario, bool avoidance, bool strict,
                   const std::string& trace_path, const std::string& metrics_path,
                   const std::string& dump_dir) {
  Pipeline pipeline(scenario, avoidance);
  pipeline.run_all();
  const RunTrace trace = pipeline.trace();
  const Metrics metrics = compute_metrics(trace);

  if (!trace_path.empty()) trace.save(trace_path);
  if (!metrics_path.empty()) write_text(metrics_path, metrics.to_json().dump(2) + "\n");
  if (!dump_dir.empty()) {
    std::error_code ec;
    fs::create_directories(dump_dir, ec);
    tsdf_to_gray(pipeline.tsdf()).save_pgm((fs::path(dump_dir) / "tsdf.pgm").string());
    if (pipeline.last_field()) {
      potential_to_gray(*pipeline.last_field())
          .save_pgm((fs::path(dump_dir) / "potential.pgm").string());
      feasible_to_gray(*pipeline.last_field())
          .save_pgm((fs::path(dump_dir) / "feasible.pgm").string());
    }
  }
  return {metrics, exit_code_for(metrics, strict)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic proactive conflict-avoidance simulator"};
  app.require_subcommand(1);

  std::string scenario_path, trace_path, metrics_path, dump_dir;
  std::string batch_dir, batch_out;
  std::string plot_trace, plot_out, replay_trace;
  std::int64_t seed_override = -1;
  bool disable_avoidance = false;
  bool strict_collisions = false;

  CLI::App* run = app.add_subcommand("run", "run one scenario");
  run->add_option("--scenario", scenario_path, "scenario JSON file")->required();
  run->add_option("--seed", seed_override, "override the scenario seed");
  run->add_flag("--disable-avoidance", disable_avoidance,
                "baseline: pursue the goal (or sit) regardless of tracks");
  run->add_option("--trace", trace_path, "write the JSONL trace here");
  run->add_option("--metrics", metrics_path, "write the metrics JSON here");
  run->add_option("--dump-dir", dump_dir, "write tsdf/potential/feasible debug images here");
  run->add_flag("--strict-collisions", strict_collisions, "exit 4 when any collision occurred");

  CLI::App* batch = app.add_subcommand("batch", "run every scenario in a directory");
  batch->add_option("--dir", batch_dir, "directory of scenario JSON files")->required();
  batch->add_option("--out", batch_out, "output directory for traces and metrics")->required();

  CLI::App* plot = app.add_subcommand("plot", "render plots from a trace");
  plot->add_option("--trace", plot_trace, "trace file")->required();
  plot->add_option("--out", plot_out, "output directory")->required();

  CLI::App* replay = app.add_subcommand("replay", "recompute metrics from a trace");
  replay->add_option("--trace", replay_trace, "trace file")->required();
  replay->add_option("--metrics", metrics_path, "write the metrics JSON here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      Scenario scenario = load_scenario(scenario_path);
      if (seed_override >= 0) scenario.seed = static_cast<std::uint64_t>(seed_override);
      const RunOutcome outcome = run_one(scenario, !disable_avoidance, strict_collisions,
                                         trace_path, metrics_path, dump_dir);
      std::cout << outcome.metrics.to_json().dump(2) << "\n";
      return outcome.exit_code;
    }
    if (batch->parsed()) {
      std::error_code ec;
      fs::create_directories(batch_out, ec);
      std::vector<fs::path> files;
      for (const auto& entry : fs::directory_iterator(batch_dir))
        if (entry.path().extension() == ".json") files.push_back(entry.path());
      std::sort(files.begin(), files.end());
      int worst = 0;
      for (const fs::path& file : files) {
        const Scenario scenario = load_scenario(file.string());
        const std::string stem = file.stem().string();
        const RunOutcome outcome =
            run_one(scenario, true, false, (fs::path(batch_out) / (stem + ".trace.jsonl")).string(),
                    (fs::path(batch_out) / (stem + ".metrics.json")).string(), "");
        std::cout << stem << ": exit " << outcome.exit_code << ", collisions "
                  << outcome.metrics.collisions << "\n";
        worst = std::max(worst, outcome.exit_code);
      }
      return worst;
    }
    if (plot->parsed()) {
      const RunTrace trace = RunTrace::load(plot_trace);
      for (const std::string& name : emit_plots(trace, plot_out))
        std::cout << name << "\n";
      return 0;
    }
    if (replay->parsed()) {
      const RunTrace trace = RunTrace::load(replay_trace);
      const Metrics metrics = compute_metrics(trace);
      if (!metrics_path.empty()) write_text(metrics_path, metrics.to_json().dump(2) + "\n");
      std::cout << metrics.to_json().dump(2) << "\n";
      return 0;
    }
  } catch (const ScenarioError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
