#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "morl/errors.hpp"
#include "morl/manifest.hpp"
#include "morl/svg.hpp"
#include "morl/trainer.hpp"

namespace fs = std::filesystem;

namespace {

int do_run(const std::string& manifest_path, long long seed_override,
           int workers_override, const std::string& out_override) {
  morl::ExperimentManifest manifest = morl::load_manifest(manifest_path);
  if (seed_override >= 0) {
    manifest.config.seed = static_cast<std::uint64_t>(seed_override);
  }
  if (workers_override > 0) {
    manifest.config.workers = workers_override;
  }
  // precedence: --out, then MORL_OUT_DIR, then the manifest
  if (!out_override.empty()) {
    manifest.out_dir = out_override;
  } else if (const char* env = std::getenv("MORL_OUT_DIR")) {
    manifest.out_dir = env;
  }
  manifest.config.validate();

  const morl::RunResult result = morl::execute_manifest(manifest);
  std::cout << "run " << manifest.name << " finished: " << manifest.out_dir
            << "\n";
  for (int k = 0; k < manifest.config.n_rewards; ++k) {
    std::cout << "  final mean_r" << (k + 1) << " = " << result.final_means[k]
              << "\n";
  }
  return 0;
}

int do_plot(const std::string& csv_path, const std::string& svg_path) {
  int K = 0;
  const auto rows = morl::read_metrics_csv(csv_path, &K);
  morl::write_file(svg_path, morl::render_metrics_svg(rows, K));
  std::cout << "wrote " << svg_path << "\n";
  return 0;
}

int do_compare(const std::vector<std::string>& run_dirs,
               const std::string& out_dir) {
  std::vector<morl::RunSeries> runs;
  runs.reserve(run_dirs.size());
  for (const auto& dir : run_dirs) {
    morl::RunSeries series;
    series.label = fs::path(dir).filename().string();
    if (series.label.empty()) {
      series.label = fs::path(dir).parent_path().filename().string();
    }
    series.rows =
        morl::read_metrics_csv((fs::path(dir) / "metrics.csv").string(),
                               &series.K);
    runs.push_back(std::move(series));
  }
  fs::create_directories(out_dir);
  morl::write_file((fs::path(out_dir) / "combined.csv").string(),
                   morl::combined_csv(runs));
  morl::write_file((fs::path(out_dir) / "compare.svg").string(),
                   morl::render_compare_svg(runs));
  std::cout << "wrote " << out_dir << "/combined.csv and compare.svg\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-reward RL fine-tuning of a toy conditional diffusion "
               "model, with Pareto-front batch selection"};
  app.require_subcommand(1);

  std::string manifest_path;
  long long seed_override = -1;
  int workers_override = 0;
  std::string out_override;
  auto* run = app.add_subcommand("run", "execute an experiment manifest");
  run->add_option("manifest", manifest_path, "manifest file")->required();
  run->add_option("--seed", seed_override, "override the manifest seed");
  run->add_option("--workers", workers_override, "override rollout workers");
  run->add_option("--out", out_override, "override the output directory");

  std::string csv_path, svg_path;
  auto* plot = app.add_subcommand("plot", "render training curves from a metrics file");
  plot->add_option("csv", csv_path, "metrics.csv path")->required();
  plot->add_option("svg", svg_path, "output SVG path")->required();

  std::vector<std::string> run_dirs;
  std::string compare_out = "compare_out";
  auto* compare = app.add_subcommand("compare", "overlay curves from several runs");
  compare->add_option("dirs", run_dirs, "run directories (>= 2)")
      ->required()
      ->expected(-2);
  compare->add_option("--out", compare_out, "output directory");

  try {
    app.parse(argc, argv);
    if (run->parsed()) {
      return do_run(manifest_path, seed_override, workers_override,
                    out_override);
    }
    if (plot->parsed()) {
      return do_plot(csv_path, svg_path);
    }
    return do_compare(run_dirs, compare_out);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const morl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
