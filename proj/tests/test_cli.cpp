#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "morl/errors.hpp"
#include "morl/manifest.hpp"
#include "morl/svg.hpp"

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MORL_CLI_PATH) + " " + args;
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

const char* kSmokeManifest = R"(# smoke run
[run]
name = smoke
mode = pareto
seed = 5
iterations = 2
batch_size = 4
workers = 1

[pretrain]
steps = 120

[eval]
samples_per_condition = 8
)";

}  // namespace

TEST_CASE("manifest parsing and validation") {
  SUBCASE("full manifest parses") {
    const auto m = morl::parse_manifest_text(R"(
[run]
name = demo-1
mode = weighted_sum
seed = 9
iterations = 12
batch_size = 16
out_dir = out/demo

[weights]
r1 = 0.7
r2 = 0.1
r3 = 0.1
r4 = 0.1

[rewards]
count = 4
r3.bandwidth = 0.8

[eval]
guidance = cfg
w = 3.5
sampler = ddim
ddim_steps = 10
)");
    CHECK(m.name == "demo-1");
    CHECK(m.config.mode == morl::RunMode::WeightedSum);
    CHECK(m.config.weights == std::vector<double>{0.7, 0.1, 0.1, 0.1});
    CHECK(m.out_dir == "out/demo");
    CHECK(m.config.eval.guidance.w == 3.5);
    CHECK(m.config.eval.sampler == morl::EvalSampler::Ddim);
    REQUIRE(m.config.reward_specs.size() == 4);
    CHECK(m.config.reward_specs[2].bandwidth == 0.8);
    CHECK(m.config.reward_specs[0].bandwidth == 0.5);
  }

  SUBCASE("diagnostics name the offending field") {
    CHECK_THROWS_WITH_AS(
        morl::parse_manifest_text("[run]\nname = a\nmode = pareto\nbananas = 1\n"),
        "run.bananas: unknown field", morl::ConfigError);
    CHECK_THROWS_WITH_AS(
        morl::parse_manifest_text("[run]\nname = a\nmode = pareto\nseed = x\n"),
        "run.seed: expected an integer, got 'x'", morl::ConfigError);
    CHECK_THROWS_WITH_AS(morl::parse_manifest_text("[run]\nmode = pareto\n"),
                         "run.name: missing required field", morl::ConfigError);
    CHECK_THROWS_WITH_AS(
        morl::parse_manifest_text("[run]\nname = a b\nmode = pareto\n"),
        "run.name: must use only [A-Za-z0-9_.-]", morl::ConfigError);
    CHECK_THROWS_WITH_AS(
        morl::parse_manifest_text(
            "[run]\nname = a\nmode = weighted_sum\n[weights]\nr1 = 1.0\n"),
        "weights.r2: required in weighted_sum mode", morl::ConfigError);
    CHECK_THROWS_AS(
        morl::parse_manifest_text("[run]\nname = a\nmode = pareto\n[weights]\nr1 = 1\n"),
        morl::ConfigError);
  }
}

TEST_CASE("plot maps data to the documented axis transform") {
  // fixture: K=1, iterations 0/5/10, means 0.2/0.4/0.8, nd 1.0/0.5/0.25
  std::vector<morl::IterationMetrics> rows(3);
  const double means[] = {0.2, 0.4, 0.8};
  const double nds[] = {1.0, 0.5, 0.25};
  for (int i = 0; i < 3; ++i) {
    rows[i].iteration = 5 * i;
    rows[i].reward_id = 1;
    rows[i].mean_rewards = morl::Vec::Constant(1, means[i]);
    rows[i].nd_fraction = nds[i];
  }
  const std::string svg = morl::render_metrics_svg(rows, 1);

  // hand-computed: x spans [60,560] over iterations 0..10, y = 440 - 420 v
  CHECK(svg.find("points=\"60.00,356.00 310.00,272.00 560.00,104.00\"") !=
        std::string::npos);
  CHECK(svg.find("points=\"60.00,20.00 310.00,230.00 560.00,335.00\"") !=
        std::string::npos);

  // the mapping helpers agree with the hand computation
  CHECK(morl::svg_x(5, 0, 10) == 310.0);
  CHECK(morl::svg_y(0.4) == doctest::Approx(272.0));

  // identical input renders byte-identically
  CHECK(svg == morl::render_metrics_svg(rows, 1));
}

TEST_CASE("plot of a header-only metrics file still draws axes") {
  morl::write_file("empty_metrics.csv",
                   "iteration,reward_id,mean_r1,nd_fraction,grad_norm_t2i,"
                   "grad_norm_pen\n");
  int K = 0;
  const auto rows = morl::read_metrics_csv("empty_metrics.csv", &K);
  CHECK(K == 1);
  CHECK(rows.empty());
  const std::string svg = morl::render_metrics_svg(rows, K);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("<line") != std::string::npos);
  CHECK(svg.find("<polyline") == std::string::npos);
  std::remove("empty_metrics.csv");
}

TEST_CASE("missing metrics columns are a config error") {
  morl::write_file("bad_metrics.csv", "iteration,reward_id,foo\n");
  CHECK_THROWS_AS(morl::read_metrics_csv("bad_metrics.csv", nullptr),
                  morl::ConfigError);
  std::remove("bad_metrics.csv");
}

TEST_CASE("compare overlays and the combined table") {
  std::vector<morl::IterationMetrics> rows(2);
  for (int i = 0; i < 2; ++i) {
    rows[i].iteration = i;
    rows[i].reward_id = 1;
    rows[i].mean_rewards = morl::Vec::Constant(2, 0.3 + 0.1 * i);
    rows[i].nd_fraction = 0.5;
  }

  SUBCASE("a run against itself gives coincident curves") {
    morl::RunSeries a{"runA", 2, rows};
    morl::RunSeries b{"runA-copy", 2, rows};
    const std::string svg = morl::render_compare_svg({a, b});
    // two panels (K=2), two polylines each
    size_t count = 0, pos = 0;
    while ((pos = svg.find("<polyline", pos)) != std::string::npos) {
      ++count;
      pos += 9;
    }
    CHECK(count == 4);

    const std::string csv = morl::combined_csv({a, b});
    CHECK(csv.find("iteration,runA_mean_r1,runA_mean_r2,runA-copy_mean_r1,"
                   "runA-copy_mean_r2") == 0);
  }

  SUBCASE("three runs give three series per reward") {
    morl::RunSeries a{"a", 2, rows}, b{"b", 2, rows}, c{"c", 2, rows};
    const std::string svg = morl::render_compare_svg({a, b, c});
    size_t count = 0, pos = 0;
    while ((pos = svg.find("<polyline", pos)) != std::string::npos) {
      ++count;
      pos += 9;
    }
    CHECK(count == 6);  // 2 panels x 3 runs
  }

  SUBCASE("mismatched K is rejected") {
    morl::RunSeries a{"a", 2, rows};
    morl::RunSeries b{"b", 3, {}};
    CHECK_THROWS_AS(morl::render_compare_svg({a, b}), morl::ConfigError);
    CHECK_THROWS_AS(morl::combined_csv({a, b}), morl::ConfigError);
  }
}

TEST_CASE("cli end-to-end: run, artifacts, determinism, plot, compare") {
  const fs::path work = fs::path("cli_test_work");
  fs::remove_all(work);
  fs::create_directories(work);
  morl::write_file((work / "smoke.ini").string(), kSmokeManifest);

  SUBCASE("run produces the artifact set and is byte-deterministic") {
    const int rc1 = run_cli("run " + (work / "smoke.ini").string() + " --out " +
                            (work / "out1").string());
    CHECK(rc1 == 0);
    for (const char* leaf :
         {"metrics.csv", "timings.csv", "summary.txt", "t2i.ckpt", "pen.ckpt",
          "vocab.txt", "curves.svg", "pretrain_loss.csv"}) {
      CHECK(fs::exists(work / "out1" / leaf));
    }

    // same manifest, more workers: metrics must match byte for byte
    const int rc2 = run_cli("run " + (work / "smoke.ini").string() +
                            " --workers 3 --out " + (work / "out2").string());
    CHECK(rc2 == 0);
    CHECK(slurp(work / "out1" / "metrics.csv") ==
          slurp(work / "out2" / "metrics.csv"));
    CHECK(slurp(work / "out1" / "summary.txt") ==
          slurp(work / "out2" / "summary.txt"));

    // a different seed changes the numbers
    const int rc3 = run_cli("run " + (work / "smoke.ini").string() +
                            " --seed 6 --out " + (work / "out3").string());
    CHECK(rc3 == 0);
    CHECK(slurp(work / "out1" / "metrics.csv") !=
          slurp(work / "out3" / "metrics.csv"));

    SUBCASE("plot and compare run on the artifacts") {
      CHECK(run_cli("plot " + (work / "out1" / "metrics.csv").string() + " " +
                    (work / "curves.svg").string()) == 0);
      CHECK(fs::exists(work / "curves.svg"));

      CHECK(run_cli("compare " + (work / "out1").string() + " " +
                    (work / "out3").string() + " --out " +
                    (work / "cmp").string()) == 0);
      CHECK(fs::exists(work / "cmp" / "combined.csv"));
      CHECK(fs::exists(work / "cmp" / "compare.svg"));
    }
  }

  SUBCASE("malformed manifest exits with 2 and names the field") {
    morl::write_file((work / "bad.ini").string(),
                     "[run]\nname = bad\nmode = pareto\nbatch_size = zero\n");
    CHECK(run_cli("run " + (work / "bad.ini").string() + " 2>/dev/null") == 2);
  }

  SUBCASE("missing metrics file exits with 2") {
    CHECK(run_cli("plot missing.csv out.svg 2>/dev/null") == 2);
  }

  fs::remove_all(work);
}
