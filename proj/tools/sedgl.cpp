// Copyright 2026 The sedgl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// sedgl command-line tool. Exit codes: 0 success, 1 invalid input or
// configuration, 2 runtime failure.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sedgl/sedgl.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kFailure = 2;

sedgl::RunConfig load(const std::string& path, const std::string& run_dir) {
  auto cfg = sedgl::load_config(path);
  if (!run_dir.empty()) cfg.run_dir = std::filesystem::absolute(run_dir).string();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weakly supervised sound event detection with guided learning"};
  app.require_subcommand(1);
  std::string config_path, run_dir;

  auto* extract = app.add_subcommand("extract", "Compute log-mel features for every manifest clip");
  bool force = false;
  int threads = 0;
  extract->add_option("-c,--config", config_path, "Run configuration")->required()->check(CLI::ExistingFile);
  extract->add_flag("--force", force, "Recompute existing feature files");
  extract->add_option("-j,--threads", threads, "Worker threads (0 = all cores)");

  auto* train = app.add_subcommand("train", "Train one model per configured seed");
  std::string mode;
  std::vector<std::uint64_t> seeds;
  bool parallel = false, no_resume = false;
  train->add_option("-c,--config", config_path, "Run configuration")->required()->check(CLI::ExistingFile);
  train->add_option("-m,--mode", mode, "atp_df or gl (overrides the config)")
      ->check(CLI::IsMember({"atp_df", "gl"}));
  train->add_option("-o,--run-dir", run_dir, "Run directory (overrides the config)");
  train->add_option("-s,--seeds", seeds, "Seeds (override the config)");
  train->add_flag("--parallel", parallel, "Train seeds concurrently");
  train->add_flag("--no-resume", no_resume, "Ignore saved trainer state");

  auto* predict = app.add_subcommand("predict", "Detect events with one checkpoint or an ensemble");
  std::vector<std::string> checkpoints;
  bool ensemble = false;
  std::string out_dir = "predictions", subset = "validation";
  predict->add_option("-c,--config", config_path, "Run configuration")->required()->check(CLI::ExistingFile);
  predict->add_option("checkpoints", checkpoints, "Checkpoint files")->required()->check(CLI::ExistingFile);
  predict->add_flag("-e,--ensemble", ensemble, "Average the probabilities of all checkpoints");
  predict->add_option("-o,--out", out_dir, "Output directory");
  predict->add_option("--subset", subset, "Manifest subset to score")
      ->check(CLI::IsMember({"weak", "unlabeled", "synthetic", "validation"}));

  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against references");
  std::string refs, preds, eval_out = "evaluation";
  evaluate->add_option("-c,--config", config_path, "Run configuration")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--refs", refs, "Reference TSV")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--preds", preds, "Prediction TSV")->required()->check(CLI::ExistingFile);
  evaluate->add_option("-o,--out", eval_out, "Output directory");

  auto* rank = app.add_subcommand("rank", "List the top-k runs by validation event F1");
  std::vector<std::string> run_paths;
  int k = 1;
  rank->add_option("runs", run_paths, "Run directories or their parents")->required();
  rank->add_option("-k", k, "Number of runs to keep");

  auto* df = app.add_subcommand("df", "Print per-class DF dimensions");
  df->add_option("-c,--config", config_path, "Run configuration")->required()->check(CLI::ExistingFile);

  auto* plot = app.add_subcommand("plot", "Draw validation curves of runs as SVG");
  std::string plot_out = "curves.svg";
  plot->add_option("runs", run_paths, "Run directories or their parents")->required();
  plot->add_option("-o,--out", plot_out, "Output SVG");

  auto* toy = app.add_subcommand("make-toy", "Generate the two-class synthetic corpus");
  std::string toy_out;
  sedgl::ToyOptions toy_opt;
  toy->add_option("out", toy_out, "Output directory")->required();
  toy->add_option("--weak", toy_opt.weak, "Weakly labeled clips");
  toy->add_option("--unlabeled", toy_opt.unlabeled, "Unlabeled clips");
  toy->add_option("--synthetic", toy_opt.synthetic, "Strongly labeled synthetic-domain clips");
  toy->add_option("--validation", toy_opt.validation, "Strongly labeled validation clips");
  toy->add_option("--seed", toy_opt.seed, "Random seed");
  toy->add_option("--sample-rate", toy_opt.spec.sample_rate, "Sample rate in Hz");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kInvalid;
  }

  try {
    if (*extract) {
      const auto report = sedgl::cmd_extract(load(config_path, ""), std::cout, force, threads);
      return report.failures.empty() ? kOk : kFailure;
    }
    if (*train) {
      auto cfg = load(config_path, run_dir);
      if (!mode.empty()) cfg.mode = mode == "gl" ? sedgl::TrainMode::kGuided : sedgl::TrainMode::kAtpDf;
      if (!seeds.empty()) cfg.seeds = seeds;
      sedgl::cmd_train(cfg, std::cout, parallel, !no_resume);
      return kOk;
    }
    if (*predict) {
      sedgl::cmd_predict(load(config_path, ""), checkpoints, ensemble, out_dir, *sedgl::parse_subset(subset),
                         std::cout);
      return kOk;
    }
    if (*evaluate) {
      sedgl::cmd_evaluate(load(config_path, ""), refs, preds, eval_out, std::cout);
      return kOk;
    }
    if (*rank) {
      for (const auto& r : sedgl::cmd_rank(run_paths, k))
        std::cout << r.checkpoint.string() << "\t" << r.event_f1 << "\tepoch " << r.best_epoch << "\n";
      return kOk;
    }
    if (*df) {
      const auto cfg = load(config_path, "");
      std::cout << sedgl::format_df_report(sedgl::cmd_df(cfg), cfg.vocabulary());
      return kOk;
    }
    if (*plot) {
      sedgl::detail::write_file(plot_out, sedgl::cmd_plot(run_paths));
      return kOk;
    }
    if (*toy) {
      sedgl::cmd_make_toy(toy_out, toy_opt, std::cout);
      return kOk;
    }
  } catch (const sedgl::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const sedgl::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}
