// advrec: pipeline driver.
//   advrec {train-agent|attack|train-detector|detect|analyze} --config PATH [--jobs N] [--seed S]

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "advrec/pipeline/stages.hpp"

int main(int argc, char** argv) {
  using namespace advrec;
  CLI::App app{"Adversarial attacks and detection for RL recommenders"};
  app.require_subcommand(1);

  std::string config;
  std::size_t jobs = 0;
  std::optional<std::uint64_t> seed;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "experiment config JSON")->required();
    sub->add_option("--jobs", jobs, "worker threads (0 = one per logical processor)");
    sub->add_option("--seed", seed, "master seed (overrides config and ADVREC_SEED)");
  };

  auto* train_agent = app.add_subcommand("train-agent", "train the actor-critic recommender");
  auto* attack = app.add_subcommand("attack", "run attacked rollouts and write traces and metrics");
  auto* train_det = app.add_subcommand("train-detector", "train the adversarial-trace detector");
  auto* detect_cmd = app.add_subcommand("detect", "score labeled trace files with the detector");
  auto* analyze = app.add_subcommand("analyze", "MMD analysis and final report");
  for (auto* s : {train_agent, attack, train_det, detect_cmd, analyze}) common(s);

  AttackOptions aopt;
  attack->add_option("--method", aopt.method, "single attack method: " + valid_method_list());
  attack->add_option("--epsilon", aopt.epsilon, "perturbation budget");
  attack->add_option("--timing", aopt.timing, "always, random or strategic");
  attack->add_option("--threshold", aopt.threshold, "strategic timing threshold on p0 - p1");
  attack->add_option("--p-freq", aopt.p_freq, "random timing attack probability");
  attack->add_option("--sweep", aopt.sweep, "epsilon or frequency");

  std::vector<std::string> traces;
  detect_cmd->add_option("--traces", traces, "trace files (default: every evaluation trace in the workdir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    Overrides cli;
    cli.seed = seed;
    const ExperimentConfig cfg = load_experiment(config, cli);
    if (train_agent->parsed()) {
      cmd_train_agent(cfg, &std::cout);
    } else if (attack->parsed()) {
      auto out = cmd_attack(cfg, aopt, jobs, &std::cout);
      std::cout << "wrote " << out.csv.string() << "\n";
    } else if (train_det->parsed()) {
      cmd_train_detector(cfg, &std::cout);
    } else if (detect_cmd->parsed()) {
      std::vector<std::filesystem::path> files(traces.begin(), traces.end());
      cmd_detect(cfg, files, jobs, &std::cout);
    } else if (analyze->parsed()) {
      cmd_analyze(cfg, jobs, &std::cout);
    }
  } catch (const Error& e) {
    std::cerr << "advrec: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "advrec: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
