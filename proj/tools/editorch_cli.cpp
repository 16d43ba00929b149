#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "editorch/pipeline.hpp"

using namespace editorch;

namespace {

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::Config: return 2;
    case ErrorCode::StageDependency: return 3;
    case ErrorCode::Size: return 4;
    default: return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"editorch: plan, orchestrate and evaluate simulated multi-step image edits"};
  app.require_subcommand(1);
  app.set_version_flag("--version", EDITORCH_VERSION);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool quiet = false;
  app.add_option("--config", config_path, "Experiment config (JSON, schema config/1)");
  app.add_option("--seed", seed, "Override the root seed");
  app.add_option("--out", out, "Override the output directory");
  app.add_flag("-q,--quiet", quiet, "Suppress stage progress on stderr");

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"gen-dataset", "Generate pretrain/train/test instances"},
      {"plan", "Train the base planner and sample checklist plans"},
      {"train-planner", "Fine-tune the planner on checklist plans; perplexity report"},
      {"precompute-rewards", "Execute every candidate of every subtask and build the reward table"},
      {"refine", "Drop low-reward subtasks and retrain the planner"},
      {"train-orchestrator", "Train the orchestrator policy from the reward table"},
      {"eval", "Run reward-guided search on the test split for each K and the random baseline"},
      {"report", "Assemble report.json from stage artifacts"},
      {"run", "Run every stage (resuming finished ones) and write the report"},
      {"oracle-check", "Compare reward-table decisions with brute-force search on small instances"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : ExperimentConfig::load(config_path);
    if (seed) cfg.seed = *seed;
    if (!out.empty()) cfg.out = out;
    Pipeline p(cfg, quiet ? nullptr : &std::cerr);

    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "gen-dataset") p.gen_dataset();
    else if (cmd == "plan") p.plan();
    else if (cmd == "train-planner") p.train_planner();
    else if (cmd == "precompute-rewards") p.precompute_rewards();
    else if (cmd == "refine") p.refine();
    else if (cmd == "train-orchestrator") p.train_orchestrator();
    else if (cmd == "eval") p.eval();
    else if (cmd == "report") std::cout << p.report().dump(2) << '\n';
    else if (cmd == "run") std::cout << p.run().dump(2) << '\n';
    else if (cmd == "oracle-check") std::cout << p.oracle_check()["summary"].dump(2) << '\n';
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
