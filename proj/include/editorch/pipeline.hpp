#pragma once

#include <filesystem>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "editorch/config.hpp"
#include "editorch/generator.hpp"

namespace editorch {

namespace artifacts {
inline constexpr const char* kManifest = "dataset/manifest.json";
inline constexpr const char* kPlannerBase = "models/planner_base.json";
inline constexpr const char* kChecklistPlans = "plans/checklist.json";
inline constexpr const char* kPlannerSft = "models/planner_sft.json";
inline constexpr const char* kPlannerReport = "reports/planner.json";
inline constexpr const char* kRewards = "rewards/rewards.json";
inline constexpr const char* kRefinedPlans = "plans/refined.json";
inline constexpr const char* kRefineReport = "reports/refine.json";
inline constexpr const char* kPlannerFinal = "models/planner_final.json";
inline constexpr const char* kPolicy = "models/policy.json";
inline constexpr const char* kOrchestratorReport = "reports/orchestrator.json";
inline constexpr const char* kEvalPlans = "eval/plans.json";
inline constexpr const char* kEvalMetrics = "eval/metrics.json";
inline constexpr const char* kOracleReport = "reports/oracle.json";
inline constexpr const char* kReport = "report.json";
}  // namespace artifacts

// mean, n and standard error of the mean
json summarize(const std::vector<double>& values);

std::string file_digest(const std::filesystem::path& p);

// Stage-structured experiment runner. Each stage records a stamp with the
// config digest and the digests of its inputs and outputs; a stage whose
// stamp still matches is skipped. Calling a stage whose inputs are missing
// throws a StageDependency error naming the artifact.
class Pipeline {
 public:
  explicit Pipeline(ExperimentConfig cfg, std::ostream* log = nullptr);

  const ExperimentConfig& config() const { return cfg_; }
  const std::filesystem::path& out() const { return out_; }

  void gen_dataset();
  void train_base_planner();
  void plan();  // checklist plans from the base planner
  void train_planner();
  void precompute_rewards();
  void refine();
  void train_orchestrator();
  void eval();
  json report();
  json run();  // every stage above, in order
  json oracle_check();

  // Names of stages that actually executed (not skipped) on this object.
  const std::vector<std::string>& executed() const { return executed_; }

  std::vector<Instance> load_split(const std::string& split) const;
  std::vector<std::string> condition_names() const;
  std::filesystem::path trace_path(const std::string& condition) const;

 private:
  struct Stage {
    std::string name;
    std::vector<std::string> inputs, outputs;
  };
  void run_stage(const Stage& s, const std::function<void()>& body);
  bool fresh(const Stage& s) const;
  void require_inputs(const Stage& s) const;
  std::filesystem::path path(const std::string& rel) const { return out_ / rel; }
  void write_json(const std::string& rel, const json& j) const;
  json read_json(const std::string& rel) const;
  void note(const std::string& msg) const;

  ExperimentConfig cfg_;
  std::filesystem::path out_;
  std::string profiles_path_, oracle_profiles_path_;
  std::ostream* log_;
  std::vector<std::string> executed_;
};

}  // namespace editorch
