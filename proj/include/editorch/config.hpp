#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "editorch/generator.hpp"
#include "editorch/judge.hpp"
#include "editorch/orchestrator.hpp"

namespace editorch {

struct ExperimentConfig {
  std::uint64_t seed = 7;
  std::size_t train_instances = 1000;
  std::size_t test_instances = 200;
  std::size_t pretrain_instances = 500;
  std::size_t oracle_instances = 50;
  Difficulty difficulty = Difficulty::Medium;
  double tau = 3.0;
  std::optional<double> orchestrator_tau;  // defaults to tau
  std::vector<std::size_t> k_values = {1, 3, 5};
  std::size_t baseline_k = 5;
  int repeats = 2;
  std::string profiles;         // empty: shipped defaults
  std::string oracle_profiles;  // empty: shipped oracle profiles
  BandConfig bands;
  double verifier_temperature = 0.0;
  int planner_epochs = 30;
  double planner_step = 0.5;
  int orchestrator_epochs = 200;
  double orchestrator_step = 0.25;
  double orchestrator_l2 = 1e-4;
  int checklist_samples = 1;
  bool polish = true;
  int polish_max = 5;
  ScoringMode scoring_mode = ScoringMode::Direct;
  std::string out = "runs/default";

  double orch_tau() const { return orchestrator_tau.value_or(tau); }

  json to_json() const;  // "schema": "config/1"
  // Rejects unknown keys and out-of-range values with Config errors.
  static ExperimentConfig from_json(const json& j);
  static ExperimentConfig load(const std::string& path);
  std::string digest() const;  // hex FNV-1a of the canonical JSON, excluding "out"
};

std::string default_profiles_path();
std::string default_oracle_profiles_path();
ProfileSet load_profiles(const std::string& path);

}  // namespace editorch
