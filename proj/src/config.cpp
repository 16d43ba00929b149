#include "editorch/config.hpp"

#include <set>

#ifndef EDITORCH_DATA_DIR
#define EDITORCH_DATA_DIR "data"
#endif

namespace editorch {

std::string default_profiles_path() { return std::string(EDITORCH_DATA_DIR) + "/profiles.json"; }
std::string default_oracle_profiles_path() { return std::string(EDITORCH_DATA_DIR) + "/oracle_profiles.json"; }

ProfileSet load_profiles(const std::string& path) {
  json j;
  try {
    j = read_json_file(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::Config, std::string("cannot load profiles: ") + e.what(), "profiles");
  }
  return ProfileSet::from_json(j);
}

json ExperimentConfig::to_json() const {
  json j{{"schema", "config/1"},
         {"seed", seed},
         {"train_instances", train_instances},
         {"test_instances", test_instances},
         {"pretrain_instances", pretrain_instances},
         {"oracle_instances", oracle_instances},
         {"difficulty", to_string(difficulty)},
         {"tau", tau},
         {"k_values", k_values},
         {"baseline_k", baseline_k},
         {"repeats", repeats},
         {"profiles", profiles},
         {"oracle_profiles", oracle_profiles},
         {"bands", bands.cuts},
         {"verifier_temperature", verifier_temperature},
         {"planner_epochs", planner_epochs},
         {"planner_step", planner_step},
         {"orchestrator_epochs", orchestrator_epochs},
         {"orchestrator_step", orchestrator_step},
         {"orchestrator_l2", orchestrator_l2},
         {"checklist_samples", checklist_samples},
         {"polish", polish},
         {"polish_max", polish_max},
         {"scoring_mode", scoring_mode == ScoringMode::Direct ? "direct" : "length_normalized"},
         {"out", out}};
  j["orchestrator_tau"] = orchestrator_tau ? json(*orchestrator_tau) : json(nullptr);
  return j;
}

namespace {

template <typename T>
T get(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::Config, "wrong type", key);
  }
}

void require(bool ok, const char* key, const std::string& why) {
  if (!ok) throw Error(ErrorCode::Config, why, key);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::Config, "config must be an object");
  if (j.value("schema", "") != "config/1") throw Error(ErrorCode::Config, "expected schema config/1", "schema");
  static const std::set<std::string> known = {
      "schema", "seed", "train_instances", "test_instances", "pretrain_instances", "oracle_instances", "difficulty",
      "tau", "orchestrator_tau", "k_values", "baseline_k", "repeats", "profiles", "oracle_profiles", "bands",
      "verifier_temperature", "planner_epochs", "planner_step", "orchestrator_epochs", "orchestrator_step",
      "orchestrator_l2", "checklist_samples", "polish", "polish_max", "scoring_mode", "out"};
  for (const auto& [k, _] : j.items())
    if (!known.count(k)) throw Error(ErrorCode::Config, "unknown key", k);

  ExperimentConfig c;
  if (j.contains("seed")) c.seed = get<std::uint64_t>(j, "seed");
  if (j.contains("train_instances")) c.train_instances = get<std::size_t>(j, "train_instances");
  if (j.contains("test_instances")) c.test_instances = get<std::size_t>(j, "test_instances");
  if (j.contains("pretrain_instances")) c.pretrain_instances = get<std::size_t>(j, "pretrain_instances");
  if (j.contains("oracle_instances")) c.oracle_instances = get<std::size_t>(j, "oracle_instances");
  if (j.contains("difficulty")) {
    try {
      c.difficulty = difficulty_from(get<std::string>(j, "difficulty"));
    } catch (const Error&) {
      throw Error(ErrorCode::Config, "difficulty must be small or medium", "difficulty");
    }
  }
  if (j.contains("tau")) c.tau = get<double>(j, "tau");
  if (j.contains("orchestrator_tau") && !j["orchestrator_tau"].is_null())
    c.orchestrator_tau = get<double>(j, "orchestrator_tau");
  if (j.contains("k_values")) c.k_values = get<std::vector<std::size_t>>(j, "k_values");
  if (j.contains("baseline_k")) c.baseline_k = get<std::size_t>(j, "baseline_k");
  if (j.contains("repeats")) c.repeats = get<int>(j, "repeats");
  if (j.contains("profiles")) c.profiles = get<std::string>(j, "profiles");
  if (j.contains("oracle_profiles")) c.oracle_profiles = get<std::string>(j, "oracle_profiles");
  if (j.contains("bands")) c.bands.cuts = get<std::array<double, 4>>(j, "bands");
  if (j.contains("verifier_temperature")) c.verifier_temperature = get<double>(j, "verifier_temperature");
  if (j.contains("planner_epochs")) c.planner_epochs = get<int>(j, "planner_epochs");
  if (j.contains("planner_step")) c.planner_step = get<double>(j, "planner_step");
  if (j.contains("orchestrator_epochs")) c.orchestrator_epochs = get<int>(j, "orchestrator_epochs");
  if (j.contains("orchestrator_step")) c.orchestrator_step = get<double>(j, "orchestrator_step");
  if (j.contains("orchestrator_l2")) c.orchestrator_l2 = get<double>(j, "orchestrator_l2");
  if (j.contains("checklist_samples")) c.checklist_samples = get<int>(j, "checklist_samples");
  if (j.contains("polish")) c.polish = get<bool>(j, "polish");
  if (j.contains("polish_max")) c.polish_max = get<int>(j, "polish_max");
  if (j.contains("scoring_mode")) {
    const auto m = get<std::string>(j, "scoring_mode");
    require(m == "direct" || m == "length_normalized", "scoring_mode", "must be direct or length_normalized");
    c.scoring_mode = m == "direct" ? ScoringMode::Direct : ScoringMode::LengthNormalized;
  }
  if (j.contains("out")) c.out = get<std::string>(j, "out");

  require(c.train_instances >= 1, "train_instances", "must be >= 1");
  require(c.test_instances >= 1, "test_instances", "must be >= 1");
  require(c.pretrain_instances >= 1, "pretrain_instances", "must be >= 1");
  require(c.tau >= 0.0, "tau", "must be >= 0");
  require(c.orch_tau() >= 0.0, "orchestrator_tau", "must be >= 0");
  require(!c.k_values.empty(), "k_values", "must not be empty");
  for (auto k : c.k_values) require(k >= 1, "k_values", "every K must be >= 1");
  require(c.baseline_k >= 1, "baseline_k", "must be >= 1");
  require(c.repeats >= 1, "repeats", "must be >= 1");
  for (std::size_t i = 0; i < 4; ++i) {
    require(c.bands.cuts[i] > 0.0 && c.bands.cuts[i] <= 1.0, "bands", "cut points must lie in (0, 1]");
    if (i > 0) require(c.bands.cuts[i] > c.bands.cuts[i - 1], "bands", "cut points must increase");
  }
  require(c.verifier_temperature >= 0.0, "verifier_temperature", "must be >= 0");
  require(c.planner_epochs >= 1, "planner_epochs", "must be >= 1");
  require(c.planner_step > 0.0 && c.planner_step <= 1.0, "planner_step", "must be in (0, 1]");
  require(c.orchestrator_epochs >= 1, "orchestrator_epochs", "must be >= 1");
  require(c.orchestrator_step > 0.0, "orchestrator_step", "must be > 0");
  require(c.orchestrator_l2 >= 0.0, "orchestrator_l2", "must be >= 0");
  require(c.checklist_samples >= 1, "checklist_samples", "must be >= 1");
  require(c.polish_max >= 0, "polish_max", "must be >= 0");
  require(!c.out.empty(), "out", "must not be empty");
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Config, std::string("config is not valid JSON: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::Config, e.what());
  }
  return from_json(j);
}

std::string ExperimentConfig::digest() const {
  json j = to_json();
  j.erase("out");
  return hex64(fnv1a64(canonical_dump(j)));
}

}  // namespace editorch
