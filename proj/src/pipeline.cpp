#include "editorch/pipeline.hpp"

#include <cmath>
#include <exception>
#include <optional>

#include "editorch/corpora.hpp"
#include "editorch/oracle_check.hpp"
#include "editorch/planner.hpp"
#include "editorch/search.hpp"

#ifndef EDITORCH_VERSION
#define EDITORCH_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;

namespace editorch {

json summarize(const std::vector<double>& values) {
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean = values.empty() ? 0.0 : mean / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double se = values.size() < 2 ? 0.0 : std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return json{{"mean", mean}, {"n", values.size()}, {"stderr", se}};
}

namespace {

// Runs body(i) for i in [0, n) in parallel; the first exception (by index) is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

std::string file_digest(const fs::path& p) { return hex64(fnv1a64(read_text_file(p.string()))); }

Pipeline::Pipeline(ExperimentConfig cfg, std::ostream* log) : cfg_(std::move(cfg)), out_(cfg_.out), log_(log) {
  profiles_path_ = cfg_.profiles.empty() ? default_profiles_path() : cfg_.profiles;
  oracle_profiles_path_ = cfg_.oracle_profiles.empty() ? default_oracle_profiles_path() : cfg_.oracle_profiles;
}

void Pipeline::note(const std::string& msg) const {
  if (log_) *log_ << "[editorch] " << msg << '\n' << std::flush;
}

void Pipeline::write_json(const std::string& rel, const json& j) const {
  const fs::path p = path(rel);
  fs::create_directories(p.parent_path());
  write_text_file(p.string(), j.dump(1) + "\n");
}

json Pipeline::read_json(const std::string& rel) const {
  const fs::path p = path(rel);
  if (!fs::exists(p)) throw Error(ErrorCode::StageDependency, "missing artifact", p.string());
  return read_json_file(p.string());
}

void Pipeline::require_inputs(const Stage& s) const {
  for (const auto& in : s.inputs)
    if (!fs::exists(path(in))) throw Error(ErrorCode::StageDependency, "stage " + s.name + " needs a missing artifact", path(in).string());
}

bool Pipeline::fresh(const Stage& s) const {
  const fs::path stamp = path("stages/" + s.name + ".json");
  if (!fs::exists(stamp)) return false;
  json j;
  try {
    j = read_json_file(stamp.string());
  } catch (const Error&) {
    return false;
  }
  if (j.value("config", "") != cfg_.digest()) return false;
  for (const auto& list : {std::make_pair("inputs", &s.inputs), std::make_pair("outputs", &s.outputs)}) {
    const json& rec = j[list.first];
    if (!rec.is_object()) return false;
    for (const auto& f : *list.second) {
      const fs::path p = path(f);
      if (!fs::exists(p) || !rec.contains(f) || rec[f] != file_digest(p)) return false;
    }
  }
  return true;
}

void Pipeline::run_stage(const Stage& s, const std::function<void()>& body) {
  require_inputs(s);
  if (fresh(s)) {
    note("stage " + s.name + ": up to date");
    return;
  }
  note("stage " + s.name + ": running");
  body();
  json stamp{{"stage", s.name}, {"config", cfg_.digest()}, {"inputs", json::object()}, {"outputs", json::object()}};
  for (const auto& f : s.inputs) stamp["inputs"][f] = file_digest(path(f));
  for (const auto& f : s.outputs) {
    if (!fs::exists(path(f))) throw Error(ErrorCode::Io, "stage " + s.name + " did not produce its output", path(f).string());
    stamp["outputs"][f] = file_digest(path(f));
  }
  write_json("stages/" + s.name + ".json", stamp);
  executed_.push_back(s.name);
}

// --- dataset ---

void Pipeline::gen_dataset() {
  run_stage({"gen-dataset", {}, {artifacts::kManifest}}, [&] {
    json manifest{{"schema", "dataset/1"}, {"difficulty", to_string(cfg_.difficulty)}, {"splits", json::object()}};
    const std::vector<std::pair<std::string, std::size_t>> splits = {
        {"pretrain", cfg_.pretrain_instances}, {"train", cfg_.train_instances}, {"test", cfg_.test_instances}};
    for (const auto& [split, count] : splits) {
      const std::uint64_t base = derive_seed_str(cfg_.seed, split);
      std::vector<Instance> insts(count);
      parallel_for(count, [&](std::size_t i) { insts[i] = generate_instance(base + i, cfg_.difficulty); });
      json rows = json::array();
      for (const auto& inst : insts) {
        const std::string rel = "dataset/" + split + "/" + inst.id + ".json";
        write_json(rel, to_json(inst));
        rows.push_back(json{{"id", inst.id}, {"seed", inst.seed}, {"file", rel}, {"digest", file_digest(path(rel))}});
      }
      manifest["splits"][split] = rows;
    }
    write_json(artifacts::kManifest, manifest);
  });
}

std::vector<Instance> Pipeline::load_split(const std::string& split) const {
  const json manifest = read_json(artifacts::kManifest);
  if (!manifest["splits"].contains(split)) throw Error(ErrorCode::Data, "manifest has no split " + split);
  std::vector<Instance> out;
  for (const auto& row : manifest["splits"][split]) {
    const fs::path p = path(row.at("file").get<std::string>());
    if (!fs::exists(p)) throw Error(ErrorCode::StageDependency, "missing dataset file", p.string());
    if (file_digest(p) != row.at("digest").get<std::string>())
      throw Error(ErrorCode::Data, "dataset file does not match the manifest", p.string());
    out.push_back(instance_from_json(read_json_file(p.string())));
  }
  return out;
}

// --- planner ---

void Pipeline::train_base_planner() {
  run_stage({"train-base-planner", {artifacts::kManifest}, {artifacts::kPlannerBase}}, [&] {
    const auto corpus = template_corpus(load_split("pretrain"), derive_seed_str(cfg_.seed, "template"));
    const PlannerModel base = editorch::train_planner(corpus, {cfg_.planner_epochs, cfg_.planner_step});
    write_json(artifacts::kPlannerBase, base.to_json());
  });
}

void Pipeline::plan() {
  train_base_planner();
  run_stage({"plan", {artifacts::kManifest, artifacts::kPlannerBase}, {artifacts::kChecklistPlans}}, [&] {
    const PlannerModel base = PlannerModel::from_json(read_json(artifacts::kPlannerBase));
    const auto train = load_split("train");
    const std::uint64_t root = derive_seed_str(cfg_.seed, "checklist");
    std::vector<std::optional<Plan>> plans(train.size());
    parallel_for(train.size(), [&](std::size_t i) {
      for (int s = 0; s < cfg_.checklist_samples && !plans[i]; ++s) {
        try {
          plans[i] = generate_plan_checklist(base, train[i].doc, train[i].instruction, train[i].checklist,
                                             derive_seed(root, fnv1a64(train[i].id), static_cast<std::uint64_t>(s)))
                         .plan;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::Coverage) throw;
        }
      }
    });
    std::vector<Plan> kept;
    json uncovered = json::array();
    for (std::size_t i = 0; i < train.size(); ++i) {
      if (plans[i]) kept.push_back(*plans[i]);
      else uncovered.push_back(train[i].id);
    }
    json j = plans_to_json(kept);
    j["uncovered"] = uncovered;
    write_json(artifacts::kChecklistPlans, j);
  });
}

namespace {

std::vector<PlanExample> examples_for(const std::vector<Plan>& plans, const std::vector<Instance>& instances) {
  std::map<std::string, const Instance*> by_id;
  for (const auto& inst : instances) by_id[inst.id] = &inst;
  std::vector<PlanExample> out;
  for (const auto& p : plans) {
    auto it = by_id.find(p.instruction_id);
    if (it == by_id.end()) throw Error(ErrorCode::Data, "plan for unknown instance " + p.instruction_id);
    out.push_back(make_example(it->second->instruction, p));
  }
  return out;
}

std::map<std::string, const Instance*> index_by_id(const std::vector<Instance>& instances) {
  std::map<std::string, const Instance*> m;
  for (const auto& inst : instances) m[inst.id] = &inst;
  return m;
}

}  // namespace

void Pipeline::train_planner() {
  run_stage({"train-planner",
             {artifacts::kManifest, artifacts::kPlannerBase, artifacts::kChecklistPlans},
             {artifacts::kPlannerSft, artifacts::kPlannerReport}},
            [&] {
              const PlannerModel base = PlannerModel::from_json(read_json(artifacts::kPlannerBase));
              const auto train = load_split("train");
              const auto plans = plans_from_json(read_json(artifacts::kChecklistPlans));
              const auto self = examples_for(plans, train);
              const auto ood = ood_corpus(train);
              PlannerTrainReport rep;
              const PlannerModel sft = editorch::train_planner(self, {cfg_.planner_epochs, cfg_.planner_step}, &rep, &base);
              write_json(artifacts::kPlannerSft, sft.to_json());
              const double ppl_self = perplexity(base, self);
              const double ppl_ood = perplexity(base, ood);
              write_json(artifacts::kPlannerReport, json{{"schema", "planner-report/1"},
                                                         {"plans", plans.size()},
                                                         {"ppl_self", ppl_self},
                                                         {"ppl_ood", ppl_ood},
                                                         {"ppl_ratio", ppl_ood / ppl_self},
                                                         {"sft_objective", rep.objective},
                                                         {"sft_nll", rep.nll}});
            });
}

// --- rewards ---

void Pipeline::precompute_rewards() {
  run_stage({"precompute-rewards", {artifacts::kManifest, artifacts::kChecklistPlans, profiles_path_}, {artifacts::kRewards}},
            [&] {
              const ProfileSet profiles = load_profiles(profiles_path_);
              const auto train = load_split("train");
              const auto by_id = index_by_id(train);
              const auto plans = plans_from_json(read_json(artifacts::kChecklistPlans));
              const std::uint64_t root = derive_seed_str(cfg_.seed, "rewards");
              std::vector<PrecomputeTask> tasks;
              for (const auto& p : plans) {
                auto it = by_id.find(p.instruction_id);
                if (it == by_id.end()) throw Error(ErrorCode::Data, "plan for unknown instance " + p.instruction_id);
                tasks.push_back({p.instruction_id, it->second->doc, p, derive_seed(root, fnv1a64(p.instruction_id))});
              }
              PrecomputeOptions opts;
              opts.n_repeats = cfg_.repeats;
              opts.bands = cfg_.bands;
              write_json(artifacts::kRewards, editorch::precompute_rewards(tasks, profiles, opts).to_json());
            });
}

void Pipeline::refine() {
  run_stage({"refine",
             {artifacts::kManifest, artifacts::kPlannerBase, artifacts::kChecklistPlans, artifacts::kRewards},
             {artifacts::kRefinedPlans, artifacts::kRefineReport, artifacts::kPlannerFinal}},
            [&] {
              const RewardTable table = RewardTable::from_json(read_json(artifacts::kRewards));
              const auto plans = plans_from_json(read_json(artifacts::kChecklistPlans));
              const RefinementResult r = refine_plans(plans, table.best_rewards(), {cfg_.tau, 1});
              write_json(artifacts::kRefinedPlans, plans_to_json(r.plans));
              json rep = to_json(r);
              rep["schema"] = "refine-report/1";
              rep["tau"] = cfg_.tau;
              write_json(artifacts::kRefineReport, rep);
              const PlannerModel base = PlannerModel::from_json(read_json(artifacts::kPlannerBase));
              const auto train = load_split("train");
              const PlannerModel final_model =
                  editorch::train_planner(examples_for(r.plans, train), {cfg_.planner_epochs, cfg_.planner_step}, nullptr, &base);
              write_json(artifacts::kPlannerFinal, final_model.to_json());
            });
}

// --- orchestrator ---

void Pipeline::train_orchestrator() {
  run_stage({"train-orchestrator", {artifacts::kRewards}, {artifacts::kPolicy, artifacts::kOrchestratorReport}}, [&] {
    const RewardTable table = RewardTable::from_json(read_json(artifacts::kRewards));
    const auto data = build_training_set(table, cfg_.orch_tau());
    std::vector<double> losses;
    OrchestratorPolicy policy =
        editorch::train_orchestrator(data, {cfg_.orchestrator_epochs, cfg_.orchestrator_step, cfg_.orchestrator_l2}, &losses);
    policy.mode = cfg_.scoring_mode;
    write_json(artifacts::kPolicy, policy.to_json());
    write_json(artifacts::kOrchestratorReport, json{{"schema", "orchestrator-report/1"},
                                                    {"examples", data.size()},
                                                    {"losses", losses},
                                                    {"target_log_prob", mean_target_log_prob(policy, data)},
                                                    {"uniform_target_log_prob", mean_target_log_prob(OrchestratorPolicy{}, data)}});
  });
}

// --- evaluation ---

std::vector<std::string> Pipeline::condition_names() const {
  std::vector<std::string> out;
  for (auto k : cfg_.k_values) out.push_back("k" + std::to_string(k));
  out.push_back("random_k" + std::to_string(cfg_.baseline_k));
  return out;
}

fs::path Pipeline::trace_path(const std::string& condition) const { return path("eval/traces_" + condition + ".json"); }

void Pipeline::eval() {
  Stage s{"eval", {artifacts::kManifest, artifacts::kPlannerFinal, artifacts::kPolicy, profiles_path_}, {artifacts::kEvalPlans, artifacts::kEvalMetrics}};
  for (const auto& c : condition_names()) s.outputs.push_back(fs::relative(trace_path(c), out_).string());
  run_stage(s, [&] {
    const ProfileSet profiles = load_profiles(profiles_path_);
    const PlannerModel planner = PlannerModel::from_json(read_json(artifacts::kPlannerFinal));
    const OrchestratorPolicy trained = OrchestratorPolicy::from_json(read_json(artifacts::kPolicy));
    OrchestratorPolicy random = OrchestratorPolicy::random(derive_seed_str(cfg_.seed, "random-policy"));
    random.mode = trained.mode;
    const auto test = load_split("test");
    const std::uint64_t plan_root = derive_seed_str(cfg_.seed, "eval-plan");
    const std::uint64_t ep_root = derive_seed_str(cfg_.seed, "eval");

    std::vector<Plan> plans(test.size());
    for (std::size_t i = 0; i < test.size(); ++i)
      plans[i] = generate_plan(planner, test[i].doc, test[i].instruction, derive_seed(plan_root, fnv1a64(test[i].id)));
    write_json(artifacts::kEvalPlans, plans_to_json(plans));

    struct Condition {
      std::string name;
      const OrchestratorPolicy* policy;
      std::size_t k;
    };
    std::vector<Condition> conds;
    for (auto k : cfg_.k_values) conds.push_back({"k" + std::to_string(k), &trained, k});
    conds.push_back({"random_k" + std::to_string(cfg_.baseline_k), &random, cfg_.baseline_k});

    json metrics{{"schema", "metrics/1"}, {"episodes", test.size()}, {"conditions", json::object()}};
    for (const auto& c : conds) {
      std::vector<TrajectoryTrace> traces(test.size());
      parallel_for(test.size(), [&](std::size_t i) {
        SearchConfig sc;
        sc.k = c.k;
        sc.verifier.temperature = cfg_.verifier_temperature;
        sc.verifier.bands = cfg_.bands;
        sc.polish = cfg_.polish;
        sc.polish_max = cfg_.polish_max;
        sc.episode_seed = derive_seed(ep_root, fnv1a64(test[i].id));
        traces[i] = run_episode(test[i].id, test[i].doc, test[i].instruction, plans[i], *c.policy, profiles, sc).trace;
      });
      std::vector<double> sat, reward, ie, ip, vq, goal_sat, goal_reward, skipped;
      json rows = json::array();
      for (const auto& t : traces) {
        sat.push_back(t.plan_satisfaction);
        reward.push_back(t.plan_reward);
        ie.push_back(t.plan_triple.ie);
        ip.push_back(t.plan_triple.ip);
        vq.push_back(t.plan_triple.vq);
        goal_sat.push_back(t.final_satisfaction);
        goal_reward.push_back(t.final_reward);
        double sk = 0;
        for (const auto& st : t.steps) sk += st.chosen ? 0 : 1;
        skipped.push_back(sk);
        rows.push_back(t.to_json());
      }
      write_json(fs::relative(trace_path(c.name), out_).string(), json{{"schema", "traces/1"}, {"traces", rows}});
      metrics["conditions"][c.name] = json{{"k", c.k},
                                           {"policy", c.policy == &trained ? "trained" : "random"},
                                           {"constraint_satisfaction", summarize(sat)},
                                           {"final_reward", summarize(reward)},
                                           {"ie", summarize(ie)},
                                           {"ip", summarize(ip)},
                                           {"vq", summarize(vq)},
                                           {"goal_constraint_satisfaction", summarize(goal_sat)},
                                           {"goal_reward", summarize(goal_reward)},
                                           {"skipped_steps", summarize(skipped)}};
    }
    write_json(artifacts::kEvalMetrics, metrics);
  });
}

// --- report ---

json Pipeline::report() {
  json rep{{"schema", "report/1"},
           {"experiment_id", "exp-" + cfg_.digest()},
           {"engine_version", EDITORCH_VERSION},
           {"config_digest", cfg_.digest()},
           {"config", cfg_.to_json()},
           {"notes", json::array({"instructions and checklists come from a template generator"})}};
  rep["config"].erase("out");

  const json planner = read_json(artifacts::kPlannerReport);
  rep["planner"] = json{{"ppl_self", planner["ppl_self"]}, {"ppl_ood", planner["ppl_ood"]}, {"ppl_ratio", planner["ppl_ratio"]},
                        {"plans", planner["plans"]}};

  const json refine = read_json(artifacts::kRefineReport);
  const RewardTable table = RewardTable::from_json(read_json(artifacts::kRewards));
  const auto plans = plans_from_json(read_json(artifacts::kChecklistPlans));
  const auto refined = plans_from_json(read_json(artifacts::kRefinedPlans));
  const BestRewards best = table.best_rewards();
  std::vector<double> pre, post;
  for (const auto& p : plans)
    for (const auto& s : p.subtasks) pre.push_back(best.at({p.instruction_id, s.id}));
  for (const auto& p : refined)
    for (const auto& s : p.subtasks) post.push_back(best.at({p.instruction_id, s.id}));
  rep["refinement"] = json{{"tau", cfg_.tau},
                           {"pre", summarize(pre)},
                           {"post", summarize(post)},
                           {"dropped_plans", refine["dropped_plans"]}};

  const json orch = read_json(artifacts::kOrchestratorReport);
  rep["orchestrator"] = json{{"examples", orch["examples"]},
                             {"target_log_prob", orch["target_log_prob"]},
                             {"uniform_target_log_prob", orch["uniform_target_log_prob"]},
                             {"final_loss", orch["losses"].back()}};

  rep["evaluation"] = read_json(artifacts::kEvalMetrics)["conditions"];
  if (fs::exists(path(artifacts::kOracleReport))) rep["oracle"] = read_json(artifacts::kOracleReport)["summary"];
  write_json(artifacts::kReport, rep);
  return rep;
}

json Pipeline::run() {
  gen_dataset();
  plan();
  train_planner();
  precompute_rewards();
  refine();
  train_orchestrator();
  eval();
  return report();
}

json Pipeline::oracle_check() {
  run_stage({"oracle-check", {oracle_profiles_path_}, {artifacts::kOracleReport}}, [&] {
    const ProfileSet profiles = load_profiles(oracle_profiles_path_);
    const std::uint64_t base = derive_seed_str(cfg_.seed, "oracle");
    std::vector<Instance> insts;
    for (std::size_t i = 0; i < cfg_.oracle_instances; ++i) insts.push_back(generate_instance(base + i, Difficulty::Small));
    const auto cases = build_oracle_cases(insts, derive_seed_str(cfg_.seed, "oracle-cases"));
    write_json(artifacts::kOracleReport, run_oracle_check(cases, profiles, cfg_.repeats).to_json());
  });
  return read_json(artifacts::kOracleReport);
}

}  // namespace editorch
