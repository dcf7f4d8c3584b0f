// tdb.cpp: command-line driver wiring generators, training, map extraction,
// planning, and metrics into seeded, configured runs.
//
// Every command reads a JSON run config, writes its outputs into the --out
// run directory, and appends a provenance line to manifest.jsonl with the
// config hash, input file hashes, output paths, seed, and wall time.
//
// Exit codes: 0 success, 2 missing artifact, 3 config schema violation,
// 4 non-finite loss during training.
//
// Copyright 2026 The tdb authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tdb/checkpoint.hpp"
#include "tdb/cogmap/cogmap.hpp"
#include "tdb/envs/cube.hpp"
#include "tdb/envs/ego.hpp"
#include "tdb/envs/ginc.hpp"
#include "tdb/envs/icl.hpp"
#include "tdb/envs/rooms.hpp"
#include "tdb/metrics/ged.hpp"
#include "tdb/metrics/metrics.hpp"
#include "tdb/metrics/probe.hpp"
#include "tdb/model/model.hpp"
#include "tdb/model/trainer.hpp"
#include "tdb/plan/planner.hpp"
#include "tdb/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct ArtifactError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string ReadFileOrDie(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is.good()) throw ArtifactError("missing artifact: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

json ReadJsonOrDie(const std::string &path) {
  try {
    return json::parse(ReadFileOrDie(path));
  } catch (const json::exception &e) {
    throw tdb::ConfigError("cannot parse " + path + ": " + e.what());
  }
}

std::string Fnv1a(const std::string &bytes) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

// --------------------------------------------------------------------------
// Run configuration

struct MapCfg {
  double t_ratio = 0.1;
  double d_hamming = 0.25;
  bool filter_first = true;
  bool labeled = true;
};

struct EvalCfg {
  int n_problems = 50;
  int context = 30;
  double ged_timeout_s = 20.0;
  int n_rollouts = 100;
  bool tail_eval = true;
  int burn_in = 30;
  int n_prompts_per_cell = 40;
  std::vector<int> icl_k{3, 5, 8, 10};
  std::vector<int> icl_n{0, 1, 2, 4, 8, 16, 32, 64};
  int n_eval_rooms = 8;
  int n_eval_walks = 32;
};

struct RunConfig {
  json env;  // environment section, schema-checked per type
  std::optional<tdb::ModelConfig> model;
  tdb::TrainConfig train;
  MapCfg map;
  EvalCfg eval;
};

void CheckEnvSchema(const json &e) {
  if (!e.contains("type"))
    throw tdb::ConfigError("environment config needs a 'type'");
  std::string type = e.at("type").get<std::string>();
  std::set<std::string> common{"type", "n_train_walks", "n_test_walks",
                               "walk_len"};
  std::set<std::string> keys;
  if (type == "room")
    keys = {"height", "width", "n_labels", "patch_h", "patch_w", "noise_p"};
  else if (type == "cube")
    keys = {"edge", "n_labels"};
  else if (type == "ego")
    keys = {"height", "width", "alphabet", "alias_rate"};
  else if (type == "icl")
    keys = {"height", "width", "n_labels", "patch_h", "patch_w", "palette",
            "n_rooms", "rule_R"};
  else if (type == "ginc")
    keys = {"n_docs", "doc_len", "n_test_docs"};
  else
    throw tdb::ConfigError("unknown environment type '" + type + "'");
  keys.insert(common.begin(), common.end());
  tdb::config_detail::RejectUnknownKeys(e, keys, "environment config");
}

RunConfig LoadRunConfig(const std::string &path) {
  json j = ReadJsonOrDie(path);
  tdb::config_detail::RejectUnknownKeys(
      j, {"environment", "model", "train", "map", "eval"}, "run config");
  RunConfig c;
  if (j.contains("environment")) {
    c.env = j.at("environment");
    CheckEnvSchema(c.env);
  }
  if (j.contains("model")) c.model = tdb::ModelConfigFromJson(j.at("model"));
  if (j.contains("train")) c.train = tdb::TrainConfigFromJson(j.at("train"));
  if (j.contains("map")) {
    const json &m = j.at("map");
    tdb::config_detail::RejectUnknownKeys(
        m, {"t_ratio", "d_hamming", "filter_first", "labeled"}, "map config");
    tdb::config_detail::Get(m, "t_ratio", &c.map.t_ratio);
    tdb::config_detail::Get(m, "d_hamming", &c.map.d_hamming);
    tdb::config_detail::Get(m, "filter_first", &c.map.filter_first);
    tdb::config_detail::Get(m, "labeled", &c.map.labeled);
    if (c.map.t_ratio <= 0.0 || c.map.t_ratio > 1.0)
      throw tdb::ConfigError("map.t_ratio must be in (0,1]");
    if (c.map.d_hamming < 0.0 || c.map.d_hamming > 1.0)
      throw tdb::ConfigError("map.d_hamming must be in [0,1]");
  }
  if (j.contains("eval")) {
    const json &e = j.at("eval");
    tdb::config_detail::RejectUnknownKeys(
        e,
        {"n_problems", "context", "ged_timeout_s", "n_rollouts", "tail_eval",
         "burn_in", "n_prompts_per_cell", "icl_k", "icl_n", "n_eval_rooms",
         "n_eval_walks"},
        "eval config");
    tdb::config_detail::Get(e, "n_problems", &c.eval.n_problems);
    tdb::config_detail::Get(e, "context", &c.eval.context);
    tdb::config_detail::Get(e, "ged_timeout_s", &c.eval.ged_timeout_s);
    tdb::config_detail::Get(e, "n_rollouts", &c.eval.n_rollouts);
    tdb::config_detail::Get(e, "tail_eval", &c.eval.tail_eval);
    tdb::config_detail::Get(e, "burn_in", &c.eval.burn_in);
    tdb::config_detail::Get(e, "n_prompts_per_cell", &c.eval.n_prompts_per_cell);
    tdb::config_detail::Get(e, "icl_k", &c.eval.icl_k);
    tdb::config_detail::Get(e, "icl_n", &c.eval.icl_n);
    tdb::config_detail::Get(e, "n_eval_rooms", &c.eval.n_eval_rooms);
    tdb::config_detail::Get(e, "n_eval_walks", &c.eval.n_eval_walks);
    if (c.eval.n_problems < 1 || c.eval.context < 1)
      throw tdb::ConfigError("eval.n_problems and eval.context must be >= 1");
  }
  return c;
}

// --------------------------------------------------------------------------
// Manifest

struct Manifest {
  std::string out_dir;
  std::string command;
  std::string config_hash;
  json input_hashes = json::object();
  std::vector<std::string> outputs;
  uint64_t seed = 0;
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();

  void AddInput(const std::string &path) {
    input_hashes[path] = Fnv1a(ReadFileOrDie(path));
  }
  void Commit() {
    json line;
    line["command"] = command;
    line["config_hash"] = config_hash;
    line["input_hashes"] = input_hashes;
    line["outputs"] = outputs;
    line["seed"] = seed;
    line["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    std::ofstream os(out_dir + "/manifest.jsonl", std::ios::app);
    os << line.dump() << "\n";
  }
};

void WriteText(Manifest &man, const std::string &name, const std::string &body) {
  std::string path = man.out_dir + "/" + name;
  std::ofstream os(path, std::ios::binary);
  if (!os.good()) throw ArtifactError("cannot write " + path);
  os << body;
  man.outputs.push_back(path);
}

void WriteJson(Manifest &man, const std::string &name, const json &j) {
  WriteText(man, name, j.dump(2) + "\n");
}

// --------------------------------------------------------------------------
// Environment loading

struct LoadedEnv {
  std::string type;
  std::optional<tdb::envs::RoomSpec> room;
  std::optional<tdb::envs::CubeSpec> cube;
  std::optional<tdb::envs::EgoRoomSpec> ego;
  std::optional<tdb::envs::GincSpec> ginc;
  std::vector<tdb::envs::RoomSpec> icl_rooms;  // icl only
};

LoadedEnv LoadEnv(const std::string &path) {
  json j = ReadJsonOrDie(path);
  LoadedEnv e;
  e.type = j.at("type").get<std::string>();
  if (e.type == "room")
    e.room = tdb::envs::RoomSpecFromJson(j.at("spec"));
  else if (e.type == "cube")
    e.cube = tdb::envs::CubeSpecFromJson(j.at("spec"));
  else if (e.type == "ego")
    e.ego = tdb::envs::EgoRoomSpecFromJson(j.at("spec"));
  else if (e.type == "ginc")
    e.ginc = tdb::envs::GincSpecFromJson(j.at("spec"));
  else if (e.type == "icl") {
    e.room = tdb::envs::RoomSpecFromJson(j.at("base"));
    for (const auto &r : j.at("rooms"))
      e.icl_rooms.push_back(tdb::envs::RoomSpecFromJson(r));
  } else {
    throw tdb::ConfigError("env.json: unknown type '" + e.type + "'");
  }
  return e;
}

tdb::Model<double> LoadModel(const std::string &dir, Manifest &man) {
  std::string cfg_path = dir + "/model.json";
  std::string ckpt_path = dir + "/checkpoint.bin";
  man.AddInput(cfg_path);
  man.AddInput(ckpt_path);
  tdb::ModelConfig cfg = tdb::ModelConfigFromJson(ReadJsonOrDie(cfg_path));
  tdb::Rng rng(0);
  auto m = tdb::Model<double>::Init(cfg, rng);
  auto loaded = tdb::LoadCheckpoint<double>(ckpt_path);
  if (loaded.size() != m.params.size())
    throw ArtifactError("checkpoint does not match model config: " + ckpt_path);
  m.params = std::move(loaded);
  m.Finish();
  return m;
}

std::vector<tdb::Trajectory> LoadWalks(const std::string &path, Manifest &man) {
  man.AddInput(path);
  return tdb::LoadTrajectories(path);
}

std::vector<std::vector<tdb::cogmap::Key>> Assignments(
    const tdb::Model<double> &m, const std::vector<tdb::Trajectory> &walks) {
  std::vector<std::vector<tdb::cogmap::Key>> out;
  out.reserve(walks.size());
  for (const auto &w : walks) out.push_back(tdb::ComputeCodes(m, w));
  return out;
}

// --------------------------------------------------------------------------
// Commands

int CmdGenData(const RunConfig &cfg, Manifest &man) {
  const json &e = cfg.env;
  if (e.is_null()) throw tdb::ConfigError("gen-data: no environment section");
  std::string type = e.at("type").get<std::string>();
  tdb::Rng rng(man.seed);
  int n_train = e.value("n_train_walks", 2048);
  int n_test = e.value("n_test_walks", 2048);
  int walk_len = e.value("walk_len", 200);

  json env_out;
  env_out["type"] = type;
  std::vector<tdb::Trajectory> train, test;

  if (type == "room") {
    auto spec = tdb::envs::GenAliasedRoom(
        e.at("height").get<int>(), e.at("width").get<int>(),
        e.at("n_labels").get<int>(), e.value("patch_h", 3),
        e.value("patch_w", 3), rng);
    env_out["spec"] = tdb::envs::RoomSpecToJson(spec);
    train = tdb::envs::RandomWalks(spec, n_train, walk_len, rng);
    test = tdb::envs::RandomWalks(spec, n_test, walk_len, rng);
    double noise_p = e.value("noise_p", 0.0);
    if (noise_p > 0.0)
      tdb::envs::InjectNoise(train, noise_p, spec.n_labels, rng);
  } else if (type == "cube") {
    auto spec = tdb::envs::GenAliasedCube(e.at("edge").get<int>(),
                                          e.at("n_labels").get<int>(), rng);
    env_out["spec"] = tdb::envs::CubeSpecToJson(spec);
    train = tdb::envs::RandomWalks(spec, n_train, walk_len, rng);
    test = tdb::envs::RandomWalks(spec, n_test, walk_len, rng);
  } else if (type == "ego") {
    auto spec = tdb::envs::GenEgoRoom(
        e.at("height").get<int>(), e.at("width").get<int>(),
        e.at("alphabet").get<int>(), e.value("alias_rate", 0.5), rng);
    env_out["spec"] = tdb::envs::EgoRoomSpecToJson(spec);
    train = tdb::envs::RandomWalks(spec, n_train, walk_len, rng);
    test = tdb::envs::RandomWalks(spec, n_test, walk_len, rng);
  } else if (type == "icl") {
    auto base = tdb::envs::GenAliasedRoom(
        e.at("height").get<int>(), e.at("width").get<int>(),
        e.at("n_labels").get<int>(), e.value("patch_h", 2),
        e.value("patch_w", 2), rng);
    auto part = tdb::envs::PartitionOfRoom(base);
    auto rooms = tdb::envs::GenIclRooms(part, e.at("n_rooms").get<int>(),
                                        e.at("palette").get<int>(),
                                        e.value("rule_R", false), rng);
    env_out["base"] = tdb::envs::RoomSpecToJson(base);
    json jr = json::array();
    for (const auto &r : rooms) jr.push_back(tdb::envs::RoomSpecToJson(r));
    env_out["rooms"] = jr;
    env_out["rule_R"] = e.value("rule_R", false);
    auto walks_from = [&](int n) {
      std::vector<tdb::Trajectory> ws;
      for (int i = 0; i < n; ++i) {
        const auto &room =
            rooms[rng.UniformInt(static_cast<uint32_t>(rooms.size()))];
        auto w = tdb::envs::RandomWalk(room, walk_len, rng);
        w.obs = tdb::envs::ToBaseTargets(w.obs);
        ws.push_back(std::move(w));
      }
      return ws;
    };
    train = walks_from(n_train);
    test = walks_from(n_test);
  } else if (type == "ginc") {
    auto spec = tdb::envs::GenGincSpec(rng);
    env_out["spec"] = tdb::envs::GincSpecToJson(spec);
    auto docs_to_walks = [&](int n, int len) {
      std::vector<tdb::Trajectory> ws;
      auto docs = tdb::envs::GenGincCorpus(spec, n, len, rng);
      for (const auto &d : docs) {
        tdb::Trajectory t;
        t.obs = d.tokens;
        t.act.assign(t.obs.size(), 0);
        t.env_id = d.concept_id;
        ws.push_back(std::move(t));
      }
      return ws;
    };
    int doc_len = e.value("doc_len", 128);
    train = docs_to_walks(e.value("n_docs", 200), doc_len);
    test = docs_to_walks(e.value("n_test_docs", 64), doc_len);
  }

  WriteJson(man, "env.json", env_out);
  tdb::SaveTrajectories(man.out_dir + "/train.jsonl", train);
  man.outputs.push_back(man.out_dir + "/train.jsonl");
  tdb::SaveTrajectories(man.out_dir + "/test.jsonl", test);
  man.outputs.push_back(man.out_dir + "/test.jsonl");
  return 0;
}

int CmdTrain(const RunConfig &cfg, const std::string &data_dir, Manifest &man,
             bool verbose) {
  if (!cfg.model) throw tdb::ConfigError("train: no model section");
  auto data = LoadWalks(data_dir + "/train.jsonl", man);
  tdb::TrainConfig tc = cfg.train;
  tc.seed = man.seed;
  tdb::Rng rng(man.seed, /*stream=*/3);
  auto m = tdb::Model<double>::Init(*cfg.model, rng);
  tdb::Train(m, data, tc, man.out_dir + "/curve.jsonl", verbose);
  man.outputs.push_back(man.out_dir + "/curve.jsonl");
  WriteJson(man, "model.json", tdb::ModelConfigToJson(*cfg.model));
  tdb::SaveCheckpoint(man.out_dir + "/checkpoint.bin", m.params);
  man.outputs.push_back(man.out_dir + "/checkpoint.bin");
  return 0;
}

int CmdExtractMap(const RunConfig &cfg, const std::string &data_dir,
                  const std::string &walks_name, Manifest &man) {
  auto m = LoadModel(data_dir, man);
  auto walks = LoadWalks(data_dir + "/" + walks_name, man);
  auto assignments = Assignments(m, walks);
  auto g = tdb::cogmap::ExtractGraph(assignments, walks, cfg.map.t_ratio,
                                     cfg.map.d_hamming, cfg.map.filter_first,
                                     cfg.map.labeled);
  WriteJson(man, "graph.json", tdb::cogmap::GraphToJson(g));
  WriteText(man, "graph.dot", tdb::cogmap::GraphToDot(g));
  return 0;
}

template <typename Env>
json PlanOnEnv(const Env &env, const tdb::Model<double> &m,
               const tdb::cogmap::LatentGraph *g,
               const std::vector<tdb::Trajectory> &test, const EvalCfg &ev,
               std::optional<int32_t> avoid, uint64_t seed) {
  std::vector<tdb::Trajectory> subset(
      test.begin(),
      test.begin() + std::min<size_t>(test.size(),
                                      static_cast<size_t>(ev.n_problems)));
  auto problems = tdb::plan::MakePlanProblems(env, subset,
                                              static_cast<int32_t>(ev.context));
  std::vector<std::optional<std::vector<int32_t>>> proposals;
  tdb::Rng rng(seed, /*stream=*/11);
  for (const auto &p : problems) {
    if (m.cfg.arch == tdb::Arch::kTdb) {
      auto codes = tdb::ComputeCodes(m, p.traj);
      int32_t src = tdb::plan::Localize(
          codes[static_cast<size_t>(ev.context - 1)], *g);
      int32_t dst = tdb::plan::Localize(
          codes[p.traj.obs.size() - static_cast<size_t>(ev.context) - 1], *g);
      proposals.push_back(tdb::plan::LatentShortestPath(*g, src, dst, avoid));
    } else {
      auto cands = tdb::plan::RolloutPlanner(
          m, p, static_cast<int32_t>(ev.n_rollouts), rng);
      proposals.push_back(
          tdb::plan::BestRolloutProposal(m, p, cands, ev.tail_eval));
    }
  }
  auto pm = tdb::plan::EvalPlanning(env, problems, proposals);
  json out;
  out["imp_fallback"] = pm.imp_fallback;
  out["ratio_sp"] = pm.ratio_sp;
  out["n_improved"] = pm.n_improved;
  out["n_problems"] = pm.n_problems;
  // Valid-path ratio regardless of improvement, and mean proposal length.
  int64_t n_valid = 0, n_proposed = 0;
  double len_sum = 0.0;
  int64_t n_avoiding = 0;
  for (size_t i = 0; i < problems.size(); ++i) {
    if (!proposals[i]) continue;
    ++n_proposed;
    auto [ok, end] =
        tdb::plan::ValidatePath(env, problems[i].src_pos, *proposals[i],
                                problems[i].dst_pos);
    if (!ok) continue;
    ++n_valid;
    len_sum += static_cast<double>(proposals[i]->size());
    if (avoid) {
      bool clean = true;
      int32_t s = problems[i].src_pos;
      for (size_t a = 0; a + 1 < proposals[i]->size(); ++a) {
        s = env.Step(s, (*proposals[i])[a]);
        if (env.Observe(s) == *avoid) clean = false;
      }
      n_avoiding += clean;
    }
  }
  out["n_proposed"] = n_proposed;
  out["n_valid"] = n_valid;
  out["valid_ratio"] =
      problems.empty() ? 0.0
                       : static_cast<double>(n_valid) /
                             static_cast<double>(problems.size());
  out["mean_valid_len"] =
      n_valid ? len_sum / static_cast<double>(n_valid) : 0.0;
  if (avoid) {
    out["avoid_color"] = *avoid;
    out["frac_avoiding"] =
        n_valid ? static_cast<double>(n_avoiding) / static_cast<double>(n_valid)
                : 0.0;
  }
  return out;
}

int CmdPlan(const RunConfig &cfg, const std::string &data_dir,
            std::optional<int32_t> avoid, Manifest &man) {
  std::string env_path = data_dir + "/env.json";
  man.AddInput(env_path);
  auto env = LoadEnv(env_path);
  auto m = LoadModel(data_dir, man);
  auto test = LoadWalks(data_dir + "/test.jsonl", man);
  std::optional<tdb::cogmap::LatentGraph> g;
  if (m.cfg.arch == tdb::Arch::kTdb) {
    std::string gp = data_dir + "/graph.json";
    man.AddInput(gp);
    g = tdb::cogmap::GraphFromJson(ReadJsonOrDie(gp));
  }
  json out;
  // icl rooms share the base room's geometry (only color maps differ), so
  // path validation against the base room is exact for relabeled walks too.
  if (env.type == "room" || env.type == "icl")
    out = PlanOnEnv(*env.room, m, g ? &*g : nullptr, test, cfg.eval, avoid,
                    man.seed);
  else if (env.type == "cube")
    out = PlanOnEnv(*env.cube, m, g ? &*g : nullptr, test, cfg.eval, avoid,
                    man.seed);
  else
    throw tdb::ConfigError("plan: environment type '" + env.type +
                           "' has no GT planner");
  WriteJson(man, avoid ? "plan_constrained.json" : "plan.json", out);
  return 0;
}

int CmdGed(const RunConfig &cfg, const std::string &data_dir, double timeout_s,
           Manifest &man) {
  std::string env_path = data_dir + "/env.json";
  std::string gp = data_dir + "/graph.json";
  man.AddInput(env_path);
  man.AddInput(gp);
  auto env = LoadEnv(env_path);
  auto g = tdb::cogmap::GraphFromJson(ReadJsonOrDie(gp));
  tdb::cogmap::LatentGraph gt;
  if (env.type == "room")
    gt = tdb::cogmap::GtLatentGraph(*env.room);
  else if (env.type == "cube")
    gt = tdb::cogmap::GtLatentGraph(*env.cube);
  else
    throw tdb::ConfigError("ged: environment type '" + env.type +
                           "' has no GT graph");
  tdb::metrics::GedConfig gc;
  gc.timeout_s = timeout_s > 0 ? timeout_s : cfg.eval.ged_timeout_s;
  auto r = tdb::metrics::NormGed(g, gt, gc);
  json out;
  out["ged"] = r.ged;
  out["norm_ged"] = r.norm_ged;
  out["timed_out"] = r.timed_out;
  out["proved_optimal"] = r.proved_optimal;
  out["isomorphic"] = tdb::cogmap::ActionGraphIsomorphic(g, gt);
  out["bound_stream"] = r.bound_stream;
  WriteJson(man, "ged.json", out);
  return 0;
}

int CmdProbe(const RunConfig &cfg, const std::string &data_dir,
             Manifest &man) {
  (void)cfg;
  auto m = LoadModel(data_dir, man);
  if (m.cfg.M < 2)
    throw tdb::ConfigError("probe: model must have M >= 2 bottlenecks");
  auto walks = LoadWalks(data_dir + "/test.jsonl", man);
  std::vector<std::vector<int32_t>> tuples;
  for (const auto &w : walks) {
    auto codes = tdb::ComputeCodes(m, w);
    tuples.insert(tuples.end(), codes.begin(), codes.end());
  }
  tdb::Rng rng(man.seed, /*stream=*/7);
  tdb::metrics::ProbeConfig pc;
  auto r = tdb::metrics::DisentanglementProbe(tuples, m.cfg.K, pc, rng);
  json out;
  out["accuracy"] = r.accuracy;
  out["shuffled"] = r.shuffled;
  out["mean_accuracy"] = r.mean_accuracy;
  out["mean_shuffled"] = r.mean_shuffled;
  out["chance"] = 1.0 / static_cast<double>(m.cfg.K);
  WriteJson(man, "probe.json", out);
  return 0;
}

int CmdGincRun(const RunConfig &cfg, const std::string &data_dir,
               Manifest &man) {
  std::string env_path = data_dir + "/env.json";
  man.AddInput(env_path);
  auto env = LoadEnv(env_path);
  if (env.type != "ginc")
    throw tdb::ConfigError("ginc-run: environment is not ginc");
  auto m = LoadModel(data_dir, man);
  tdb::Rng rng(man.seed, /*stream=*/13);

  std::vector<tdb::envs::GincPrompt> prompts;
  for (int k : cfg.eval.icl_k)
    for (int n : cfg.eval.icl_n)
      for (int i = 0; i < cfg.eval.n_prompts_per_cell; ++i)
        prompts.push_back(tdb::envs::GenGincPrompt(*env.ginc, k, n, rng));
  auto table = tdb::metrics::InContextAccuracy(m, prompts);

  std::ostringstream csv;
  csv << "k,n,accuracy,n_prompts\n";
  json jt = json::array();
  for (const auto &c : table) {
    csv << c.k << "," << c.n << "," << c.accuracy << "," << c.n_prompts
        << "\n";
    jt.push_back({{"k", c.k},
                  {"n", c.n},
                  {"accuracy", c.accuracy},
                  {"n_prompts", c.n_prompts}});
  }
  WriteText(man, "in_context.csv", csv.str());

  json out;
  out["table"] = jt;

  // Concept purity of the bottleneck codes: each code tuple votes for its
  // document's concept; purity is the fraction of timesteps whose tuple's
  // majority concept matches the document concept.
  if (m.cfg.arch == tdb::Arch::kTdb) {
    auto test = LoadWalks(data_dir + "/test.jsonl", man);
    std::map<tdb::cogmap::Key, std::map<int32_t, int64_t>> votes;
    std::vector<std::pair<tdb::cogmap::Key, int32_t>> stream;
    for (const auto &w : test) {
      auto codes = tdb::ComputeCodes(m, w);
      for (const auto &c : codes) {
        votes[c][w.env_id]++;
        stream.push_back({c, w.env_id});
      }
    }
    int64_t pure = 0;
    for (const auto &[key, concept_id] : stream) {
      const auto &hist = votes.at(key);
      int32_t best = -1;
      int64_t best_n = -1;
      for (const auto &[c, n] : hist)
        if (n > best_n) { best = c; best_n = n; }
      pure += best == concept_id;
    }
    out["concept_purity"] =
        stream.empty() ? 0.0
                       : static_cast<double>(pure) /
                             static_cast<double>(stream.size());
  }
  WriteJson(man, "ginc_metrics.json", out);
  return 0;
}

int CmdIclRun(const RunConfig &cfg, const std::string &data_dir, bool rule_r,
              Manifest &man) {
  std::string env_path = data_dir + "/env.json";
  man.AddInput(env_path);
  auto env = LoadEnv(env_path);
  if (env.type != "icl")
    throw tdb::ConfigError("icl-run: environment is not icl");
  auto m = LoadModel(data_dir, man);
  tdb::Rng rng(man.seed, /*stream=*/19);

  // Fresh unseen rooms sampled under the requested admissibility rule;
  // evaluation walks use base-target relabeling like the training data.
  auto part = tdb::envs::PartitionOfRoom(*env.room);
  int palette = cfg.env.is_null() ? 20 : cfg.env.value("palette", 20);
  auto rooms = tdb::envs::GenIclRooms(part, cfg.eval.n_eval_rooms, palette,
                                      rule_r, rng);
  int walk_len = cfg.env.is_null() ? 200 : cfg.env.value("walk_len", 200);
  std::vector<tdb::Trajectory> walks;
  for (int i = 0; i < cfg.eval.n_eval_walks; ++i) {
    const auto &room = rooms[rng.UniformInt(static_cast<uint32_t>(rooms.size()))];
    auto w = tdb::envs::RandomWalk(room, walk_len, rng);
    w.obs = tdb::envs::ToBaseTargets(w.obs);
    walks.push_back(std::move(w));
  }
  json out;
  out["rule_R"] = rule_r;
  out["n_eval_rooms"] = cfg.eval.n_eval_rooms;
  out["test_acc"] =
      tdb::metrics::TestAccuracy(m, walks, cfg.eval.burn_in);
  out["acc_by_timestep"] = tdb::metrics::AccuracyByTimestep(m, walks);
  WriteJson(man, "icl_metrics.json", out);
  return 0;
}

int CmdExportGraph(const std::string &data_dir, Manifest &man) {
  std::string gp = data_dir + "/graph.json";
  man.AddInput(gp);
  auto g = tdb::cogmap::GraphFromJson(ReadJsonOrDie(gp));
  WriteText(man, "graph.dot", tdb::cogmap::GraphToDot(g));
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"transformer-with-discrete-bottlenecks toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir, data_dir, walks_name = "train.jsonl";
  uint64_t seed = 0;
  bool seed_set = false;
  double timeout_s = 0.0;
  bool rule_r = false, verbose = false;
  std::optional<int32_t> avoid;
  int32_t avoid_raw = -1;

  app.add_option("--config", config_path, "run config JSON");
  app.add_option("--out", out_dir, "run directory (created)")->required();
  app.add_option("--data", data_dir, "input run directory (default: --out)");
  app.add_option("--seed", seed, "seed override")->each([&](const std::string &) {
    seed_set = true;
  });
  app.add_flag("--verbose", verbose, "log progress to stderr");

  auto *gen = app.add_subcommand("gen-data", "generate environment + walks");
  auto *train = app.add_subcommand("train", "train a model on train.jsonl");
  auto *extract = app.add_subcommand("extract-map", "extract the latent graph");
  extract->add_option("--walks", walks_name, "walk file for extraction");
  auto *plan = app.add_subcommand("plan", "evaluate planning");
  plan->add_option("--avoid-color", avoid_raw, "forbidden observation label");
  auto *ged = app.add_subcommand("ged", "normalized GED vs the GT graph");
  ged->add_option("--timeout-s", timeout_s, "anytime search budget");
  auto *probe = app.add_subcommand("probe", "disentanglement probe");
  auto *ginc = app.add_subcommand("ginc-run", "in-context accuracy table");
  auto *icl = app.add_subcommand("icl-run", "eval on fresh relabeled rooms");
  icl->add_flag("--rule-R", rule_r, "restrict eval rooms to rule-R maps");
  auto *exportg = app.add_subcommand("export-graph", "graph.json -> DOT");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg;
    std::string cfg_bytes;
    if (!config_path.empty()) {
      cfg_bytes = ReadFileOrDie(config_path);
      cfg = LoadRunConfig(config_path);
    }
    if (data_dir.empty()) data_dir = out_dir;
    fs::create_directories(out_dir);

    Manifest man;
    man.out_dir = out_dir;
    man.config_hash = Fnv1a(cfg_bytes);
    man.seed = seed_set ? seed : cfg.train.seed;
    if (avoid_raw >= 0) avoid = avoid_raw;

    int rc = 0;
    if (gen->parsed()) {
      man.command = "gen-data";
      rc = CmdGenData(cfg, man);
    } else if (train->parsed()) {
      man.command = "train";
      rc = CmdTrain(cfg, data_dir, man, verbose);
    } else if (extract->parsed()) {
      man.command = "extract-map";
      rc = CmdExtractMap(cfg, data_dir, walks_name, man);
    } else if (plan->parsed()) {
      man.command = "plan";
      rc = CmdPlan(cfg, data_dir, avoid, man);
    } else if (ged->parsed()) {
      man.command = "ged";
      rc = CmdGed(cfg, data_dir, timeout_s, man);
    } else if (probe->parsed()) {
      man.command = "probe";
      rc = CmdProbe(cfg, data_dir, man);
    } else if (ginc->parsed()) {
      man.command = "ginc-run";
      rc = CmdGincRun(cfg, data_dir, man);
    } else if (icl->parsed()) {
      man.command = "icl-run";
      rc = CmdIclRun(cfg, data_dir, rule_r, man);
    } else if (exportg->parsed()) {
      man.command = "export-graph";
      rc = CmdExportGraph(data_dir, man);
    }
    if (rc == 0) man.Commit();
    return rc;
  } catch (const tdb::ConfigError &e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 3;
  } catch (const tdb::NanAbort &e) {
    std::cerr << "training aborted: " << e.what() << "\n";
    return 4;
  } catch (const ArtifactError &e) {
    std::cerr << "artifact error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
