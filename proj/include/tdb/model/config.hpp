// config.hpp: model and training configuration with strict JSON parsing.
//
// Unknown keys are rejected rather than ignored so that a typo in a config
// file fails loudly instead of silently training the wrong model.
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

#ifndef TDB_MODEL_CONFIG_HPP_
#define TDB_MODEL_CONFIG_HPP_

#include <set>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "tdb/tensor.hpp"

namespace tdb {

// Raised for malformed or inconsistent configuration; the CLI maps it to its
// config-violation exit code.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string &msg) : std::runtime_error(msg) {}
};

enum class Arch { kTdb, kTransformer, kLstm };

struct ModelConfig {
  Arch arch = Arch::kTdb;
  int n_layers = 4;
  int n_heads = 8;
  int d_model = 256;
  int d_mlp = 512;
  int context_len = 400;   // max observations; token stream is twice this
  int vocab_obs = 16;      // O'
  int vocab_act = 4;
  int K = 1000;            // codes per bottleneck
  int M = 1;               // bottlenecks
  int S = 3;               // prediction steps
  bool use_enc_loss = true;
  bool clone_structured = false;
  double beta = 0.25;      // VQ commitment weight
  double dropout = 0.1;
  double ema_alpha = 0.99;

  int code_dim() const { return d_model / M; }

  void Validate() const {
    if (d_model <= 0 || n_layers <= 0 || n_heads <= 0 || d_mlp <= 0)
      throw ConfigError("model dimensions must be positive");
    if (d_model % n_heads != 0)
      throw ConfigError("d_model must be divisible by n_heads");
    if (S < 1) throw ConfigError("S must be >= 1");
    if (M < 1) throw ConfigError("M must be >= 1");
    if (K < 1) throw ConfigError("K must be >= 1");
    if (d_model % M != 0) throw ConfigError("d_model must be divisible by M");
    if (vocab_obs < 1 || vocab_act < 1)
      throw ConfigError("vocabulary sizes must be positive");
    if (context_len < 1) throw ConfigError("context_len must be >= 1");
    if (dropout < 0.0 || dropout >= 1.0)
      throw ConfigError("dropout must be in [0,1)");
    if (ema_alpha < 0.0 || ema_alpha > 1.0)
      throw ConfigError("ema_alpha must be in [0,1]");
  }
};

struct TrainConfig {
  int steps = 25000;
  int batch_size = 32;
  double lr = 0.001;
  int eval_interval = 100;
  uint64_t seed = 0;

  void Validate() const {
    if (steps < 0) throw ConfigError("steps must be >= 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (lr <= 0.0) throw ConfigError("lr must be positive");
    if (eval_interval < 1) throw ConfigError("eval_interval must be >= 1");
  }
};

namespace config_detail {

inline void RejectUnknownKeys(const nlohmann::json &j,
                              const std::set<std::string> &known,
                              const std::string &where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key()))
      throw ConfigError("unknown config key '" + it.key() + "' in " + where);
}

template <typename T>
void Get(const nlohmann::json &j, const char *key, T *out) {
  if (j.contains(key)) *out = j.at(key).get<T>();
}

}  // namespace config_detail

inline Arch ParseArch(const std::string &s) {
  if (s == "tdb") return Arch::kTdb;
  if (s == "transformer") return Arch::kTransformer;
  if (s == "lstm") return Arch::kLstm;
  throw ConfigError("unknown arch '" + s + "' (want tdb|transformer|lstm)");
}

inline std::string ArchName(Arch a) {
  switch (a) {
    case Arch::kTdb: return "tdb";
    case Arch::kTransformer: return "transformer";
    case Arch::kLstm: return "lstm";
  }
  return "?";
}

inline ModelConfig ModelConfigFromJson(const nlohmann::json &j) {
  using config_detail::Get;
  config_detail::RejectUnknownKeys(
      j,
      {"arch", "n_layers", "n_heads", "d_model", "d_mlp", "context_len",
       "vocab_obs", "vocab_act", "K", "M", "S", "use_enc_loss",
       "clone_structured", "beta", "dropout", "ema_alpha"},
      "model config");
  ModelConfig c;
  if (j.contains("arch")) c.arch = ParseArch(j.at("arch").get<std::string>());
  Get(j, "n_layers", &c.n_layers);
  Get(j, "n_heads", &c.n_heads);
  Get(j, "d_model", &c.d_model);
  Get(j, "d_mlp", &c.d_mlp);
  Get(j, "context_len", &c.context_len);
  Get(j, "vocab_obs", &c.vocab_obs);
  Get(j, "vocab_act", &c.vocab_act);
  Get(j, "K", &c.K);
  Get(j, "M", &c.M);
  Get(j, "S", &c.S);
  Get(j, "use_enc_loss", &c.use_enc_loss);
  Get(j, "clone_structured", &c.clone_structured);
  Get(j, "beta", &c.beta);
  Get(j, "dropout", &c.dropout);
  Get(j, "ema_alpha", &c.ema_alpha);
  c.Validate();
  return c;
}

inline nlohmann::json ModelConfigToJson(const ModelConfig &c) {
  nlohmann::json j;
  j["arch"] = ArchName(c.arch);
  j["n_layers"] = c.n_layers;
  j["n_heads"] = c.n_heads;
  j["d_model"] = c.d_model;
  j["d_mlp"] = c.d_mlp;
  j["context_len"] = c.context_len;
  j["vocab_obs"] = c.vocab_obs;
  j["vocab_act"] = c.vocab_act;
  j["K"] = c.K;
  j["M"] = c.M;
  j["S"] = c.S;
  j["use_enc_loss"] = c.use_enc_loss;
  j["clone_structured"] = c.clone_structured;
  j["beta"] = c.beta;
  j["dropout"] = c.dropout;
  j["ema_alpha"] = c.ema_alpha;
  return j;
}

inline TrainConfig TrainConfigFromJson(const nlohmann::json &j) {
  using config_detail::Get;
  config_detail::RejectUnknownKeys(
      j, {"steps", "batch_size", "lr", "eval_interval", "seed"},
      "train config");
  TrainConfig c;
  Get(j, "steps", &c.steps);
  Get(j, "batch_size", &c.batch_size);
  Get(j, "lr", &c.lr);
  Get(j, "eval_interval", &c.eval_interval);
  Get(j, "seed", &c.seed);
  c.Validate();
  return c;
}

}  // namespace tdb

#endif  // TDB_MODEL_CONFIG_HPP_
