// trajectory.hpp: interleaved observation/action trajectories and JSONL I/O.
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

#ifndef TDB_TRAJECTORY_HPP_
#define TDB_TRAJECTORY_HPP_

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "tdb/tensor.hpp"

namespace tdb {

// Observations x_1..x_N and actions a_1..a_N, stored 0-based. Extra ground
// truth (hidden positions, room/concept ids) rides along for evaluation only
// and is never shown to the model.
struct Trajectory {
  std::vector<int32_t> obs;
  std::vector<int32_t> act;
  std::vector<int32_t> positions;  // optional hidden state id per step
  int32_t env_id = -1;             // optional source environment/room id

  int64_t length() const { return static_cast<int64_t>(obs.size()); }
};

inline void SaveTrajectories(const std::string &path,
                             const std::vector<Trajectory> &trajs) {
  std::ofstream os(path);
  Check(os.good(), "SaveTrajectories: cannot open " + path);
  for (const auto &t : trajs) {
    nlohmann::json j;
    j["obs"] = t.obs;
    j["act"] = t.act;
    if (!t.positions.empty()) j["positions"] = t.positions;
    if (t.env_id >= 0) j["env_id"] = t.env_id;
    os << j.dump() << "\n";
  }
  Check(os.good(), "SaveTrajectories: write failed for " + path);
}

inline std::vector<Trajectory> LoadTrajectories(const std::string &path) {
  std::ifstream is(path);
  Check(is.good(), "LoadTrajectories: cannot open " + path);
  std::vector<Trajectory> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    Trajectory t;
    t.obs = j.at("obs").get<std::vector<int32_t>>();
    t.act = j.at("act").get<std::vector<int32_t>>();
    if (j.contains("positions"))
      t.positions = j.at("positions").get<std::vector<int32_t>>();
    if (j.contains("env_id")) t.env_id = j.at("env_id").get<int32_t>();
    Check(t.obs.size() == t.act.size(),
          "LoadTrajectories: obs/act length mismatch in " + path);
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace tdb

#endif  // TDB_TRAJECTORY_HPP_
