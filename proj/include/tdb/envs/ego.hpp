// ego.hpp: egocentric rooms with forward / rotate-left / rotate-right actions.
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

#ifndef TDB_ENVS_EGO_HPP_
#define TDB_ENVS_EGO_HPP_

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "json.hpp"
#include "tdb/rng.hpp"

namespace tdb {
namespace envs {

// A grid room observed egocentrically: the hidden state is a pose
// (x, y, heading in {0deg, 90deg, 180deg, 270deg}) and the observation is a
// categorical label read from a table indexed by the pose, so rotating in
// place changes the view. Actions: 0 = move 1 cell forward (blocked at
// walls, pose unchanged), 1 = rotate 90deg left, 2 = rotate 90deg right.
// A fraction alias_rate of table entries reuse the label of another entry,
// standing in for view aliasing that a perception front-end would produce.
struct EgoRoomSpec {
  int32_t height = 0;
  int32_t width = 0;
  int32_t alphabet = 0;          // <= 128 distinct view labels
  double alias_rate = 0.0;
  std::vector<int32_t> table;    // height*width*4, indexed by pose id

  // Pose id = (y*width + x)*4 + heading; heading 0=+x, 1=+y, 2=-x, 3=-y.
  int32_t NumStates() const { return height * width * 4; }
  int32_t NumActions() const { return 3; }
  int32_t Observe(int32_t s) const { return table[s]; }

  int32_t Step(int32_t s, int32_t a) const {
    int32_t heading = s % 4, cell = s / 4;
    int32_t y = cell / width, x = cell % width;
    switch (a) {
      case 0: {
        static const int32_t dx[4] = {1, 0, -1, 0};
        static const int32_t dy[4] = {0, 1, 0, -1};
        int32_t nx = x + dx[heading], ny = y + dy[heading];
        if (nx < 0 || nx >= width || ny < 0 || ny >= height) return s;
        return (ny * width + nx) * 4 + heading;
      }
      case 1: return cell * 4 + (heading + 1) % 4;
      case 2: return cell * 4 + (heading + 3) % 4;
      default: throw std::invalid_argument("EgoRoomSpec::Step: bad action");
    }
  }
};

inline nlohmann::json EgoRoomSpecToJson(const EgoRoomSpec &e) {
  return nlohmann::json{{"height", e.height},
                        {"width", e.width},
                        {"alphabet", e.alphabet},
                        {"alias_rate", e.alias_rate},
                        {"table", e.table}};
}

inline EgoRoomSpec EgoRoomSpecFromJson(const nlohmann::json &j) {
  EgoRoomSpec e;
  e.height = j.at("height").get<int32_t>();
  e.width = j.at("width").get<int32_t>();
  e.alphabet = j.at("alphabet").get<int32_t>();
  e.alias_rate = j.at("alias_rate").get<double>();
  e.table = j.at("table").get<std::vector<int32_t>>();
  if (static_cast<int32_t>(e.table.size()) != e.NumStates())
    throw std::runtime_error("EgoRoomSpecFromJson: table size mismatch");
  return e;
}

inline EgoRoomSpec GenEgoRoom(int32_t height, int32_t width, int32_t alphabet,
                              double alias_rate, Rng &rng) {
  if (height <= 0 || width <= 0)
    throw std::invalid_argument("GenEgoRoom: non-positive dimensions");
  if (alphabet <= 0 || alphabet > 128)
    throw std::invalid_argument("GenEgoRoom: alphabet must be in [1, 128]");
  if (alias_rate < 0.0 || alias_rate > 1.0)
    throw std::invalid_argument("GenEgoRoom: alias_rate outside [0,1]");
  EgoRoomSpec e;
  e.height = height;
  e.width = width;
  e.alphabet = alphabet;
  e.alias_rate = alias_rate;
  int32_t n = e.NumStates();
  e.table.resize(n);
  for (auto &v : e.table) v = static_cast<int32_t>(rng.UniformInt(alphabet));
  for (int32_t i = 0; i < n; ++i)
    if (rng.UniformDouble() < alias_rate)
      e.table[i] = e.table[rng.UniformInt(static_cast<uint32_t>(n))];
  return e;
}

}  // namespace envs
}  // namespace tdb

#endif  // TDB_ENVS_EGO_HPP_
