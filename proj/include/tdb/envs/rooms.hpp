// rooms.hpp: aliased grid rooms, random walks, and observation noise.
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

#ifndef TDB_ENVS_ROOMS_HPP_
#define TDB_ENVS_ROOMS_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "tdb/rng.hpp"
#include "tdb/trajectory.hpp"

namespace tdb {
namespace envs {

// A grid room where each cell carries a color label in [0, O). One
// patch_h x patch_w patch is copied verbatim to a second, non-overlapping
// anchor so that distinct regions emit identical observation sequences
// (perceptual aliasing). States are cell indices y*width+x; the four actions
// are up/right/down/left and blocked moves are self-loops.
struct RoomSpec {
  int32_t height = 0;
  int32_t width = 0;
  int32_t n_labels = 0;              // O
  std::vector<int32_t> labels;       // height*width, row-major
  // Aliased patch bookkeeping (evaluation-only side channel).
  int32_t patch_h = 0;
  int32_t patch_w = 0;
  int32_t anchor1_y = 0, anchor1_x = 0;
  int32_t anchor2_y = 0, anchor2_x = 0;

  int32_t NumStates() const { return height * width; }
  int32_t NumActions() const { return 4; }

  int32_t Observe(int32_t s) const { return labels[s]; }

  // Actions: 0=up(-y), 1=right(+x), 2=down(+y), 3=left(-x). Moves that would
  // leave the grid keep the position unchanged (wall self-loop).
  int32_t Step(int32_t s, int32_t a) const {
    int32_t y = s / width, x = s % width;
    switch (a) {
      case 0: y -= 1; break;
      case 1: x += 1; break;
      case 2: y += 1; break;
      case 3: x -= 1; break;
      default: throw std::invalid_argument("RoomSpec::Step: bad action");
    }
    if (y < 0 || y >= height || x < 0 || x >= width) return s;
    return y * width + x;
  }

  // Whether cell s lies inside one of the two repeated patch regions.
  bool InPatch(int32_t s) const {
    int32_t y = s / width, x = s % width;
    auto inside = [&](int32_t ay, int32_t ax) {
      return y >= ay && y < ay + patch_h && x >= ax && x < ax + patch_w;
    };
    return inside(anchor1_y, anchor1_x) || inside(anchor2_y, anchor2_x);
  }
};

inline nlohmann::json RoomSpecToJson(const RoomSpec &r) {
  return nlohmann::json{{"height", r.height},       {"width", r.width},
                        {"n_labels", r.n_labels},   {"labels", r.labels},
                        {"patch_h", r.patch_h},     {"patch_w", r.patch_w},
                        {"anchor1_y", r.anchor1_y}, {"anchor1_x", r.anchor1_x},
                        {"anchor2_y", r.anchor2_y}, {"anchor2_x", r.anchor2_x}};
}

inline RoomSpec RoomSpecFromJson(const nlohmann::json &j) {
  RoomSpec r;
  r.height = j.at("height").get<int32_t>();
  r.width = j.at("width").get<int32_t>();
  r.n_labels = j.at("n_labels").get<int32_t>();
  r.labels = j.at("labels").get<std::vector<int32_t>>();
  r.patch_h = j.at("patch_h").get<int32_t>();
  r.patch_w = j.at("patch_w").get<int32_t>();
  r.anchor1_y = j.at("anchor1_y").get<int32_t>();
  r.anchor1_x = j.at("anchor1_x").get<int32_t>();
  r.anchor2_y = j.at("anchor2_y").get<int32_t>();
  r.anchor2_x = j.at("anchor2_x").get<int32_t>();
  if (static_cast<int64_t>(r.labels.size()) !=
      static_cast<int64_t>(r.height) * r.width)
    throw std::runtime_error("RoomSpecFromJson: label count mismatch");
  return r;
}

// Uniform random labels with one patch copied onto a second non-overlapping
// anchor. Labels are resampled until all O colors appear somewhere in the
// finished room (requires O <= height*width). Throws if the patch cannot be
// placed twice without overlap.
inline RoomSpec GenAliasedRoom(int32_t height, int32_t width, int32_t n_labels,
                               int32_t patch_h, int32_t patch_w, Rng &rng) {
  if (height <= 0 || width <= 0 || n_labels <= 0)
    throw std::invalid_argument("GenAliasedRoom: non-positive dimensions");
  if (n_labels > height * width)
    throw std::invalid_argument("GenAliasedRoom: more labels than cells");
  if (patch_h <= 0 || patch_w <= 0 || patch_h > height || patch_w > width)
    throw std::invalid_argument("GenAliasedRoom: patch does not fit");

  RoomSpec r;
  r.height = height;
  r.width = width;
  r.n_labels = n_labels;
  r.patch_h = patch_h;
  r.patch_w = patch_w;

  // Two non-overlapping anchors by rejection; bail out if none exist.
  auto overlaps = [&](int32_t ay, int32_t ax, int32_t by, int32_t bx) {
    return ay < by + patch_h && by < ay + patch_h && ax < bx + patch_w &&
           bx < ax + patch_w;
  };
  int32_t ys = height - patch_h + 1, xs = width - patch_w + 1;
  bool feasible = false;
  for (int32_t ay = 0; ay < ys && !feasible; ++ay)
    for (int32_t ax = 0; ax < xs && !feasible; ++ax)
      for (int32_t by = 0; by < ys && !feasible; ++by)
        for (int32_t bx = 0; bx < xs && !feasible; ++bx)
          if (!overlaps(ay, ax, by, bx)) feasible = true;
  if (!feasible)
    throw std::invalid_argument(
        "GenAliasedRoom: patch cannot be placed twice without overlap");
  for (;;) {
    r.anchor1_y = static_cast<int32_t>(rng.UniformInt(ys));
    r.anchor1_x = static_cast<int32_t>(rng.UniformInt(xs));
    r.anchor2_y = static_cast<int32_t>(rng.UniformInt(ys));
    r.anchor2_x = static_cast<int32_t>(rng.UniformInt(xs));
    if (!overlaps(r.anchor1_y, r.anchor1_x, r.anchor2_y, r.anchor2_x)) break;
  }

  for (;;) {
    r.labels.assign(static_cast<size_t>(height) * width, 0);
    for (auto &v : r.labels) v = static_cast<int32_t>(rng.UniformInt(n_labels));
    for (int32_t dy = 0; dy < patch_h; ++dy)
      for (int32_t dx = 0; dx < patch_w; ++dx)
        r.labels[(r.anchor2_y + dy) * width + (r.anchor2_x + dx)] =
            r.labels[(r.anchor1_y + dy) * width + (r.anchor1_x + dx)];
    std::vector<bool> seen(n_labels, false);
    for (int32_t v : r.labels) seen[v] = true;
    bool all = true;
    for (bool b : seen) all = all && b;
    if (all) break;
  }
  return r;
}

// Uniform random walk of N observations through any deterministic
// environment exposing NumStates/NumActions/Step/Observe. Emits N actions as
// well (the last one is recorded but its successor observation is not); the
// true state sequence rides along in the hidden channel.
template <typename Env>
Trajectory RandomWalk(const Env &env, int64_t n_steps, Rng &rng) {
  if (n_steps <= 0) throw std::invalid_argument("RandomWalk: n_steps <= 0");
  Trajectory t;
  t.obs.reserve(n_steps);
  t.act.reserve(n_steps);
  t.positions.reserve(n_steps);
  int32_t s = static_cast<int32_t>(
      rng.UniformInt(static_cast<uint32_t>(env.NumStates())));
  for (int64_t n = 0; n < n_steps; ++n) {
    int32_t a = static_cast<int32_t>(
        rng.UniformInt(static_cast<uint32_t>(env.NumActions())));
    t.obs.push_back(env.Observe(s));
    t.act.push_back(a);
    t.positions.push_back(s);
    s = env.Step(s, a);
  }
  return t;
}

template <typename Env>
std::vector<Trajectory> RandomWalks(const Env &env, int64_t n_walks,
                                    int64_t n_steps, Rng &rng) {
  std::vector<Trajectory> out;
  out.reserve(n_walks);
  for (int64_t i = 0; i < n_walks; ++i)
    out.push_back(RandomWalk(env, n_steps, rng));
  return out;
}

// Each observation is independently replaced by a uniform random label in
// [0, n_labels) with probability p. Actions and hidden positions untouched.
inline void InjectNoise(std::vector<Trajectory> &walks, double p,
                        int32_t n_labels, Rng &rng) {
  if (p < 0.0 || p > 1.0)
    throw std::invalid_argument("InjectNoise: p outside [0,1]");
  for (auto &w : walks)
    for (auto &x : w.obs)
      if (rng.UniformDouble() < p)
        x = static_cast<int32_t>(rng.UniformInt(n_labels));
}

}  // namespace envs
}  // namespace tdb

#endif  // TDB_ENVS_ROOMS_HPP_
