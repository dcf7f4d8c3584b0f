// icl.hpp: palette-remapped room families and base-target relabeling for
// in-context learning experiments.
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

#ifndef TDB_ENVS_ICL_HPP_
#define TDB_ENVS_ICL_HPP_

#include <algorithm>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <vector>

#include "tdb/envs/rooms.hpp"
#include "tdb/rng.hpp"

namespace tdb {
namespace envs {

// Equivalence classes of grid positions sharing one color. Every room built
// from the partition assigns one palette color per class via an injective
// map, so all rooms in a family share the same aliasing structure.
struct RoomPartition {
  int32_t height = 0;
  int32_t width = 0;
  int32_t n_classes = 0;            // O
  std::vector<int32_t> class_of;    // height*width, values in [0, n_classes)
};

inline RoomPartition PartitionOfRoom(const RoomSpec &room) {
  RoomPartition p;
  p.height = room.height;
  p.width = room.width;
  p.n_classes = room.n_labels;
  p.class_of = room.labels;
  return p;
}

// Rank (1-based) of each map entry among all entries, ascending. The map
// must be injective so ranks form a permutation of 1..O.
inline std::vector<int32_t> RankPermutation(const std::vector<int32_t> &phi) {
  std::vector<int32_t> sorted(phi);
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument("RankPermutation: map is not injective");
  std::vector<int32_t> ranks(phi.size());
  for (size_t k = 0; k < phi.size(); ++k)
    ranks[k] = static_cast<int32_t>(
        std::lower_bound(sorted.begin(), sorted.end(), phi[k]) -
        sorted.begin()) + 1;
  return ranks;
}

// Rule R rejects any color map whose rank permutation has a fixed point
// (some class k receives the kth-lowest color of the room). Rooms admitted
// under R never reveal a class's identity through its within-room rank.
inline bool ViolatesRuleR(const std::vector<int32_t> &phi) {
  auto ranks = RankPermutation(phi);
  for (size_t k = 0; k < ranks.size(); ++k)
    if (ranks[k] == static_cast<int32_t>(k) + 1) return true;
  return false;
}

// Number of admissible injective maps {0..O-1} -> {0..palette-1}: all
// injections without rule R; with rule R only maps whose rank permutation is
// a derangement, i.e. C(palette, O) * D_O.
inline double AdmissibleRoomCount(int32_t palette, int32_t n_classes,
                                  bool rule_R) {
  double injections = 1.0;
  for (int32_t i = 0; i < n_classes; ++i) injections *= palette - i;
  if (!rule_R) return injections;
  // D_O via the recurrence D_n = (n-1)(D_{n-1} + D_{n-2}).
  double d_prev2 = 1.0, d_prev1 = 0.0;  // D_0, D_1
  double derangements = (n_classes == 0) ? 1.0 : 0.0;
  for (int32_t n = 2; n <= n_classes; ++n) {
    derangements = (n - 1) * (d_prev1 + d_prev2);
    d_prev2 = d_prev1;
    d_prev1 = derangements;
  }
  if (n_classes == 0) derangements = 1.0;
  double orderings = 1.0;
  for (int32_t i = 2; i <= n_classes; ++i) orderings *= i;
  return injections / orderings * derangements;
}

// Builds a room from the partition by applying an injective color map.
inline RoomSpec ApplyColorMap(const RoomPartition &part,
                              const std::vector<int32_t> &phi,
                              int32_t palette) {
  RoomSpec r;
  r.height = part.height;
  r.width = part.width;
  r.n_labels = palette;
  r.labels.resize(part.class_of.size());
  for (size_t i = 0; i < part.class_of.size(); ++i)
    r.labels[i] = phi[part.class_of[i]];
  return r;
}

// Samples n_rooms distinct rooms (without replacement) by drawing injective
// maps phi: classes -> palette uniformly; with rule_R, maps with a rank
// fixed point are rejected. Throws if n_rooms exceeds the admissible count.
inline std::vector<RoomSpec> GenIclRooms(const RoomPartition &part,
                                         int64_t n_rooms, int32_t palette,
                                         bool rule_R, Rng &rng,
                                         std::vector<std::vector<int32_t>>
                                             *maps_out = nullptr) {
  if (part.n_classes > palette)
    throw std::invalid_argument("GenIclRooms: more classes than palette");
  if (static_cast<double>(n_rooms) >
      AdmissibleRoomCount(palette, part.n_classes, rule_R))
    throw std::invalid_argument(
        "GenIclRooms: n_rooms exceeds the number of admissible rooms");

  std::set<std::vector<int32_t>> used;
  std::vector<RoomSpec> rooms;
  std::vector<int32_t> pool(palette);
  while (static_cast<int64_t>(rooms.size()) < n_rooms) {
    // Injective map by partial Fisher-Yates over the palette.
    for (int32_t i = 0; i < palette; ++i) pool[i] = i;
    std::vector<int32_t> phi(part.n_classes);
    for (int32_t k = 0; k < part.n_classes; ++k) {
      uint32_t j = k + rng.UniformInt(static_cast<uint32_t>(palette - k));
      std::swap(pool[k], pool[j]);
      phi[k] = pool[k];
    }
    if (rule_R && ViolatesRuleR(phi)) continue;
    if (!used.insert(phi).second) continue;
    RoomSpec r = ApplyColorMap(part, phi, palette);
    r.patch_h = 0;
    r.patch_w = 0;
    rooms.push_back(std::move(r));
    if (maps_out) maps_out->push_back(phi);
  }
  return rooms;
}

// Room-agnostic relabeling: each observation becomes the rank (1-based) of
// its value among the distinct values seen so far in the sequence.
inline std::vector<int32_t> ToBaseTargets(const std::vector<int32_t> &x) {
  std::vector<int32_t> out(x.size());
  std::set<int32_t> seen;
  for (size_t n = 0; n < x.size(); ++n) {
    seen.insert(x[n]);
    out[n] = static_cast<int32_t>(
        std::distance(seen.begin(), seen.find(x[n]))) + 1;
  }
  return out;
}

}  // namespace envs
}  // namespace tdb

#endif  // TDB_ENVS_ICL_HPP_
