// Latent-graph extraction tests: count accumulation, Hamming clustering,
// thresholded graph construction, neighborhood merging, discarded-key
// remapping, annotation, and the oracle-isomorphism property.
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

#include <map>
#include <set>
#include <vector>

#include "doctest.h"
#include "tdb/cogmap/cogmap.hpp"
#include "tdb/envs/cube.hpp"
#include "tdb/envs/rooms.hpp"

using namespace tdb;
using namespace tdb::cogmap;

TEST_CASE("accumulate_counts: hand count, empty stream, total mass") {
  // s = (A, B, A) with A = (1), B = (2); a = (3, 4).
  std::vector<std::vector<Key>> assign{{{1}, {2}, {1}}};
  std::vector<std::vector<int32_t>> acts{{3, 4}};
  CountTensor c = AccumulateCounts(assign, acts);
  CHECK(c.counts.size() == 2);
  CHECK(c.counts.at({{1}, 3, {2}}) == 1);
  CHECK(c.counts.at({{2}, 4, {1}}) == 1);
  CHECK(c.total_mass == 2);
  CHECK(c.n_actions == 5);

  CountTensor empty = AccumulateCounts({}, {});
  CHECK(empty.counts.empty());
  CHECK(empty.total_mass == 0);

  // Arithmetic oracle: 8 walks of length 50 carry 8 * 49 triples.
  std::vector<std::vector<Key>> many;
  std::vector<std::vector<int32_t>> many_acts;
  for (int w = 0; w < 8; ++w) {
    std::vector<Key> s;
    std::vector<int32_t> a;
    for (int n = 0; n < 50; ++n) {
      s.push_back({(w + n) % 3});
      a.push_back(n % 4);
    }
    many.push_back(s);
    many_acts.push_back(a);
  }
  CHECK(AccumulateCounts(many, many_acts).total_mass == 8 * 49);

  CHECK_THROWS_AS(AccumulateCounts({{{1}, {2}}}, {{}}), std::invalid_argument);
}

TEST_CASE("hamming_cluster: quarter-distance merge and M=1 behavior") {
  // M=4: (1,2,3,4) vs (1,2,3,5) differ in 1/4 of entries -> merged at 0.25.
  auto cl = HammingCluster({{1, 2, 3, 4}, {1, 2, 3, 5}}, 0.25);
  CHECK(cl.at({1, 2, 3, 4}) == cl.at({1, 2, 3, 5}));
  CHECK(cl.at({1, 2, 3, 4}) == Key{1, 2, 3, 4});  // lexicographically smallest

  // Just over the threshold: 2/4 differing entries stay separate.
  auto cl2 = HammingCluster({{1, 2, 3, 4}, {1, 2, 9, 5}}, 0.25);
  CHECK(cl2.at({1, 2, 3, 4}) != cl2.at({1, 2, 9, 5}));

  // M=1: H is 0 or 1, so only identical tuples merge at d=0.25.
  auto cl3 = HammingCluster({{3}, {4}, {3}}, 0.25);
  CHECK(cl3.at({3}) == Key{3});
  CHECK(cl3.at({4}) == Key{4});

  // Transitive chaining: a-b and b-c links put a, c in one component.
  auto cl4 = HammingCluster({{1, 2, 3, 4}, {1, 2, 3, 5}, {1, 2, 6, 5}}, 0.25);
  CHECK(cl4.at({1, 2, 3, 4}) == cl4.at({1, 2, 6, 5}));

  CHECK_THROWS_AS(HammingCluster({{1, 2}, {1, 2, 3}}, 0.25),
                  std::invalid_argument);
}

TEST_CASE("build_graph: dominant action and threshold rule") {
  // Single triple: one edge, c* equals its own count.
  CountTensor single;
  single.counts[{{0}, 2, {1}}] = 7;
  single.n_actions = 3;
  LatentGraph g1 = BuildGraph(single, 0.1);
  REQUIRE(g1.edges.size() == 1);
  CHECK(g1.edges[0].action == 2);
  CHECK(g1.edges[0].count == 7);

  // C[i,1,k]=100, C[i,2,k]=3: one edge labeled action 1 only.
  CountTensor c;
  c.counts[{{0}, 1, {1}}] = 100;
  c.counts[{{0}, 2, {1}}] = 3;
  c.n_actions = 3;
  LatentGraph g2 = BuildGraph(c, 0.1);
  REQUIRE(g2.edges.size() == 1);
  CHECK(g2.edges[0].action == 1);

  // A pair whose dominant count falls below t_ratio * c* is dropped.
  c.counts[{{1}, 0, {0}}] = 9;  // 9 < 0.1 * 100
  LatentGraph g3 = BuildGraph(c, 0.1);
  CHECK(g3.edges.size() == 1);
  LatentGraph g4 = BuildGraph(c, 0.05);  // 9 >= 5
  CHECK(g4.edges.size() == 2);

  // Monotonicity: raising t_ratio never adds edges.
  for (double lo : {0.0, 0.05, 0.1, 0.5}) {
    size_t prev = BuildGraph(c, lo).edges.size();
    CHECK(BuildGraph(c, lo + 0.3).edges.size() <= prev);
  }

  CHECK_THROWS_AS(BuildGraph(CountTensor{}, 0.1), std::invalid_argument);
}

namespace {

LatentGraph ManualGraph(int n_nodes, const std::vector<LatentEdge> &edges) {
  LatentGraph g;
  for (int i = 0; i < n_nodes; ++i) {
    LatentNode node;
    node.keys = {Key{i}};
    g.nodes.push_back(node);
  }
  g.edges = edges;
  std::sort(g.edges.begin(), g.edges.end());
  g.RebuildKeyIndex();
  return g;
}

}  // namespace

TEST_CASE("merge_identical_nodes: labeled merging and the unlabeled switch") {
  // Nodes 0, 1 share identical action-labeled in and out neighborhoods
  // through 2 and 3; 2 and 3 differ only in edge labels.
  std::vector<LatentEdge> edges{
      {2, 0, 0, 10}, {3, 0, 1, 10}, {2, 1, 0, 10}, {3, 1, 1, 10},
      {0, 2, 0, 10}, {0, 3, 1, 10}, {1, 2, 0, 10}, {1, 3, 1, 10}};
  LatentGraph g = ManualGraph(4, edges);

  LatentGraph labeled = MergeIdenticalNodes(g);
  CHECK(labeled.nodes.size() == 3);  // {0,1} merged; 2 and 3 distinct
  // The merged node owns both original keys.
  int merged = labeled.node_of.at(Key{0});
  CHECK(labeled.node_of.at(Key{1}) == merged);
  CHECK(labeled.nodes[merged].keys.size() == 2);

  LatentGraph unlabeled = MergeIdenticalNodes(g, true, /*labeled=*/false);
  CHECK(unlabeled.nodes.size() == 2);  // {0,1} and {2,3}
}

TEST_CASE("merge_identical_nodes: chain graphs are dropped entirely") {
  std::vector<LatentEdge> chain{{0, 1, 0, 5}, {1, 2, 0, 5}, {2, 3, 0, 5}};
  LatentGraph g = ManualGraph(4, chain);
  LatentGraph out = MergeIdenticalNodes(g);
  CHECK(out.nodes.empty());
  CHECK(out.edges.empty());
}

TEST_CASE("merge_identical_nodes: degree filter counts distinct neighbors") {
  // Node 0 has two parallel-action edges to a single successor: only one
  // distinct out-neighbor, so it is dropped despite edge multiplicity 2.
  std::vector<LatentEdge> edges{{0, 1, 0, 5}, {0, 1, 1, 5}, {1, 0, 0, 5},
                                {2, 0, 0, 5}, {1, 2, 1, 5}, {2, 1, 1, 5}};
  LatentGraph g = ManualGraph(3, edges);
  LatentGraph out = MergeIdenticalNodes(g);
  for (const auto &n : out.nodes)
    CHECK(n.keys != std::vector<Key>{Key{0}});
}

TEST_CASE("map_discarded: brute-force L1 oracle on a two-retained tensor") {
  // Keys 0 and 1 retained; keys 2 and 3 discarded. Key 2's outgoing
  // conditionals equal key 0's exactly; key 3 sits between but closer to 1.
  CountTensor c;
  c.n_actions = 2;
  c.counts[{{0}, 0, {0}}] = 8;
  c.counts[{{0}, 0, {1}}] = 2;
  c.counts[{{0}, 1, {1}}] = 10;
  c.counts[{{1}, 0, {1}}] = 10;
  c.counts[{{1}, 1, {0}}] = 5;
  c.counts[{{1}, 1, {1}}] = 5;
  c.counts[{{2}, 0, {0}}] = 4;  // p(.|2,0) = (0.8, 0.2, 0, 0) = p(.|0,0)
  c.counts[{{2}, 0, {1}}] = 1;
  c.counts[{{2}, 1, {1}}] = 6;  // p(.|2,1) = delta_1 = p(.|0,1)
  c.counts[{{3}, 0, {1}}] = 9;  // close to key 1's rows
  c.counts[{{3}, 1, {0}}] = 4;
  c.counts[{{3}, 1, {1}}] = 4;

  LatentGraph g = ManualGraph(2, {{0, 1, 1, 10}, {1, 0, 1, 5}});
  LatentGraph out = MapDiscarded(c, g);

  // Brute-force check with dense conditionals over the 4-key universe.
  auto cond = [&](const Key &s, int a) {
    std::vector<double> row(4, 0.0);
    double mass = 0.0;
    for (const auto &[key, n] : c.counts)
      if (std::get<0>(key) == s && std::get<1>(key) == a) {
        row[std::get<2>(key)[0]] += n;
        mass += n;
      }
    if (mass == 0.0)
      for (auto &v : row) v = 0.25;
    else
      for (auto &v : row) v /= mass;
    return row;
  };
  for (int d : {2, 3}) {
    double best_dist = 1e18;
    int best_r = -1;
    for (int r : {0, 1}) {
      double dist = 0.0;
      for (int a = 0; a < 2; ++a) {
        auto pr = cond({r}, a), pd = cond({d}, a);
        for (int l = 0; l < 4; ++l) dist += std::abs(pr[l] - pd[l]);
      }
      if (dist < best_dist) {
        best_dist = dist;
        best_r = r;
      }
    }
    CHECK(out.node_of.at(Key{d}) == out.node_of.at(Key{best_r}));
  }
  // Key 2 matches key 0's distributions exactly.
  CHECK(out.node_of.at(Key{2}) == out.node_of.at(Key{0}));
  // All universe keys are owned after the step.
  for (int k : {0, 1, 2, 3}) CHECK(out.node_of.count(Key{k}) == 1);

  CHECK_THROWS_AS(MapDiscarded(c, LatentGraph{}), std::invalid_argument);
}

TEST_CASE("annotate: recount oracle and conservation") {
  Rng rng(101);
  envs::RoomSpec room = envs::GenAliasedRoom(4, 6, 3, 2, 2, rng);
  auto walks = envs::RandomWalks(room, 6, 120, rng);
  std::vector<std::vector<Key>> assign;
  for (const auto &w : walks) {
    std::vector<Key> s;
    for (int32_t p : w.positions) s.push_back({p});
    assign.push_back(s);
  }
  LatentGraph g = ExtractGraph(assign, walks);

  // Conservation: activation counts sum to the number of ingested steps.
  int64_t total = 0;
  for (const auto &n : g.nodes) total += n.activation_count;
  CHECK(total == 6 * 120);

  // Recount oracle for majority position and observation.
  for (const auto &n : g.nodes) {
    std::map<int32_t, int64_t> pos, obs;
    double step_sum = 0.0;
    int64_t cnt = 0;
    for (size_t t = 0; t < assign.size(); ++t)
      for (size_t i = 0; i < assign[t].size(); ++i)
        if (g.node_of.at(assign[t][i]) == n.id) {
          ++pos[walks[t].positions[i]];
          ++obs[walks[t].obs[i]];
          step_sum += static_cast<double>(i);
          ++cnt;
        }
    CHECK(cnt == n.activation_count);
    CHECK(pos == n.pos_hist);
    CHECK(obs == n.obs_hist);
    CHECK(n.mean_timestep ==
          doctest::Approx(step_sum / static_cast<double>(cnt)));
  }
}

TEST_CASE("oracle assignments: extracted room graph isomorphic to GT") {
  Rng rng(103);
  envs::RoomSpec room = envs::GenAliasedRoom(6, 8, 4, 3, 3, rng);
  auto walks = envs::RandomWalks(room, 40, 400, rng);
  std::vector<std::vector<Key>> assign;
  for (const auto &w : walks) {
    std::vector<Key> s;
    for (int32_t p : w.positions) s.push_back({p});
    assign.push_back(s);
  }
  LatentGraph g = ExtractGraph(assign, walks);
  LatentGraph gt = GtLatentGraph(room);
  CHECK(g.nodes.size() == gt.nodes.size());
  CHECK(ActionGraphIsomorphic(g, gt));
  // With oracle keys the annotation is exact: every node is a single
  // position and the majority position is that position.
  for (const auto &n : g.nodes) CHECK(n.pos_hist.size() == 1);
}

TEST_CASE("oracle assignments: extracted cube graph isomorphic to GT") {
  Rng rng(107);
  envs::CubeSpec cube = envs::GenAliasedCube(3, 12, rng);
  auto walks = envs::RandomWalks(cube, 60, 400, rng);
  std::vector<std::vector<Key>> assign;
  for (const auto &w : walks) {
    std::vector<Key> s;
    for (int32_t p : w.positions) s.push_back({p});
    assign.push_back(s);
  }
  LatentGraph g = ExtractGraph(assign, walks);
  LatentGraph gt = GtLatentGraph(cube);
  CHECK(g.nodes.size() == gt.nodes.size());
  CHECK(ActionGraphIsomorphic(g, gt));
}

TEST_CASE("isomorphism check rejects structural differences") {
  Rng rng(109);
  envs::RoomSpec a = envs::GenAliasedRoom(4, 5, 3, 2, 2, rng);
  envs::RoomSpec b = envs::GenAliasedRoom(5, 5, 3, 2, 2, rng);
  CHECK(ActionGraphIsomorphic(GtLatentGraph(a), GtLatentGraph(a)));
  CHECK_FALSE(ActionGraphIsomorphic(GtLatentGraph(a), GtLatentGraph(b)));
}

TEST_CASE("pipeline determinism and export round trip") {
  Rng rng(113);
  envs::RoomSpec room = envs::GenAliasedRoom(4, 6, 3, 2, 2, rng);
  auto walks = envs::RandomWalks(room, 8, 150, rng);
  std::vector<std::vector<Key>> assign;
  for (const auto &w : walks) {
    std::vector<Key> s;
    for (int32_t p : w.positions) s.push_back({p});
    assign.push_back(s);
  }
  LatentGraph g1 = ExtractGraph(assign, walks);
  LatentGraph g2 = ExtractGraph(assign, walks);
  CHECK(GraphToJson(g1) == GraphToJson(g2));
  CHECK(GraphToDot(g1) == GraphToDot(g2));

  LatentGraph rt = GraphFromJson(GraphToJson(g1));
  CHECK(rt.nodes.size() == g1.nodes.size());
  CHECK(rt.edges.size() == g1.edges.size());
  for (size_t i = 0; i < g1.nodes.size(); ++i) {
    CHECK(rt.nodes[i].keys == g1.nodes[i].keys);
    CHECK(rt.nodes[i].MajorityPos() == g1.nodes[i].MajorityPos());
  }
}
