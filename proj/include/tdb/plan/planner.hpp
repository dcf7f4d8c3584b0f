// planner.hpp: shortest-path planning on the latent graph, the rollout
// baseline with tail evaluation, and the ImpFallback/RatioSP harness.
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

#ifndef TDB_PLAN_PLANNER_HPP_
#define TDB_PLAN_PLANNER_HPP_

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "tdb/cogmap/cogmap.hpp"
#include "tdb/model/infer.hpp"
#include "tdb/rng.hpp"
#include "tdb/trajectory.hpp"

namespace tdb {
namespace plan {

// One planning instance cut from a test walk of length N with context C
// (1-based paper indexing: source pos_C, target pos_{N-C}): the fallback is
// the recorded walk segment between them, always valid by construction.
struct PlanProblem {
  Trajectory traj;
  int32_t context = 0;               // C
  int32_t src_pos = 0;               // pos at index C-1 (0-based)
  int32_t dst_pos = 0;               // pos at index N-C-1 (0-based)
  std::vector<int32_t> fallback;     // act[C-1 .. N-C-2], length N-2C
  int32_t optimal_len = 0;           // oracle BFS length, evaluation-only
  int32_t target_obs = 0;            // obs[N-C-1], the rollout match token
};

struct PlanResult {
  std::optional<std::vector<int32_t>> actions;
  bool valid = false;
  int64_t length = 0;
  double ratio = 0.0;  // length / optimal, when valid
};

// Breadth-first shortest action sequence between two GT states; empty
// optional when unreachable.
template <typename Env>
std::optional<std::vector<int32_t>> EnvShortestPath(const Env &env,
                                                    int32_t src, int32_t dst) {
  std::vector<int32_t> prev_state(env.NumStates(), -1);
  std::vector<int32_t> prev_action(env.NumStates(), -1);
  std::vector<bool> seen(env.NumStates(), false);
  std::deque<int32_t> queue{src};
  seen[src] = true;
  while (!queue.empty()) {
    int32_t s = queue.front();
    queue.pop_front();
    if (s == dst) break;
    for (int32_t a = 0; a < env.NumActions(); ++a) {
      int32_t nxt = env.Step(s, a);
      if (seen[nxt]) continue;
      seen[nxt] = true;
      prev_state[nxt] = s;
      prev_action[nxt] = a;
      queue.push_back(nxt);
    }
  }
  if (!seen[dst]) return std::nullopt;
  std::vector<int32_t> actions;
  for (int32_t s = dst; s != src; s = prev_state[s])
    actions.push_back(prev_action[s]);
  std::reverse(actions.begin(), actions.end());
  return actions;
}

// Simulates `actions` from `start` under GT dynamics; valid iff the final
// state equals `target`.
template <typename Env>
std::pair<bool, int32_t> ValidatePath(const Env &env, int32_t start,
                                      const std::vector<int32_t> &actions,
                                      int32_t target) {
  int32_t s = start;
  for (int32_t a : actions) s = env.Step(s, a);
  return {s == target, s};
}

// Cuts one planning problem per test walk. Requires N > 2C.
template <typename Env>
std::vector<PlanProblem> MakePlanProblems(const Env &env,
                                          const std::vector<Trajectory> &walks,
                                          int32_t C) {
  std::vector<PlanProblem> out;
  for (const auto &w : walks) {
    int64_t N = w.length();
    if (N <= 2 * C) throw std::invalid_argument("MakePlanProblems: N <= 2C");
    PlanProblem p;
    p.traj = w;
    p.context = C;
    p.src_pos = w.positions[static_cast<size_t>(C - 1)];
    p.dst_pos = w.positions[static_cast<size_t>(N - C - 1)];
    p.target_obs = w.obs[static_cast<size_t>(N - C - 1)];
    p.fallback.assign(w.act.begin() + C - 1, w.act.begin() + (N - C - 1));
    auto opt = EnvShortestPath(env, p.src_pos, p.dst_pos);
    if (!opt)
      throw std::runtime_error("MakePlanProblems: target unreachable in GT");
    p.optimal_len = static_cast<int32_t>(opt->size());
    // Sanity: the fallback must reach the target.
    if (!ValidatePath(env, p.src_pos, p.fallback, p.dst_pos).first)
      throw std::runtime_error("MakePlanProblems: fallback does not validate");
    out.push_back(std::move(p));
  }
  return out;
}

// Node owning a tuple at minimal Hamming distance from the query; ties go
// to the lowest canonical node id.
inline int32_t Localize(const cogmap::Key &query, const cogmap::LatentGraph &g) {
  if (g.nodes.empty()) throw std::invalid_argument("Localize: empty graph");
  int32_t best_node = -1;
  size_t best_dist = 0;
  for (const auto &n : g.nodes)
    for (const auto &k : n.keys) {
      if (k.size() != query.size())
        throw std::invalid_argument("Localize: tuple length mismatch");
      size_t d = 0;
      for (size_t i = 0; i < k.size(); ++i) d += k[i] != query[i];
      if (best_node < 0 || d < best_dist) {
        best_node = n.id;
        best_dist = d;
      }
    }
  return best_node;
}

// Breadth-first shortest path on the directed action-labeled latent graph.
// With `forbidden_obs`, the search first runs on the subgraph excluding
// nodes whose majority observation equals the forbidden color (src and dst
// always kept) and falls back to the unconstrained search if disconnected.
inline std::optional<std::vector<int32_t>> LatentShortestPath(
    const cogmap::LatentGraph &g, int32_t src, int32_t dst,
    std::optional<int32_t> forbidden_obs = std::nullopt) {
  auto bfs = [&](bool constrained) -> std::optional<std::vector<int32_t>> {
    std::vector<std::vector<std::pair<int32_t, int32_t>>> adj(g.nodes.size());
    for (const auto &e : g.edges) {
      if (constrained && e.dst != src && e.dst != dst &&
          g.nodes[static_cast<size_t>(e.dst)].MajorityObs() == *forbidden_obs)
        continue;
      if (constrained && e.src != src && e.src != dst &&
          g.nodes[static_cast<size_t>(e.src)].MajorityObs() == *forbidden_obs)
        continue;
      adj[static_cast<size_t>(e.src)].push_back({e.dst, e.action});
    }
    std::vector<int32_t> prev_node(g.nodes.size(), -1), prev_act(g.nodes.size(), -1);
    std::vector<bool> seen(g.nodes.size(), false);
    std::deque<int32_t> queue{src};
    seen[static_cast<size_t>(src)] = true;
    while (!queue.empty()) {
      int32_t u = queue.front();
      queue.pop_front();
      if (u == dst) break;
      for (auto [v, a] : adj[static_cast<size_t>(u)]) {
        if (seen[static_cast<size_t>(v)]) continue;
        seen[static_cast<size_t>(v)] = true;
        prev_node[static_cast<size_t>(v)] = u;
        prev_act[static_cast<size_t>(v)] = a;
        queue.push_back(v);
      }
    }
    if (!seen[static_cast<size_t>(dst)]) return std::nullopt;
    std::vector<int32_t> actions;
    for (int32_t v = dst; v != src; v = prev_node[static_cast<size_t>(v)])
      actions.push_back(prev_act[static_cast<size_t>(v)]);
    std::reverse(actions.begin(), actions.end());
    return actions;
  };
  if (forbidden_obs) {
    auto constrained = bfs(true);
    if (constrained) return constrained;
  }
  return bfs(false);
}

// One candidate prefix found by a random rollout.
struct RolloutCandidate {
  std::vector<int32_t> actions;  // prefix of the rollout's action sequence
  int32_t rollout = 0;           // rollout index (tie policy: first wins)
};

// Appendix-style rollout baseline for the vanilla transformer: the context
// stream x_1 a_1 ... x_C is advanced once; each rollout appends N-2C uniform
// random actions, greedily decoding the observation after each one. Every
// position where the decoded observation equals the target observation
// yields a candidate prefix.
template <typename SC>
std::vector<RolloutCandidate> RolloutPlanner(const Model<SC> &m,
                                             const PlanProblem &p,
                                             int32_t n_rollouts, Rng &rng) {
  const auto &w = p.traj;
  int64_t N = w.length();
  int32_t C = p.context;
  int64_t rollout_len = N - 2 * C;

  InferenceEngine<SC> context(&m);
  for (int32_t i = 0; i < C; ++i) {
    context.AppendObs(w.obs[static_cast<size_t>(i)]);
    if (i + 1 < C) context.AppendAct(w.act[static_cast<size_t>(i)]);
  }

  std::vector<RolloutCandidate> out;
  for (int32_t r = 0; r < n_rollouts; ++r) {
    InferenceEngine<SC> eng = context;
    std::vector<int32_t> actions;
    for (int64_t s = 0; s < rollout_len; ++s) {
      int32_t a = static_cast<int32_t>(
          rng.UniformInt(static_cast<uint32_t>(m.cfg.vocab_act)));
      actions.push_back(a);
      eng.AppendAct(a);
      int32_t decoded = eng.GreedyNextObs();
      eng.AppendObs(decoded);
      if (decoded == p.target_obs) out.push_back({actions, r});
    }
  }
  return out;
}

// Tail evaluation: decode C further steps conditioned on context + rollout
// prefix + recorded tail actions and accept iff every decoded observation
// matches the recorded tail.
template <typename SC>
bool TailEval(const Model<SC> &m, const PlanProblem &p,
              const RolloutCandidate &cand) {
  const auto &w = p.traj;
  int64_t N = w.length();
  int32_t C = p.context;

  InferenceEngine<SC> eng(&m);
  for (int32_t i = 0; i < C; ++i) {
    eng.AppendObs(w.obs[static_cast<size_t>(i)]);
    if (i + 1 < C) eng.AppendAct(w.act[static_cast<size_t>(i)]);
  }
  // Replay the candidate prefix with its own greedy decodes.
  for (int32_t a : cand.actions) {
    eng.AppendAct(a);
    eng.AppendObs(eng.GreedyNextObs());
  }
  // Tail: actions a_{N-C}..a_{N-1} (1-based) against obs x_{N-C+1}..x_N.
  for (int32_t i = 0; i < C; ++i) {
    eng.AppendAct(w.act[static_cast<size_t>(N - C - 1 + i)]);
    int32_t decoded = eng.GreedyNextObs();
    if (decoded != w.obs[static_cast<size_t>(N - C + i)]) return false;
    eng.AppendObs(decoded);
  }
  return true;
}

struct PlanningMetrics {
  double imp_fallback = 0.0;  // fraction valid and strictly shorter
  double ratio_sp = 0.0;      // mean length/optimal over improved problems
  int64_t n_improved = 0;
  int64_t n_problems = 0;
};

// Validates one proposal per problem against GT dynamics and aggregates
// ImpFallback and RatioSP. Proposals may be nullopt (no path found).
template <typename Env>
PlanningMetrics EvalPlanning(
    const Env &env, const std::vector<PlanProblem> &problems,
    const std::vector<std::optional<std::vector<int32_t>>> &proposals) {
  if (problems.size() != proposals.size())
    throw std::invalid_argument("EvalPlanning: size mismatch");
  PlanningMetrics m;
  m.n_problems = static_cast<int64_t>(problems.size());
  double ratio_sum = 0.0;
  for (size_t i = 0; i < problems.size(); ++i) {
    const auto &p = problems[i];
    const auto &prop = proposals[i];
    if (!prop) continue;
    bool valid = ValidatePath(env, p.src_pos, *prop, p.dst_pos).first;
    if (!valid) continue;
    if (static_cast<int64_t>(prop->size()) >=
        static_cast<int64_t>(p.fallback.size()))
      continue;
    ++m.n_improved;
    ratio_sum += static_cast<double>(prop->size()) /
                 static_cast<double>(std::max<int32_t>(p.optimal_len, 1));
  }
  if (m.n_problems > 0)
    m.imp_fallback =
        static_cast<double>(m.n_improved) / static_cast<double>(m.n_problems);
  if (m.n_improved > 0) m.ratio_sp = ratio_sum / static_cast<double>(m.n_improved);
  return m;
}

// Shortest valid proposal from rollout candidates (first by rollout order on
// ties); tail evaluation optionally filters candidates first.
template <typename SC>
std::optional<std::vector<int32_t>> BestRolloutProposal(
    const Model<SC> &m, const PlanProblem &p,
    std::vector<RolloutCandidate> candidates, bool use_tail_eval) {
  std::optional<std::vector<int32_t>> best;
  for (const auto &c : candidates) {
    if (best && c.actions.size() >= best->size()) continue;
    if (use_tail_eval && !TailEval(m, p, c)) continue;
    best = c.actions;
  }
  return best;
}

}  // namespace plan
}  // namespace tdb

#endif  // TDB_PLAN_PLANNER_HPP_
