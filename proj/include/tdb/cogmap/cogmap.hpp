// cogmap.hpp: extraction of an action-labeled latent transition graph from
// bottleneck-index streams via count accumulation, thresholding, Hamming
// clustering, identical-neighborhood merging, and discarded-key remapping.
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

#ifndef TDB_COGMAP_COGMAP_HPP_
#define TDB_COGMAP_COGMAP_HPP_

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "tdb/trajectory.hpp"

namespace tdb {
namespace cogmap {

// A latent key: the tuple of M bottleneck indices active at one timestep.
using Key = std::vector<int32_t>;

// Sparse empirical transition counts C[i, a, k] over latent keys, plus the
// total ingested mass and the action arity.
struct CountTensor {
  std::map<std::tuple<Key, int32_t, Key>, int64_t> counts;
  int64_t total_mass = 0;
  int32_t n_actions = 0;

  int64_t MaxCount() const {
    int64_t m = 0;
    for (const auto &[key, c] : counts) m = std::max(m, c);
    return m;
  }
};

// Exact triple counts over all trajectories. Each trajectory contributes
// |assignments| - 1 consecutive (s_n, a_n, s_{n+1}) triples.
inline CountTensor AccumulateCounts(
    const std::vector<std::vector<Key>> &assignments,
    const std::vector<std::vector<int32_t>> &actions) {
  if (assignments.size() != actions.size())
    throw std::invalid_argument("AccumulateCounts: trajectory count mismatch");
  CountTensor c;
  for (size_t t = 0; t < assignments.size(); ++t) {
    const auto &s = assignments[t];
    const auto &a = actions[t];
    if (!s.empty() && a.size() < s.size() - 1)
      throw std::invalid_argument("AccumulateCounts: actions shorter than "
                                  "assignments - 1");
    for (size_t n = 0; n + 1 < s.size(); ++n) {
      ++c.counts[{s[n], a[n], s[n + 1]}];
      ++c.total_mass;
      c.n_actions = std::max(c.n_actions, a[n] + 1);
    }
  }
  return c;
}

// Union-find clustering of latent keys: any pair at Hamming distance (the
// fraction of differing coordinates) <= d_hamming is merged, transitively.
// Every key maps to its component's lexicographically smallest member.
inline std::map<Key, Key> HammingCluster(const std::vector<Key> &keys,
                                         double d_hamming) {
  std::vector<Key> uniq(keys);
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  size_t n = uniq.size();
  for (const auto &k : uniq)
    if (!uniq.empty() && k.size() != uniq[0].size())
      throw std::invalid_argument("HammingCluster: mixed tuple lengths");

  std::vector<size_t> parent(n);
  for (size_t i = 0; i < n; ++i) parent[i] = i;
  std::function<size_t(size_t)> find = [&](size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  size_t m = uniq.empty() ? 0 : uniq[0].size();
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j) {
      size_t diff = 0;
      for (size_t d = 0; d < m; ++d) diff += uniq[i][d] != uniq[j][d];
      if (m > 0 &&
          static_cast<double>(diff) / static_cast<double>(m) <= d_hamming)
        parent[find(i)] = find(j);
    }
  // Lexicographically smallest member per component; uniq is sorted, so the
  // first key seen for a root is the smallest.
  std::map<size_t, Key> rep;
  std::map<Key, Key> out;
  for (size_t i = 0; i < n; ++i) {
    size_t r = find(i);
    if (!rep.count(r)) rep[r] = uniq[i];
  }
  for (size_t i = 0; i < n; ++i) out[uniq[i]] = rep[find(i)];
  return out;
}

// Re-keys a count tensor through a cluster map (identity for absent keys).
inline CountTensor Canonicalize(const CountTensor &c,
                                const std::map<Key, Key> &cluster) {
  auto canon = [&](const Key &k) {
    auto it = cluster.find(k);
    return it == cluster.end() ? k : it->second;
  };
  CountTensor out;
  out.total_mass = c.total_mass;
  out.n_actions = c.n_actions;
  for (const auto &[key, n] : c.counts) {
    const auto &[i, a, k] = key;
    out.counts[{canon(i), a, canon(k)}] += n;
  }
  return out;
}

struct LatentNode {
  int32_t id = 0;
  std::vector<Key> keys;  // sorted canonical + remapped keys owned
  // Annotation (filled by Annotate): empirical histograms over hidden GT
  // positions and observations, activation count, mean activation timestep.
  std::map<int32_t, int64_t> pos_hist;
  std::map<int32_t, int64_t> obs_hist;
  int64_t activation_count = 0;
  double mean_timestep = 0.0;

  int32_t MajorityPos() const {
    int32_t best = -1;
    int64_t best_n = -1;
    for (const auto &[p, n] : pos_hist)
      if (n > best_n) { best = p; best_n = n; }
    return best;
  }
  int32_t MajorityObs() const {
    int32_t best = -1;
    int64_t best_n = -1;
    for (const auto &[o, n] : obs_hist)
      if (n > best_n) { best = o; best_n = n; }
    return best;
  }
};

struct LatentEdge {
  int32_t src = 0, dst = 0, action = 0;
  int64_t count = 0;
  bool operator<(const LatentEdge &o) const {
    return std::tie(src, dst, action) < std::tie(o.src, o.dst, o.action);
  }
};

struct LatentGraph {
  std::vector<LatentNode> nodes;
  std::vector<LatentEdge> edges;
  double t_ratio = 0.1;
  double d_hamming = 0.25;
  std::map<Key, int32_t> node_of;  // owned key -> node index

  void RebuildKeyIndex() {
    node_of.clear();
    for (size_t i = 0; i < nodes.size(); ++i) {
      nodes[i].id = static_cast<int32_t>(i);
      for (const auto &k : nodes[i].keys)
        node_of[k] = static_cast<int32_t>(i);
    }
  }
};

// One node per canonical key appearing in C; for each ordered key pair
// (i, k) the dominant action j* = argmax_j C[i,j,k] (lowest j on ties) wins,
// and the edge is kept iff its count reaches t_ratio * c* where c* is the
// global maximum entry.
inline LatentGraph BuildGraph(const CountTensor &c, double t_ratio) {
  if (c.counts.empty())
    throw std::invalid_argument("BuildGraph: empty count tensor");
  LatentGraph g;
  g.t_ratio = t_ratio;
  std::set<Key> keyset;
  for (const auto &[key, n] : c.counts) {
    keyset.insert(std::get<0>(key));
    keyset.insert(std::get<2>(key));
  }
  for (const auto &k : keyset) {
    LatentNode node;
    node.keys = {k};
    g.nodes.push_back(std::move(node));
  }
  g.RebuildKeyIndex();

  int64_t cstar = c.MaxCount();
  double threshold = t_ratio * static_cast<double>(cstar);
  // Dominant action per (i, k). The scan runs in (i, action, k) map order,
  // and only a strictly larger count replaces the incumbent, so count ties
  // resolve to the lowest action.
  std::map<std::pair<Key, Key>, std::pair<int32_t, int64_t>> best;
  for (const auto &[key, n] : c.counts) {
    const auto &[i, a, k] = key;
    auto it = best.find({i, k});
    if (it == best.end() || n > it->second.second)
      best[{i, k}] = {a, n};
  }
  for (const auto &[pair, an] : best) {
    if (static_cast<double>(an.second) >= threshold) {
      LatentEdge e;
      e.src = g.node_of.at(pair.first);
      e.dst = g.node_of.at(pair.second);
      e.action = an.first;
      e.count = an.second;
      g.edges.push_back(e);
    }
  }
  std::sort(g.edges.begin(), g.edges.end());
  return g;
}

namespace detail {

// Action-labeled in/out neighbor signatures of every node.
inline void Signatures(const LatentGraph &g, bool labeled,
                       std::vector<std::set<std::pair<int32_t, int32_t>>> *in,
                       std::vector<std::set<std::pair<int32_t, int32_t>>> *out) {
  in->assign(g.nodes.size(), {});
  out->assign(g.nodes.size(), {});
  for (const auto &e : g.edges) {
    int32_t a = labeled ? e.action : 0;
    (*out)[e.src].insert({a, e.dst});
    (*in)[e.dst].insert({a, e.src});
  }
}

inline LatentGraph KeepNodes(const LatentGraph &g,
                             const std::vector<int32_t> &remap) {
  LatentGraph out;
  out.t_ratio = g.t_ratio;
  out.d_hamming = g.d_hamming;
  std::vector<LatentNode> merged;
  for (size_t i = 0; i < g.nodes.size(); ++i) {
    if (remap[i] < 0) continue;
    if (remap[i] >= static_cast<int32_t>(merged.size()))
      merged.resize(remap[i] + 1);
    auto &dst = merged[remap[i]];
    dst.keys.insert(dst.keys.end(), g.nodes[i].keys.begin(),
                    g.nodes[i].keys.end());
  }
  for (auto &n : merged) std::sort(n.keys.begin(), n.keys.end());
  out.nodes = std::move(merged);
  out.RebuildKeyIndex();
  std::set<LatentEdge> edges;
  std::map<std::tuple<int32_t, int32_t, int32_t>, int64_t> counts;
  for (const auto &e : g.edges) {
    if (remap[e.src] < 0 || remap[e.dst] < 0) continue;
    counts[{remap[e.src], remap[e.dst], e.action}] += e.count;
  }
  for (const auto &[key, n] : counts) {
    LatentEdge e;
    std::tie(e.src, e.dst, e.action) = key;
    e.count = n;
    out.edges.push_back(e);
  }
  std::sort(out.edges.begin(), out.edges.end());
  return out;
}

}  // namespace detail

// Drops nodes lacking at least two distinct incoming and two distinct
// outgoing neighbor nodes, then merges node pairs whose action-labeled
// in-edge and out-edge sets coincide, repeating until a fixpoint. The degree
// filter runs first by default; `filter_first=false` swaps the order.
// `labeled=false` switches to the unlabeled neighbor-set interpretation.
inline LatentGraph MergeIdenticalNodes(const LatentGraph &g_in,
                                       bool filter_first = true,
                                       bool labeled = true) {
  LatentGraph g = g_in;

  auto degree_filter = [&](const LatentGraph &h) {
    std::vector<std::set<int32_t>> in(h.nodes.size()), out(h.nodes.size());
    for (const auto &e : h.edges) {
      out[e.src].insert(e.dst);
      in[e.dst].insert(e.src);
    }
    std::vector<int32_t> remap(h.nodes.size(), -1);
    int32_t next = 0;
    for (size_t i = 0; i < h.nodes.size(); ++i)
      if (in[i].size() >= 2 && out[i].size() >= 2) remap[i] = next++;
    return detail::KeepNodes(h, remap);
  };

  auto merge_pass = [&](const LatentGraph &h, bool *changed) {
    std::vector<std::set<std::pair<int32_t, int32_t>>> in, out;
    detail::Signatures(h, labeled, &in, &out);
    // Group nodes by (in-signature, out-signature); each group collapses to
    // one node. Group order follows the lowest member id so node ids stay
    // canonical.
    std::map<std::pair<std::set<std::pair<int32_t, int32_t>>,
                       std::set<std::pair<int32_t, int32_t>>>,
             int32_t>
        group_of;
    std::vector<int32_t> remap(h.nodes.size(), -1);
    int32_t next = 0;
    for (size_t i = 0; i < h.nodes.size(); ++i) {
      auto sig = std::make_pair(in[i], out[i]);
      auto it = group_of.find(sig);
      if (it == group_of.end()) {
        group_of[sig] = next;
        remap[i] = next++;
      } else {
        remap[i] = it->second;
        *changed = true;
      }
    }
    return detail::KeepNodes(h, remap);
  };

  auto merge_to_fixpoint = [&](LatentGraph h) {
    for (;;) {
      bool changed = false;
      h = merge_pass(h, &changed);
      if (!changed) return h;
    }
  };

  if (filter_first) return merge_to_fixpoint(degree_filter(g));
  return degree_filter(merge_to_fixpoint(g));
}

// Maps every canonical key in C that no retained node owns to the retained
// key with the closest outgoing conditional distributions: argmin over
// retained r of sum_a sum_l |p(l | r, a) - p(l | d, a)| with conditionals
// from row-normalized C (zero-mass rows uniform over observed keys). Ties go
// to the lowest canonical key. The winning node absorbs the discarded key.
inline LatentGraph MapDiscarded(const CountTensor &c, const LatentGraph &g_in) {
  LatentGraph g = g_in;
  if (g.nodes.empty()) throw std::invalid_argument("MapDiscarded: no nodes");

  std::set<Key> all_keys;
  for (const auto &[key, n] : c.counts) {
    all_keys.insert(std::get<0>(key));
    all_keys.insert(std::get<2>(key));
  }
  std::vector<Key> universe(all_keys.begin(), all_keys.end());

  // Row-normalized conditionals p(l | s, a) as dense rows over the universe.
  std::map<Key, int32_t> uidx;
  for (size_t i = 0; i < universe.size(); ++i)
    uidx[universe[i]] = static_cast<int32_t>(i);
  auto conditional = [&](const Key &s, int32_t a) {
    std::vector<double> row(universe.size(), 0.0);
    double mass = 0.0;
    for (const auto &[key, n] : c.counts) {
      if (std::get<0>(key) != s || std::get<1>(key) != a) continue;
      row[uidx.at(std::get<2>(key))] += static_cast<double>(n);
      mass += static_cast<double>(n);
    }
    if (mass == 0.0) {
      double u = 1.0 / static_cast<double>(universe.size());
      for (auto &v : row) v = u;
    } else {
      for (auto &v : row) v /= mass;
    }
    return row;
  };

  std::vector<Key> retained;
  for (const auto &[k, node] : g.node_of) retained.push_back(k);

  std::vector<std::pair<Key, Key>> mapping;  // discarded -> retained
  for (const auto &d : universe) {
    if (g.node_of.count(d)) continue;
    Key best;
    double best_dist = 0.0;
    bool first = true;
    for (const auto &r : retained) {
      double dist = 0.0;
      for (int32_t a = 0; a < c.n_actions; ++a) {
        auto pr = conditional(r, a), pd = conditional(d, a);
        for (size_t l = 0; l < pr.size(); ++l) dist += std::abs(pr[l] - pd[l]);
      }
      if (first || dist < best_dist || (dist == best_dist && r < best)) {
        best = r;
        best_dist = dist;
        first = false;
      }
    }
    mapping.push_back({d, best});
  }
  for (const auto &[d, r] : mapping) {
    auto &node = g.nodes[g.node_of.at(r)];
    node.keys.push_back(d);
    std::sort(node.keys.begin(), node.keys.end());
  }
  g.RebuildKeyIndex();
  return g;
}

// Fills per-node annotation from aligned assignment streams and their source
// trajectories: GT-position and observation histograms, activation count,
// and mean activation timestep. Every timestep whose key the graph owns
// counts; after MapDiscarded that is all of them.
inline void Annotate(LatentGraph &g,
                     const std::vector<std::vector<Key>> &assignments,
                     const std::vector<Trajectory> &trajs) {
  if (assignments.size() != trajs.size())
    throw std::invalid_argument("Annotate: stream count mismatch");
  for (auto &n : g.nodes) {
    n.pos_hist.clear();
    n.obs_hist.clear();
    n.activation_count = 0;
    n.mean_timestep = 0.0;
  }
  std::vector<double> step_sum(g.nodes.size(), 0.0);
  for (size_t t = 0; t < assignments.size(); ++t) {
    const auto &s = assignments[t];
    const auto &traj = trajs[t];
    for (size_t n = 0; n < s.size(); ++n) {
      auto it = g.node_of.find(s[n]);
      if (it == g.node_of.end()) continue;
      auto &node = g.nodes[it->second];
      ++node.activation_count;
      step_sum[it->second] += static_cast<double>(n);
      if (n < traj.positions.size()) ++node.pos_hist[traj.positions[n]];
      if (n < traj.obs.size()) ++node.obs_hist[traj.obs[n]];
    }
  }
  for (size_t i = 0; i < g.nodes.size(); ++i)
    if (g.nodes[i].activation_count > 0)
      g.nodes[i].mean_timestep =
          step_sum[i] / static_cast<double>(g.nodes[i].activation_count);
}

// Full extraction pipeline: cluster keys, canonicalize counts, build the
// thresholded graph, merge, remap discarded keys, annotate.
inline LatentGraph ExtractGraph(const std::vector<std::vector<Key>> &assignments,
                                const std::vector<Trajectory> &trajs,
                                double t_ratio = 0.1, double d_hamming = 0.25,
                                bool filter_first = true, bool labeled = true) {
  std::vector<std::vector<int32_t>> actions;
  actions.reserve(trajs.size());
  for (const auto &t : trajs) actions.push_back(t.act);
  CountTensor raw = AccumulateCounts(assignments, actions);
  std::vector<Key> keys;
  for (const auto &[key, n] : raw.counts) {
    keys.push_back(std::get<0>(key));
    keys.push_back(std::get<2>(key));
  }
  auto cluster = HammingCluster(keys, d_hamming);
  CountTensor canon = Canonicalize(raw, cluster);
  LatentGraph g = BuildGraph(canon, t_ratio);
  g.d_hamming = d_hamming;
  LatentGraph merged = MergeIdenticalNodes(g, filter_first, labeled);
  // A heavily filtered graph can lose everything; fall back to the pre-merge
  // graph rather than failing (the paper's pipeline always retains keys).
  if (merged.nodes.empty()) merged = g;
  merged = MapDiscarded(canon, merged);
  // Canonical assignment streams for annotation.
  std::vector<std::vector<Key>> canon_assign(assignments.size());
  for (size_t t = 0; t < assignments.size(); ++t) {
    canon_assign[t].reserve(assignments[t].size());
    for (const auto &k : assignments[t]) {
      auto it = cluster.find(k);
      canon_assign[t].push_back(it == cluster.end() ? k : it->second);
    }
  }
  Annotate(merged, canon_assign, trajs);
  return merged;
}

// The ground-truth dynamics graph of a deterministic environment, in the
// same LatentGraph shape (node i owns key {i}, pos/obs annotation exact).
template <typename Env>
LatentGraph GtLatentGraph(const Env &env) {
  LatentGraph g;
  for (int32_t s = 0; s < env.NumStates(); ++s) {
    LatentNode n;
    n.id = s;
    n.keys = {Key{s}};
    n.pos_hist[s] = 1;
    n.obs_hist[env.Observe(s)] = 1;
    n.activation_count = 1;
    g.nodes.push_back(std::move(n));
  }
  g.RebuildKeyIndex();
  // Like BuildGraph, keep one edge per (src, dst) pair: parallel actions
  // (wall self-loops reachable by several blocked moves) collapse onto the
  // lowest action so GT and extracted graphs are directly comparable.
  std::map<std::pair<int32_t, int32_t>, int32_t> lowest;
  for (int32_t s = 0; s < env.NumStates(); ++s)
    for (int32_t a = 0; a < env.NumActions(); ++a) {
      auto key = std::make_pair(s, env.Step(s, a));
      auto it = lowest.find(key);
      if (it == lowest.end()) lowest[key] = a;
    }
  for (const auto &[pair, a] : lowest) {
    LatentEdge e;
    e.src = pair.first;
    e.dst = pair.second;
    e.action = a;
    e.count = 1;
    g.edges.push_back(e);
  }
  std::sort(g.edges.begin(), g.edges.end());
  return g;
}

// Exact isomorphism of deterministic action-labeled graphs: try every
// candidate image for node 0 and propagate the pairing along edges.
// Self-loop action labels are compared only for presence: when several
// blocked moves share a self-loop, the dominant action kept by BuildGraph
// depends on empirical counts and carries no structure.
inline bool ActionGraphIsomorphic(const LatentGraph &g1, const LatentGraph &g2) {
  if (g1.nodes.size() != g2.nodes.size() || g1.edges.size() != g2.edges.size())
    return false;
  size_t n = g1.nodes.size();
  if (n == 0) return true;
  auto succ = [](const LatentGraph &g) {
    std::map<std::pair<int32_t, int32_t>, std::set<int32_t>> s;
    for (const auto &e : g.edges)
      if (e.src != e.dst) s[{e.src, e.action}].insert(e.dst);
    return s;
  };
  auto selfloop = [n](const LatentGraph &g) {
    std::vector<bool> has(n, false);
    for (const auto &e : g.edges)
      if (e.src == e.dst) has[e.src] = true;
    return has;
  };
  auto s1 = succ(g1), s2 = succ(g2);
  auto self1 = selfloop(g1), self2 = selfloop(g2);
  for (size_t root = 0; root < n; ++root) {
    std::vector<int32_t> map1(n, -1), map2(n, -1);
    std::vector<int32_t> queue{0};
    map1[0] = static_cast<int32_t>(root);
    map2[root] = 0;
    bool ok = true;
    for (size_t qi = 0; qi < queue.size() && ok; ++qi) {
      int32_t u = queue[qi], v = map1[u];
      if (self1[u] != self2[v]) { ok = false; break; }
      std::set<int32_t> actions;
      for (const auto &[key, dsts] : s1)
        if (key.first == u) actions.insert(key.second);
      std::set<int32_t> actions2;
      for (const auto &[key, dsts] : s2)
        if (key.first == v) actions2.insert(key.second);
      if (actions != actions2) { ok = false; break; }
      for (int32_t a : actions) {
        const auto &d1 = s1[{u, a}];
        const auto &d2 = s2[{v, a}];
        if (d1.size() != 1 || d2.size() != 1) { ok = false; break; }
        int32_t t1 = *d1.begin(), t2 = *d2.begin();
        if (map1[t1] == -1 && map2[t2] == -1) {
          map1[t1] = t2;
          map2[t2] = t1;
          queue.push_back(t1);
        } else if (map1[t1] != t2) {
          ok = false;
          break;
        }
      }
    }
    if (ok && static_cast<size_t>(std::count(map1.begin(), map1.end(), -1)) == 0)
      return true;
  }
  return false;
}

inline std::string GraphToDot(const LatentGraph &g) {
  std::ostringstream os;
  os << "digraph latent {\n";
  for (const auto &n : g.nodes)
    os << "  n" << n.id << " [label=\"" << n.MajorityObs() << "\"];\n";
  for (const auto &e : g.edges)
    os << "  n" << e.src << " -> n" << e.dst << " [label=\"" << e.action
       << "\"];\n";
  os << "}\n";
  return os.str();
}

inline nlohmann::json GraphToJson(const LatentGraph &g) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto &n : g.nodes) {
    nlohmann::json tuples = nlohmann::json::array();
    for (const auto &k : n.keys) tuples.push_back(k);
    nodes.push_back({{"id", n.id},
                     {"tuples", tuples},
                     {"pos", n.MajorityPos()},
                     {"obs", n.MajorityObs()},
                     {"count", n.activation_count}});
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto &e : g.edges)
    edges.push_back({{"src", e.src},
                     {"dst", e.dst},
                     {"action", e.action},
                     {"count", e.count}});
  return nlohmann::json{{"nodes", nodes}, {"edges", edges}};
}

inline LatentGraph GraphFromJson(const nlohmann::json &j) {
  LatentGraph g;
  for (const auto &jn : j.at("nodes")) {
    LatentNode n;
    n.id = jn.at("id").get<int32_t>();
    for (const auto &t : jn.at("tuples"))
      n.keys.push_back(t.get<Key>());
    n.activation_count = jn.at("count").get<int64_t>();
    if (jn.at("pos").get<int32_t>() >= 0)
      n.pos_hist[jn.at("pos").get<int32_t>()] = n.activation_count;
    if (jn.at("obs").get<int32_t>() >= 0)
      n.obs_hist[jn.at("obs").get<int32_t>()] = n.activation_count;
    g.nodes.push_back(std::move(n));
  }
  for (const auto &je : j.at("edges")) {
    LatentEdge e;
    e.src = je.at("src").get<int32_t>();
    e.dst = je.at("dst").get<int32_t>();
    e.action = je.at("action").get<int32_t>();
    e.count = je.at("count").get<int64_t>();
    g.edges.push_back(e);
  }
  g.RebuildKeyIndex();
  return g;
}

}  // namespace cogmap
}  // namespace tdb

#endif  // TDB_COGMAP_COGMAP_HPP_
