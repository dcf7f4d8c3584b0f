// cube.hpp: aliased cube-surface environments with non-Euclidean dynamics.
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

#ifndef TDB_ENVS_CUBE_HPP_
#define TDB_ENVS_CUBE_HPP_

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "json.hpp"
#include "tdb/rng.hpp"

namespace tdb {
namespace envs {

// Geometry of the surface of an edge-E cube in "doubled coordinates": each
// of the 6*E^2 surface cells is identified with its center point in
// {0..2E}^3, where exactly one coordinate lies in {0, 2E} (the face) and the
// other two are odd. A move by a tangent unit direction d takes the cell
// center to c + 2d; when that leaves the cube, the walker rolls over the
// edge to c + d + n, where n is the inward normal of the departed face, and
// the direction of travel becomes n. This construction makes edge crossings
// involutive by geometry rather than by a hand-maintained table.
struct CubeGeom {
  using Pt = std::array<int32_t, 3>;
  int32_t edge;

  explicit CubeGeom(int32_t e) : edge(e) {
    if (e < 2) throw std::invalid_argument("CubeGeom: edge must be >= 2");
  }

  bool OnSurface(const Pt &c) const {
    int32_t hi = 2 * edge;
    int n_face = 0, n_odd = 0;
    for (int k = 0; k < 3; ++k) {
      if (c[k] == 0 || c[k] == hi)
        ++n_face;
      else if (c[k] > 0 && c[k] < hi && (c[k] % 2) == 1)
        ++n_odd;
    }
    return n_face == 1 && n_odd == 2;
  }

  // Axis whose coordinate pins the face, and the face's inward normal.
  int FaceAxis(const Pt &c) const {
    for (int k = 0; k < 3; ++k)
      if (c[k] == 0 || c[k] == 2 * edge) return k;
    throw std::logic_error("CubeGeom: point not on surface");
  }

  Pt InwardNormal(const Pt &c) const {
    int k = FaceAxis(c);
    Pt n{0, 0, 0};
    n[k] = (c[k] == 0) ? 1 : -1;
    return n;
  }

  // One step from cell c travelling in tangent direction d. Returns the new
  // cell and the new direction of travel (unchanged on-face, rotated to the
  // old inward normal when rolling over an edge).
  std::pair<Pt, Pt> Step(const Pt &c, const Pt &d) const {
    Pt flat{c[0] + 2 * d[0], c[1] + 2 * d[1], c[2] + 2 * d[2]};
    if (OnSurface(flat)) return {flat, d};
    Pt n = InwardNormal(c);
    Pt over{c[0] + d[0] + n[0], c[1] + d[1] + n[1], c[2] + d[2] + n[2]};
    if (!OnSurface(over)) throw std::logic_error("CubeGeom: bad edge roll");
    return {over, n};
  }

  // The four canonical tangent directions of c's face: +/- along the two
  // non-face axes in ascending axis order. Action j means "move along
  // Tangent(c, j)" so every cell has exactly four action-neighbors.
  Pt Tangent(const Pt &c, int action) const {
    int k = FaceAxis(c);
    int axes[2], idx = 0;
    for (int a = 0; a < 3; ++a)
      if (a != k) axes[idx++] = a;
    Pt d{0, 0, 0};
    d[axes[action / 2]] = (action % 2 == 0) ? 1 : -1;
    return d;
  }

  std::vector<Pt> AllCells() const {
    std::vector<Pt> out;
    int32_t hi = 2 * edge;
    for (int k = 0; k < 3; ++k)
      for (int32_t side : {0, hi})
        for (int32_t u = 1; u < hi; u += 2)
          for (int32_t v = 1; v < hi; v += 2) {
            int axes[2], idx = 0;
            for (int a = 0; a < 3; ++a)
              if (a != k) axes[idx++] = a;
            Pt c;
            c[k] = side;
            c[axes[0]] = u;
            c[axes[1]] = v;
            out.push_back(c);
          }
    return out;
  }
};

// A cube-surface environment: 6*E^2 cells, 4 actions per cell (the face's
// canonical tangent directions), labels uniform over O colors. The paper
// default is O=12, so with E>=2 many cells share a color and the dynamics
// are heavily aliased.
struct CubeSpec {
  int32_t edge = 0;
  int32_t n_labels = 0;
  std::vector<int32_t> labels;                   // 6*edge^2
  std::vector<std::array<int32_t, 4>> neighbor;  // 6*edge^2 x 4

  int32_t NumStates() const { return 6 * edge * edge; }
  int32_t NumActions() const { return 4; }
  int32_t Observe(int32_t s) const { return labels[s]; }
  int32_t Step(int32_t s, int32_t a) const { return neighbor[s][a]; }
};

inline nlohmann::json CubeSpecToJson(const CubeSpec &c) {
  std::vector<std::vector<int32_t>> nb;
  for (const auto &row : c.neighbor)
    nb.push_back({row[0], row[1], row[2], row[3]});
  return nlohmann::json{{"edge", c.edge},
                        {"n_labels", c.n_labels},
                        {"labels", c.labels},
                        {"neighbor", nb}};
}

inline CubeSpec CubeSpecFromJson(const nlohmann::json &j) {
  CubeSpec c;
  c.edge = j.at("edge").get<int32_t>();
  c.n_labels = j.at("n_labels").get<int32_t>();
  c.labels = j.at("labels").get<std::vector<int32_t>>();
  for (const auto &row : j.at("neighbor")) {
    std::array<int32_t, 4> r{row.at(0).get<int32_t>(), row.at(1).get<int32_t>(),
                             row.at(2).get<int32_t>(),
                             row.at(3).get<int32_t>()};
    c.neighbor.push_back(r);
  }
  if (static_cast<int32_t>(c.labels.size()) != c.NumStates() ||
      static_cast<int32_t>(c.neighbor.size()) != c.NumStates())
    throw std::runtime_error("CubeSpecFromJson: size mismatch");
  return c;
}

inline CubeSpec GenAliasedCube(int32_t edge, int32_t n_labels, Rng &rng) {
  if (edge < 2) throw std::invalid_argument("GenAliasedCube: edge must be >= 2");
  if (n_labels <= 0)
    throw std::invalid_argument("GenAliasedCube: n_labels must be positive");
  CubeGeom geom(edge);
  auto cells = geom.AllCells();
  std::map<CubeGeom::Pt, int32_t> id_of;
  for (size_t i = 0; i < cells.size(); ++i)
    id_of[cells[i]] = static_cast<int32_t>(i);

  CubeSpec spec;
  spec.edge = edge;
  spec.n_labels = n_labels;
  spec.neighbor.resize(cells.size());
  for (size_t i = 0; i < cells.size(); ++i)
    for (int a = 0; a < 4; ++a) {
      auto [nc, nd] = geom.Step(cells[i], geom.Tangent(cells[i], a));
      (void)nd;
      spec.neighbor[i][a] = id_of.at(nc);
    }

  int32_t n = spec.NumStates();
  if (n_labels > n)
    throw std::invalid_argument("GenAliasedCube: more labels than cells");
  for (;;) {
    spec.labels.assign(n, 0);
    for (auto &v : spec.labels)
      v = static_cast<int32_t>(rng.UniformInt(n_labels));
    std::vector<bool> seen(n_labels, false);
    for (int32_t v : spec.labels) seen[v] = true;
    bool all = true;
    for (bool b : seen) all = all && b;
    if (all) break;
  }
  return spec;
}

}  // namespace envs
}  // namespace tdb

#endif  // TDB_ENVS_CUBE_HPP_
