#pragma once

// Independent oracles for the evaluation machinery: a from-scratch textbook
// Loop refinement on an indexed face soup, plus limit points by deep local
// refinement. Deliberately shares no code with the library implementation.

#include <array>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "subfit/geometry.hpp"

namespace subfit::oracle {

struct Soup {
  std::vector<Vec3> v;
  std::vector<std::array<int, 3>> f;
};

inline double beta(int n) {
  double c = 3.0 / 8.0 + std::cos(2.0 * M_PI / n) / 4.0;
  return (5.0 / 8.0 - c * c) / n;
}

// One textbook Loop step. Children of face i are 4i+k, corner child k first,
// then the center child.
inline Soup loop_subdivide(const Soup& s) {
  std::map<std::pair<int, int>, int> edge_id;
  std::vector<std::array<int, 2>> edge_verts;
  std::vector<std::vector<int>> edge_wings;
  std::vector<int> edge_faces;
  auto edge = [&](int a, int b) {
    auto key = std::minmax(a, b);
    auto it = edge_id.find(key);
    if (it != edge_id.end()) return it->second;
    int id = static_cast<int>(edge_verts.size());
    edge_id.emplace(key, id);
    edge_verts.push_back({key.first, key.second});
    edge_wings.emplace_back();
    edge_faces.push_back(0);
    return id;
  };
  for (const auto& t : s.f) {
    for (int k = 0; k < 3; ++k) {
      int e = edge(t[k], t[(k + 1) % 3]);
      edge_wings[e].push_back(t[(k + 2) % 3]);
      edge_faces[e] += 1;
    }
  }
  std::vector<std::set<int>> nbr(s.v.size());
  std::vector<std::set<int>> boundary_nbr(s.v.size());
  for (size_t e = 0; e < edge_verts.size(); ++e) {
    int a = edge_verts[e][0], b = edge_verts[e][1];
    nbr[a].insert(b);
    nbr[b].insert(a);
    if (edge_faces[e] == 1) {
      boundary_nbr[a].insert(b);
      boundary_nbr[b].insert(a);
    }
  }
  Soup out;
  out.v.resize(s.v.size() + edge_verts.size());
  for (size_t i = 0; i < s.v.size(); ++i) {
    if (!boundary_nbr[i].empty()) {
      Vec3 acc = Vec3::Zero();
      for (int b : boundary_nbr[i]) acc += s.v[b];
      out.v[i] = 0.75 * s.v[i] + 0.125 * acc;  // crease rule (two boundary neighbors)
    } else {
      int n = static_cast<int>(nbr[i].size());
      double bb = beta(n);
      Vec3 acc = Vec3::Zero();
      for (int b : nbr[i]) acc += s.v[b];
      out.v[i] = (1.0 - n * bb) * s.v[i] + bb * acc;
    }
  }
  for (size_t e = 0; e < edge_verts.size(); ++e) {
    int a = edge_verts[e][0], b = edge_verts[e][1];
    if (edge_faces[e] >= 2 && edge_wings[e].size() >= 2) {
      out.v[s.v.size() + e] = 0.375 * (s.v[a] + s.v[b]) +
                              0.125 * (s.v[edge_wings[e][0]] + s.v[edge_wings[e][1]]);
    } else {
      out.v[s.v.size() + e] = 0.5 * (s.v[a] + s.v[b]);
    }
  }
  out.f.reserve(s.f.size() * 4);
  int base = static_cast<int>(s.v.size());
  for (const auto& t : s.f) {
    int e01 = base + edge(t[0], t[1]);
    int e12 = base + edge(t[1], t[2]);
    int e20 = base + edge(t[2], t[0]);
    out.f.push_back({t[0], e01, e20});
    out.f.push_back({t[1], e12, e01});
    out.f.push_back({t[2], e20, e12});
    out.f.push_back({e01, e12, e20});
  }
  return out;
}

// Faces within `rings` vertex-growth rounds of the target face. Local
// structure inside the margin matches the full mesh.
inline std::pair<Soup, int> crop(const Soup& s, int face, int rings) {
  std::set<int> vset(s.f[face].begin(), s.f[face].end());
  std::set<int> fset;
  for (int r = 0; r < rings; ++r) {
    fset.clear();
    for (size_t g = 0; g < s.f.size(); ++g)
      for (int k = 0; k < 3; ++k)
        if (vset.count(s.f[g][k])) {
          fset.insert(static_cast<int>(g));
          break;
        }
    for (int g : fset)
      for (int k = 0; k < 3; ++k) vset.insert(s.f[g][k]);
  }
  std::map<int, int> remap;
  Soup out;
  for (int v : vset) {
    remap[v] = static_cast<int>(out.v.size());
    out.v.push_back(s.v[v]);
  }
  int new_face = -1;
  for (int g : fset) {
    if (g == face) new_face = static_cast<int>(out.f.size());
    out.f.push_back({remap[s.f[g][0]], remap[s.f[g][1]], remap[s.f[g][2]]});
  }
  return {out, new_face};
}

inline std::pair<int, Vec3> select_child(const Vec3& b) {
  if (b[0] >= 0.5) return {0, Vec3(2 * b[0] - 1, 2 * b[1], 2 * b[2])};
  if (b[1] >= 0.5) return {1, Vec3(2 * b[1] - 1, 2 * b[2], 2 * b[0])};
  if (b[2] >= 0.5) return {2, Vec3(2 * b[2] - 1, 2 * b[0], 2 * b[1])};
  return {3, Vec3(1 - 2 * b[2], 1 - 2 * b[0], 1 - 2 * b[1])};
}

// Limit position of one vertex from its refined neighborhood.
inline Vec3 vertex_limit(const Soup& s, int vertex) {
  std::set<int> nbr, bnbr;
  std::map<std::pair<int, int>, int> count;
  for (const auto& t : s.f)
    for (int k = 0; k < 3; ++k) {
      for (int other = 0; other < 3; ++other)
        if (other != k && (t[k] == vertex)) nbr.insert(t[other]);
      count[std::minmax(t[k], t[(k + 1) % 3])] += 1;
    }
  for (int b : nbr)
    if (count[std::minmax(vertex, b)] == 1) bnbr.insert(b);
  if (!bnbr.empty()) {
    Vec3 acc = Vec3::Zero();
    for (int b : bnbr) acc += s.v[b];
    return (2.0 / 3.0) * s.v[vertex] + (1.0 / 6.0) * acc;
  }
  int n = static_cast<int>(nbr.size());
  double lw = 1.0 / (3.0 / (8.0 * beta(n)) + n);
  Vec3 acc = Vec3::Zero();
  for (int b : nbr) acc += s.v[b];
  return (1.0 - n * lw) * s.v[vertex] + lw * acc;
}

/// Limit surface point at (face, barycentric) by `depth` local refinements
/// followed by barycentric interpolation of the corner limit positions.
inline Vec3 limit_point(Soup s, int face, Vec3 bary, int depth) {
  for (int d = 0; d < depth; ++d) {
    auto [cropped, cf] = crop(s, face, 3);
    s = loop_subdivide(cropped);
    auto [child, cb] = select_child(bary);
    face = 4 * cf + child;
    bary = cb;
  }
  const auto& t = s.f[face];
  Vec3 l0 = vertex_limit(s, t[0]), l1 = vertex_limit(s, t[1]), l2 = vertex_limit(s, t[2]);
  return bary[0] * l0 + bary[1] * l1 + bary[2] * l2;
}

}  // namespace subfit::oracle
