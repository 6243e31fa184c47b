#include "subfit/trimesh.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <unordered_map>

#include "subfit/errors.hpp"

namespace subfit {

namespace {

std::uint64_t edge_key(int a, int b, int n) {
  if (a > b) std::swap(a, b);
  return static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(n) + static_cast<std::uint64_t>(b);
}

}  // namespace

TriMesh TriMesh::build(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> faces,
                       bool allow_nonmanifold) {
  TriMesh m;
  m.vertices_ = std::move(vertices);
  m.faces_ = std::move(faces);
  const int nv = m.vertex_count();
  const int nf = m.face_count();
  ValidationReport& rep = m.report_;

  for (const auto& v : m.vertices_) {
    if (!v.allFinite()) throw Error(ErrorClass::InvalidArgument, "non-finite vertex coordinate");
  }
  for (int f = 0; f < nf; ++f) {
    const auto& fc = m.faces_[f];
    for (int k = 0; k < 3; ++k) {
      if (fc[k] < 0 || fc[k] >= nv) {
        rep.indices_valid = false;
        rep.detail = "face " + std::to_string(f) + " references vertex " + std::to_string(fc[k]);
      }
    }
    if (fc[0] == fc[1] || fc[1] == fc[2] || fc[2] == fc[0]) {
      rep.indices_valid = false;
      rep.detail = "degenerate face " + std::to_string(f);
    }
  }
  if (!rep.indices_valid) throw Error(ErrorClass::InvalidArgument, "invalid faces: " + rep.detail);

  // Edges and incident faces.
  std::unordered_map<std::uint64_t, int> edge_of;
  edge_of.reserve(static_cast<size_t>(nf) * 2);
  m.face_edges_.assign(nf, {-1, -1, -1});
  for (int f = 0; f < nf; ++f) {
    for (int k = 0; k < 3; ++k) {
      int a = m.faces_[f][k], b = m.faces_[f][(k + 1) % 3];
      auto key = edge_key(a, b, nv);
      auto it = edge_of.find(key);
      int e;
      if (it == edge_of.end()) {
        e = m.edge_count();
        edge_of.emplace(key, e);
        m.edges_.push_back({std::min(a, b), std::max(a, b)});
        m.edge_faces_.push_back({f, -1});
      } else {
        e = it->second;
        if (m.edge_faces_[e][1] >= 0) {
          rep.edge_manifold = false;
          rep.detail = "edge (" + std::to_string(a) + "," + std::to_string(b) + ") has >2 faces";
        } else {
          m.edge_faces_[e][1] = f;
        }
      }
      m.face_edges_[f][k] = e;
    }
  }
  for (const auto& ef : m.edge_faces_)
    if (ef[1] < 0) ++rep.boundary_edges;

  // Orientation: each directed edge at most once.
  {
    std::unordered_map<std::uint64_t, int> seen;
    seen.reserve(static_cast<size_t>(nf) * 3);
    for (int f = 0; f < nf && rep.orientation_consistent; ++f) {
      for (int k = 0; k < 3; ++k) {
        int a = m.faces_[f][k], b = m.faces_[f][(k + 1) % 3];
        auto key = static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(nv) + b;
        if (!seen.emplace(key, f).second) {
          rep.orientation_consistent = false;
          rep.detail = "directed edge (" + std::to_string(a) + "," + std::to_string(b) + ") repeated";
          break;
        }
      }
    }
  }

  // Ordered one-rings by walking each vertex fan.
  m.rings_.assign(nv, {});
  m.fans_.assign(nv, {});
  m.boundary_vertex_.assign(nv, 0);
  std::vector<std::vector<std::array<int, 3>>> corner(nv);  // (succ_of, succ, face)
  for (int f = 0; f < nf; ++f) {
    for (int k = 0; k < 3; ++k) {
      int v = m.faces_[f][k], a = m.faces_[f][(k + 1) % 3], b = m.faces_[f][(k + 2) % 3];
      corner[v].push_back({a, b, f});
    }
  }
  auto mark_vertex_bad = [&rep](int v, const char* why) {
    if (rep.vertex_manifold) rep.detail = "vertex " + std::to_string(v) + " " + why;
    rep.vertex_manifold = false;
  };
  for (int v = 0; v < nv; ++v) {
    auto& cs = corner[v];
    if (cs.empty()) continue;  // isolated vertices permitted; they just have no ring
    std::unordered_map<int, std::pair<int, int>> succ;  // a -> (b, face)
    std::unordered_map<int, int> indeg;
    succ.reserve(cs.size());
    bool dup = false;
    for (auto& c : cs) {
      if (!succ.emplace(c[0], std::make_pair(c[1], c[2])).second) dup = true;
      indeg[c[1]] += 1;
      if (!indeg.count(c[0])) indeg[c[0]] += 0;
    }
    std::vector<int>& ring = m.rings_[v];
    std::vector<int>& fan = m.fans_[v];
    if (dup) {
      mark_vertex_bad(v, "has a non-manifold fan");
      for (auto& [nb, d] : indeg) ring.push_back(nb);  // unordered fallback
      std::sort(ring.begin(), ring.end());
      for (auto& c : cs) fan.push_back(c[2]);
      continue;
    }
    int start = -1, zero_in = 0;
    int min_nb = std::numeric_limits<int>::max();
    for (auto& [nb, d] : indeg) {
      min_nb = std::min(min_nb, nb);
      if (d == 0) {
        ++zero_in;
        start = nb;
      }
    }
    bool open = zero_in > 0;
    if (zero_in > 1) mark_vertex_bad(v, "has multiple fan components");
    if (!open) start = min_nb;
    int cur = start;
    ring.push_back(cur);
    while (true) {
      auto it = succ.find(cur);
      if (it == succ.end()) break;
      fan.push_back(it->second.second);
      cur = it->second.first;
      if (cur == start) break;  // closed fan
      ring.push_back(cur);
      if (ring.size() > cs.size() + 1) break;  // cycle guard
    }
    if (fan.size() != cs.size()) mark_vertex_bad(v, "fan does not cover all incident faces");
    m.boundary_vertex_[v] = open ? 1 : 0;
  }

  if (!rep.manifold() && !allow_nonmanifold)
    throw Error(ErrorClass::NonManifold, "mesh validation failed: " + rep.detail);
  return m;
}

int TriMesh::find_edge(int a, int b) const {
  int v = a;
  // Scan the smaller of the two rings.
  if (rings_[b].size() < rings_[a].size()) v = b;
  int other = (v == a) ? b : a;
  for (size_t i = 0; i < rings_[v].size(); ++i) {
    if (rings_[v][i] != other) continue;
    // Recover the edge id from an incident face.
    for (int f : fans_[v]) {
      const auto& fc = faces_[f];
      for (int k = 0; k < 3; ++k) {
        int p = fc[k], q = fc[(k + 1) % 3];
        if ((p == a && q == b) || (p == b && q == a)) return face_edges_[f][k];
      }
    }
  }
  return -1;
}

int TriMesh::across_vertex(int f, int a, int b) const {
  int e = -1;
  const auto& fc = faces_[f];
  for (int k = 0; k < 3; ++k) {
    int p = fc[k], q = fc[(k + 1) % 3];
    if ((p == a && q == b) || (p == b && q == a)) {
      e = face_edges_[f][k];
      break;
    }
  }
  if (e < 0) return -1;
  int g = edge_faces_[e][0] == f ? edge_faces_[e][1] : edge_faces_[e][0];
  if (g < 0) return -1;
  for (int k = 0; k < 3; ++k) {
    int w = faces_[g][k];
    if (w != a && w != b) return w;
  }
  return -1;
}

int TriMesh::connected_components() const {
  std::vector<int> parent(vertex_count());
  for (int i = 0; i < vertex_count(); ++i) parent[i] = i;
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& e : edges_) {
    int ra = find(e[0]), rb = find(e[1]);
    if (ra != rb) parent[ra] = rb;
  }
  int n = 0;
  for (int i = 0; i < vertex_count(); ++i)
    if (find(i) == i) ++n;
  return n;
}

std::uint64_t TriMesh::connectivity_hash() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t x) {
    for (int i = 0; i < 8; ++i) {
      h ^= (x >> (8 * i)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  mix(static_cast<std::uint64_t>(vertex_count()));
  mix(static_cast<std::uint64_t>(face_count()));
  for (const auto& f : faces_) {
    mix(static_cast<std::uint64_t>(f[0]));
    mix(static_cast<std::uint64_t>(f[1]));
    mix(static_cast<std::uint64_t>(f[2]));
  }
  return h;
}

TriMesh TriMesh::with_positions(const MatX3& positions) const {
  if (positions.rows() != vertex_count())
    throw Error(ErrorClass::DimensionMismatch, "position count does not match vertex count");
  TriMesh m = *this;
  for (int i = 0; i < vertex_count(); ++i) m.vertices_[i] = positions.row(i);
  return m;
}

Vec3 TriMesh::face_normal(int f) const {
  const auto& fc = faces_[f];
  Vec3 n = (vertices_[fc[1]] - vertices_[fc[0]]).cross(vertices_[fc[2]] - vertices_[fc[0]]);
  double len = n.norm();
  return len > 0 ? Vec3(n / len) : Vec3::Zero();
}

double TriMesh::face_area(int f) const {
  const auto& fc = faces_[f];
  return 0.5 * (vertices_[fc[1]] - vertices_[fc[0]]).cross(vertices_[fc[2]] - vertices_[fc[0]]).norm();
}

double TriMesh::total_area() const {
  double a = 0;
  for (int f = 0; f < face_count(); ++f) a += face_area(f);
  return a;
}

}  // namespace subfit
