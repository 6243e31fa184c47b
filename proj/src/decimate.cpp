#include "subfit/decimate.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <queue>
#include <set>
#include <unordered_set>

#include "subfit/errors.hpp"

namespace subfit {

namespace {

using Mat4 = Eigen::Matrix4d;
using Vec4 = Eigen::Vector4d;

Mat4 plane_quadric(const Vec3& n, double d) {
  Vec4 p(n.x(), n.y(), n.z(), d);
  return p * p.transpose();
}

double quadric_error(const Mat4& q, const Vec3& x) {
  Vec4 p(x.x(), x.y(), x.z(), 1.0);
  return p.dot(q * p);
}

struct Candidate {
  double cost;
  int a, b;  // a < b
  std::uint64_t stamp_a, stamp_b;
  Vec3 placement;
};

struct CandidateOrder {
  bool operator()(const Candidate& x, const Candidate& y) const {
    if (x.cost != y.cost) return x.cost > y.cost;  // min-heap on cost
    if (x.a != y.a) return x.a > y.a;              // then lowest vertex index
    return x.b > y.b;
  }
};

class Collapser {
 public:
  Collapser(const TriMesh& mesh, bool preserve_boundary)
      : preserve_boundary_(preserve_boundary),
        pos_(mesh.vertices()),
        faces_(mesh.faces()),
        scale_(mesh.bounds().diagonal()) {
    const int nv = mesh.vertex_count();
    alive_v_.assign(nv, 1);
    alive_f_.assign(faces_.size(), 1);
    stamp_.assign(nv, 0);
    quadric_.assign(nv, Mat4::Zero());
    vfaces_.resize(nv);
    for (size_t f = 0; f < faces_.size(); ++f)
      for (int k = 0; k < 3; ++k) vfaces_[faces_[f][k]].insert(static_cast<int>(f));
    for (size_t f = 0; f < faces_.size(); ++f) {
      Vec3 n = face_normal(static_cast<int>(f));
      double d = -n.dot(pos_[faces_[f][0]]);
      Mat4 q = plane_quadric(n, d);
      for (int k = 0; k < 3; ++k) quadric_[faces_[f][k]] += q;
    }
    // Perpendicular constraint planes along boundary edges keep the open
    // rims from eroding.
    for (int e = 0; e < mesh.edge_count(); ++e) {
      if (!mesh.is_boundary_edge(e)) continue;
      int a = mesh.edge(e)[0], b = mesh.edge(e)[1];
      int f = mesh.edge_faces(e)[0];
      Vec3 dir = pos_[b] - pos_[a];
      Vec3 n = dir.cross(mesh.face_normal(f));
      double len = n.norm();
      if (len < 1e-30) continue;
      n /= len;
      Mat4 q = plane_quadric(n, -n.dot(pos_[a]));
      quadric_[a] += q;
      quadric_[b] += q;
    }
    alive_count_ = nv;
  }

  int alive_count() const { return alive_count_; }

  std::vector<int> neighbors(int v) const {
    std::set<int> nb;
    for (int f : vfaces_[v])
      for (int k = 0; k < 3; ++k)
        if (faces_[f][k] != v) nb.insert(faces_[f][k]);
    return {nb.begin(), nb.end()};
  }

  void seed_queue() {
    std::set<std::pair<int, int>> seen;
    for (int v = 0; v < static_cast<int>(pos_.size()); ++v) {
      if (!alive_v_[v]) continue;
      for (int u : neighbors(v)) {
        auto key = std::minmax(v, u);
        if (seen.insert(key).second) push_candidate(key.first, key.second);
      }
    }
  }

  bool collapse_to_target(int target) {
    while (alive_count_ > target) {
      if (queue_.empty()) return false;
      Candidate c = queue_.top();
      queue_.pop();
      if (!alive_v_[c.a] || !alive_v_[c.b]) continue;
      if (stamp_[c.a] != c.stamp_a || stamp_[c.b] != c.stamp_b) continue;
      if (!edge_exists(c.a, c.b)) continue;
      if (!legal(c.a, c.b, c.placement)) continue;
      do_collapse(c.a, c.b, c.placement);
    }
    return true;
  }

  TriMesh compact() const {
    std::vector<int> remap(pos_.size(), -1);
    std::vector<Vec3> verts;
    for (size_t v = 0; v < pos_.size(); ++v) {
      if (alive_v_[v]) {
        remap[v] = static_cast<int>(verts.size());
        verts.push_back(pos_[v]);
      }
    }
    std::vector<std::array<int, 3>> faces;
    for (size_t f = 0; f < faces_.size(); ++f) {
      if (!alive_f_[f]) continue;
      faces.push_back({remap[faces_[f][0]], remap[faces_[f][1]], remap[faces_[f][2]]});
    }
    return TriMesh::build(std::move(verts), std::move(faces));
  }

 private:
  Vec3 face_normal(int f) const {
    const auto& fc = faces_[f];
    Vec3 n = (pos_[fc[1]] - pos_[fc[0]]).cross(pos_[fc[2]] - pos_[fc[0]]);
    double len = n.norm();
    return len > 0 ? Vec3(n / len) : Vec3::Zero();
  }

  bool edge_exists(int a, int b) const {
    for (int f : vfaces_[a])
      for (int k = 0; k < 3; ++k)
        if (faces_[f][k] == b) return true;
    return false;
  }

  int edge_face_count(int a, int b) const {
    int n = 0;
    for (int f : vfaces_[a])
      for (int k = 0; k < 3; ++k)
        if (faces_[f][k] == b) ++n;
    return n;
  }

  bool vertex_on_boundary(int v) const {
    for (int u : neighbors(v))
      if (edge_face_count(v, u) == 1) return true;
    return false;
  }

  void push_candidate(int a, int b) {
    Mat4 q = quadric_[a] + quadric_[b];
    Eigen::Matrix3d m = q.topLeftCorner<3, 3>();
    Vec3 rhs = -q.topRightCorner<3, 1>();
    Vec3 placement;
    double det = m.determinant();
    if (std::abs(det) > 1e-12 * scale_ * scale_ * scale_) {
      placement = m.partialPivLu().solve(rhs);
    } else {
      placement = 0.5 * (pos_[a] + pos_[b]);
    }
    Candidate c;
    c.cost = quadric_error(q, placement);
    c.a = a;
    c.b = b;
    c.stamp_a = stamp_[a];
    c.stamp_b = stamp_[b];
    c.placement = placement;
    queue_.push(c);
  }

  bool legal(int a, int b, const Vec3& placement) const {
    int efc = edge_face_count(a, b);
    bool edge_boundary = efc == 1;
    if (preserve_boundary_ && (vertex_on_boundary(a) || vertex_on_boundary(b))) return false;
    // Interior edge joining two boundary vertices would pinch the surface.
    if (!edge_boundary && !preserve_boundary_ && vertex_on_boundary(a) && vertex_on_boundary(b))
      return false;

    // Link condition: shared neighbors must be exactly the across-vertices.
    std::set<int> across;
    for (int f : vfaces_[a]) {
      bool has_b = false;
      for (int k = 0; k < 3; ++k) has_b |= faces_[f][k] == b;
      if (!has_b) continue;
      for (int k = 0; k < 3; ++k)
        if (faces_[f][k] != a && faces_[f][k] != b) across.insert(faces_[f][k]);
    }
    auto na = neighbors(a);
    auto nb = neighbors(b);
    std::vector<int> common;
    std::set_intersection(na.begin(), na.end(), nb.begin(), nb.end(), std::back_inserter(common));
    if (common.size() != across.size()) return false;
    for (int v : common)
      if (!across.count(v)) return false;

    // No duplicated faces after the merge (guards the closed minimum too).
    std::set<std::array<int, 3>> kept;
    auto push_kept = [&](int f) {
      std::array<int, 3> t = faces_[f];
      for (int k = 0; k < 3; ++k)
        if (t[k] == b) t[k] = a;
      std::sort(t.begin(), t.end());
      return kept.insert(t).second;
    };
    for (int v : {a, b}) {
      for (int f : vfaces_[v]) {
        bool removed = false, seen_a = false;
        for (int k = 0; k < 3; ++k) {
          seen_a |= faces_[f][k] == a;
          removed |= faces_[f][k] == b;
        }
        if (seen_a && removed) continue;  // face collapses away
        if (v == b && seen_a) continue;   // visited from a already
        if (!push_kept(f)) return false;
      }
    }

    // Normal flips: surviving faces must keep their orientation.
    for (int v : {a, b}) {
      for (int f : vfaces_[v]) {
        const auto& fc = faces_[f];
        bool has_a = false, has_b = false;
        for (int k = 0; k < 3; ++k) {
          has_a |= fc[k] == a;
          has_b |= fc[k] == b;
        }
        if (has_a && has_b) continue;
        if (v == b && has_a) continue;
        Vec3 before = face_normal(f);
        std::array<Vec3, 3> p;
        for (int k = 0; k < 3; ++k) p[k] = (fc[k] == a || fc[k] == b) ? placement : pos_[fc[k]];
        Vec3 after = (p[1] - p[0]).cross(p[2] - p[0]);
        double len = after.norm();
        if (len < 1e-30) return false;
        if (before.dot(after / len) <= 1e-10) return false;
      }
    }
    return true;
  }

  void do_collapse(int a, int b, const Vec3& placement) {
    pos_[a] = placement;
    quadric_[a] += quadric_[b];
    std::vector<int> dead;
    for (int f : vfaces_[b]) {
      bool has_a = false;
      for (int k = 0; k < 3; ++k) has_a |= faces_[f][k] == a;
      if (has_a) {
        dead.push_back(f);
      } else {
        for (int k = 0; k < 3; ++k)
          if (faces_[f][k] == b) faces_[f][k] = a;
        vfaces_[a].insert(f);
      }
    }
    for (int f : dead) {
      alive_f_[f] = 0;
      for (int k = 0; k < 3; ++k) vfaces_[faces_[f][k]].erase(f);
    }
    vfaces_[b].clear();
    alive_v_[b] = 0;
    --alive_count_;

    // Only a's quadric and position changed; other edges keep valid entries.
    ++stamp_[a];
    for (int u : neighbors(a)) push_candidate(std::min(a, u), std::max(a, u));
  }

  bool preserve_boundary_;
  std::vector<Vec3> pos_;
  std::vector<std::array<int, 3>> faces_;
  double scale_;
  std::vector<char> alive_v_, alive_f_;
  std::vector<std::uint64_t> stamp_;
  std::vector<Mat4> quadric_;
  std::vector<std::set<int>> vfaces_;
  std::priority_queue<Candidate, std::vector<Candidate>, CandidateOrder> queue_;
  int alive_count_ = 0;
};

}  // namespace

DecimateResult decimate_qem(const TriMesh& mesh, int target_vertices, bool preserve_boundary) {
  if (!mesh.report().manifold())
    throw Error(ErrorClass::NonManifold, "decimation requires a manifold mesh");
  if (target_vertices < 1)
    throw Error(ErrorClass::InvalidArgument, "target vertex count must be at least 1");

  DecimateResult out;
  if (target_vertices >= mesh.vertex_count()) {
    out.mesh = mesh;
    out.reached = true;
    out.achieved = mesh.vertex_count();
    return out;
  }
  Collapser c(mesh, preserve_boundary);
  c.seed_queue();
  out.reached = c.collapse_to_target(target_vertices);
  out.achieved = c.alive_count();
  out.mesh = c.compact();
  if (!out.reached)
    out.detail = "no legal collapse left at " + std::to_string(out.achieved) +
                 " vertices (target " + std::to_string(target_vertices) + ")";
  return out;
}

}  // namespace subfit
