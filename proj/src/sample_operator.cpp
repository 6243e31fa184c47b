#include "subfit/sample_operator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <set>

#include "subfit/errors.hpp"

namespace subfit {

namespace {

void check_bary(const Vec3& b) {
  const double eps = 1e-12;
  if (b.minCoeff() < -eps || std::abs(b.sum() - 1.0) > 1e-12)
    throw Error(ErrorClass::DomainError, "invalid barycentric coordinates");
}

// Child selection on a face split: corner child k when bary[k] >= 1/2 (lower
// index wins ties), else the center child. Returns child slot and remapped
// barycentric coordinates.
std::pair<int, Vec3> select_child(const Vec3& b) {
  if (b[0] >= 0.5) return {0, Vec3(2 * b[0] - 1, 2 * b[1], 2 * b[2])};
  if (b[1] >= 0.5) return {1, Vec3(2 * b[1] - 1, 2 * b[2], 2 * b[0])};
  if (b[2] >= 0.5) return {2, Vec3(2 * b[2] - 1, 2 * b[0], 2 * b[1])};
  return {3, Vec3(1 - 2 * b[2], 1 - 2 * b[0], 1 - 2 * b[1])};
}

Vec3 canonical_bary(const Vec3& b, int rotation) {
  return Vec3(b[rotation % 3], b[(rotation + 1) % 3], b[(rotation + 2) % 3]);
}

// ---- general evaluator for patches touching the mesh boundary ----

struct Submesh {
  TriMesh mesh;
  std::vector<int> orig_vertex;
  int face = -1;
};

Submesh extract_submesh(const TriMesh& m, int face, int rings) {
  std::set<int> vset(m.face(face).begin(), m.face(face).end());
  std::set<int> fset;
  for (int r = 0; r < rings; ++r) {
    fset.clear();
    for (int v : vset)
      for (int f : m.vertex_fan(v)) fset.insert(f);
    // grow vset to the vertices of the collected faces
    for (int f : fset)
      for (int v : m.face(f)) vset.insert(v);
  }
  Submesh sub;
  sub.orig_vertex.assign(vset.begin(), vset.end());
  std::map<int, int> to_local;
  for (size_t i = 0; i < sub.orig_vertex.size(); ++i) to_local[sub.orig_vertex[i]] = static_cast<int>(i);
  std::vector<Vec3> pos;
  pos.reserve(sub.orig_vertex.size());
  for (int v : sub.orig_vertex) pos.push_back(m.vertex(v));
  std::vector<std::array<int, 3>> faces;
  faces.reserve(fset.size());
  for (int f : fset) {
    const auto& fc = m.face(f);
    faces.push_back({to_local[fc[0]], to_local[fc[1]], to_local[fc[2]]});
    if (f == face) sub.face = static_cast<int>(faces.size()) - 1;
  }
  sub.mesh = TriMesh::build(std::move(pos), std::move(faces), /*allow_nonmanifold=*/true);
  return sub;
}

using Row = std::map<int, double>;

Row combine(const std::vector<std::pair<int, double>>& terms, const std::vector<Row>& rows) {
  Row out;
  for (const auto& [idx, wgt] : terms)
    for (const auto& [col, val] : rows[idx]) out[col] += wgt * val;
  return out;
}

// Limit-position weights of vertex v over mesh vertices.
std::vector<std::pair<int, double>> vertex_limit_weights(const TriMesh& m, int v) {
  std::vector<std::pair<int, double>> t;
  const auto& ring = m.vertex_ring(v);
  if (ring.empty()) {
    t.emplace_back(v, 1.0);
  } else if (m.is_boundary_vertex(v)) {
    t.emplace_back(v, 2.0 / 3.0);
    t.emplace_back(ring.front(), 1.0 / 6.0);
    t.emplace_back(ring.back(), 1.0 / 6.0);
  } else {
    double lw = loop_limit_ring_weight(static_cast<int>(ring.size()));
    t.emplace_back(v, 1.0 - ring.size() * lw);
    for (int r : ring) t.emplace_back(r, lw);
  }
  return t;
}

// The crease boundary curve is the uniform cubic B-spline of the boundary
// polyline; exact evaluation on edge (a,b) at parameter s in [0,1].
std::vector<std::pair<int, double>> boundary_curve_weights(const TriMesh& m, int a, int b, double s) {
  auto other_boundary_neighbor = [&m](int v, int avoid) {
    const auto& ring = m.vertex_ring(v);
    int n0 = ring.front(), n1 = ring.back();
    return n0 == avoid ? n1 : n0;
  };
  int prev = other_boundary_neighbor(a, b);
  int next = other_boundary_neighbor(b, a);
  double s2 = s * s, s3 = s2 * s;
  double n0 = (1 - s) * (1 - s) * (1 - s) / 6.0;
  double n1 = (3 * s3 - 6 * s2 + 4) / 6.0;
  double n2 = (-3 * s3 + 3 * s2 + 3 * s + 1) / 6.0;
  double n3 = s3 / 6.0;
  return {{prev, n0}, {a, n1}, {b, n2}, {next, n3}};
}

// Evaluates the limit position of a sample on a patch touching the boundary
// by local refinement: subdivide a neighborhood until the containing patch is
// evaluable or the sample lands exactly on a vertex or boundary-curve point.
// Depth is capped at 32; past it the sample snaps to the nearest feature
// (an error of 2^-32 of the patch scale).
Row eval_boundary_general(const TriMesh& mesh, int face, Vec3 bary) {
  const double corner_eps = 1e-13;
  Submesh sub;
  sub.face = face;
  const TriMesh* cur = &mesh;
  std::vector<Row> rows(mesh.vertex_count());
  bool rows_identity = true;  // avoid materializing identity rows for the full mesh

  auto row_of = [&](int v) -> Row {
    if (rows_identity) return Row{{v, 1.0}};
    return rows[v];
  };
  auto finish = [&](const std::vector<std::pair<int, double>>& terms) {
    Row out;
    for (const auto& [idx, wgt] : terms)
      for (const auto& [col, val] : row_of(idx)) out[col] += wgt * val;
    return out;
  };

  for (int depth = 0;; ++depth) {
    const auto& fc = cur->face(sub.face);
    Patch p = classify_face(*cur, sub.face);
    if (p.kind != PatchKind::Boundary) {
      Vec3 cb = canonical_bary(bary, p.rotation);
      Eigen::VectorXd wts = eval_basis(p, cb[1], cb[2]);
      std::vector<std::pair<int, double>> terms;
      for (int t = 0; t < wts.size(); ++t) terms.emplace_back(p.control[t], wts(t));
      return finish(terms);
    }
    // Exact cases: at a vertex, or on a boundary edge of the patch.
    for (int k = 0; k < 3; ++k) {
      if (bary[k] >= 1.0 - corner_eps) return finish(vertex_limit_weights(*cur, fc[k]));
    }
    bool snap = depth >= 32;
    {
      int kmin = 0;
      bary.minCoeff(&kmin);
      if (bary[kmin] < corner_eps || snap) {
        int a = fc[(kmin + 1) % 3], b = fc[(kmin + 2) % 3];
        int e = cur->find_edge(a, b);
        if (bary[kmin] < corner_eps && e >= 0 && cur->is_boundary_edge(e)) {
          double s = bary[(kmin + 2) % 3] / (bary[(kmin + 1) % 3] + bary[(kmin + 2) % 3]);
          return finish(boundary_curve_weights(*cur, a, b, s));
        }
        if (snap) {
          if (e >= 0 && cur->is_boundary_edge(e)) {
            double s = bary[(kmin + 2) % 3] / (bary[(kmin + 1) % 3] + bary[(kmin + 2) % 3]);
            return finish(boundary_curve_weights(*cur, a, b, s));
          }
          int kmax = 0;
          bary.maxCoeff(&kmax);
          return finish(vertex_limit_weights(*cur, fc[kmax]));
        }
      }
    }
    // Refine a neighborhood of the current face and descend.
    Submesh next = extract_submesh(*cur, sub.face, 3);
    std::vector<Row> sub_rows(next.orig_vertex.size());
    for (size_t i = 0; i < next.orig_vertex.size(); ++i) sub_rows[i] = row_of(next.orig_vertex[i]);
    SubdivisionStep step = subdivide_once(next.mesh, /*allow_nonmanifold=*/true);
    std::vector<Row> fine_rows(step.S.rows());
    for (int j = 0; j < step.S.rows(); ++j) {
      Row r;
      for (SparseRowMat::InnerIterator it(step.S, j); it; ++it)
        for (const auto& [col, val] : sub_rows[it.col()]) r[col] += it.value() * val;
      fine_rows[j] = std::move(r);
    }
    auto [child, cb] = select_child(bary);
    sub.mesh = std::move(step.fine);
    sub.face = 4 * next.face + child;
    bary = cb;
    rows = std::move(fine_rows);
    rows_identity = false;
    cur = &sub.mesh;
  }
}

std::uint64_t fnv_mix(std::uint64_t h, std::uint64_t x) {
  for (int i = 0; i < 8; ++i) {
    h ^= (x >> (8 * i)) & 0xff;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

MappedSample map_sample_to_patch(const SampleSpec& sample, const SubdivisionStep& step) {
  check_bary(sample.bary);
  if (sample.face < 0 || sample.face >= step.coarse_faces)
    throw Error(ErrorClass::DomainError, "sample face out of range");
  auto [child, cb] = select_child(sample.bary);
  MappedSample out;
  out.fine_face = 4 * sample.face + child;
  out.v = cb[1];
  out.w = cb[2];
  return out;
}

std::vector<SampleSpec> control_vertex_samples(const TriMesh& coarse) {
  std::vector<SampleSpec> samples;
  samples.reserve(coarse.vertex_count());
  for (int v = 0; v < coarse.vertex_count(); ++v) {
    const auto& fan = coarse.vertex_fan(v);
    if (fan.empty()) continue;
    int f = *std::min_element(fan.begin(), fan.end());
    SampleSpec s;
    s.face = f;
    s.bary = Vec3::Zero();
    const auto& fc = coarse.face(f);
    for (int k = 0; k < 3; ++k)
      if (fc[k] == v) s.bary[k] = 1.0;
    samples.push_back(s);
  }
  return samples;
}

std::vector<SampleSpec> level_one_vertex_samples(const TriMesh& coarse) {
  std::vector<SampleSpec> samples = control_vertex_samples(coarse);
  for (int e = 0; e < coarse.edge_count(); ++e) {
    const auto& ef = coarse.edge_faces(e);
    int f = ef[1] < 0 ? ef[0] : std::min(ef[0], ef[1]);
    const auto& fc = coarse.face(f);
    SampleSpec s;
    s.face = f;
    s.bary = Vec3::Zero();
    for (int k = 0; k < 3; ++k)
      if (fc[k] == coarse.edge(e)[0] || fc[k] == coarse.edge(e)[1]) s.bary[k] = 0.5;
    samples.push_back(s);
  }
  return samples;
}

SampleOperator build_sample_operator(const TriMesh& coarse, const std::vector<SampleSpec>& samples) {
  SubdivisionStep step = subdivide_once(coarse);
  PatchTable pt = build_patch_table(step.fine);

  std::vector<Eigen::Triplet<double>> trips;
  for (size_t i = 0; i < samples.size(); ++i) {
    MappedSample ms = map_sample_to_patch(samples[i], step);
    const Patch& p = pt.patch(ms.fine_face);
    Row fine_row;
    if (p.kind == PatchKind::Boundary) {
      Vec3 b(1.0 - ms.v - ms.w, ms.v, ms.w);
      fine_row = eval_boundary_general(step.fine, ms.fine_face, b);
    } else {
      Vec3 cb = canonical_bary(Vec3(1.0 - ms.v - ms.w, ms.v, ms.w), p.rotation);
      Eigen::VectorXd wts = eval_basis(p, cb[1], cb[2]);
      for (int t = 0; t < wts.size(); ++t) fine_row[p.control[t]] += wts(t);
    }
    // Compose with the subdivision step to land on control vertices.
    Row row;
    for (const auto& [fine_v, wgt] : fine_row)
      for (SparseRowMat::InnerIterator it(step.S, fine_v); it; ++it)
        row[static_cast<int>(it.col())] += wgt * it.value();
    double sum = 0;
    for (const auto& [col, val] : row) sum += val;
    if (std::abs(sum - 1.0) > 1e-9)
      throw Error(ErrorClass::DomainError, "sample operator row sum deviates from 1");
    for (const auto& [col, val] : row) trips.emplace_back(static_cast<int>(i), col, val);
  }
  SampleOperator op;
  op.W.resize(static_cast<int>(samples.size()), coarse.vertex_count());
  op.W.setFromTriplets(trips.begin(), trips.end());
  op.key = sample_operator_key(coarse, samples);
  return op;
}

MatX3 eval_points(const SampleOperator& op, const MatX3& positions) {
  if (positions.rows() != op.W.cols())
    throw Error(ErrorClass::DimensionMismatch, "position rows do not match operator columns");
  return op.W * positions;
}

std::uint64_t sample_operator_key(const TriMesh& coarse, const std::vector<SampleSpec>& samples) {
  std::uint64_t h = coarse.connectivity_hash();
  h = fnv_mix(h, samples.size());
  for (const auto& s : samples) {
    h = fnv_mix(h, static_cast<std::uint64_t>(s.face));
    for (int k = 0; k < 3; ++k) {
      std::uint64_t bits;
      double v = s.bary[k];
      std::memcpy(&bits, &v, 8);
      h = fnv_mix(h, bits);
    }
  }
  return h;
}

namespace {
constexpr std::uint32_t kCacheMagic = 0x53465743u;  // "SFWC"
constexpr std::uint32_t kCacheVersion = 1;

template <class T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <class T>
bool get(std::ifstream& in, T* v) {
  in.read(reinterpret_cast<char*>(v), sizeof *v);
  return static_cast<bool>(in);
}
}  // namespace

void save_sample_operator(const SampleOperator& op, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorClass::IoError, "cannot open cache file '" + path + "'");
  put(out, kCacheMagic);
  put(out, kCacheVersion);
  put(out, op.key);
  put(out, static_cast<std::uint64_t>(op.W.rows()));
  put(out, static_cast<std::uint64_t>(op.W.cols()));
  put(out, static_cast<std::uint64_t>(op.W.nonZeros()));
  for (int r = 0; r < op.W.rows(); ++r)
    for (SparseRowMat::InnerIterator it(op.W, r); it; ++it) {
      put(out, static_cast<std::uint32_t>(r));
      put(out, static_cast<std::uint32_t>(it.col()));
      put(out, it.value());
    }
  if (!out) throw Error(ErrorClass::IoError, "cache write failed for '" + path + "'");
}

std::optional<SampleOperator> load_sample_operator(const std::string& path, std::uint64_t expected_key) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::uint32_t magic = 0, version = 0;
  std::uint64_t key = 0, rows = 0, cols = 0, nnz = 0;
  if (!get(in, &magic) || magic != kCacheMagic) return std::nullopt;
  if (!get(in, &version) || version != kCacheVersion) return std::nullopt;
  if (!get(in, &key) || key != expected_key) return std::nullopt;
  if (!get(in, &rows) || !get(in, &cols) || !get(in, &nnz)) return std::nullopt;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(nnz);
  for (std::uint64_t i = 0; i < nnz; ++i) {
    std::uint32_t r = 0, c = 0;
    double v = 0;
    if (!get(in, &r) || !get(in, &c) || !get(in, &v)) return std::nullopt;
    trips.emplace_back(static_cast<int>(r), static_cast<int>(c), v);
  }
  SampleOperator op;
  op.key = key;
  op.W.resize(static_cast<int>(rows), static_cast<int>(cols));
  op.W.setFromTriplets(trips.begin(), trips.end());
  return op;
}

SampleOperator build_sample_operator_cached(const TriMesh& coarse,
                                            const std::vector<SampleSpec>& samples,
                                            const std::string& cache_dir) {
  if (cache_dir.empty()) return build_sample_operator(coarse, samples);
  std::uint64_t key = sample_operator_key(coarse, samples);
  char name[64];
  std::snprintf(name, sizeof name, "/W_%016llx.bin", static_cast<unsigned long long>(key));
  std::string path = cache_dir + name;
  if (auto cached = load_sample_operator(path, key)) return *cached;
  SampleOperator op = build_sample_operator(coarse, samples);
  try {
    save_sample_operator(op, path);
  } catch (const Error&) {
    // cache is an optimization; building succeeded, so carry on
  }
  return op;
}

}  // namespace subfit
