#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "subfit/loop.hpp"
#include "subfit/stam.hpp"

namespace subfit {

/// Point on the control surface: a coarse face plus barycentric coordinates
/// (b0,b1,b2), sum 1, each >= 0.
struct SampleSpec {
  int face = 0;
  Vec3 bary = Vec3(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0);
};

struct MappedSample {
  int fine_face = -1;
  double v = 0, w = 0;  // barycentric of the fine face's corners 1 and 2
};

/// Locates the M1 child face containing the sample. Cell selection: corner k
/// if bary[k] >= 1/2 (ties resolved toward the lower child index), otherwise
/// the center child; coordinates are remapped affinely.
MappedSample map_sample_to_patch(const SampleSpec& sample, const SubdivisionStep& step);

/// Sparse linear map W from control vertex positions to limit-surface sample
/// positions; rows sum to 1. Connectivity-only: reusable across optimizer
/// iterations and frames.
struct SampleOperator {
  SparseRowMat W;
  std::uint64_t key = 0;
  int sample_count() const { return static_cast<int>(W.rows()); }
};

/// Default sampling: the control vertices themselves.
std::vector<SampleSpec> control_vertex_samples(const TriMesh& coarse);
/// Denser sampling: all M1 vertices (control vertices plus edge midpoints).
std::vector<SampleSpec> level_one_vertex_samples(const TriMesh& coarse);

SampleOperator build_sample_operator(const TriMesh& coarse, const std::vector<SampleSpec>& samples);

/// Q = W * V0. Throws DimensionMismatch when positions do not match W.
MatX3 eval_points(const SampleOperator& op, const MatX3& positions);

std::uint64_t sample_operator_key(const TriMesh& coarse, const std::vector<SampleSpec>& samples);

/// Versioned little-endian binary cache: header (magic, version, key,
/// rows, cols, nnz) followed by (u32 row, u32 col, f64 value) triplets.
void save_sample_operator(const SampleOperator& op, const std::string& path);
std::optional<SampleOperator> load_sample_operator(const std::string& path, std::uint64_t expected_key);

/// Builds W, consulting/populating the cache directory when set (the
/// SUBFIT_CACHE_DIR environment variable, used by the CLI).
SampleOperator build_sample_operator_cached(const TriMesh& coarse,
                                            const std::vector<SampleSpec>& samples,
                                            const std::string& cache_dir);

}  // namespace subfit
