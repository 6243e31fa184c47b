#pragma once

#include <string>

#include "subfit/trimesh.hpp"

namespace subfit {

struct DecimateResult {
  TriMesh mesh;
  bool reached = false;
  int achieved = 0;
  std::string detail;  // set when the target could not be reached
};

/// Quadric-error-metric edge collapse down to the requested vertex count.
///
/// Collapse placement minimizes the summed vertex quadrics, falling back to
/// the edge midpoint when the 3x3 system is singular (det below 1e-12 of the
/// bbox diagonal cubed). Collapses that would flip a face normal, violate
/// the link condition, or duplicate a face are skipped. The collapse queue
/// breaks cost ties toward the lowest vertex index.
///
/// When no legal collapse remains before the target, the best-effort mesh is
/// returned with reached=false (the CLI maps this to TargetUnreachable).
DecimateResult decimate_qem(const TriMesh& mesh, int target_vertices,
                            bool preserve_boundary = false);

}  // namespace subfit
