#pragma once

#include "eigenset/core.hpp"

#include <string>
#include <utility>

namespace eigenset {

/// A pair of subspaces U, V with U + V = R^d as a direct sum.
struct SubspacePair {
  Mat u_basis;  // d x k, independent columns
  Mat v_basis;  // d x (d - k)
  int dim = 0;

  void validate() const;
  Real condition_number() const;  // of the concatenated basis
};

/// Convex body input: a vertex-list polytope, or boundary samples with
/// outward normals.
struct BodySpec {
  enum class Kind { polytope, sampled_boundary };
  Kind kind = Kind::polytope;
  Mat vertices;          // polytope: d x n
  Mat boundary_points;   // sampled: d x n
  Mat normals;           // sampled: d x n, outward
  int dim = 0;

  void validate() const;
  bool is_symmetric(Real tol = 1e-12) const;
};

/// The operator A_{U,V}(u + v) = -v: minus the oblique projection onto V
/// along U. Satisfies A^2 = -A, kernel U, image V.
Mat projector_operator(const SubspacePair& pair);

/// Finite sample of the operator family {A_z : z on the boundary} realizing
/// a symmetric convex body as an eigenset: U_z is the line through z, V_z
/// the supporting-hyperplane direction at z. Polygon vertices emit both
/// adjacent facets' operators.
ControlSet symmetric_body_system(const BodySpec& body, int n_samples);

/// One generator per simplex edge v_i v_j: U spans the remaining vertices,
/// V = span(v_j - v_i). Requires the origin strictly inside.
ControlSet simplex_system(const Mat& vertices);

/// The two-matrix family with non-convex eigensets:
/// A1 = [[-1, p], [0, 0]], A2 = [[0, 0], [-1, -p]], p in (0, 1).
ControlSet example20_system(Real p);

/// Kernel lines of example20_system: x1 = p x2 and x1 = -p x2, returned as
/// unit direction vectors (r1, r2).
std::pair<Vec, Vec> example20_kernel_directions(Real p);

/// Trapezoid with origin interior whose vertex v3 violates the vertex-kernel
/// condition for any admissible system; the negative fixture.
std::pair<Mat, std::string> trapezoid_fixture();

}  // namespace eigenset
