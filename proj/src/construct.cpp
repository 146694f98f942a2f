#include "eigenset/construct.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace eigenset {

namespace {

// Angular order of polygon vertices around the origin; the constructions
// assume a convex vertex list and do not depend on the input order.
std::vector<long> polygon_order(const Mat& vertices) {
  std::vector<long> order(static_cast<size_t>(vertices.cols()));
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<long>(i);
  std::sort(order.begin(), order.end(), [&](long a, long b) {
    return std::atan2(vertices(1, a), vertices(0, a)) <
           std::atan2(vertices(1, b), vertices(0, b));
  });
  return order;
}

Mat single_column(const Vec& v) {
  Mat m(v.size(), 1);
  m.col(0) = v;
  return m;
}

// Basis of the hyperplane orthogonal to `normal`.
Mat hyperplane_basis(const Vec& normal) {
  const int d = static_cast<int>(normal.size());
  Eigen::FullPivHouseholderQR<Mat> qr(single_column(normal));
  const Mat q = qr.matrixQ();
  return q.rightCols(d - 1);
}

}  // namespace

void SubspacePair::validate() const {
  if (dim < 1 || dim > kMaxDim) throw invalid_input_error("SubspacePair: bad dimension");
  if (u_basis.rows() != dim || v_basis.rows() != dim)
    throw invalid_input_error("SubspacePair: basis dimension mismatch");
  if (u_basis.cols() < 1 || v_basis.cols() < 1)
    throw invalid_input_error("SubspacePair: subspaces must be nontrivial");
  if (u_basis.cols() + v_basis.cols() != dim)
    throw invalid_input_error("SubspacePair: dim U + dim V must equal d");
  Mat t(dim, dim);
  t.leftCols(u_basis.cols()) = u_basis;
  t.rightCols(v_basis.cols()) = v_basis;
  Eigen::FullPivLU<Mat> lu(t);
  if (lu.rank() < dim)
    throw invalid_input_error("SubspacePair: direct sum fails (rank-deficient basis)");
}

Real SubspacePair::condition_number() const {
  Mat t(dim, dim);
  t.leftCols(u_basis.cols()) = u_basis;
  t.rightCols(v_basis.cols()) = v_basis;
  Eigen::JacobiSVD<Mat> svd(t);
  const auto& s = svd.singularValues();
  return s(0) / s(s.size() - 1);
}

void BodySpec::validate() const {
  if (dim < 1 || dim > kMaxDim) throw invalid_input_error("BodySpec: bad dimension");
  if (kind == Kind::polytope) {
    if (vertices.rows() != dim || vertices.cols() < dim + 1)
      throw invalid_input_error("BodySpec: polytope needs at least d+1 vertices of dimension d");
    if (!vertices.allFinite()) throw invalid_input_error("BodySpec: non-finite vertices");
  } else {
    if (boundary_points.rows() != dim || normals.rows() != dim)
      throw invalid_input_error("BodySpec: sample dimension mismatch");
    if (boundary_points.cols() != normals.cols() || boundary_points.cols() < dim + 1)
      throw invalid_input_error("BodySpec: need matching boundary points and normals");
  }
}

bool BodySpec::is_symmetric(Real tol) const {
  const Mat& pts = kind == Kind::polytope ? vertices : boundary_points;
  for (long i = 0; i < pts.cols(); ++i) {
    Real best = std::numeric_limits<Real>::infinity();
    for (long j = 0; j < pts.cols(); ++j)
      best = std::min(best, (pts.col(i) + pts.col(j)).norm());
    if (best > tol) return false;
  }
  return true;
}

Mat projector_operator(const SubspacePair& pair) {
  pair.validate();
  const int d = pair.dim;
  Mat t(d, d);
  t.leftCols(pair.u_basis.cols()) = pair.u_basis;
  t.rightCols(pair.v_basis.cols()) = pair.v_basis;
  Mat diag = Mat::Zero(d, d);
  for (long i = pair.u_basis.cols(); i < d; ++i) diag(i, i) = -1.0;
  return t * diag * t.inverse();
}

ControlSet symmetric_body_system(const BodySpec& body, int n_samples) {
  body.validate();
  const int d = body.dim;
  if (n_samples < 2 * d)
    throw invalid_input_error("symmetric_body_system: n_samples must be >= 2d");
  if (!body.is_symmetric())
    throw invalid_input_error("symmetric_body_system: body must be symmetric about the origin");

  ControlSet sys;
  sys.dim = d;
  int skipped = 0;
  auto emit = [&](const Vec& z, const Vec& support_normal, const std::string& label) {
    SubspacePair pair;
    pair.dim = d;
    pair.u_basis = single_column(z);
    pair.v_basis = hyperplane_basis(support_normal);
    // Skip samples where the ray through z lies in its own support plane.
    if (std::abs(support_normal.dot(z)) < 1e-12 * z.norm() * support_normal.norm()) {
      ++skipped;
      return;
    }
    sys.generators.push_back(projector_operator(pair));
    sys.labels.push_back(label);
  };

  if (body.kind == BodySpec::Kind::sampled_boundary) {
    for (long i = 0; i < body.boundary_points.cols(); ++i)
      emit(body.boundary_points.col(i), body.normals.col(i), "z" + std::to_string(i));
  } else {
    if (d != 2)
      throw invalid_input_error(
          "symmetric_body_system: polytope bodies are supported in d = 2; supply "
          "sampled-boundary data with normals for d >= 3");
    // Origin is interior iff the symmetric vertex set spans the plane.
    Eigen::FullPivLU<Mat> lu(body.vertices);
    if (lu.rank() < d)
      throw invalid_input_error("symmetric_body_system: degenerate body (origin not interior)");

    const std::vector<long> order = polygon_order(body.vertices);
    const long nv = static_cast<long>(order.size());
    auto edge_normal = [&](long e) {
      const Vec a = body.vertices.col(order[static_cast<size_t>(e % nv)]);
      const Vec b = body.vertices.col(order[static_cast<size_t>((e + 1) % nv)]);
      Vec n(2);
      n << b[1] - a[1], a[0] - b[0];  // outward for counterclockwise order
      n.normalize();
      if (n.dot(a) < 0.0) n = -n;
      return n;
    };

    // Vertices first, with both adjacent supporting lines.
    for (long e = 0; e < nv; ++e) {
      const Vec z = body.vertices.col(order[static_cast<size_t>(e)]);
      const std::string label = "v" + std::to_string(e);
      emit(z, edge_normal(e - 1 + nv), label + "-");
      emit(z, edge_normal(e), label + "+");
    }
    // Edge-interior samples, uniformly per edge.
    const int per_edge =
        std::max<int>(1, static_cast<int>(std::ceil(static_cast<Real>(n_samples - nv) /
                                                    static_cast<Real>(nv))));
    for (long e = 0; e < nv; ++e) {
      const Vec a = body.vertices.col(order[static_cast<size_t>(e)]);
      const Vec b = body.vertices.col(order[static_cast<size_t>((e + 1) % nv)]);
      const Vec n = edge_normal(e);
      for (int k = 1; k <= per_edge; ++k) {
        const Real frac = static_cast<Real>(k) / static_cast<Real>(per_edge + 1);
        emit(a + frac * (b - a), n, "e" + std::to_string(e) + "." + std::to_string(k));
      }
    }
  }
  if (skipped > 0)
    sys.labels.push_back("");  // keep labels aligned only when nothing was skipped
  if (!sys.labels.empty() && sys.labels.size() != sys.generators.size()) sys.labels.clear();
  if (sys.generators.empty())
    throw invalid_input_error("symmetric_body_system: all samples degenerate");
  sys.validate();
  return sys;
}

ControlSet simplex_system(const Mat& vertices) {
  const int d = static_cast<int>(vertices.rows());
  if (d < 1 || d > kMaxDim || vertices.cols() != d + 1)
    throw invalid_input_error("simplex_system: need d+1 vertices of dimension d");

  // Barycentric coordinates of the origin decide membership.
  Mat bary(d + 1, d + 1);
  bary.topRows(d) = vertices;
  bary.bottomRows(1).setOnes();
  Eigen::FullPivLU<Mat> lu(bary);
  if (!lu.isInvertible())
    throw invalid_input_error("simplex_system: degenerate simplex (affinely dependent vertices)");
  Vec rhs = Vec::Zero(d + 1);
  rhs[d] = 1.0;
  const Vec lambda = lu.solve(rhs);
  if (lambda.minCoeff() < 1e-12)
    throw invalid_input_error(
        "simplex_system: origin must lie strictly inside the simplex (boundary placement "
        "is not supported)");

  ControlSet sys;
  sys.dim = d;
  for (int i = 0; i <= d; ++i)
    for (int j = i + 1; j <= d; ++j) {
      Mat u(d, d - 1);
      int at = 0;
      for (int k = 0; k <= d; ++k)
        if (k != i && k != j) u.col(at++) = vertices.col(k);
      SubspacePair pair;
      pair.dim = d;
      pair.u_basis = u;
      pair.v_basis = single_column(Vec(vertices.col(j) - vertices.col(i)));
      try {
        sys.generators.push_back(projector_operator(pair));
      } catch (const invalid_input_error&) {
        throw invalid_input_error("simplex_system: direct sum fails for edge pair (" +
                                  std::to_string(i) + ", " + std::to_string(j) + ")");
      }
      sys.labels.push_back("A" + std::to_string(i) + std::to_string(j));
    }
  sys.validate();
  return sys;
}

ControlSet example20_system(Real p) {
  if (!(p > 0.0) || !(p < 1.0))
    throw invalid_input_error("example20_system: p must lie in (0, 1)");
  ControlSet sys;
  sys.dim = 2;
  Mat a1(2, 2), a2(2, 2);
  a1 << -1.0, p, 0.0, 0.0;
  a2 << 0.0, 0.0, -1.0, -p;
  sys.generators = {a1, a2};
  sys.labels = {"A1", "A2"};
  return sys;
}

std::pair<Vec, Vec> example20_kernel_directions(Real p) {
  Vec r1(2), r2(2);
  r1 << p, 1.0;
  r2 << -p, 1.0;
  return {r1.normalized(), r2.normalized()};
}

std::pair<Mat, std::string> trapezoid_fixture() {
  Mat v(2, 4);
  v.col(0) << -1.75, -1.5;
  v.col(1) << -0.75, 0.5;
  v.col(2) << 1.25, 0.5;
  v.col(3) << 2.25, -1.5;
  return {v,
          "trapezoid with bases v1v4 (length 4) and v2v3 (length 2), origin interior, "
          "line through the origin and v3 meeting side v1v2 at (-1.25, -0.5)"};
}

}  // namespace eigenset
