#pragma once

#include "eigenset/types.hpp"

#include <string>
#include <vector>

namespace eigenset {

/// A linear switching system, stored as the finite generator list whose
/// convex hull is the control set. All propagation routines use generator
/// exponentials only; chattering laws are approximated by step refinement.
struct ControlSet {
  int dim = 0;
  std::vector<Mat> generators;
  std::vector<std::string> labels;  // empty, or one label per generator

  int count() const { return static_cast<int>(generators.size()); }
  void validate() const;
};

/// One piecewise-constant piece of a switching law: a convex combination of
/// the generators held for `duration` seconds.
struct Segment {
  Vec weights;
  Real duration = 0.0;
};

struct Schedule {
  std::vector<Segment> segments;

  Real total_duration() const;
  void validate(int generator_count) const;

  /// Constant law equal to generator `index`, held for `duration`.
  static Schedule stationary(int index, int generator_count, Real duration);
};

/// Sampled trajectory: times[k] starts at 0 and is strictly increasing,
/// points.col(k) is the state at times[k].
struct Trajectory {
  std::vector<Real> times;
  Mat points;  // dim x n

  int size() const { return static_cast<int>(times.size()); }
};

/// e^{tA}. Throws invalid_input_error on non-finite entries.
Mat mat_exp(const Mat& a, Real t);

/// The matrix of one schedule segment, sum_i weights[i] * generators[i].
Mat segment_matrix(const ControlSet& sys, const Segment& seg);

/// Product of segment exponentials, latest segment leftmost. Identity for
/// an empty schedule.
Mat fundamental_matrix(const ControlSet& sys, const Schedule& sched);

/// Samples x(t) = Pi(t) x0 at step dt and at every segment boundary.
Trajectory simulate(const ControlSet& sys, const Vec& x0, const Schedule& sched, Real dt);

/// The shifted system {A - beta I : A in sys}; labels preserved.
ControlSet shift(const ControlSet& sys, Real beta);

struct IrreducibilityResult {
  bool irreducible = false;
  /// Orthonormal basis (columns) of a proper nontrivial common invariant
  /// subspace when reducible; 0x0 otherwise.
  Mat invariant_subspace;
};

/// Detects a common invariant subspace by closing probe subspaces under the
/// generator action. Probes are d seeded random vectors plus the eigenvector
/// subspaces of a random element of the generated algebra; the latter make
/// the test complete for generic reducible families (e.g. joint triangular
/// ones) that random vectors alone never detect.
IrreducibilityResult irreducibility_test(const ControlSet& sys, Real tol,
                                         std::uint64_t seed = 0x1729u);

/// Euclidean distance from q to the convex hull of the columns of pts
/// (Wolfe's min-norm-point algorithm; exact up to pivot tolerance).
Real hull_distance(const Vec& q, const Mat& pts);

/// True iff q lies within distance tol of co(columns of pts).
bool point_in_hull(const Vec& q, const Mat& pts, Real tol);

}  // namespace eigenset
