#pragma once

#include "eigenset/core.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace eigenset {

/// Two-sided enclosure of the Lyapunov exponent produced at step h and
/// product depth `depth`. lower <= sigma(A) always; the upper bound holds
/// for the h-discretized system and for the continuous one up to O(h).
struct ExponentBracket {
  Real lower = 0.0;
  Real upper = 0.0;
  Real h = 0.0;
  int depth = 0;

  Real midpoint() const { return 0.5 * (lower + upper); }
  Real width() const { return upper - lower; }
};

/// Max real part of the eigenvalues.
Real spectral_abscissa(const Mat& a);

/// Brackets sigma(A). Lower bound: best growth rate (1/(kh)) log rho(Pi)
/// over all products Pi of up to `depth` step exponentials e^{hA_j}.
/// Upper bound: an ellipsoidal-norm bound min over preconditioners P and
/// block lengths k <= depth of (1/(kh)) log max_{|w|=k} ||Pi_w||_P.
ExponentBracket lyapunov_exponent(const ControlSet& sys, Real h, int depth);

/// Shifts the system by the bracket midpoint; returns the shifted system
/// and the estimate sigma_hat.
std::pair<ControlSet, Real> normalize(const ControlSet& sys, Real h, int depth);

/// Indices j with |spectral_abscissa(A_j) - sigma_hat| <= tol.
std::vector<int> dominant_regimes(const ControlSet& sys, Real sigma_hat, Real tol);

/// Witness that the system is isotropic: in the basis T (with P = T^T T),
/// every generator is s I + skew.
struct IsotropyCertificate {
  Real s = 0.0;
  Mat P;  // symmetric positive definite, normalized to trace d
  Mat T;  // P = T^T T
  Real residual = 0.0;  // max_j || (A_j - sI)^T P + P (A_j - sI) ||_2
};

/// Trace agreement fixes the candidate s; the joint Lyapunov null space is
/// then searched for a positive definite element (deterministic seeded
/// sampling). Absent is a valid result, not an error.
std::optional<IsotropyCertificate> isotropy_test(const ControlSet& sys, Real tol,
                                                 std::uint64_t seed = 0x15edu,
                                                 int samples = 1000);

/// Sampled positive homogeneous convex function on a unit direction grid:
/// the approximate invariant (Barabanov) norm. Evaluation is the gauge of
/// the sampled unit ball; for d = 2 the exact polygon gauge, for d >= 3 a
/// support-grid gauge.
struct NormApprox {
  int dim = 0;
  Mat directions;  // dim x n, unit columns
  Vec values;      // f(u_i) > 0
  Real h = 0.0;
  bool converged = false;
  bool convexified = false;
  Real error_bound = 0.0;
  /// Per-unit-time growth rate of the fixed-point iteration; a refined
  /// estimate of the residual Lyapunov exponent of the input system.
  Real growth_rate = 0.0;

  Real eval(const Vec& x) const;
  /// Rebuilds evaluation caches; called by barabanov_norm and after IO.
  void finalize();

 private:
  std::vector<Real> angles_;  // d = 2: sorted grid angles
  Vec support_;               // d >= 3: support values of the sampled ball
};

/// Fixed-point iteration f_{k+1}(u) = max_j f_k(e^{hA_j} u) on the grid,
/// renormalized each sweep; the result is convexified. Non-convergence
/// returns the best iterate flagged converged = false.
NormApprox barabanov_norm(const ControlSet& sys_normed, Real h, int grid_n,
                          int max_iter, Real tol, std::uint64_t seed = 0xba11u);

}  // namespace eigenset
