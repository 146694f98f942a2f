#include "eigenset/core.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>

namespace eigenset {

void ControlSet::validate() const {
  if (dim < 1 || dim > kMaxDim)
    throw invalid_input_error("ControlSet: dimension must be in [1, 6]");
  if (generators.empty())
    throw invalid_input_error("ControlSet: at least one generator required");
  for (const Mat& a : generators) {
    if (a.rows() != dim || a.cols() != dim)
      throw invalid_input_error("ControlSet: generator dimension mismatch");
    if (!a.allFinite())
      throw invalid_input_error("ControlSet: non-finite generator entries");
  }
  if (!labels.empty() && labels.size() != generators.size())
    throw invalid_input_error("ControlSet: label count must match generators");
}

Real Schedule::total_duration() const {
  Real t = 0.0;
  for (const Segment& s : segments) t += s.duration;
  return t;
}

void Schedule::validate(int generator_count) const {
  for (const Segment& s : segments) {
    if (s.weights.size() != generator_count)
      throw invalid_input_error("Schedule: weight count must match generators");
    if (!(s.duration > 0.0))
      throw invalid_input_error("Schedule: segment durations must be positive");
    Real sum = 0.0;
    for (int i = 0; i < s.weights.size(); ++i) {
      if (s.weights[i] < -1e-12)
        throw invalid_input_error("Schedule: weights must be nonnegative");
      sum += s.weights[i];
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw invalid_input_error("Schedule: weights must sum to 1");
  }
}

Schedule Schedule::stationary(int index, int generator_count, Real duration) {
  Segment seg;
  seg.weights = Vec::Zero(generator_count);
  seg.weights[index] = 1.0;
  seg.duration = duration;
  return Schedule{{seg}};
}

Mat mat_exp(const Mat& a, Real t) {
  if (!a.allFinite() || !std::isfinite(t))
    throw invalid_input_error("mat_exp: non-finite input");
  if (a.rows() != a.cols()) throw invalid_input_error("mat_exp: square matrix required");
  return Mat((t * a).exp());
}

Mat segment_matrix(const ControlSet& sys, const Segment& seg) {
  if (seg.weights.size() != sys.count())
    throw invalid_input_error("segment_matrix: weight count must match generators");
  Mat b = Mat::Zero(sys.dim, sys.dim);
  for (int i = 0; i < sys.count(); ++i)
    if (seg.weights[i] != 0.0) b += seg.weights[i] * sys.generators[i];
  return b;
}

Mat fundamental_matrix(const ControlSet& sys, const Schedule& sched) {
  sys.validate();
  sched.validate(sys.count());
  Mat pi = Mat::Identity(sys.dim, sys.dim);
  for (const Segment& seg : sched.segments)
    pi = mat_exp(segment_matrix(sys, seg), seg.duration) * pi;
  return pi;
}

Trajectory simulate(const ControlSet& sys, const Vec& x0, const Schedule& sched, Real dt) {
  sys.validate();
  sched.validate(sys.count());
  if (!(dt > 0.0)) throw invalid_input_error("simulate: dt must be positive");
  if (x0.size() != sys.dim) throw invalid_input_error("simulate: state dimension mismatch");

  std::vector<Real> times;
  std::vector<Vec> pts;
  times.push_back(0.0);
  pts.push_back(x0);

  Real t = 0.0;
  Vec x = x0;
  for (const Segment& seg : sched.segments) {
    const Mat b = segment_matrix(sys, seg);
    const Mat step = mat_exp(b, dt);
    const long nfull = static_cast<long>(std::floor(seg.duration / dt + 1e-12));
    for (long k = 0; k < nfull; ++k) {
      x = step * x;
      t += dt;
      times.push_back(t);
      pts.push_back(x);
    }
    const Real rem = seg.duration - static_cast<Real>(nfull) * dt;
    if (rem > 1e-12) {
      x = mat_exp(b, rem) * x;
      t += rem;
      times.push_back(t);
      pts.push_back(x);
    }
  }

  Trajectory traj;
  traj.times = std::move(times);
  traj.points.resize(sys.dim, static_cast<long>(pts.size()));
  for (long k = 0; k < traj.points.cols(); ++k) traj.points.col(k) = pts[k];
  return traj;
}

ControlSet shift(const ControlSet& sys, Real beta) {
  sys.validate();
  ControlSet out = sys;
  const Mat shift_term = beta * Mat::Identity(sys.dim, sys.dim);
  for (Mat& a : out.generators) a -= shift_term;
  return out;
}

namespace {

// Orthonormal closure of the span of `seed` columns under all generators.
// Rank decisions against tol, relative to the mapped vector's norm.
Mat invariant_closure(const std::vector<Mat>& gens, const Mat& seed, Real tol) {
  const int d = static_cast<int>(seed.rows());
  Mat basis(d, 0);
  auto try_add = [&](Vec v) {
    const Real scale = std::max<Real>(1.0, v.norm());
    if (basis.cols() > 0) {
      v -= basis * (basis.transpose() * v);
      v -= basis * (basis.transpose() * v);  // second pass for orthogonality
    }
    if (v.norm() > tol * scale) {
      basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
      basis.col(basis.cols() - 1) = v / v.norm();
      return true;
    }
    return false;
  };
  for (int c = 0; c < seed.cols(); ++c) try_add(seed.col(c));
  long frontier = 0;
  while (frontier < basis.cols() && basis.cols() < d) {
    const Vec v = basis.col(frontier++);
    for (const Mat& a : gens)
      if (try_add(a * v) && basis.cols() == d) break;
  }
  return basis;
}

}  // namespace

IrreducibilityResult irreducibility_test(const ControlSet& sys, Real tol, std::uint64_t seed) {
  sys.validate();
  if (!(tol > 0.0) || tol > 1e-4)
    throw invalid_input_error("irreducibility_test: tol must lie in (0, 1e-4]");
  const int d = sys.dim;
  IrreducibilityResult res;
  if (d == 1) {
    res.irreducible = true;
    return res;
  }

  Rng rng(seed);
  std::vector<Mat> probes;
  for (int k = 0; k < d; ++k) probes.push_back(random_unit_vector(d, rng));

  // A random element of the generated algebra. Any common invariant subspace
  // is spanned by a subset of its eigenvectors, so their closures witness
  // reducibility even when random vectors have full closures.
  std::normal_distribution<Real> gauss(0.0, 1.0);
  Mat x = Mat::Zero(d, d);
  for (const Mat& a : sys.generators) x += gauss(rng) * a;
  for (const Mat& a : sys.generators)
    for (const Mat& b : sys.generators) x += gauss(rng) * a * b;
  Eigen::EigenSolver<Mat> es(x);
  for (int k = 0; k < d; ++k) {
    const Eigen::VectorXcd u = es.eigenvectors().col(k);
    Mat seed_block(d, 2);
    seed_block.col(0) = u.real();
    seed_block.col(1) = u.imag();
    probes.push_back(seed_block);
  }

  Mat smallest;
  for (const Mat& p : probes) {
    const Mat closure = invariant_closure(sys.generators, p, tol);
    if (closure.cols() == 0 || closure.cols() >= d) continue;
    if (smallest.cols() == 0 || closure.cols() < smallest.cols()) smallest = closure;
  }
  if (smallest.cols() > 0) {
    res.irreducible = false;
    res.invariant_subspace = smallest;
  } else {
    res.irreducible = true;
  }
  return res;
}

Real hull_distance(const Vec& q, const Mat& pts) {
  if (pts.cols() == 0) throw invalid_input_error("hull_distance: empty point set");
  if (pts.rows() != q.size()) throw invalid_input_error("hull_distance: dimension mismatch");
  const long n = pts.cols();
  const Mat z = pts.colwise() - q;

  // Wolfe's min-norm-point algorithm over co(z_1..z_n).
  long start = 0;
  Real best = z.col(0).squaredNorm();
  for (long i = 1; i < n; ++i) {
    const Real s = z.col(i).squaredNorm();
    if (s < best) {
      best = s;
      start = i;
    }
  }
  std::vector<long> corral{start};
  Vec lambda = Vec::Ones(1);
  Vec x = z.col(start);
  const Real scale = std::max<Real>(1.0, z.colwise().norm().maxCoeff());
  const Real tol = 1e-12 * scale * scale;

  for (int iter = 0; iter < 200 * static_cast<int>(n + 4); ++iter) {
    long j = -1;
    Real mindot = std::numeric_limits<Real>::infinity();
    for (long i = 0; i < n; ++i) {
      const Real dot = x.dot(z.col(i));
      if (dot < mindot) {
        mindot = dot;
        j = i;
      }
    }
    if (mindot >= x.squaredNorm() - tol) break;  // optimal
    if (std::find(corral.begin(), corral.end(), j) != corral.end()) break;
    corral.push_back(j);
    lambda.conservativeResize(lambda.size() + 1);
    lambda[lambda.size() - 1] = 0.0;

    // Minor cycle: pull x to the affine minimizer over the corral, dropping
    // vertices whose coefficients would go negative.
    while (true) {
      const long m = static_cast<long>(corral.size());
      Mat zc(q.size(), m);
      for (long i = 0; i < m; ++i) zc.col(i) = z.col(corral[i]);
      Mat sys_mat(m + 1, m + 1);
      sys_mat.topLeftCorner(m, m) = zc.transpose() * zc;
      sys_mat.topRightCorner(m, 1).setOnes();
      sys_mat.bottomLeftCorner(1, m).setOnes();
      sys_mat(m, m) = 0.0;
      Vec rhs = Vec::Zero(m + 1);
      rhs[m] = 1.0;
      const Vec sol = sys_mat.fullPivLu().solve(rhs);
      const Vec alpha = sol.head(m);

      if (alpha.minCoeff() > 1e-13) {
        lambda = alpha;
        x = zc * alpha;
        break;
      }
      Real theta = 1.0;
      for (long i = 0; i < m; ++i)
        if (alpha[i] <= 1e-13 && lambda[i] - alpha[i] > 0.0)
          theta = std::min(theta, lambda[i] / (lambda[i] - alpha[i]));
      lambda = (1.0 - theta) * lambda + theta * alpha;
      std::vector<long> keep_idx;
      for (long i = 0; i < m; ++i)
        if (lambda[i] > 1e-13) keep_idx.push_back(i);
      if (keep_idx.empty()) keep_idx.push_back(0);
      std::vector<long> new_corral;
      Vec new_lambda(static_cast<long>(keep_idx.size()));
      for (size_t i = 0; i < keep_idx.size(); ++i) {
        new_corral.push_back(corral[keep_idx[i]]);
        new_lambda[static_cast<long>(i)] = lambda[keep_idx[i]];
      }
      corral = std::move(new_corral);
      lambda = new_lambda / new_lambda.sum();
      Mat zc2(q.size(), static_cast<long>(corral.size()));
      for (long i = 0; i < zc2.cols(); ++i) zc2.col(i) = z.col(corral[i]);
      x = zc2 * lambda;
      if (corral.size() == 1) break;
    }
  }
  return x.norm();
}

bool point_in_hull(const Vec& q, const Mat& pts, Real tol) {
  return hull_distance(q, pts) <= tol;
}

}  // namespace eigenset
