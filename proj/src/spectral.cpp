#include "eigenset/spectral.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <utility>

namespace eigenset {

namespace {

constexpr Real kInf = std::numeric_limits<Real>::infinity();

Real spectral_radius(const Mat& m) {
  const long d = m.rows();
  if (d == 1) return std::abs(m(0, 0));
  if (d == 2) {
    const Real tr = m(0, 0) + m(1, 1);
    const Real det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    const Real disc = 0.25 * tr * tr - det;
    if (disc >= 0.0) {
      const Real s = std::sqrt(disc);
      return std::max(std::abs(0.5 * tr + s), std::abs(0.5 * tr - s));
    }
    return std::sqrt(det);
  }
  Eigen::EigenSolver<Mat> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Real operator_norm(const Mat& m) {
  const long d = m.rows();
  if (d == 1) return std::abs(m(0, 0));
  if (d == 2) {
    const Mat g = m.transpose() * m;
    const Real a = g(0, 0), b = g(0, 1), c = g(1, 1);
    const Real lmax = 0.5 * (a + c) + std::sqrt(0.25 * (a - c) * (a - c) + b * b);
    return std::sqrt(std::max<Real>(0.0, lmax));
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(m.transpose() * m, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max<Real>(0.0, es.eigenvalues().maxCoeff()));
}

// Orthonormal (Frobenius) basis of symmetric d x d matrices.
std::vector<Mat> symmetric_basis(int d) {
  std::vector<Mat> basis;
  const Real inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      Mat e = Mat::Zero(d, d);
      if (i == j) {
        e(i, i) = 1.0;
      } else {
        e(i, j) = inv_sqrt2;
        e(j, i) = inv_sqrt2;
      }
      basis.push_back(e);
    }
  return basis;
}

Vec sym_coords(const Mat& p, const std::vector<Mat>& basis) {
  Vec c(static_cast<long>(basis.size()));
  for (size_t k = 0; k < basis.size(); ++k)
    c[static_cast<long>(k)] = (p.array() * basis[k].array()).sum();
  return c;
}

Mat sym_from_coords(const Vec& c, const std::vector<Mat>& basis, int d) {
  Mat p = Mat::Zero(d, d);
  for (size_t k = 0; k < basis.size(); ++k) p += c[static_cast<long>(k)] * basis[k];
  return p;
}

// Solves S^T P + P S = -I over symmetric P. Returns P or an empty matrix
// when the solve is singular or the result is not positive definite.
Mat lyapunov_solve(const Mat& s) {
  const int d = static_cast<int>(s.rows());
  const std::vector<Mat> basis = symmetric_basis(d);
  const long n = static_cast<long>(basis.size());
  Mat k(n, n);
  for (long col = 0; col < n; ++col) {
    const Mat img = s.transpose() * basis[col] + basis[col] * s;
    k.col(col) = sym_coords(img, basis);
  }
  const Vec rhs = sym_coords(-Mat::Identity(d, d), basis);
  const Vec sol = k.colPivHouseholderQr().solve(rhs);
  if (!sol.allFinite()) return Mat();
  Mat p = sym_from_coords(sol, basis, d);
  p = 0.5 * (p + p.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(p, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 0.0) return Mat();
  return p;
}

struct Preconditioner {
  Mat lt;      // upper Cholesky factor, ||x||_P = ||lt x||
  Mat lt_inv;  // its inverse
};

bool make_preconditioner(const Mat& p, Preconditioner& out) {
  Eigen::LLT<Mat> llt(p);
  if (llt.info() != Eigen::Success) return false;
  out.lt = llt.matrixL().transpose();
  out.lt_inv = out.lt.inverse();
  return !out.lt_inv.hasNaN();
}

// Single-step growth rate (1/h) log max_j ||B_j||_P, or +inf when P is
// unusable as a norm.
Real step_bound(const std::vector<Mat>& steps, const Mat& p, Real h) {
  Preconditioner pc;
  if (!make_preconditioner(p, pc)) return kInf;
  Real worst = 0.0;
  for (const Mat& b : steps) worst = std::max(worst, operator_norm(pc.lt * b * pc.lt_inv));
  if (!(worst > 0.0) || !std::isfinite(worst)) return kInf;
  return std::log(worst) / h;
}

}  // namespace

Real spectral_abscissa(const Mat& a) {
  if (!a.allFinite() || a.rows() != a.cols())
    throw invalid_input_error("spectral_abscissa: finite square matrix required");
  if (a.rows() == 1) return a(0, 0);
  Eigen::EigenSolver<Mat> es(a, false);
  return es.eigenvalues().real().maxCoeff();
}

ExponentBracket lyapunov_exponent(const ControlSet& sys, Real h, int depth) {
  sys.validate();
  if (!(h > 0.0)) throw invalid_input_error("lyapunov_exponent: h must be positive");
  if (depth < 1) throw invalid_input_error("lyapunov_exponent: depth must be >= 1");
  const int m = sys.count();
  const int d = sys.dim;
  if (std::pow(static_cast<Real>(m), depth) > 1e7)
    throw resource_error("lyapunov_exponent: m^depth exceeds the 1e7 product guard");

  std::vector<Mat> steps;
  steps.reserve(m);
  for (const Mat& a : sys.generators) steps.push_back(mat_exp(a, h));

  // Stationary laws are admissible, so the single-step spectral radii give
  // an exact floor: rho(e^{hA}) = e^{h abscissa(A)}.
  Real lower = -kInf;
  for (const Mat& b : steps) lower = std::max(lower, std::log(spectral_radius(b)) / h);

  // Candidate ellipsoidal preconditioners.
  std::vector<Mat> candidates;
  candidates.push_back(Mat::Identity(d, d));

  for (const Real delta : {1e-4, 1e-3, 1e-2, 0.05, 0.1, 0.25, 0.5, 1.0, 2.0}) {
    Mat s = Mat::Zero(d, d);
    for (const Mat& a : sys.generators) s += a;
    s /= static_cast<Real>(m);
    s -= (lower + delta) * Mat::Identity(d, d);
    const Mat p = lyapunov_solve(s);
    if (p.size() > 0) candidates.push_back(p);
  }

  // Multiplicative-weights refinement of the discrete iterated norm
  // P <- sum_j w_j B_j^T P B_j with generators rescaled to unit rate.
  {
    Vec w = Vec::Constant(m, 1.0 / m);
    const Real rate0 = std::max(lower, 0.0);
    std::vector<Mat> scaled;
    for (const Mat& b : steps) scaled.push_back(std::exp(-h * rate0) * b);
    for (int round = 0; round < 24; ++round) {
      Mat p = Mat::Identity(d, d);
      for (int it = 0; it < 60; ++it) {
        Mat q = Mat::Zero(d, d);
        for (int j = 0; j < m; ++j) q += w[j] * scaled[j].transpose() * p * scaled[j];
        q = 0.5 * (q + q.transpose());
        q += 1e-13 * q.trace() * Mat::Identity(d, d);
        const Real tr = q.trace();
        if (!(tr > 0.0) || !std::isfinite(tr)) break;
        p = q * (static_cast<Real>(d) / tr);
      }
      candidates.push_back(p);
      Preconditioner pc;
      if (!make_preconditioner(p, pc)) break;
      int jstar = 0;
      Real worst = -kInf;
      for (int j = 0; j < m; ++j) {
        const Real nj = operator_norm(pc.lt * steps[j] * pc.lt_inv);
        if (nj > worst) {
          worst = nj;
          jstar = j;
        }
      }
      w[jstar] *= 1.6;
      w /= w.sum();
    }
  }

  Mat best_p = candidates.front();
  Real best_rate = step_bound(steps, best_p, h);
  for (const Mat& p : candidates) {
    const Real r = step_bound(steps, p, h);
    if (r < best_rate) {
      best_rate = r;
      best_p = p;
    }
  }

  // Enumerate all products of up to `depth` step exponentials in the best
  // preconditioned frame: spectral radii raise the floor, per-length norm
  // maxima give k-block upper bounds.
  Preconditioner pc;
  make_preconditioner(best_p, pc);
  std::vector<Mat> conj;
  for (const Mat& b : steps) conj.push_back(pc.lt * b * pc.lt_inv);

  std::vector<Real> level_norm_max(static_cast<size_t>(depth) + 1, 0.0);
  Real lower_rate = lower;
  std::vector<Mat> stack(static_cast<size_t>(depth) + 1);
  stack[0] = Mat::Identity(d, d);
  std::vector<int> word{};
  std::function<void(int)> dfs = [&](int k) {
    if (k == depth) return;
    for (int j = 0; j < m; ++j) {
      stack[k + 1] = conj[j] * stack[k];
      const Real rho = spectral_radius(stack[k + 1]);
      if (rho > 0.0)
        lower_rate = std::max(lower_rate, std::log(rho) / (h * static_cast<Real>(k + 1)));
      level_norm_max[static_cast<size_t>(k + 1)] =
          std::max(level_norm_max[static_cast<size_t>(k + 1)], operator_norm(stack[k + 1]));
      dfs(k + 1);
    }
  };
  dfs(0);

  Real upper = best_rate;
  for (int k = 1; k <= depth; ++k) {
    const Real lvl = level_norm_max[static_cast<size_t>(k)];
    if (lvl > 0.0) upper = std::min(upper, std::log(lvl) / (h * static_cast<Real>(k)));
  }
  upper = std::max(upper, lower_rate);  // floating-point safety only

  return ExponentBracket{lower_rate, upper, h, depth};
}

std::pair<ControlSet, Real> normalize(const ControlSet& sys, Real h, int depth) {
  const ExponentBracket br = lyapunov_exponent(sys, h, depth);
  const Real sigma_hat = br.midpoint();
  return {shift(sys, sigma_hat), sigma_hat};
}

std::vector<int> dominant_regimes(const ControlSet& sys, Real sigma_hat, Real tol) {
  sys.validate();
  std::vector<int> out;
  for (int j = 0; j < sys.count(); ++j)
    if (std::abs(spectral_abscissa(sys.generators[j]) - sigma_hat) <= tol) out.push_back(j);
  return out;
}

std::optional<IsotropyCertificate> isotropy_test(const ControlSet& sys, Real tol,
                                                 std::uint64_t seed, int samples) {
  sys.validate();
  if (!(tol > 0.0)) throw invalid_input_error("isotropy_test: tol must be positive");
  const int d = sys.dim;
  const int m = sys.count();

  // trace(sI + X) = d s, so the candidate s must agree across generators.
  Real s_mean = 0.0;
  for (const Mat& a : sys.generators) s_mean += a.trace() / d;
  s_mean /= m;
  for (const Mat& a : sys.generators)
    if (std::abs(a.trace() / d - s_mean) > tol) return std::nullopt;

  std::vector<Mat> x;
  for (const Mat& a : sys.generators) x.push_back(a - s_mean * Mat::Identity(d, d));

  // Joint null space of P -> X_j^T P + P X_j over symmetric P.
  const std::vector<Mat> basis = symmetric_basis(d);
  const long n = static_cast<long>(basis.size());
  Mat stacked(static_cast<long>(m) * n, n);
  for (int j = 0; j < m; ++j)
    for (long col = 0; col < n; ++col) {
      const Mat img = x[j].transpose() * basis[col] + basis[col] * x[j];
      stacked.block(static_cast<long>(j) * n, col, n, 1) = sym_coords(img, basis);
    }
  Eigen::JacobiSVD<Mat> svd(stacked, Eigen::ComputeThinV);
  const Real sigma_max = svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
  const Real null_cut = std::max(1e-12, 1e-2 * tol) * std::max<Real>(1.0, sigma_max);
  std::vector<Vec> null_basis;
  for (long k = 0; k < svd.singularValues().size(); ++k)
    if (svd.singularValues()(k) <= null_cut) null_basis.push_back(svd.matrixV().col(k));
  if (n > svd.singularValues().size())  // wide-rank guard (never for m >= 1)
    for (long k = svd.singularValues().size(); k < n; ++k)
      null_basis.push_back(svd.matrixV().col(k));
  if (null_basis.empty()) return std::nullopt;

  // Search the null space for a positive definite element: basis elements,
  // the projection of the identity, then deterministic seeded samples.
  const long k = static_cast<long>(null_basis.size());
  std::vector<Vec> trials;
  for (const Vec& b : null_basis) {
    trials.push_back(b);
    trials.push_back(-b);
  }
  {
    const Vec id_coords = sym_coords(Mat::Identity(d, d), basis);
    Vec proj = Vec::Zero(n);
    for (const Vec& b : null_basis) proj += b.dot(id_coords) * b;
    if (proj.norm() > 1e-12) trials.push_back(proj / proj.norm());
  }
  Rng rng(seed);
  std::normal_distribution<Real> gauss(0.0, 1.0);
  for (int t = 0; t < samples; ++t) {
    Vec c(k);
    for (long i = 0; i < k; ++i) c[i] = gauss(rng);
    Vec combo = Vec::Zero(n);
    for (long i = 0; i < k; ++i) combo += c[i] * null_basis[static_cast<size_t>(i)];
    if (combo.norm() > 1e-12) trials.push_back(combo / combo.norm());
  }

  Mat best_p;
  Real best_score = 0.0;
  for (const Vec& c : trials) {
    Mat p = sym_from_coords(c, basis, d);
    p = 0.5 * (p + p.transpose());
    if (p.trace() < 0.0) p = -p;
    Eigen::SelfAdjointEigenSolver<Mat> es(p, Eigen::EigenvaluesOnly);
    const Real lmin = es.eigenvalues().minCoeff();
    const Real lmax = es.eigenvalues().maxCoeff();
    if (lmax <= 0.0) continue;
    const Real score = lmin / lmax;
    if (score > best_score) {
      best_score = score;
      best_p = p;
    }
  }
  if (best_p.size() == 0 || best_score <= 1e-10) return std::nullopt;

  Mat p = best_p * (static_cast<Real>(d) / best_p.trace());
  Real residual = 0.0;
  for (int j = 0; j < m; ++j)
    residual = std::max(residual, operator_norm(x[j].transpose() * p + p * x[j]));
  if (residual > tol) return std::nullopt;

  Eigen::LLT<Mat> llt(p);
  if (llt.info() != Eigen::Success) return std::nullopt;
  IsotropyCertificate cert;
  cert.s = s_mean;
  cert.P = p;
  cert.T = Mat(llt.matrixL().transpose());
  cert.residual = residual;
  return cert;
}

// ---------------------------------------------------------------------------
// Barabanov norm approximation
// ---------------------------------------------------------------------------

namespace {

struct SphereGrid {
  Mat directions;                       // d x n
  std::vector<std::array<int, 3>> faces;  // d = 3 triangulation
};

SphereGrid circle_grid(int n) {
  SphereGrid g;
  g.directions.resize(2, n);
  for (int i = 0; i < n; ++i) {
    const Real th = 2.0 * M_PI * i / n;
    g.directions(0, i) = std::cos(th);
    g.directions(1, i) = std::sin(th);
  }
  return g;
}

SphereGrid icosphere_grid(int min_vertices) {
  using Key = std::pair<int, int>;
  const Real phi = 0.5 * (1.0 + std::sqrt(5.0));
  std::vector<Eigen::Vector3d> verts = {
      {-1, phi, 0}, {1, phi, 0},  {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi},  {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1}};
  for (auto& v : verts) v.normalize();
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  while (static_cast<int>(verts.size()) < min_vertices) {
    std::map<Key, int> midpoint;
    auto mid = [&](int a, int b) {
      const Key key = a < b ? Key{a, b} : Key{b, a};
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      Eigen::Vector3d v = (verts[a] + verts[b]).normalized();
      verts.push_back(v);
      const int idx = static_cast<int>(verts.size()) - 1;
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }
  SphereGrid g;
  g.directions.resize(3, static_cast<long>(verts.size()));
  for (size_t i = 0; i < verts.size(); ++i) g.directions.col(static_cast<long>(i)) = verts[i];
  g.faces = std::move(faces);
  return g;
}

SphereGrid random_sphere_grid(int d, int n, std::uint64_t seed) {
  if (n % 2 != 0) ++n;
  SphereGrid g;
  g.directions.resize(d, n);
  Rng rng(seed);
  for (int i = 0; i < n / 2; ++i) {
    const Vec u = random_unit_vector(d, rng);
    g.directions.col(2 * i) = u;
    g.directions.col(2 * i + 1) = -u;
  }
  return g;
}

// Fixed interpolation stencil for one mapped grid direction.
struct Stencil {
  Real scale = 0.0;
  int idx[3] = {0, 0, 0};
  Real w[3] = {0, 0, 0};
  int n = 0;
};

Stencil circle_stencil(const SphereGrid& grid, const Vec& y) {
  Stencil s;
  s.scale = y.norm();
  const int n = static_cast<int>(grid.directions.cols());
  Real phi = std::atan2(y[1], y[0]);
  if (phi < 0.0) phi += 2.0 * M_PI;
  const Real step = 2.0 * M_PI / n;
  int i0 = static_cast<int>(std::floor(phi / step));
  if (i0 >= n) i0 = 0;
  const int i1 = (i0 + 1) % n;
  const Real frac = phi / step - i0;
  s.idx[0] = i0;
  s.idx[1] = i1;
  s.w[0] = 1.0 - frac;
  s.w[1] = frac;
  s.n = 2;
  return s;
}

Stencil sphere_stencil(const SphereGrid& grid,
                       const std::vector<std::vector<int>>& vertex_faces, const Vec& y) {
  Stencil s;
  s.scale = y.norm();
  const Vec dir = y / s.scale;
  long nearest = 0;
  (grid.directions.transpose() * dir).maxCoeff(&nearest);
  auto try_face = [&](const std::array<int, 3>& f, Real slack) {
    Eigen::Matrix3d vmat;
    for (int c = 0; c < 3; ++c) vmat.col(c) = grid.directions.col(f[c]);
    const Eigen::Vector3d lam = vmat.fullPivLu().solve(dir);
    if (lam.minCoeff() < -slack) return false;
    const Real sum = lam.sum();
    if (!(sum > 1e-12)) return false;
    for (int c = 0; c < 3; ++c) {
      s.idx[c] = f[c];
      s.w[c] = std::max<Real>(0.0, lam[c]) / sum;
    }
    s.n = 3;
    return true;
  };
  for (const int fi : vertex_faces[static_cast<size_t>(nearest)])
    if (try_face(grid.faces[static_cast<size_t>(fi)], 1e-10)) return s;
  for (const auto& f : grid.faces)  // fallback: global scan
    if (try_face(f, 1e-9)) return s;
  // Degenerate fallback: nearest vertex only.
  s.idx[0] = static_cast<int>(nearest);
  s.w[0] = 1.0;
  s.n = 1;
  return s;
}

Stencil nearest_stencil(const SphereGrid& grid, const Vec& y) {
  Stencil s;
  s.scale = y.norm();
  const Vec dir = y / s.scale;
  const Vec dots = grid.directions.transpose() * dir;
  std::array<long, 3> top{0, 0, 0};
  std::array<Real, 3> val{-kInf, -kInf, -kInf};
  for (long i = 0; i < dots.size(); ++i)
    for (int r = 0; r < 3; ++r)
      if (dots[i] > val[static_cast<size_t>(r)]) {
        for (int q = 2; q > r; --q) {
          val[static_cast<size_t>(q)] = val[static_cast<size_t>(q - 1)];
          top[static_cast<size_t>(q)] = top[static_cast<size_t>(q - 1)];
        }
        val[static_cast<size_t>(r)] = dots[i];
        top[static_cast<size_t>(r)] = i;
        break;
      }
  Real wsum = 0.0;
  for (int r = 0; r < 3; ++r) {
    const Real w = std::max<Real>(1e-12, val[static_cast<size_t>(r)]);
    s.idx[r] = static_cast<int>(top[static_cast<size_t>(r)]);
    s.w[r] = w;
    wsum += w;
  }
  for (int r = 0; r < 3; ++r) s.w[r] /= wsum;
  s.n = 3;
  return s;
}

// Convex hull of 2-D points, counterclockwise (Andrew monotone chain).
std::vector<Vec> hull_2d(const std::vector<Vec>& pts) {
  std::vector<Vec> p = pts;
  std::sort(p.begin(), p.end(), [](const Vec& a, const Vec& b) {
    return a[0] < b[0] || (a[0] == b[0] && a[1] < b[1]);
  });
  auto cross = [](const Vec& o, const Vec& a, const Vec& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
  };
  std::vector<Vec> h(2 * p.size());
  size_t k = 0;
  for (size_t i = 0; i < p.size(); ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], p[i]) <= 0) --k;
    h[k++] = p[i];
  }
  const size_t lower_size = k + 1;
  for (size_t i = p.size() - 1; i-- > 0;) {
    while (k >= lower_size && cross(h[k - 2], h[k - 1], p[i]) <= 0) --k;
    h[k++] = p[i];
  }
  h.resize(k > 1 ? k - 1 : k);
  return h;
}

// First positive ray parameter t with t*u on the boundary of the hull.
Real ray_hull_exit(const std::vector<Vec>& hull, const Vec& u) {
  Real best = 0.0;
  const size_t n = hull.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec& a = hull[i];
    const Vec& b = hull[(i + 1) % n];
    const Real det = u[0] * (a[1] - b[1]) - u[1] * (a[0] - b[0]);
    if (std::abs(det) < 1e-15) continue;
    const Real t = (a[0] * (a[1] - b[1]) - a[1] * (a[0] - b[0])) / det;
    const Real sdet = (b[0] - a[0]) * u[1] - (b[1] - a[1]) * u[0];
    if (std::abs(sdet) < 1e-18) continue;
    const Real s = (u[1] * a[0] - u[0] * a[1]) / -sdet;
    if (t > 0.0 && s >= -1e-9 && s <= 1.0 + 1e-9) best = std::max(best, t);
  }
  return best;
}

}  // namespace

void NormApprox::finalize() {
  if (dim == 2) {
    const long n = directions.cols();
    angles_.resize(static_cast<size_t>(n));
    for (long i = 0; i < n; ++i) {
      Real phi = std::atan2(directions(1, i), directions(0, i));
      if (phi < 0.0) phi += 2.0 * M_PI;
      angles_[static_cast<size_t>(i)] = phi;
    }
  } else if (dim >= 3) {
    // Support of the sampled unit ball in every grid direction; the gauge is
    // then evaluated through the dual formula.
    const long n = directions.cols();
    Mat ball(dim, n);
    for (long i = 0; i < n; ++i) ball.col(i) = directions.col(i) / values[i];
    support_ = (directions.transpose() * ball).rowwise().maxCoeff();
  }
}

Real NormApprox::eval(const Vec& x) const {
  if (x.size() != dim) throw invalid_input_error("NormApprox::eval: dimension mismatch");
  const Real r = x.norm();
  if (r == 0.0) return 0.0;
  if (dim == 1) return r * values[x[0] >= 0.0 ? 0 : (values.size() > 1 ? 1 : 0)];
  if (dim == 2) {
    const long n = directions.cols();
    Real phi = std::atan2(x[1], x[0]);
    if (phi < 0.0) phi += 2.0 * M_PI;
    // Grid angles are sorted ascending; find the sector containing phi.
    const auto it = std::upper_bound(angles_.begin(), angles_.end(), phi);
    long i1 = static_cast<long>(it - angles_.begin()) % n;
    long i0 = (i1 + n - 1) % n;
    const Vec w0 = directions.col(i0) / values[i0];
    const Vec w1 = directions.col(i1) / values[i1];
    const Real det = w0[0] * w1[1] - w0[1] * w1[0];
    if (std::abs(det) < 1e-15) return r * 0.5 * (values[i0] + values[i1]);
    const Real a = (x[0] * w1[1] - x[1] * w1[0]) / det;
    const Real b = (w0[0] * x[1] - w0[1] * x[0]) / det;
    return a + b;
  }
  return (directions.transpose() * x).cwiseQuotient(support_).maxCoeff();
}

NormApprox barabanov_norm(const ControlSet& sys_normed, Real h, int grid_n,
                          int max_iter, Real tol, std::uint64_t seed) {
  sys_normed.validate();
  if (!(h > 0.0)) throw invalid_input_error("barabanov_norm: h must be positive");
  if (grid_n < 4) throw invalid_input_error("barabanov_norm: grid_n must be >= 4");
  if (max_iter < 1) throw invalid_input_error("barabanov_norm: max_iter must be >= 1");
  const int d = sys_normed.dim;
  const int m = sys_normed.count();

  SphereGrid grid;
  if (d == 2) {
    grid = circle_grid(grid_n);
  } else if (d == 3) {
    grid = icosphere_grid(grid_n);
  } else if (d == 1) {
    grid.directions.resize(1, 2);
    grid.directions(0, 0) = 1.0;
    grid.directions(0, 1) = -1.0;
  } else {
    grid = random_sphere_grid(d, grid_n, seed);
  }
  const long n = grid.directions.cols();

  std::vector<std::vector<int>> vertex_faces;
  if (d == 3) {
    vertex_faces.resize(static_cast<size_t>(n));
    for (size_t fi = 0; fi < grid.faces.size(); ++fi)
      for (const int v : grid.faces[fi])
        vertex_faces[static_cast<size_t>(v)].push_back(static_cast<int>(fi));
  }

  std::vector<Mat> steps;
  for (const Mat& a : sys_normed.generators) steps.push_back(mat_exp(a, h));

  // The mapped directions never change, so the interpolation stencils are
  // fixed across sweeps.
  std::vector<Stencil> stencils(static_cast<size_t>(n) * m);
  for (long i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      const Vec y = steps[static_cast<size_t>(j)] * grid.directions.col(i);
      Stencil st;
      if (d == 2)
        st = circle_stencil(grid, y);
      else if (d == 3)
        st = sphere_stencil(grid, vertex_faces, y);
      else if (d == 1) {
        st.scale = std::abs(y[0]);
        st.idx[0] = y[0] >= 0.0 ? 0 : 1;
        st.w[0] = 1.0;
        st.n = 1;
      } else
        st = nearest_stencil(grid, y);
      stencils[static_cast<size_t>(i) * m + j] = st;
    }

  Vec v = Vec::Ones(n);
  Vec vnext(n);
  bool converged = false;
  Real growth = 1.0;
  Real delta = kInf;
  int sweeps = 0;
  for (int it = 0; it < max_iter; ++it) {
    for (long i = 0; i < n; ++i) {
      Real best = -kInf;
      for (int j = 0; j < m; ++j) {
        const Stencil& st = stencils[static_cast<size_t>(i) * m + j];
        Real interp = 0.0;
        for (int k = 0; k < st.n; ++k) interp += st.w[k] * v[st.idx[k]];
        best = std::max(best, st.scale * interp);
      }
      vnext[i] = best;
    }
    const Real ref = vnext[0];
    if (!(ref > 1e-100) || !std::isfinite(ref)) {
      converged = false;
      break;
    }
    growth = ref;  // f(u_ref) was 1 after the previous renormalization
    vnext /= ref;
    delta = (vnext - v).cwiseAbs().maxCoeff();
    v = vnext;
    ++sweeps;
    if (v.minCoeff() < 1e-10 || v.maxCoeff() > 1e10) {
      converged = false;
      break;
    }
    if (delta <= tol) {
      converged = true;
      break;
    }
  }
  (void)sweeps;

  NormApprox norm;
  norm.dim = d;
  norm.directions = grid.directions;
  norm.values = v;
  norm.h = h;
  norm.converged = converged;
  norm.growth_rate = std::log(growth) / h;

  // Convexify: replace values by the gauge of the convex hull of the
  // sampled unit ball.
  if (d == 2) {
    std::vector<Vec> ball;
    for (long i = 0; i < n; ++i) ball.push_back(Vec(grid.directions.col(i) / v[i]));
    const std::vector<Vec> hull = hull_2d(ball);
    if (hull.size() >= 3) {
      for (long i = 0; i < n; ++i) {
        const Real t = ray_hull_exit(hull, grid.directions.col(i));
        if (t > 0.0) norm.values[i] = 1.0 / t;
      }
    }
    norm.convexified = true;
  } else if (d >= 3) {
    Mat ball(d, n);
    for (long i = 0; i < n; ++i) ball.col(i) = grid.directions.col(i) / v[i];
    const Vec support = (grid.directions.transpose() * ball).rowwise().maxCoeff();
    Vec conv(n);
    for (long i = 0; i < n; ++i)
      conv[i] = (grid.directions.transpose() * grid.directions.col(i))
                    .cwiseQuotient(support)
                    .maxCoeff();
    norm.values = conv;
    norm.convexified = true;
  } else {
    norm.convexified = true;
  }
  norm.finalize();

  // Error bound: worst observed one-step violation at off-grid probe
  // directions, plus the terminal sweep residual.
  Real viol = 0.0;
  if (d == 2) {
    for (long i = 0; i < n; ++i) {
      const Real th = 2.0 * M_PI * (i + 0.5) / static_cast<Real>(n);
      Vec p(2);
      p << std::cos(th), std::sin(th);
      const Real fp = norm.eval(p);
      for (const Mat& b : steps) viol = std::max(viol, norm.eval(b * p) - fp);
    }
  } else if (d == 3) {
    const size_t stride = std::max<size_t>(1, grid.faces.size() / 2000);
    for (size_t fi = 0; fi < grid.faces.size(); fi += stride) {
      Vec p = Vec::Zero(3);
      for (const int vi : grid.faces[fi]) p += grid.directions.col(vi);
      p.normalize();
      const Real fp = norm.eval(p);
      for (const Mat& b : steps) viol = std::max(viol, norm.eval(b * p) - fp);
    }
  } else {
    Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
    for (int t = 0; t < 500; ++t) {
      const Vec p = random_unit_vector(d, rng);
      const Real fp = norm.eval(p);
      for (const Mat& b : steps) viol = std::max(viol, norm.eval(b * p) - fp);
    }
  }
  norm.error_bound = 5.0 * std::max<Real>(0.0, viol) + (std::isfinite(delta) ? delta : 0.0) + 1e-12;
  return norm;
}

}  // namespace eigenset
