#include "eigenset/reach.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <unordered_map>

namespace eigenset {

namespace {

constexpr Real kInf = std::numeric_limits<Real>::infinity();

struct CellKey {
  std::array<std::int64_t, kMaxDim> c{};
  int dim = 0;
  bool operator==(const CellKey& o) const {
    if (dim != o.dim) return false;
    for (int i = 0; i < dim; ++i)
      if (c[static_cast<size_t>(i)] != o.c[static_cast<size_t>(i)]) return false;
    return true;
  }
};

struct CellKeyHash {
  size_t operator()(const CellKey& k) const {
    std::uint64_t h = 1469598103934665603ull;
    for (int i = 0; i < k.dim; ++i) {
      std::uint64_t v = static_cast<std::uint64_t>(k.c[static_cast<size_t>(i)]);
      for (int b = 0; b < 8; ++b) {
        h ^= (v >> (8 * b)) & 0xffu;
        h *= 1099511628211ull;
      }
    }
    return static_cast<size_t>(h);
  }
};

bool key_less(const CellKey& a, const CellKey& b) {
  for (int i = 0; i < a.dim; ++i) {
    if (a.c[static_cast<size_t>(i)] != b.c[static_cast<size_t>(i)])
      return a.c[static_cast<size_t>(i)] < b.c[static_cast<size_t>(i)];
  }
  return false;
}

CellKey cell_of(const Vec& p, Real cell, int dim) {
  CellKey k;
  k.dim = dim;
  for (int i = 0; i < dim; ++i)
    k.c[static_cast<size_t>(i)] = static_cast<std::int64_t>(std::floor(p[i] / cell));
  return k;
}

// Uniform-grid nearest-neighbor index with box-doubling search.
class GridIndex {
 public:
  GridIndex(const Mat& pts, Real cell) : pts_(pts), cell_(cell), dim_(static_cast<int>(pts.rows())) {
    for (long i = 0; i < pts.cols(); ++i)
      buckets_[cell_of(pts.col(i), cell_, dim_)].push_back(i);
  }

  Real nearest_sq(const Vec& q) const {
    if (pts_.cols() == 0) return kInf;
    const CellKey base = cell_of(q, cell_, dim_);
    Real best = kInf;
    long radius = 1;
    while (true) {
      scan_box(q, base, radius, best);
      if (best <= static_cast<Real>(radius) * cell_ * static_cast<Real>(radius) * cell_) break;
      if (static_cast<Real>(radius) * cell_ > span_bound()) {
        if (best == kInf) scan_all(q, best);
        break;
      }
      radius *= 2;
    }
    return best;
  }

 private:
  Real span_bound() const {
    if (span_ < 0.0) {
      const Vec lo = pts_.rowwise().minCoeff();
      const Vec hi = pts_.rowwise().maxCoeff();
      span_ = (hi - lo).norm() + 2.0 * cell_;
    }
    return span_;
  }

  void scan_all(const Vec& q, Real& best) const {
    for (long i = 0; i < pts_.cols(); ++i)
      best = std::min(best, (pts_.col(i) - q).squaredNorm());
  }

  void scan_box(const Vec& q, const CellKey& base, long radius, Real& best) const {
    std::array<std::int64_t, kMaxDim> off{};
    scan_rec(q, base, radius, 0, off, best);
  }

  void scan_rec(const Vec& q, const CellKey& base, long radius, int axis,
                std::array<std::int64_t, kMaxDim>& off, Real& best) const {
    if (axis == dim_) {
      CellKey k;
      k.dim = dim_;
      for (int i = 0; i < dim_; ++i)
        k.c[static_cast<size_t>(i)] = base.c[static_cast<size_t>(i)] + off[static_cast<size_t>(i)];
      const auto it = buckets_.find(k);
      if (it == buckets_.end()) return;
      for (const long i : it->second)
        best = std::min(best, (pts_.col(i) - q).squaredNorm());
      return;
    }
    for (std::int64_t o = -radius; o <= radius; ++o) {
      off[static_cast<size_t>(axis)] = o;
      scan_rec(q, base, radius, axis + 1, off, best);
    }
  }

  const Mat& pts_;
  Real cell_;
  int dim_;
  mutable Real span_ = -1.0;
  std::unordered_map<CellKey, std::vector<long>, CellKeyHash> buckets_;
};

Real directed_hausdorff(const Mat& from, const Mat& to, Real cell) {
  const GridIndex index(to, cell);
  Real worst = 0.0;
  for (long i = 0; i < from.cols(); ++i)
    worst = std::max(worst, index.nearest_sq(from.col(i)));
  return std::sqrt(worst);
}

std::vector<Mat> step_exponentials(const ControlSet& sys, Real h) {
  std::vector<Mat> steps;
  steps.reserve(sys.generators.size());
  for (const Mat& a : sys.generators) steps.push_back(mat_exp(a, h));
  return steps;
}

PointCloud apply_step(const PointCloud& m, const std::vector<Mat>& steps) {
  const long n = m.size();
  const long total = n * static_cast<long>(steps.size());
  if (total > 10'000'000)
    throw resource_error("step_map: mapped cloud would exceed the 1e7 point guard");
  Mat mapped(m.dim, total);
  long at = 0;
  for (const Mat& b : steps) {
    mapped.middleCols(at, n) = b * m.points;
    at += n;
  }
  return snap_prune(m.dim, m.epsilon, mapped, m.metadata);
}

// Convex hull of 2-D columns, counterclockwise; degenerate inputs give the
// collinear chain endpoints.
std::vector<Vec> hull_2d_cols(const Mat& pts) {
  std::vector<Vec> p;
  p.reserve(static_cast<size_t>(pts.cols()));
  for (long i = 0; i < pts.cols(); ++i) p.push_back(pts.col(i));
  std::sort(p.begin(), p.end(), [](const Vec& a, const Vec& b) {
    return a[0] < b[0] || (a[0] == b[0] && a[1] < b[1]);
  });
  p.erase(std::unique(p.begin(), p.end(), [](const Vec& a, const Vec& b) {
            return a[0] == b[0] && a[1] == b[1];
          }),
          p.end());
  if (p.size() <= 2) return p;
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
  h.resize(k - 1);
  return h;
}

bool inside_polygon(const std::vector<Vec>& poly, const Vec& q, Real slack) {
  const size_t n = poly.size();
  if (n < 3) return false;
  for (size_t i = 0; i < n; ++i) {
    const Vec& a = poly[i];
    const Vec& b = poly[(i + 1) % n];
    const Real cr = (b[0] - a[0]) * (q[1] - a[1]) - (b[1] - a[1]) * (q[0] - a[0]);
    if (cr < -slack) return false;
  }
  return true;
}

// Support-direction candidates for the extreme points of a cloud; used to
// keep hull-distance queries small in d >= 3.
Mat extreme_candidates(const PointCloud& m, int n_dirs) {
  const int d = m.dim;
  std::vector<long> keep;
  auto add = [&](const Vec& dir) {
    long idx = 0;
    (dir.transpose() * m.points).maxCoeff(&idx);
    if (std::find(keep.begin(), keep.end(), idx) == keep.end()) keep.push_back(idx);
  };
  if (d == 2) {
    for (int k = 0; k < n_dirs; ++k) {
      const Real th = 2.0 * M_PI * k / n_dirs;
      Vec dir(2);
      dir << std::cos(th), std::sin(th);
      add(dir);
    }
  } else {
    Rng rng(0xc0ffee);
    for (int k = 0; k < n_dirs; ++k) add(random_unit_vector(d, rng));
  }
  Mat out(d, static_cast<long>(keep.size()));
  for (size_t i = 0; i < keep.size(); ++i) out.col(static_cast<long>(i)) = m.points.col(keep[i]);
  return out;
}

}  // namespace

void PointCloud::validate() const {
  if (dim < 1 || dim > kMaxDim) throw invalid_input_error("PointCloud: dimension must be in [1, 6]");
  if (!(epsilon > 0.0)) throw invalid_input_error("PointCloud: epsilon must be positive");
  if (points.rows() != dim) throw invalid_input_error("PointCloud: point dimension mismatch");
  if (!points.allFinite()) throw invalid_input_error("PointCloud: non-finite points");
}

PointCloud make_cloud(int dim, Real epsilon, const Mat& points, std::string metadata) {
  PointCloud m;
  m.dim = dim;
  m.epsilon = epsilon;
  m.points = points;
  m.metadata = std::move(metadata);
  m.validate();
  return m;
}

PointCloud snap_prune(int dim, Real eps, const Mat& raw, std::string metadata) {
  if (!(eps > 0.0)) throw invalid_input_error("snap_prune: epsilon must be positive");
  std::unordered_map<CellKey, std::pair<Vec, long>, CellKeyHash> cells;
  for (long i = 0; i < raw.cols(); ++i) {
    const CellKey k = cell_of(raw.col(i), eps, dim);
    auto it = cells.find(k);
    if (it == cells.end())
      cells.emplace(k, std::make_pair(Vec(raw.col(i)), 1L));
    else {
      it->second.first += raw.col(i);
      it->second.second += 1;
    }
  }
  std::vector<std::pair<CellKey, Vec>> ordered;
  ordered.reserve(cells.size());
  for (auto& kv : cells)
    ordered.emplace_back(kv.first, Vec(kv.second.first / static_cast<Real>(kv.second.second)));
  std::sort(ordered.begin(), ordered.end(),
            [](const auto& a, const auto& b) { return key_less(a.first, b.first); });
  PointCloud out;
  out.dim = dim;
  out.epsilon = eps;
  out.metadata = std::move(metadata);
  out.points.resize(dim, static_cast<long>(ordered.size()));
  for (size_t i = 0; i < ordered.size(); ++i) out.points.col(static_cast<long>(i)) = ordered[i].second;
  return out;
}

PointCloud step_map(const PointCloud& m, const ControlSet& sys, Real h) {
  m.validate();
  sys.validate();
  if (!(h > 0.0)) throw invalid_input_error("step_map: h must be positive");
  if (sys.dim != m.dim) throw invalid_input_error("step_map: dimension mismatch");
  return apply_step(m, step_exponentials(sys, h));
}

PointCloud reach_set(const PointCloud& m0, const ControlSet& sys, Real t, Real h, Real* used_h) {
  m0.validate();
  sys.validate();
  if (sys.dim != m0.dim) throw invalid_input_error("reach_set: dimension mismatch");
  if (t < 0.0) throw invalid_input_error("reach_set: time must be nonnegative");
  if (!(h > 0.0)) throw invalid_input_error("reach_set: h must be positive");
  if (t == 0.0) {
    if (used_h) *used_h = h;
    return m0;
  }
  const long n = static_cast<long>(std::ceil(t / h - 1e-12));
  const Real hh = t / static_cast<Real>(n);
  if (used_h) *used_h = hh;
  const std::vector<Mat> steps = step_exponentials(sys, hh);
  PointCloud cur = m0;
  for (long k = 0; k < n; ++k) cur = apply_step(cur, steps);
  return cur;
}

Real hausdorff(const PointCloud& a, const PointCloud& b) {
  a.validate();
  b.validate();
  if (a.dim != b.dim) throw invalid_input_error("hausdorff: dimension mismatch");
  if (a.size() == 0 || b.size() == 0) throw invalid_input_error("hausdorff: empty cloud");
  const Real cell = std::max(std::max(a.epsilon, b.epsilon), 1e-12);
  return std::max(directed_hausdorff(a.points, b.points, cell),
                  directed_hausdorff(b.points, a.points, cell));
}

Real distance_to_cloud(const PointCloud& m, const Vec& q) {
  m.validate();
  if (m.size() == 0) return kInf;
  const GridIndex index(m.points, std::max(m.epsilon, 1e-12));
  return std::sqrt(index.nearest_sq(q));
}

PointCloud scale_cloud(const PointCloud& m, Real lambda) {
  PointCloud out = m;
  out.points *= lambda;
  out.epsilon = m.epsilon * std::max(std::abs(lambda), 1e-6);
  return out;
}

Real cloud_diameter(const PointCloud& m) {
  if (m.size() == 0) return 0.0;
  // Max pairwise distance over support candidates; exact enough for budgets.
  const Mat ext = extreme_candidates(m, m.dim == 2 ? 360 : 512);
  Real best = 0.0;
  for (long i = 0; i < ext.cols(); ++i)
    for (long j = i + 1; j < ext.cols(); ++j)
      best = std::max(best, (ext.col(i) - ext.col(j)).norm());
  return best;
}

bool cloud_connected(const PointCloud& m) {
  m.validate();
  const long n = m.size();
  if (n <= 1) return true;
  const Real radius = 2.0 * std::sqrt(static_cast<Real>(m.dim)) * m.epsilon;
  const Real r2 = radius * radius;

  std::vector<long> parent(static_cast<size_t>(n));
  for (long i = 0; i < n; ++i) parent[static_cast<size_t>(i)] = i;
  std::function<long(long)> find = [&](long i) {
    while (parent[static_cast<size_t>(i)] != i) {
      parent[static_cast<size_t>(i)] = parent[static_cast<size_t>(parent[static_cast<size_t>(i)])];
      i = parent[static_cast<size_t>(i)];
    }
    return i;
  };
  auto unite = [&](long a, long b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[static_cast<size_t>(b)] = a;
  };

  std::unordered_map<CellKey, std::vector<long>, CellKeyHash> buckets;
  for (long i = 0; i < n; ++i) buckets[cell_of(m.points.col(i), radius, m.dim)].push_back(i);
  for (long i = 0; i < n; ++i) {
    const CellKey base = cell_of(m.points.col(i), radius, m.dim);
    std::array<std::int64_t, kMaxDim> off{};
    std::function<void(int)> visit = [&](int axis) {
      if (axis == m.dim) {
        CellKey k;
        k.dim = m.dim;
        for (int q = 0; q < m.dim; ++q)
          k.c[static_cast<size_t>(q)] = base.c[static_cast<size_t>(q)] + off[static_cast<size_t>(q)];
        const auto it = buckets.find(k);
        if (it == buckets.end()) return;
        for (const long j : it->second)
          if (j != i && (m.points.col(i) - m.points.col(j)).squaredNorm() <= r2) unite(i, j);
        return;
      }
      for (std::int64_t o = -1; o <= 1; ++o) {
        off[static_cast<size_t>(axis)] = o;
        visit(axis + 1);
      }
    };
    visit(0);
  }
  const long root = find(0);
  for (long i = 1; i < n; ++i)
    if (find(i) != root) return false;
  return true;
}

OmegaResult omega_limit(const PointCloud& seed, const ControlSet& sys_normed, Real h,
                        int window, long max_steps, Real tol) {
  seed.validate();
  sys_normed.validate();
  if (window < 2) throw invalid_input_error("omega_limit: window must be >= 2");
  if (!(h > 0.0)) throw invalid_input_error("omega_limit: h must be positive");
  const std::vector<Mat> steps = step_exponentials(sys_normed, h);

  std::deque<PointCloud> ring;
  PointCloud cur = seed;
  PointCloud prev_union;
  bool have_prev = false;
  OmegaResult res;
  res.final_delta = kInf;

  auto window_union = [&]() {
    long total = 0;
    for (const PointCloud& c : ring) total += c.size();
    Mat all(seed.dim, total);
    long at = 0;
    for (const PointCloud& c : ring) {
      all.middleCols(at, c.size()) = c.points;
      at += c.size();
    }
    return snap_prune(seed.dim, seed.epsilon, all, "omega_limit window union");
  };

  for (long step = 1; step <= max_steps; ++step) {
    cur = apply_step(cur, steps);
    ring.push_back(cur);
    if (static_cast<int>(ring.size()) > window) ring.pop_front();
    res.steps = step;
    if (static_cast<int>(ring.size()) == window && step % window == 0) {
      PointCloud u = window_union();
      if (have_prev) {
        res.final_delta = hausdorff(prev_union, u);
        if (res.final_delta <= tol) {
          res.cloud = std::move(u);
          res.converged = true;
          return res;
        }
      }
      prev_union = std::move(u);
      have_prev = true;
    }
  }
  res.cloud = have_prev ? prev_union : window_union();
  res.converged = false;
  res.cloud.metadata = "omega_limit non-stabilized partial result";
  return res;
}

PointCloud ivy(const PointCloud& stem, const ControlSet& sys, Real h, Real t_max) {
  stem.validate();
  sys.validate();
  if (stem.size() == 0) throw invalid_input_error("ivy: stem must be nonempty");
  if (!(t_max > 0.0) || !(h > 0.0)) throw invalid_input_error("ivy: h and t_max must be positive");
  const std::vector<Mat> steps = step_exponentials(sys, h);
  const long n = static_cast<long>(std::ceil(t_max / h - 1e-12));
  PointCloud cur = stem;
  PointCloud acc = stem;
  for (long k = 0; k < n; ++k) {
    cur = apply_step(cur, steps);
    Mat merged(stem.dim, acc.size() + cur.size());
    merged.leftCols(acc.size()) = acc.points;
    merged.rightCols(cur.size()) = cur.points;
    acc = snap_prune(stem.dim, stem.epsilon, merged, "ivy union");
  }
  return acc;
}

std::vector<bool> vertex_kernel_check(const Mat& vertices, const ControlSet& sys, Real tol) {
  sys.validate();
  if (vertices.cols() == 0) throw invalid_input_error("vertex_kernel_check: no vertices");
  if (vertices.rows() != sys.dim)
    throw invalid_input_error("vertex_kernel_check: dimension mismatch");
  std::vector<bool> out;
  for (long v = 0; v < vertices.cols(); ++v) {
    if (vertices.col(v).norm() == 0.0)
      throw invalid_input_error("vertex_kernel_check: vertices must be nonzero");
    Mat images(sys.dim, sys.count());
    for (int j = 0; j < sys.count(); ++j) images.col(j) = sys.generators[j] * vertices.col(v);
    out.push_back(point_in_hull(Vec::Zero(sys.dim), images, tol));
  }
  return out;
}

Real convexity_defect(const PointCloud& m) {
  m.validate();
  if (m.size() <= 1) return 0.0;
  const int d = m.dim;
  const Vec lo = m.points.rowwise().minCoeff();
  const Vec hi = m.points.rowwise().maxCoeff();
  const Real span = (hi - lo).maxCoeff();
  if (span <= 0.0) return 0.0;

  const Real per_axis_cap = std::floor(std::pow(3.0e5, 1.0 / d));
  const Real res = std::max(m.epsilon, span / per_axis_cap);
  const GridIndex to_cloud(m.points, res);

  Real defect = 0.0;
  auto consider = [&](const Vec& q) {
    defect = std::max(defect, std::sqrt(to_cloud.nearest_sq(q)));
  };

  if (d == 2) {
    const std::vector<Vec> hull = hull_2d_cols(m.points);
    if (hull.size() >= 3) {
      for (Real x = lo[0]; x <= hi[0] + 0.5 * res; x += res)
        for (Real y = lo[1]; y <= hi[1] + 0.5 * res; y += res) {
          Vec q(2);
          q << x, y;
          if (inside_polygon(hull, q, 1e-12)) consider(q);
        }
    }
    // Edge sampling covers degenerate (collinear) hulls and polygon edges.
    const size_t nh = hull.size();
    for (size_t i = 0; i < nh; ++i)
      for (size_t j = i + 1; j < nh; ++j) {
        const Vec a = hull[i], b = hull[j];
        const Real len = (b - a).norm();
        const long steps = std::max<long>(1, static_cast<long>(std::ceil(len / res)));
        for (long k = 0; k <= steps; ++k)
          consider(a + (b - a) * (static_cast<Real>(k) / static_cast<Real>(steps)));
      }
  } else {
    const Mat ext = extreme_candidates(m, 642);
    std::vector<Real> coord(static_cast<size_t>(d));
    std::function<void(int)> visit = [&](int axis) {
      if (axis == d) {
        Vec q(d);
        for (int i = 0; i < d; ++i) q[i] = coord[static_cast<size_t>(i)];
        if (hull_distance(q, ext) <= 1e-9) consider(q);
        return;
      }
      for (Real x = lo[axis]; x <= hi[axis] + 0.5 * res; x += res) {
        coord[static_cast<size_t>(axis)] = x;
        visit(axis + 1);
      }
    };
    visit(0);
    for (long i = 0; i < ext.cols(); ++i)
      for (long j = i + 1; j < ext.cols() && j < i + 64; ++j) {
        const Vec a = ext.col(i), b = ext.col(j);
        const Real len = (b - a).norm();
        const long steps = std::max<long>(1, static_cast<long>(std::ceil(len / res)));
        for (long k = 0; k <= steps; ++k)
          consider(a + (b - a) * (static_cast<Real>(k) / static_cast<Real>(steps)));
      }
  }
  return defect;
}

Real VerifyReport::max_error() const {
  Real worst = 0.0;
  for (const Real e : hausdorff_errors) worst = std::max(worst, e);
  return worst;
}

VerifyReport eigenset_verify(const PointCloud& m, const ControlSet& sys, Real alpha,
                             const std::vector<Real>& times, Real h, Real tol,
                             const std::optional<Mat>& vertices) {
  m.validate();
  sys.validate();
  if (times.empty()) throw invalid_input_error("eigenset_verify: times must be nonempty");
  for (const Real t : times)
    if (!(t > 0.0)) throw invalid_input_error("eigenset_verify: times must be positive");

  VerifyReport rep;
  rep.alpha = alpha;
  rep.tol = tol;
  rep.times = times;
  std::sort(rep.times.begin(), rep.times.end());

  // Definition excludes the one-point set {0}.
  const Real extent = m.points.colwise().norm().maxCoeff();
  const bool degenerate = extent <= 2.0 * m.epsilon;

  const std::vector<Mat> steps = step_exponentials(sys, h);
  PointCloud cur = m;
  Real t_cur = 0.0;
  for (const Real t : rep.times) {
    const long n = static_cast<long>(std::llround((t - t_cur) / h));
    for (long k = 0; k < n; ++k) cur = apply_step(cur, steps);
    t_cur += static_cast<Real>(n) * h;
    const PointCloud target = scale_cloud(m, std::exp(alpha * t_cur));
    rep.hausdorff_errors.push_back(hausdorff(cur, target));
  }

  rep.origin_distance = distance_to_cloud(m, Vec::Zero(m.dim));
  rep.contains_origin = rep.origin_distance <= 2.0 * m.epsilon;
  rep.connected = cloud_connected(m);
  rep.convexity_defect = eigenset::convexity_defect(m);
  if (vertices) rep.vertex_kernel = vertex_kernel_check(*vertices, sys, tol);

  rep.pass = !degenerate && rep.max_error() <= tol;
  return rep;
}

PointCloud grid_fill(const Vec& lo, const Vec& hi, Real eps,
                     const std::function<bool(const Vec&)>& inside, std::string metadata) {
  if (!(eps > 0.0)) throw invalid_input_error("grid_fill: epsilon must be positive");
  const int d = static_cast<int>(lo.size());
  std::vector<Vec> pts;
  std::vector<std::int64_t> idx(static_cast<size_t>(d));
  std::function<void(int)> visit = [&](int axis) {
    if (axis == d) {
      Vec c(d);
      for (int i = 0; i < d; ++i)
        c[i] = (static_cast<Real>(idx[static_cast<size_t>(i)]) + 0.5) * eps;
      if (inside(c)) pts.push_back(c);
      return;
    }
    const std::int64_t k0 = static_cast<std::int64_t>(std::floor(lo[axis] / eps));
    const std::int64_t k1 = static_cast<std::int64_t>(std::floor(hi[axis] / eps));
    for (std::int64_t k = k0; k <= k1; ++k) {
      idx[static_cast<size_t>(axis)] = k;
      visit(axis + 1);
    }
  };
  visit(0);
  Mat points(d, static_cast<long>(pts.size()));
  for (size_t i = 0; i < pts.size(); ++i) points.col(static_cast<long>(i)) = pts[i];
  PointCloud out;
  out.dim = d;
  out.epsilon = eps;
  out.points = points;
  out.metadata = std::move(metadata);
  return out;
}

}  // namespace eigenset
