#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include <nlohmann/json.hpp>

#include "gcv/cluster.hpp"
#include "gcv/error.hpp"
#include "gcv/linalg.hpp"
#include "gcv/pointcloud.hpp"
#include "gcv/rng.hpp"

namespace gcv {

// ---------------------------------------------------------------------------
// Hausdorff distance and z-neighborhoods
// ---------------------------------------------------------------------------

/// Exact brute-force Hausdorff distance: max of the two directed sup-inf
/// distances. By convention the distance is +infinity when either cloud is
/// empty (an infinite supremum).
inline double hausdorff(const PointCloud& X, const PointCloud& Y) {
  if (X.dim != Y.dim && !X.empty() && !Y.empty())
    throw DimensionError("hausdorff: clouds have different dimensions");
  if (X.empty() || Y.empty()) return std::numeric_limits<double>::infinity();
  auto directed = [](const PointCloud& A, const PointCloud& B) {
    double sup = 0.0;
    for (const auto& a : A.points) {
      double inf = std::numeric_limits<double>::infinity();
      for (const auto& b : B.points) inf = std::min(inf, dist(a, b));
      sup = std::max(sup, inf);
    }
    return sup;
  };
  return std::max(directed(X, Y), directed(Y, X));
}

/// Membership in the open z-neighborhood V_z(Y) = {x : d(x, Y) < z}.
/// Empty Y gives false (the distance to the empty set is infinite).
inline bool in_z_neighborhood(const Vec& x, const PointCloud& Y, double z) {
  if (!(z > 0)) throw NumericError("in_z_neighborhood: z must be positive");
  for (const auto& y : Y.points) {
    if (x.size() != y.size())
      throw DimensionError("in_z_neighborhood: point/cloud dimension mismatch");
    if (dist(x, y) < z) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Random orthogonal projections
// ---------------------------------------------------------------------------

/// k x n matrix with orthonormal rows, obtained by orthonormalizing a seeded
/// Gaussian matrix. Deterministic per seed; a degenerate draw is retried
/// with an incremented sub-seed.
inline Matrix random_projection(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 1 || k > n)
    throw DimensionError("random_projection: need 1 <= k <= n");
  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng(substream_seed(seed, 0x70726F6Aull /* "proj" */, attempt));
    Matrix P(k, n);
    for (auto& x : P.a) x = rng.normal();
    if (orthonormalize_rows(P, 1e-8) == k) return P;
  }
}

// ---------------------------------------------------------------------------
// Thinness of finite clouds
// ---------------------------------------------------------------------------

/// Empirical thinness of a finite cloud at fattening resolution delta: for
/// each seeded random projection onto a k-dimensional subspace, the largest
/// radius of a ball entirely covered by the delta-fattening of the projected
/// cloud. A finite cloud contains no ball, so every verdict is relative to
/// delta, which the report carries.
struct ThinnessReport {
  std::size_t k = 0;
  double delta = 0.0;
  std::size_t n_projections = 0;
  std::uint64_t seed = 0;
  std::vector<double> per_projection_radius;
  double score = 0.0;       // median of the per-projection radii
  double max_radius = 0.0;

  /// Empirically z-thin at resolution delta.
  bool verdict(double z) const { return score < z; }
};

namespace detail {

/// Odometer over the integer box [lo, hi] (inclusive); calls f(index).
template <class F>
void for_each_index(const std::vector<long>& lo, const std::vector<long>& hi, F&& f) {
  std::vector<long> idx = lo;
  const std::size_t k = lo.size();
  while (true) {
    f(idx);
    std::size_t d = 0;
    while (d < k && ++idx[d] > hi[d]) {
      idx[d] = lo[d];
      ++d;
    }
    if (d == k) break;
  }
}

/// Same, but stops as soon as f returns false. Returns false if stopped.
template <class F>
bool for_each_index_while(const std::vector<long>& lo, const std::vector<long>& hi, F&& f) {
  std::vector<long> idx = lo;
  const std::size_t k = lo.size();
  while (true) {
    if (!f(idx)) return false;
    std::size_t d = 0;
    while (d < k && ++idx[d] > hi[d]) {
      idx[d] = lo[d];
      ++d;
    }
    if (d == k) break;
  }
  return true;
}

/// Largest covered-ball radius of the delta-fattened point list in R^k,
/// found on lattices anchored at the bounding box: ball centers on a grid of
/// spacing delta, coverage tested on a sub-grid of spacing delta/2, radius
/// resolved by binary search to delta/2.
inline double max_inscribed_radius(const std::vector<Vec>& pts, double delta) {
  if (pts.empty()) return 0.0;
  const std::size_t k = pts.front().size();
  const double half = delta / 2.0;

  Vec lo(k, std::numeric_limits<double>::infinity());
  Vec hi(k, -std::numeric_limits<double>::infinity());
  for (const auto& p : pts)
    for (std::size_t d = 0; d < k; ++d) {
      lo[d] = std::min(lo[d], p[d]);
      hi[d] = std::max(hi[d], p[d]);
    }

  // A covered ball lies inside bbox (+) delta; keep one uncovered ring
  // beyond that so the radius search self-limits.
  const long margin_cells = static_cast<long>(std::ceil(delta / half)) + 2;
  std::vector<long> cell_lo(k), cell_hi(k);
  double total_cells = 1.0;
  for (std::size_t d = 0; d < k; ++d) {
    cell_lo[d] = -margin_cells;
    cell_hi[d] = static_cast<long>(std::floor((hi[d] - lo[d]) / half + 1e-9)) + margin_cells;
    total_cells *= static_cast<double>(cell_hi[d] - cell_lo[d] + 1);
  }
  if (total_cells > 6.4e7)
    throw NumericError("thinness_score: delta too fine for the projected extent");

  // Buckets of cloud points at cell size delta/2 for distance queries.
  std::map<std::vector<long>, std::vector<std::size_t>> buckets;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::vector<long> key(k);
    for (std::size_t d = 0; d < k; ++d)
      key[d] = static_cast<long>(std::floor((pts[i][d] - lo[d]) / half));
    buckets[key].push_back(i);
  }

  std::vector<long> strides(k, 1);
  for (std::size_t d = 1; d < k; ++d)
    strides[d] = strides[d - 1] * (cell_hi[d - 1] - cell_lo[d - 1] + 1);
  auto flat = [&](const std::vector<long>& idx) {
    long f = 0;
    for (std::size_t d = 0; d < k; ++d) f += (idx[d] - cell_lo[d]) * strides[d];
    return static_cast<std::size_t>(f);
  };

  // covered[p] = (distance from lattice point p to the cloud) < delta.
  std::vector<std::uint8_t> covered(static_cast<std::size_t>(total_cells), 0);
  const long reach = static_cast<long>(std::ceil(delta / half)) + 1;
  for_each_index(cell_lo, cell_hi, [&](const std::vector<long>& idx) {
    Vec p(k);
    for (std::size_t d = 0; d < k; ++d) p[d] = lo[d] + static_cast<double>(idx[d]) * half;
    std::vector<long> blo(k), bhi(k);
    for (std::size_t d = 0; d < k; ++d) {
      blo[d] = idx[d] - reach;
      bhi[d] = idx[d] + reach;
    }
    bool is_covered = !for_each_index_while(blo, bhi, [&](const std::vector<long>& bidx) {
      auto it = buckets.find(bidx);
      if (it == buckets.end()) return true;
      for (std::size_t i : it->second)
        if (dist(p, pts[i]) < delta) return false;
      return true;
    });
    covered[flat(idx)] = is_covered ? 1 : 0;
  });

  auto in_range = [&](const std::vector<long>& idx) {
    for (std::size_t d = 0; d < k; ++d)
      if (idx[d] < cell_lo[d] || idx[d] > cell_hi[d]) return false;
    return true;
  };

  // Every sub-grid point of B(center, r) must be covered; points beyond the
  // stored lattice are uncovered by construction.
  auto ball_covered = [&](const std::vector<long>& center_idx, double r) {
    const long rb = static_cast<long>(std::floor(r / half));
    const double r2_cells = (r / half) * (r / half);
    std::vector<long> blo(k), bhi(k);
    for (std::size_t d = 0; d < k; ++d) {
      blo[d] = center_idx[d] - rb;
      bhi[d] = center_idx[d] + rb;
    }
    return for_each_index_while(blo, bhi, [&](const std::vector<long>& idx) {
      double o2 = 0.0;
      for (std::size_t d = 0; d < k; ++d) {
        double o = static_cast<double>(idx[d] - center_idx[d]);
        o2 += o * o;
      }
      if (o2 > r2_cells) return true;  // outside the ball
      return in_range(idx) && covered[flat(idx)] != 0;
    });
  };

  double diag2 = 0.0;
  for (std::size_t d = 0; d < k; ++d) diag2 += (hi[d] - lo[d]) * (hi[d] - lo[d]);
  const double r_cap = 0.5 * std::sqrt(diag2) + 2.0 * delta;

  // Candidate centers on the coarse grid (spacing delta = 2 sub-cells).
  std::vector<long> center_lo(k, 0), center_hi(k);
  for (std::size_t d = 0; d < k; ++d)
    center_hi[d] = static_cast<long>(std::floor((hi[d] - lo[d]) / delta + 1e-9));

  double best = 0.0;
  for_each_index(center_lo, center_hi, [&](const std::vector<long>& cgrid) {
    std::vector<long> center_idx(k);
    for (std::size_t d = 0; d < k; ++d) center_idx[d] = 2 * cgrid[d];
    if (!covered[flat(center_idx)]) return;
    // A center only matters if it can beat the incumbent.
    if (best > 0.0 && !ball_covered(center_idx, best)) return;
    double lo_r = best, hi_r = r_cap;
    if (ball_covered(center_idx, hi_r)) {
      best = hi_r;
      return;
    }
    while (hi_r - lo_r > half) {
      double mid = 0.5 * (lo_r + hi_r);
      if (ball_covered(center_idx, mid))
        lo_r = mid;
      else
        hi_r = mid;
    }
    best = std::max(best, lo_r);
  });
  return best;
}

inline std::size_t count_distinct(const std::vector<Vec>& pts) {
  std::set<Vec> s(pts.begin(), pts.end());
  return s.size();
}

}  // namespace detail

inline ThinnessReport thinness_score(const PointCloud& X, std::size_t k,
                                     double delta, std::size_t n_projections,
                                     std::uint64_t seed) {
  if (!(delta > 0)) throw NumericError("thinness_score: delta must be positive");
  if (n_projections < 1) throw NumericError("thinness_score: need >= 1 projection");
  ThinnessReport report;
  report.k = k;
  report.delta = delta;
  report.n_projections = n_projections;
  report.seed = seed;
  report.per_projection_radius.assign(n_projections, 0.0);
  // A cloud with fewer than two distinct points contains no ball at any
  // resolution; score 0, mirroring dim(empty) = -1.
  if (detail::count_distinct(X.points) < 2) {
    report.score = 0.0;
    report.max_radius = 0.0;
    return report;
  }
  if (k < 1 || k > X.dim)
    throw DimensionError("thinness_score: need 1 <= k <= cloud dimension");

  for (std::size_t p = 0; p < n_projections; ++p) {
    Matrix P = random_projection(X.dim, k, substream_seed(seed, 0x7468696Eull /* "thin" */, p));
    std::vector<Vec> projected;
    projected.reserve(X.size());
    for (const auto& x : X.points) {
      Vec y(k, 0.0);
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < X.dim; ++j) y[i] += P(i, j) * x[j];
      projected.push_back(std::move(y));
    }
    report.per_projection_radius[p] = detail::max_inscribed_radius(projected, delta);
  }

  std::vector<double> sorted = report.per_projection_radius;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  report.score = (m % 2 == 1) ? sorted[m / 2]
                              : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  report.max_radius = sorted.back();
  return report;
}

// ---------------------------------------------------------------------------
// Box-counting dimension
// ---------------------------------------------------------------------------

/// Least-squares slope of log N(eps) against log(1/eps), where N(eps) is the
/// number of occupied boxes of side eps. Numeric proxy for set dimension; a
/// single point gives 0.
inline double box_dimension(const PointCloud& X, const std::vector<double>& scales) {
  if (X.empty()) throw DimensionError("box_dimension: empty cloud");
  if (scales.size() < 2) throw NumericError("box_dimension: need at least 2 scales");
  for (double s : scales)
    if (!(s > 0)) throw NumericError("box_dimension: scales must be positive");

  Vec lo(X.dim, std::numeric_limits<double>::infinity());
  for (const auto& p : X.points)
    for (std::size_t d = 0; d < X.dim; ++d) lo[d] = std::min(lo[d], p[d]);

  std::vector<double> xs, ys;
  for (double eps : scales) {
    std::set<std::vector<long>> boxes;
    for (const auto& p : X.points) {
      std::vector<long> key(X.dim);
      for (std::size_t d = 0; d < X.dim; ++d)
        key[d] = static_cast<long>(std::floor((p[d] - lo[d]) / eps));
      boxes.insert(std::move(key));
    }
    xs.push_back(std::log(1.0 / eps));
    ys.push_back(std::log(static_cast<double>(boxes.size())));
  }

  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(xs.size());
  my /= static_cast<double>(xs.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    num += (xs[i] - mx) * (ys[i] - my);
    den += (xs[i] - mx) * (xs[i] - mx);
  }
  if (den == 0.0) throw NumericError("box_dimension: scales must be distinct");
  return num / den;
}

// ---------------------------------------------------------------------------
// Family sweeps
// ---------------------------------------------------------------------------

struct FiberEntry {
  double t = 0.0;
  ThinnessReport thin;
  std::optional<double> z;        // z_of_t entry when supplied
  std::optional<bool> verdict;    // thin.verdict(z)
};

struct FamilySweepReport {
  std::vector<FiberEntry> fibers;
  ThinnessReport stacked;                 // cloud of (x, t) in R^{d+1}
  std::size_t limit_fiber_count = 0;      // fibers in the lowest t quartile
  std::size_t limit_cluster_count = 0;
  std::vector<double> limit_scales;
  double limit_box_dimension = 0.0;       // of the cluster representatives
};

/// Per-fiber thinness, thinness of the stacked cloud, and a box-dimension
/// estimate of the t -> 0 limit set (cluster representatives of the
/// lowest-quartile fibers).
inline FamilySweepReport family_sweep(
    const std::vector<std::pair<double, PointCloud>>& family, std::size_t k,
    double delta, std::size_t n_projections, std::uint64_t seed,
    const std::vector<double>* z_of_t = nullptr) {
  if (family.empty()) throw DimensionError("family_sweep: empty family");
  for (std::size_t i = 0; i < family.size(); ++i)
    for (std::size_t j = i + 1; j < family.size(); ++j)
      if (family[i].first == family[j].first)
        throw Error("family_sweep: duplicate fiber parameter t");
  if (z_of_t && z_of_t->size() != family.size())
    throw DimensionError("family_sweep: z_of_t length must match the family");

  const std::size_t d = family.front().second.dim;
  for (const auto& [t, cloud] : family)
    if (cloud.dim != d)
      throw DimensionError("family_sweep: fibers have mixed dimensions");

  FamilySweepReport report;
  for (std::size_t i = 0; i < family.size(); ++i) {
    FiberEntry entry;
    entry.t = family[i].first;
    entry.thin = thinness_score(family[i].second, k, delta, n_projections,
                                substream_seed(seed, 0xF1BE7ull, i));
    if (z_of_t) {
      entry.z = (*z_of_t)[i];
      entry.verdict = entry.thin.verdict(*entry.z);
    }
    report.fibers.push_back(std::move(entry));
  }

  PointCloud stacked;
  stacked.dim = d + 1;
  for (const auto& [t, cloud] : family)
    for (const auto& x : cloud.points) {
      Vec y = x;
      y.push_back(t);
      stacked.points.push_back(std::move(y));
    }
  report.stacked = thinness_score(stacked, k, delta, n_projections,
                                  substream_seed(seed, 0x57ACull));

  // Limit-set estimate: union of the lowest-quartile fibers, clustered; the
  // representatives stand in for the t -> 0 limit.
  std::vector<double> ts;
  for (const auto& [t, cloud] : family) ts.push_back(t);
  std::sort(ts.begin(), ts.end());
  const std::size_t qcount = (ts.size() + 3) / 4;
  const double t_threshold = ts[qcount - 1];

  std::vector<Vec> limit_points;
  for (const auto& [t, cloud] : family)
    if (t <= t_threshold) {
      ++report.limit_fiber_count;
      for (const auto& x : cloud.points) limit_points.push_back(x);
    }
  std::sort(limit_points.begin(), limit_points.end());

  auto clusters = single_linkage(limit_points, cluster_link_threshold(limit_points));
  report.limit_cluster_count = clusters.size();
  PointCloud reps;
  reps.dim = d;
  for (const auto& c : clusters) reps.points.push_back(c.center);

  double diam = 0.0;
  for (std::size_t i = 0; i < reps.points.size(); ++i)
    for (std::size_t j = i + 1; j < reps.points.size(); ++j)
      diam = std::max(diam, dist(reps.points[i], reps.points[j]));
  if (reps.points.size() < 2 || diam == 0.0) {
    report.limit_box_dimension = 0.0;
  } else {
    report.limit_scales = {diam / 4.0, diam / 8.0, diam / 16.0, diam / 32.0};
    report.limit_box_dimension = box_dimension(reps, report.limit_scales);
  }
  return report;
}

// ---------------------------------------------------------------------------
// JSON serialization
// ---------------------------------------------------------------------------

inline void to_json(nlohmann::ordered_json& j, const ThinnessReport& r) {
  j = nlohmann::ordered_json{{"k", r.k},
                             {"delta", r.delta},
                             {"n_projections", r.n_projections},
                             {"seed", r.seed},
                             {"per_projection_radius", r.per_projection_radius},
                             {"score", r.score},
                             {"max_radius", r.max_radius}};
}

inline void to_json(nlohmann::ordered_json& j, const FamilySweepReport& r) {
  j = nlohmann::ordered_json::object();
  j["fibers"] = nlohmann::ordered_json::array();
  for (const auto& f : r.fibers) {
    nlohmann::ordered_json e;
    e["t"] = f.t;
    e["thin"] = f.thin;
    if (f.z) {
      e["z"] = *f.z;
      e["verdict"] = *f.verdict;
    }
    j["fibers"].push_back(std::move(e));
  }
  j["stacked"] = r.stacked;
  j["limit"] = {{"fiber_count", r.limit_fiber_count},
                {"cluster_count", r.limit_cluster_count},
                {"scales", r.limit_scales},
                {"box_dimension", r.limit_box_dimension}};
}

}  // namespace gcv
