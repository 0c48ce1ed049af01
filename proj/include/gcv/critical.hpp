#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "gcv/cluster.hpp"
#include "gcv/error.hpp"
#include "gcv/expr.hpp"
#include "gcv/linalg.hpp"
#include "gcv/neldermead.hpp"
#include "gcv/pointcloud.hpp"
#include "gcv/puiseux.hpp"
#include "gcv/rabier.hpp"
#include "gcv/rng.hpp"
#include "gcv/thin.hpp"

namespace gcv {

// ---------------------------------------------------------------------------
// Domains and schedules
// ---------------------------------------------------------------------------

/// Open set X = box intersect {g_j > 0 for all j}. Constraints are optional;
/// the box keeps every search bounded.
struct Domain {
  std::vector<std::array<double, 2>> box;       // [lo, hi] per variable
  std::vector<ExprPtr> constraints;             // g_j(x) > 0
  std::vector<std::string> constraint_text;     // echo for reports

  std::size_t dim() const { return box.size(); }

  void validate() const {
    if (box.empty()) throw DimensionError("domain: empty box");
    for (const auto& [lo, hi] : box)
      if (!(lo < hi)) throw DimensionError("domain: empty domain (box side with lo >= hi)");
  }

  bool in_box(std::span<const double> x) const {
    for (std::size_t j = 0; j < box.size(); ++j)
      if (x[j] < box[j][0] || x[j] > box[j][1]) return false;
    return true;
  }

  bool contains(std::span<const double> x) const {
    if (!in_box(x)) return false;
    for (const auto& g : constraints)
      if (!(eval_expr(*g, x) > 0.0)) return false;
    return true;
  }

  double box_violation(std::span<const double> x) const {
    double v = 0.0;
    for (std::size_t j = 0; j < box.size(); ++j) {
      v += std::max(0.0, box[j][0] - x[j]);
      v += std::max(0.0, x[j] - box[j][1]);
    }
    return v;
  }
};

/// Sampling effort for the bounded searches.
struct SampleBudget {
  std::size_t samples = 4096;        // grid + random probes
  std::size_t minimizer_starts = 48; // multi-start simplex runs
  int minimizer_iters = 200;         // iterations per run
};

/// Scale schedule for the asymptotic estimators: radii l (increasing) for
/// K-infinity, shell widths t (decreasing) for K1. `i` is the exponent
/// parameter of the retention thresholds l^-(1+1/i) and t^(1/i).
struct Schedule {
  int i = 2;
  std::vector<double> scales;
  std::size_t samples_per_scale = 4096;
  std::uint64_t seed = 0;
  std::size_t minimizer_starts = 48;
  int minimizer_iters = 200;
  // Retained witnesses per scale are capped (lowest nu kept) so that
  // clustering stays tractable when the threshold region is large.
  std::size_t witness_cap = 512;

  void validate(bool increasing) const {
    if (i < 1) throw NumericError("schedule: i must be a positive integer");
    if (scales.empty()) throw NumericError("schedule: empty scale list");
    if (samples_per_scale < 1) throw NumericError("schedule: samples_per_scale must be positive");
    for (double s : scales)
      if (!(s > 0)) throw NumericError("schedule: scales must be positive");
    for (std::size_t j = 1; j < scales.size(); ++j) {
      if (increasing && !(scales[j] > scales[j - 1]))
        throw NumericError("schedule: scales must be strictly increasing");
      if (!increasing && !(scales[j] < scales[j - 1]))
        throw NumericError("schedule: scales must be strictly decreasing");
    }
  }
};

// ---------------------------------------------------------------------------
// Estimates
// ---------------------------------------------------------------------------

enum class CriticalKind { K0, KInf, K1 };

inline const char* to_string(CriticalKind k) {
  switch (k) {
    case CriticalKind::K0: return "K0";
    case CriticalKind::KInf: return "Kinf";
    case CriticalKind::K1: return "K1";
  }
  return "?";
}

struct Witness {
  Vec x;
  Vec value;      // f(x)
  double nu;      // nu(d_x f)
  double scale;   // l or t of the retaining scale; 0 for K0
};

struct ValueCluster {
  Vec center;
  double radius = 0.0;
  std::size_t support = 0;
  std::vector<Witness> witnesses;
};

struct CriticalValueEstimate {
  CriticalKind kind = CriticalKind::K0;
  std::vector<ValueCluster> clusters;
  std::vector<double> skipped_scales;  // K1 shells that produced no sample
  nlohmann::ordered_json parameters = nlohmann::ordered_json::object();
};

// ---------------------------------------------------------------------------
// nu on Jacobians
// ---------------------------------------------------------------------------

/// Caches the symbolic Jacobian of a map for repeated nu queries.
class MapEvaluator {
 public:
  explicit MapEvaluator(const PolynomialMap& map)
      : map_(map), jac_(differentiate(map)) {}

  const PolynomialMap& map() const { return map_; }

  Vec value(std::span<const double> x) const { return eval_map(map_, x); }

  double nu(std::span<const double> x) const {
    return gcv::nu(eval_jacobian_matrix(jac_, x));
  }

  double kos(std::span<const double> x) const {
    return (1.0 + norm(x)) * nu(x);
  }

 private:
  PolynomialMap map_;
  JacobianMap jac_;
};

inline double nu_at(const PolynomialMap& map, std::span<const double> x) {
  if (x.size() != map.n())
    throw DimensionError("nu_at: point has length " + std::to_string(x.size()) +
                         ", expected " + std::to_string(map.n()));
  return MapEvaluator(map).nu(x);
}

/// The Kurdyka-Orro-Simon weight (1 + |x|) * nu(d_x f) whose decay along a
/// sequence detects generalized critical values.
inline double kos_weight(const PolynomialMap& map, std::span<const double> x) {
  if (x.size() != map.n())
    throw DimensionError("kos_weight: point has length " + std::to_string(x.size()) +
                         ", expected " + std::to_string(map.n()));
  return (1.0 + norm(x)) * nu_at(map, x);
}

// ---------------------------------------------------------------------------
// Shared sampling helpers
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr std::uint64_t kStreamFind = 0x66696E64ull;   // "find"
inline constexpr std::uint64_t kStreamK0 = 0x6B30ull;         // "k0"
inline constexpr std::uint64_t kStreamKInf = 0x6B696E66ull;   // "kinf"
inline constexpr std::uint64_t kStreamK1 = 0x6B31ull;         // "k1"
inline constexpr std::uint64_t kStreamSard = 0x73617264ull;   // "sard"
inline constexpr std::uint64_t kBatchSize = 1024;

/// Box probes: a quasi-uniform cell-centered grid taking about half the
/// budget, the rest uniform random in batches with per-batch sub-streams.
inline std::vector<Vec> sample_box(const Domain& domain, std::size_t samples,
                                   std::uint64_t stream, std::uint64_t seed) {
  const std::size_t n = domain.dim();
  std::vector<Vec> out;
  out.reserve(samples);

  std::size_t grid_target = samples / 2;
  std::size_t per_axis = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(
             std::pow(static_cast<double>(grid_target), 1.0 / static_cast<double>(n)))));
  std::size_t grid_total = 1;
  for (std::size_t j = 0; j < n; ++j) grid_total *= per_axis;

  std::vector<std::size_t> idx(n, 0);
  for (std::size_t c = 0; c < grid_total; ++c) {
    Vec x(n);
    for (std::size_t j = 0; j < n; ++j) {
      double span = domain.box[j][1] - domain.box[j][0];
      x[j] = domain.box[j][0] +
             (static_cast<double>(idx[j]) + 0.5) * span / static_cast<double>(per_axis);
    }
    out.push_back(std::move(x));
    std::size_t d = 0;
    while (d < n && ++idx[d] == per_axis) idx[d++] = 0;
  }

  std::size_t remaining = samples > grid_total ? samples - grid_total : 0;
  std::size_t batch = 0;
  while (remaining > 0) {
    Rng rng(substream_seed(seed, stream, 1 + batch));
    std::size_t count = std::min(remaining, kBatchSize);
    for (std::size_t c = 0; c < count; ++c) {
      Vec x(n);
      for (std::size_t j = 0; j < n; ++j)
        x[j] = rng.uniform(domain.box[j][0], domain.box[j][1]);
      out.push_back(std::move(x));
    }
    remaining -= count;
    ++batch;
  }
  return out;
}

/// Start points for the multi-start polish: the in-domain probes with the
/// lowest nu, ties broken lexicographically so runs are reproducible.
inline std::vector<Vec> pick_starts(std::vector<std::pair<double, Vec>> scored,
                                    std::size_t count) {
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second < b.second;
  });
  std::vector<Vec> starts;
  for (const auto& [nu_val, x] : scored) {
    if (starts.size() == count) break;
    if (!starts.empty() && starts.back() == x) continue;
    starts.push_back(x);
  }
  return starts;
}

/// Orthonormal basis of the tangent space at the unit vector u, as rows.
inline Matrix tangent_basis(const Vec& u) {
  const std::size_t n = u.size();
  Matrix M(n + 1, n);
  for (std::size_t j = 0; j < n; ++j) M(0, j) = u[j];
  for (std::size_t j = 1; j <= n; ++j) M(j, j - 1) = 1.0;
  orthonormalize_rows(M, 1e-12);
  Matrix T(n - 1, n);
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (std::size_t j = 0; j < n; ++j) T(i, j) = M(i + 1, j);
  return T;
}

inline void sort_witnesses(std::vector<Witness>& ws) {
  std::sort(ws.begin(), ws.end(), [](const Witness& a, const Witness& b) {
    if (a.value != b.value) return a.value < b.value;
    if (a.x != b.x) return a.x < b.x;
    return a.scale < b.scale;
  });
}

/// Keeps the `cap` lowest-nu witnesses (ties broken lexicographically) and
/// drops exact duplicates.
inline void cap_witnesses(std::vector<Witness>& ws, std::size_t cap) {
  std::sort(ws.begin(), ws.end(), [](const Witness& a, const Witness& b) {
    if (a.nu != b.nu) return a.nu < b.nu;
    if (a.value != b.value) return a.value < b.value;
    return a.x < b.x;
  });
  ws.erase(std::unique(ws.begin(), ws.end(),
                       [](const Witness& a, const Witness& b) {
                         return a.x == b.x && a.scale == b.scale;
                       }),
           ws.end());
  if (ws.size() > cap) ws.resize(cap);
}

/// Single-linkage clusters of witness values at the scale-free threshold.
inline std::vector<ValueCluster> cluster_witnesses(std::vector<Witness> ws,
                                                   double cluster_rel) {
  sort_witnesses(ws);
  std::vector<Vec> values;
  values.reserve(ws.size());
  for (const auto& w : ws) values.push_back(w.value);
  auto raw = single_linkage(values, cluster_link_threshold(values, cluster_rel));
  std::vector<ValueCluster> clusters;
  for (const auto& c : raw) {
    ValueCluster vc;
    vc.center = c.center;
    vc.radius = c.radius;
    vc.support = c.members.size();
    for (std::size_t idx : c.members) vc.witnesses.push_back(ws[idx]);
    clusters.push_back(std::move(vc));
  }
  return clusters;
}

/// Asymptotic persistence: the cluster must receive a witness from every
/// listed scale. `required` holds the scales of the top (asymptotic) half of
/// the schedule that actually produced samples.
inline std::vector<ValueCluster> keep_persistent(std::vector<ValueCluster> clusters,
                                                 const std::vector<double>& required) {
  if (required.empty()) return {};
  std::vector<ValueCluster> kept;
  for (auto& c : clusters) {
    bool persistent = true;
    for (double s : required) {
      bool found = false;
      for (const auto& w : c.witnesses)
        if (w.scale == s) {
          found = true;
          break;
        }
      if (!found) {
        persistent = false;
        break;
      }
    }
    if (persistent) kept.push_back(std::move(c));
  }
  return kept;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// z-critical points (c_z(f) = {x in X : nu(d_x f) < z})
// ---------------------------------------------------------------------------

/// Sound, not complete: every returned point verifiably satisfies
/// nu(d_x f) < z inside the domain; sampling may miss thin critical regions.
/// Deterministic given the seed. Collects every visited point below the
/// threshold, including simplex trajectories, so the returned cloud traces
/// the critical region rather than only its minima.
inline PointCloud find_z_critical(const PolynomialMap& map, const Domain& domain,
                                  double z, const SampleBudget& budget,
                                  std::uint64_t seed) {
  domain.validate();
  if (!(z > 0)) throw NumericError("find_z_critical: z must be positive");
  if (map.k() > map.n())
    throw DimensionError("find_z_critical: requires k <= n");
  if (domain.dim() != map.n())
    throw DimensionError("find_z_critical: domain dimension differs from the map");

  MapEvaluator ev(map);
  std::vector<Vec> kept;
  auto consider = [&](const Vec& x, double nu_val) {
    if (nu_val < z && domain.contains(x)) kept.push_back(x);
  };

  auto probes = detail::sample_box(domain, budget.samples, detail::kStreamFind, seed);
  std::vector<std::pair<double, Vec>> scored;
  for (auto& x : probes) {
    if (!domain.contains(x)) continue;
    double nu_val = ev.nu(x);
    consider(x, nu_val);
    scored.emplace_back(nu_val, std::move(x));
  }

  auto starts = detail::pick_starts(std::move(scored), budget.minimizer_starts);
  Vec steps(map.n());
  for (std::size_t j = 0; j < map.n(); ++j)
    steps[j] = 0.1 * (domain.box[j][1] - domain.box[j][0]);

  NelderMeadOptions opts;
  opts.max_iters = budget.minimizer_iters;
  for (const auto& x0 : starts) {
    auto objective = [&](const Vec& x) {
      if (!domain.contains(x)) return 1e100 * (1.0 + domain.box_violation(x));
      double nu_val = ev.nu(x);
      consider(x, nu_val);
      return nu_val;
    };
    nelder_mead(objective, x0, steps, opts);
  }

  std::sort(kept.begin(), kept.end());
  kept.erase(std::unique(kept.begin(), kept.end()), kept.end());

  PointCloud cloud;
  cloud.dim = map.n();
  cloud.points = std::move(kept);
  cloud.meta = {{"operation", "find_z_critical"},
                {"z", z},
                {"seed", seed},
                {"samples", budget.samples},
                {"minimizer_starts", budget.minimizer_starts},
                {"minimizer_iters", budget.minimizer_iters}};
  return cloud;
}

// ---------------------------------------------------------------------------
// K0: classical critical values
// ---------------------------------------------------------------------------

inline CriticalValueEstimate estimate_K0(const PolynomialMap& map,
                                         const Domain& domain, double tol,
                                         const SampleBudget& budget,
                                         std::uint64_t seed,
                                         double cluster_rel = 0.05) {
  domain.validate();
  if (!(tol > 0)) throw NumericError("estimate_K0: tol must be positive");
  if (map.k() > map.n()) throw DimensionError("estimate_K0: requires k <= n");
  if (domain.dim() != map.n())
    throw DimensionError("estimate_K0: domain dimension differs from the map");

  MapEvaluator ev(map);
  auto probes = detail::sample_box(domain, budget.samples, detail::kStreamK0, seed);
  std::vector<std::pair<double, Vec>> scored;
  for (auto& x : probes) {
    if (!domain.contains(x)) continue;
    scored.emplace_back(ev.nu(x), std::move(x));
  }

  auto starts = detail::pick_starts(std::move(scored), budget.minimizer_starts);
  Vec steps(map.n());
  for (std::size_t j = 0; j < map.n(); ++j)
    steps[j] = 0.1 * (domain.box[j][1] - domain.box[j][0]);

  NelderMeadOptions opts;
  opts.max_iters = budget.minimizer_iters;
  std::vector<Witness> witnesses;
  for (const auto& x0 : starts) {
    auto objective = [&](const Vec& x) {
      if (!domain.contains(x)) return 1e100 * (1.0 + domain.box_violation(x));
      return ev.nu(x);
    };
    auto result = nelder_mead(objective, x0, steps, opts);
    if (!domain.contains(result.x)) continue;
    double nu_val = ev.nu(result.x);
    if (nu_val <= tol)
      witnesses.push_back({result.x, ev.value(result.x), nu_val, 0.0});
  }

  CriticalValueEstimate estimate;
  estimate.kind = CriticalKind::K0;
  estimate.clusters = detail::cluster_witnesses(std::move(witnesses), cluster_rel);
  estimate.parameters = {{"tol", tol},
                         {"seed", seed},
                         {"samples", budget.samples},
                         {"minimizer_starts", budget.minimizer_starts},
                         {"minimizer_iters", budget.minimizer_iters},
                         {"cluster_rel", cluster_rel}};
  return estimate;
}

// ---------------------------------------------------------------------------
// K-infinity: asymptotic critical values at infinity
// ---------------------------------------------------------------------------

/// Samples spheres |x| = l for each radius in the increasing schedule,
/// polishes nu along the sphere in tangent coordinates, and retains points
/// with nu(d_x f) <= l^-(1+1/i). Via d_x g_t = (1/t) d_{x/t} f with t = 1/l
/// this matches the rescaled criterion nu(d g_t) <= t^(1/i) on the unit
/// ball. Clusters of collected values are reported when they persist across
/// the asymptotic (upper) half of the schedule.
inline CriticalValueEstimate estimate_Kinf(const PolynomialMap& map,
                                           const Schedule& schedule,
                                           double cluster_rel = 0.05) {
  schedule.validate(/*increasing=*/true);
  if (map.k() > map.n()) throw DimensionError("estimate_Kinf: requires k <= n");

  MapEvaluator ev(map);
  const std::size_t n = map.n();
  std::vector<Witness> witnesses;

  for (std::size_t si = 0; si < schedule.scales.size(); ++si) {
    const double l = schedule.scales[si];
    const double threshold =
        std::pow(l, -(1.0 + 1.0 / static_cast<double>(schedule.i)));

    std::vector<Witness> scale_witnesses;
    auto consider = [&](const Vec& x, double nu_val) {
      if (nu_val <= threshold)
        scale_witnesses.push_back({x, ev.value(x), nu_val, l});
    };

    std::vector<std::pair<double, Vec>> scored;
    std::size_t remaining = schedule.samples_per_scale;
    std::size_t batch = 0;
    while (remaining > 0) {
      Rng rng(substream_seed(schedule.seed, detail::kStreamKInf, si, batch));
      std::size_t count = std::min<std::size_t>(remaining, detail::kBatchSize);
      for (std::size_t c = 0; c < count; ++c) {
        Vec u = rng.unit_vector(n);
        Vec x(n);
        for (std::size_t j = 0; j < n; ++j) x[j] = l * u[j];
        double nu_val = ev.nu(x);
        consider(x, nu_val);
        scored.emplace_back(nu_val, std::move(x));
      }
      remaining -= count;
      ++batch;
    }

    if (n > 1) {
      // Polish nu along the sphere in tangent coordinates from the most
      // promising samples (the sphere of R^1 is two points; sampling saw
      // both signs already).
      auto starts = detail::pick_starts(std::move(scored), schedule.minimizer_starts);
      NelderMeadOptions opts;
      opts.max_iters = schedule.minimizer_iters;
      for (const auto& x0 : starts) {
        Vec u0(n);
        for (std::size_t j = 0; j < n; ++j) u0[j] = x0[j] / l;
        Matrix T = detail::tangent_basis(u0);
        auto objective = [&](const Vec& w) {
          Vec u = u0;
          for (std::size_t r = 0; r + 1 < n; ++r)
            for (std::size_t j = 0; j < n; ++j) u[j] += w[r] * T(r, j);
          double un = norm(u);
          Vec x(n);
          for (std::size_t j = 0; j < n; ++j) x[j] = l * u[j] / un;
          double nu_val = ev.nu(x);
          consider(x, nu_val);
          return nu_val;
        };
        nelder_mead(objective, Vec(n - 1, 0.0), Vec(n - 1, 0.05), opts);
      }
    }

    detail::cap_witnesses(scale_witnesses, schedule.witness_cap);
    witnesses.insert(witnesses.end(), scale_witnesses.begin(), scale_witnesses.end());
  }

  const std::size_t m = schedule.scales.size();
  std::vector<double> required(schedule.scales.begin() + m / 2, schedule.scales.end());

  CriticalValueEstimate estimate;
  estimate.kind = CriticalKind::KInf;
  estimate.clusters = detail::keep_persistent(
      detail::cluster_witnesses(std::move(witnesses), cluster_rel), required);
  estimate.parameters = {{"i", schedule.i},
                         {"scales", schedule.scales},
                         {"samples_per_scale", schedule.samples_per_scale},
                         {"seed", schedule.seed},
                         {"minimizer_starts", schedule.minimizer_starts},
                         {"minimizer_iters", schedule.minimizer_iters},
                         {"witness_cap", schedule.witness_cap},
                         {"cluster_rel", cluster_rel},
                         {"persistence_scales", required}};
  return estimate;
}

// ---------------------------------------------------------------------------
// K1: asymptotic critical values at the frontier
// ---------------------------------------------------------------------------

/// Distance to the frontier via the first-order constraint proxy
/// min_j |g_j(x)| / |grad g_j(x)|, denominator clamped at 1e-8. Exact for
/// affine constraints.
class FrontierProxy {
 public:
  FrontierProxy(const Domain& domain, const std::vector<std::string>& vars) {
    PolynomialMap g;
    g.vars = vars;
    g.components = domain.constraints;
    gradients_ = differentiate(g);
    constraints_ = domain.constraints;
  }

  double distance(std::span<const double> x) const {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < constraints_.size(); ++j)
      best = std::min(best, constraint_distance(j, x));
    return best;
  }

  /// Index of the constraint achieving the proxy minimum.
  std::size_t active_constraint(std::span<const double> x) const {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t j = 0; j < constraints_.size(); ++j) {
      double d = constraint_distance(j, x);
      if (d < best) {
        best = d;
        arg = j;
      }
    }
    return arg;
  }

  Vec gradient(std::size_t j, std::span<const double> x) const {
    Vec g(gradients_.cols);
    for (std::size_t c = 0; c < gradients_.cols; ++c)
      g[c] = eval_expr(*gradients_.entry(j, c), x);
    return g;
  }

  double constraint_value(std::size_t j, std::span<const double> x) const {
    return eval_expr(*constraints_[j], x);
  }

 private:
  double constraint_distance(std::size_t j, std::span<const double> x) const {
    double gv = std::abs(constraint_value(j, x));
    double gn = norm(gradient(j, x));
    return gv / std::max(gn, 1e-8);
  }

  std::vector<ExprPtr> constraints_;
  JacobianMap gradients_;
};

/// Samples the shell {x : t/2 < d(x, fr X) < 2t} inside X for each t in the
/// decreasing schedule, retains nu(d_x f) <= t^(1/i), and reports clusters
/// persistent across the asymptotic (small-t) half. Shells that produce no
/// sample are skipped and recorded.
inline CriticalValueEstimate estimate_K1(const PolynomialMap& map,
                                         const Domain& domain,
                                         const Schedule& schedule,
                                         double cluster_rel = 0.05) {
  domain.validate();
  schedule.validate(/*increasing=*/false);
  if (domain.constraints.empty())
    throw Error("estimate_K1: the domain has no constraints, so it has no tracked frontier");
  if (map.k() > map.n()) throw DimensionError("estimate_K1: requires k <= n");
  if (domain.dim() != map.n())
    throw DimensionError("estimate_K1: domain dimension differs from the map");

  MapEvaluator ev(map);
  FrontierProxy frontier(domain, map.vars);
  const std::size_t n = map.n();

  auto in_shell = [&](std::span<const double> x, double t) {
    if (!domain.contains(x)) return false;
    double d = frontier.distance(x);
    return d > t / 2.0 && d < 2.0 * t;
  };

  std::vector<Witness> witnesses;
  std::vector<double> skipped;
  std::vector<double> sampled_scales;

  for (std::size_t si = 0; si < schedule.scales.size(); ++si) {
    const double t = schedule.scales[si];
    const double threshold = std::pow(t, 1.0 / static_cast<double>(schedule.i));

    std::vector<Witness> scale_witnesses;
    auto consider = [&](const Vec& x, double nu_val) {
      if (nu_val <= threshold && in_shell(x, t))
        scale_witnesses.push_back({x, ev.value(x), nu_val, t});
    };

    std::vector<std::pair<double, Vec>> scored;
    std::size_t remaining = schedule.samples_per_scale;
    std::size_t batch = 0;
    while (remaining > 0) {
      Rng rng(substream_seed(schedule.seed, detail::kStreamK1, si, batch));
      std::size_t count = std::min<std::size_t>(remaining, detail::kBatchSize);
      for (std::size_t c = 0; c < count; ++c) {
        Vec x(n);
        for (std::size_t j = 0; j < n; ++j)
          x[j] = rng.uniform(domain.box[j][0], domain.box[j][1]);
        if (!domain.contains(x)) continue;
        // Retract toward the shell along the active constraint gradient.
        double target = t * std::exp(rng.uniform(std::log(0.6), std::log(1.6)));
        for (int step = 0; step < 4; ++step) {
          double d = frontier.distance(x);
          if (d > t / 2.0 && d < 2.0 * t) break;
          std::size_t j = frontier.active_constraint(x);
          Vec g = frontier.gradient(j, x);
          double gn = std::max(norm(g), 1e-8);
          double move = target - frontier.constraint_value(j, x) / gn;
          for (std::size_t c2 = 0; c2 < n; ++c2) x[c2] += move * g[c2] / gn;
        }
        if (!in_shell(x, t)) continue;
        double nu_val = ev.nu(x);
        consider(x, nu_val);
        scored.emplace_back(nu_val, x);
      }
      remaining -= count;
      ++batch;
    }

    if (scored.empty()) {
      skipped.push_back(t);  // empty shell at this scale
      continue;
    }
    sampled_scales.push_back(t);

    auto starts = detail::pick_starts(std::move(scored), schedule.minimizer_starts);
    Vec steps(n, t);
    NelderMeadOptions opts;
    opts.max_iters = schedule.minimizer_iters;
    for (const auto& x0 : starts) {
      auto objective = [&](const Vec& x) {
        if (!domain.contains(x)) return 1e100 * (1.0 + domain.box_violation(x));
        double d = frontier.distance(x);
        if (!(d > t / 2.0 && d < 2.0 * t))
          return 1e90 * (1.0 + std::abs(d - t));
        double nu_val = ev.nu(x);
        consider(x, nu_val);
        return nu_val;
      };
      nelder_mead(objective, x0, steps, opts);
    }

    detail::cap_witnesses(scale_witnesses, schedule.witness_cap);
    witnesses.insert(witnesses.end(), scale_witnesses.begin(), scale_witnesses.end());
  }

  // Persistence over the asymptotic half: the smallest-t half of the
  // schedule, restricted to scales whose shells produced samples.
  const std::size_t m = schedule.scales.size();
  std::vector<double> required;
  for (std::size_t si = m / 2; si < m; ++si) {
    double t = schedule.scales[si];
    if (std::find(sampled_scales.begin(), sampled_scales.end(), t) != sampled_scales.end())
      required.push_back(t);
  }

  CriticalValueEstimate estimate;
  estimate.kind = CriticalKind::K1;
  estimate.clusters = detail::keep_persistent(
      detail::cluster_witnesses(std::move(witnesses), cluster_rel), required);
  estimate.skipped_scales = std::move(skipped);
  estimate.parameters = {{"i", schedule.i},
                         {"scales", schedule.scales},
                         {"samples_per_scale", schedule.samples_per_scale},
                         {"seed", schedule.seed},
                         {"minimizer_starts", schedule.minimizer_starts},
                         {"minimizer_iters", schedule.minimizer_iters},
                         {"witness_cap", schedule.witness_cap},
                         {"cluster_rel", cluster_rel},
                         {"persistence_scales", required}};
  return estimate;
}

// ---------------------------------------------------------------------------
// Sard experiment
// ---------------------------------------------------------------------------

struct SardEntry {
  double z = 0.0;
  std::size_t critical_points = 0;
  ThinnessReport thin;
};

struct SardReport {
  std::vector<SardEntry> entries;
  bool scores_non_increasing = true;  // along the decreasing z schedule
  double grid_delta = 0.0;            // comparison tolerance (delta / 2)
  nlohmann::ordered_json parameters = nlohmann::ordered_json::object();
  std::vector<PointCloud> clouds;     // per-z critical clouds (not serialized)
};

/// Infinitesimal z operationalized as a germ evaluated along t-points:
/// z_j = germ(t_j).
inline std::vector<double> z_schedule_from_germ(const PuiseuxSeries& germ,
                                                const std::vector<double>& ts) {
  std::vector<double> zs;
  zs.reserve(ts.size());
  for (double t : ts) zs.push_back(evaluate_at(germ, t));
  return zs;
}

/// For each z in the decreasing schedule, images of the z-critical points
/// are scored for thinness; the v-thin conclusion becomes a trend assertion
/// over the schedule.
inline SardReport sard_experiment(const PolynomialMap& map, const Domain& domain,
                                  const std::vector<double>& z_schedule,
                                  const SampleBudget& budget, double delta,
                                  std::size_t n_projections, std::uint64_t seed) {
  domain.validate();
  if (map.k() > map.n()) throw DimensionError("sard_experiment: requires k <= n");
  if (z_schedule.empty()) throw NumericError("sard_experiment: empty z schedule");
  for (double z : z_schedule)
    if (!(z > 0)) throw NumericError("sard_experiment: z values must be positive");
  for (std::size_t j = 1; j < z_schedule.size(); ++j)
    if (!(z_schedule[j] < z_schedule[j - 1]))
      throw NumericError("sard_experiment: z schedule must be strictly decreasing");

  MapEvaluator ev(map);
  SardReport report;
  report.grid_delta = delta / 2.0;
  for (std::size_t zi = 0; zi < z_schedule.size(); ++zi) {
    const double z = z_schedule[zi];
    auto cloud = find_z_critical(map, domain, z, budget,
                                 substream_seed(seed, detail::kStreamSard, zi));
    PointCloud values;
    values.dim = map.k();
    values.points.reserve(cloud.size());
    for (const auto& x : cloud.points) values.points.push_back(ev.value(x));

    SardEntry entry;
    entry.z = z;
    entry.critical_points = cloud.size();
    entry.thin = thinness_score(values, map.k(), delta, n_projections,
                                substream_seed(seed, detail::kStreamSard, 0x1000 + zi));
    report.entries.push_back(std::move(entry));
    report.clouds.push_back(std::move(cloud));
  }

  for (std::size_t j = 1; j < report.entries.size(); ++j)
    if (report.entries[j].thin.score >
        report.entries[j - 1].thin.score + report.grid_delta)
      report.scores_non_increasing = false;

  report.parameters = {{"z_schedule", z_schedule},
                       {"delta", delta},
                       {"n_projections", n_projections},
                       {"seed", seed},
                       {"samples", budget.samples},
                       {"minimizer_starts", budget.minimizer_starts},
                       {"minimizer_iters", budget.minimizer_iters}};
  return report;
}

// ---------------------------------------------------------------------------
// JSON serialization
// ---------------------------------------------------------------------------

inline void to_json(nlohmann::ordered_json& j, const Witness& w) {
  j = nlohmann::ordered_json{
      {"x", w.x}, {"value", w.value}, {"nu", w.nu}, {"scale", w.scale}};
}

inline void to_json(nlohmann::ordered_json& j, const ValueCluster& c) {
  j = nlohmann::ordered_json{{"center", c.center},
                             {"radius", c.radius},
                             {"support", c.support},
                             {"witnesses", c.witnesses}};
}

inline void to_json(nlohmann::ordered_json& j, const CriticalValueEstimate& e) {
  j = nlohmann::ordered_json{{"kind", to_string(e.kind)},
                             {"clusters", e.clusters},
                             {"skipped_scales", e.skipped_scales},
                             {"parameters", e.parameters}};
}

inline void to_json(nlohmann::ordered_json& j, const SardEntry& e) {
  j = nlohmann::ordered_json{{"z", e.z},
                             {"critical_points", e.critical_points},
                             {"thin", e.thin}};
}

inline void to_json(nlohmann::ordered_json& j, const SardReport& r) {
  j = nlohmann::ordered_json{{"entries", r.entries},
                             {"scores_non_increasing", r.scores_non_increasing},
                             {"grid_delta", r.grid_delta},
                             {"parameters", r.parameters}};
}

}  // namespace gcv
