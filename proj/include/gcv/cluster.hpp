#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "gcv/linalg.hpp"

namespace gcv {

struct Cluster {
  Vec center;                        // componentwise mean of the members
  double radius = 0.0;               // max distance from center to a member
  std::vector<std::size_t> members;  // indices into the input point list
};

/// Scale-free linkage threshold: rel * diameter of the point set, floored.
inline double cluster_link_threshold(const std::vector<Vec>& pts,
                                     double rel = 0.05, double floor = 1e-6) {
  double diam = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      diam = std::max(diam, dist(pts[i], pts[j]));
  return std::max(rel * diam, floor);
}

/// Single-linkage clustering: points are in one cluster iff they are
/// connected by links of length <= eps. Clusters are ordered by their
/// lexicographically smallest member so output is independent of input
/// permutation given sorted input.
inline std::vector<Cluster> single_linkage(const std::vector<Vec>& pts, double eps) {
  const std::size_t m = pts.size();
  std::vector<std::size_t> parent(m);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      if (dist(pts[i], pts[j]) <= eps) {
        auto ri = find(i), rj = find(j);
        if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
      }

  std::vector<Cluster> clusters;
  std::vector<long> cluster_of_root(m, -1);
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t r = find(i);
    if (cluster_of_root[r] < 0) {
      cluster_of_root[r] = static_cast<long>(clusters.size());
      clusters.push_back({});
    }
    clusters[static_cast<std::size_t>(cluster_of_root[r])].members.push_back(i);
  }

  for (auto& c : clusters) {
    c.center.assign(pts.empty() ? 0 : pts.front().size(), 0.0);
    for (std::size_t idx : c.members)
      for (std::size_t d = 0; d < c.center.size(); ++d) c.center[d] += pts[idx][d];
    for (double& x : c.center) x /= static_cast<double>(c.members.size());
    c.radius = 0.0;
    for (std::size_t idx : c.members)
      c.radius = std::max(c.radius, dist(c.center, pts[idx]));
  }

  std::sort(clusters.begin(), clusters.end(), [](const Cluster& a, const Cluster& b) {
    return a.center < b.center;
  });
  return clusters;
}

}  // namespace gcv
