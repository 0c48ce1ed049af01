#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "gcv/rng.hpp"
#include "gcv/thin.hpp"

using namespace gcv;

namespace {

PointCloud cloud_of(std::vector<Vec> pts) {
  PointCloud c;
  c.dim = pts.empty() ? 0 : pts.front().size();
  c.points = std::move(pts);
  return c;
}

/// 200 uniform samples of the segment {(t, 0) : t in [0, 1]}.
PointCloud segment_cloud(std::uint64_t seed = 11) {
  Rng rng(seed);
  std::vector<Vec> pts;
  for (int i = 0; i < 200; ++i) pts.push_back({rng.uniform(), 0.0});
  return cloud_of(std::move(pts));
}

/// Grid sample of [0, 1]^2 at the given spacing.
PointCloud square_cloud(double spacing = 0.01) {
  std::vector<Vec> pts;
  int m = static_cast<int>(std::lround(1.0 / spacing));
  for (int i = 0; i <= m; ++i)
    for (int j = 0; j <= m; ++j)
      pts.push_back({i * spacing, j * spacing});
  return cloud_of(std::move(pts));
}

/// Independent test-side Hausdorff: full distance matrix, then the two
/// directed suprema.
double hausdorff_oracle(const PointCloud& X, const PointCloud& Y) {
  std::vector<std::vector<double>> d(X.size(), std::vector<double>(Y.size()));
  for (std::size_t i = 0; i < X.size(); ++i)
    for (std::size_t j = 0; j < Y.size(); ++j)
      d[i][j] = dist(X.points[i], Y.points[j]);
  double sup_x = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    double inf = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < Y.size(); ++j) inf = std::min(inf, d[i][j]);
    sup_x = std::max(sup_x, inf);
  }
  double sup_y = 0.0;
  for (std::size_t j = 0; j < Y.size(); ++j) {
    double inf = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < X.size(); ++i) inf = std::min(inf, d[i][j]);
    sup_y = std::max(sup_y, inf);
  }
  return std::max(sup_x, sup_y);
}

PointCloud random_cloud(Rng& rng, std::size_t dim, std::size_t count) {
  std::vector<Vec> pts;
  for (std::size_t i = 0; i < count; ++i) {
    Vec p(dim);
    for (auto& x : p) x = rng.uniform(-3.0, 3.0);
    pts.push_back(std::move(p));
  }
  return cloud_of(std::move(pts));
}

}  // namespace

TEST_CASE("hausdorff on worked examples") {
  CHECK(hausdorff(cloud_of({{0, 0}}), cloud_of({{3, 4}})) == Catch::Approx(5.0));
  auto X = segment_cloud();
  CHECK(hausdorff(X, X) == 0.0);
  CHECK(hausdorff(cloud_of({{0.0}, {1.0}}), cloud_of({{0.0}})) == Catch::Approx(1.0));
  CHECK(std::isinf(hausdorff(cloud_of({}), cloud_of({{1.0}}))));
  CHECK_THROWS_AS(hausdorff(cloud_of({{0.0}}), cloud_of({{0.0, 1.0}})), DimensionError);
}

TEST_CASE("hausdorff is a metric on random triples") {
  Rng rng(303);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t dim = 1 + rng.next_u64() % 3;
    auto A = random_cloud(rng, dim, 1 + rng.next_u64() % 12);
    auto B = random_cloud(rng, dim, 1 + rng.next_u64() % 12);
    auto C = random_cloud(rng, dim, 1 + rng.next_u64() % 12);
    CHECK(hausdorff(A, B) == hausdorff(B, A));  // symmetric by construction
    CHECK(hausdorff(A, C) <= hausdorff(A, B) + hausdorff(B, C) + 1e-12);
    CHECK(hausdorff(A, A) == 0.0);
  }
}

TEST_CASE("hausdorff equals the independent double-loop oracle") {
  Rng rng(404);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t dim = 1 + rng.next_u64() % 3;
    auto A = random_cloud(rng, dim, 1 + rng.next_u64() % 50);
    auto B = random_cloud(rng, dim, 1 + rng.next_u64() % 50);
    CHECK(hausdorff(A, B) == hausdorff_oracle(A, B));
  }
}

TEST_CASE("z-neighborhood membership") {
  auto Y = cloud_of({{0.0, 0.0}});
  CHECK(in_z_neighborhood({0.0, 0.5}, Y, 1.0));
  CHECK_FALSE(in_z_neighborhood({0.0, 2.0}, Y, 1.0));
  CHECK_FALSE(in_z_neighborhood({0.0, 0.0}, cloud_of({}), 1.0));
}

TEST_CASE("random projections have orthonormal rows and are reproducible") {
  for (std::size_t n = 1; n <= 5; ++n)
    for (std::size_t k = 1; k <= n; ++k) {
      auto P = random_projection(n, k, 42);
      auto G = gram_of_rows(P);
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
          CHECK(std::abs(G(i, j) - (i == j ? 1.0 : 0.0)) <= 1e-10);
    }
  auto A = random_projection(4, 2, 7);
  auto B = random_projection(4, 2, 7);
  CHECK(A.a == B.a);
  auto C = random_projection(4, 2, 8);
  CHECK(A.a != C.a);
  CHECK_THROWS_AS(random_projection(2, 3, 0), DimensionError);
}

TEST_CASE("thinness of the segment and the square") {
  const double delta = 0.02;

  auto seg = thinness_score(segment_cloud(), 2, delta, 8, 1);
  CHECK(seg.score <= 2 * delta);  // nothing fatter than the fattening fits

  auto sq = thinness_score(square_cloud(), 2, delta, 8, 1);
  CHECK(sq.score >= 0.4);  // the square has an inscribed ball of radius 1/2

  auto empty = thinness_score(cloud_of({}), 2, delta, 8, 1);
  CHECK(empty.score == 0.0);

  // A single point contains no ball at any resolution.
  auto singleton = thinness_score(cloud_of({{0.3, 0.4}}), 2, delta, 8, 1);
  CHECK(singleton.score == 0.0);

  CHECK(seg.per_projection_radius.size() == 8);
  CHECK(seg.verdict(2 * delta + 1e-9));
  CHECK_FALSE(sq.verdict(0.4));
}

TEST_CASE("z-neighborhood of a segment is thin at scale z") {
  // Lemma-style bound: the grid points inside V_z(segment) score <= 4z + 2 delta.
  const double delta = 0.02;
  auto Y = segment_cloud(99);
  for (double z : {0.05, 0.1, 0.2}) {
    std::vector<Vec> inside;
    for (double gx = -0.4; gx <= 1.4; gx += 0.01)
      for (double gy = -0.4; gy <= 0.4; gy += 0.01) {
        Vec g{gx, gy};
        if (in_z_neighborhood(g, Y, z)) inside.push_back(g);
      }
    auto report = thinness_score(cloud_of(std::move(inside)), 2, delta, 8, 5);
    CHECK(report.score <= 4 * z + 2 * delta);
  }
}

TEST_CASE("clouds near a line are thin in proportion to the Hausdorff gap") {
  // Lemma-style bound: hausdorff(X, Y) <= h with Y inside a line implies
  // thinness_score(X) <= 2h + 2 delta.
  const double delta = 0.02;
  for (double h : {0.02, 0.05}) {
    Rng rng(7);
    std::vector<Vec> xs, ys;
    for (int i = 0; i < 200; ++i) {
      double t = rng.uniform();
      ys.push_back({t, 0.0});
      xs.push_back({t, h * std::sin(7.0 * t)});
    }
    auto X = cloud_of(std::move(xs)), Y = cloud_of(std::move(ys));
    REQUIRE(hausdorff(X, Y) <= h);
    auto report = thinness_score(X, 2, delta, 8, 3);
    CHECK(report.score <= 2 * h + 2 * delta);
  }
}

TEST_CASE("adding points never shrinks the per-projection radii") {
  // The subset keeps the corner points, so both clouds project to the same
  // bounding box and the search lattices coincide.
  auto full = square_cloud(0.02);
  std::vector<Vec> subset_pts;
  for (std::size_t i = 0; i < full.points.size(); ++i) {
    const auto& p = full.points[i];
    bool corner = (p[0] == 0.0 || p[0] == 1.0) && (p[1] == 0.0 || p[1] == 1.0);
    if (corner || i % 3 == 0) subset_pts.push_back(p);
  }
  auto subset = cloud_of(std::move(subset_pts));
  auto r_full = thinness_score(full, 2, 0.02, 6, 21);
  auto r_subset = thinness_score(subset, 2, 0.02, 6, 21);
  for (std::size_t p = 0; p < 6; ++p)
    CHECK(r_subset.per_projection_radius[p] <= r_full.per_projection_radius[p] + 1e-12);
}

TEST_CASE("median scores are stable across projection seeds") {
  const double delta = 0.02;
  std::vector<double> seg_scores, sq_scores;
  auto seg = segment_cloud();
  auto sq = square_cloud(0.02);
  for (std::uint64_t seed = 0; seed < 16; ++seed) {
    seg_scores.push_back(thinness_score(seg, 2, delta, 8, seed).score);
    sq_scores.push_back(thinness_score(sq, 2, delta, 8, seed).score);
  }
  auto spread = [](const std::vector<double>& v) {
    return *std::max_element(v.begin(), v.end()) - *std::min_element(v.begin(), v.end());
  };
  CHECK(spread(seg_scores) <= 2 * delta);
  CHECK(spread(sq_scores) <= 2 * delta);
}

TEST_CASE("box dimension of standard fixtures") {
  std::vector<double> scales{0.1, 0.05, 0.025, 0.0125};
  CHECK(box_dimension(segment_cloud(), scales) == Catch::Approx(1.0).margin(0.2));
  CHECK(box_dimension(square_cloud(), {0.2, 0.1, 0.05, 0.025}) == Catch::Approx(2.0).margin(0.2));
  CHECK(box_dimension(cloud_of({{1.0, 2.0}}), scales) == 0.0);
  CHECK_THROWS_AS(box_dimension(cloud_of({{1.0}}), {0.1}), NumericError);
  CHECK_THROWS_AS(box_dimension(cloud_of({}), scales), DimensionError);
}

TEST_CASE("family sweep over thin strips") {
  // X_t: 100 samples of {t/2} x [0, 1] fattened by t/10.
  const double delta = 0.003;
  std::vector<std::pair<double, PointCloud>> family;
  std::vector<double> z_of_t;
  for (double t : {0.4, 0.2, 0.1, 0.05}) {
    Rng rng(1000 + static_cast<std::uint64_t>(t * 1000));
    std::vector<Vec> pts;
    for (int i = 0; i < 100; ++i)
      pts.push_back({t / 2 + rng.uniform(-t / 10, t / 10), rng.uniform()});
    family.emplace_back(t, cloud_of(std::move(pts)));
    z_of_t.push_back(t / 5.0);
  }
  auto sweep = family_sweep(family, 2, delta, 8, 2, &z_of_t);
  double max_fiber = 0.0;
  for (std::size_t i = 0; i < sweep.fibers.size(); ++i) {
    CHECK(sweep.fibers[i].thin.score <= family[i].first / 5.0);
    CHECK(*sweep.fibers[i].verdict);
    max_fiber = std::max(max_fiber, sweep.fibers[i].thin.score);
  }
  CHECK(sweep.stacked.score <= max_fiber + delta);
  CHECK(sweep.limit_fiber_count == 1);  // the t = 0.05 fiber
  // The limit set is a short strip: essentially one-dimensional or lower.
  CHECK(sweep.limit_box_dimension <= 1.4);
}

TEST_CASE("family of full squares stacks into a non-thin set") {
  std::vector<std::pair<double, PointCloud>> family;
  for (int ti = 0; ti <= 20; ++ti)
    family.emplace_back(0.05 * ti + 0.05, square_cloud(0.025));
  auto sweep = family_sweep(family, 2, 0.04, 8, 3);
  CHECK(sweep.stacked.score >= 0.4);  // the stack fills a 3-box
}

TEST_CASE("single-fiber family reduces to the fiber score") {
  auto cloud = segment_cloud();
  std::vector<std::pair<double, PointCloud>> family{{0.1, cloud}};
  auto sweep = family_sweep(family, 2, 0.02, 8, 9);
  auto direct = thinness_score(cloud, 2, 0.02, 8, substream_seed(9, 0xF1BE7ull, 0));
  CHECK(sweep.fibers.at(0).thin.score == direct.score);
  CHECK(sweep.fibers.at(0).thin.per_projection_radius == direct.per_projection_radius);
}

TEST_CASE("family sweep validates its input") {
  auto cloud = segment_cloud();
  CHECK_THROWS_AS(family_sweep({}, 2, 0.02, 8, 0), DimensionError);
  std::vector<std::pair<double, PointCloud>> dup{{0.1, cloud}, {0.1, cloud}};
  CHECK_THROWS_AS(family_sweep(dup, 2, 0.02, 8, 0), Error);
}
