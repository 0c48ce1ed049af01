#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "gcv/critical.hpp"
#include "gcv/expr.hpp"
#include "gcv/rng.hpp"

using namespace gcv;

namespace {

Domain box2(double lo = -2.0, double hi = 2.0) {
  Domain d;
  d.box = {{lo, hi}, {lo, hi}};
  return d;
}

PolynomialMap random_map(Rng& rng, std::size_t n, std::size_t k, std::size_t max_terms = 4) {
  std::vector<std::string> vars;
  for (std::size_t j = 0; j < n; ++j) vars.push_back("x" + std::to_string(j + 1));
  PolynomialMap map;
  map.vars = vars;
  for (std::size_t c = 0; c < k; ++c) {
    ExprPtr e = rational_const(0);
    std::size_t terms = 1 + rng.next_u64() % max_terms;
    for (std::size_t t = 0; t < terms; ++t) {
      long num = static_cast<long>(rng.next_u64() % 9) - 4;
      long den = 1 + static_cast<long>(rng.next_u64() % 3);
      ExprPtr monomial = rational_const(Rational(num, den));
      for (std::size_t j = 0; j < n; ++j) {
        int deg = static_cast<int>(rng.next_u64() % 4);
        if (deg > 0) monomial = mul(monomial, pow_int(var_ref(static_cast<int>(j)), deg));
      }
      e = add(e, monomial);
    }
    map.components.push_back(e);
  }
  return map;
}

std::string dump(const CriticalValueEstimate& e) {
  nlohmann::ordered_json j = e;
  return j.dump();
}

}  // namespace

TEST_CASE("nu_at and kos_weight on worked examples") {
  auto circle = parse_map("x^2 + y^2", {"x", "y"});
  CHECK(nu_at(circle, std::vector<double>{1.0, 0.0}) == Catch::Approx(2.0).margin(1e-12));
  CHECK(nu_at(circle, std::vector<double>{0.0, 0.0}) == 0.0);

  auto ident = parse_map("x; y", {"x", "y"});
  CHECK(nu_at(ident, std::vector<double>{0.7, -0.3}) == Catch::Approx(1.0).margin(1e-12));

  CHECK(kos_weight(circle, std::vector<double>{0.0, 0.0}) == 0.0);
  CHECK(kos_weight(circle, std::vector<double>{1.0, 0.0}) == Catch::Approx(4.0).margin(1e-12));

  // Along the escape path x = -1/(2y) + y^-3 the weight decays; at y = 100
  // the hand formula gives (1 + |x|) * |(1 + 2xy, x^2)|.
  auto broughton = parse_map("x + x^2*y", {"x", "y"});
  const double bx = -0.004999, by = 100.0;
  double expected = (1.0 + std::hypot(bx, by)) *
                    std::hypot(1.0 + 2.0 * bx * by, bx * bx);
  double actual = kos_weight(broughton, std::vector<double>{bx, by});
  CHECK(actual == Catch::Approx(expected).epsilon(1e-10));
  CHECK(actual == Catch::Approx(0.020357).margin(2e-5));

  CHECK_THROWS_AS(nu_at(circle, std::vector<double>{1.0}), DimensionError);
}

TEST_CASE("find_z_critical is sound on the disc fixture") {
  auto circle = parse_map("x^2 + y^2", {"x", "y"});
  SampleBudget budget{2048, 32, 200};
  auto cloud = find_z_critical(circle, box2(), 0.5, budget, 17);
  REQUIRE(cloud.size() > 100);
  // c_z is the open disc of radius z/2: every point obeys x^2 + y^2 < 1/16.
  for (const auto& p : cloud.points)
    CHECK(p[0] * p[0] + p[1] * p[1] < 1.0 / 16.0 + 1e-12);
}

TEST_CASE("find_z_critical on degenerate fixtures") {
  SampleBudget budget{512, 8, 100};

  auto ident = parse_map("x; y", {"x", "y"});
  CHECK(find_z_critical(ident, box2(), 0.5, budget, 1).size() == 0);  // nu == 1

  auto constant = parse_map("3", {"x", "y"});
  auto cloud = find_z_critical(constant, box2(), 0.5, budget, 1);
  CHECK(cloud.size() >= budget.samples / 2);  // nu == 0 everywhere
  Vec lo{1e9, 1e9}, hi{-1e9, -1e9};
  for (const auto& p : cloud.points)
    for (int j = 0; j < 2; ++j) {
      lo[j] = std::min(lo[j], p[j]);
      hi[j] = std::max(hi[j], p[j]);
    }
  CHECK(hi[0] - lo[0] > 3.0);  // samples reach across the box
  CHECK(hi[1] - lo[1] > 3.0);

  CHECK_THROWS_AS(find_z_critical(ident, box2(), -1.0, budget, 1), NumericError);
  Domain bad;
  bad.box = {{1.0, 1.0}, {0.0, 1.0}};
  CHECK_THROWS_AS(find_z_critical(ident, bad, 0.5, budget, 1), DimensionError);

  auto tall = parse_map("x; x^2", {"x"});  // k = 2 > n = 1
  Domain line;
  line.box = {{-1.0, 1.0}};
  CHECK_THROWS_AS(find_z_critical(tall, line, 0.5, budget, 1), DimensionError);
}

TEST_CASE("z-critical sets are monotone in z") {
  auto circle = parse_map("x^2 + y^2", {"x", "y"});
  SampleBudget budget{1024, 16, 150};
  MapEvaluator ev(circle);
  auto small = find_z_critical(circle, box2(), 0.25, budget, 3);
  REQUIRE(small.size() > 0);
  for (const auto& p : small.points) CHECK(ev.nu(p) < 0.5);  // passes the looser test
}

TEST_CASE("K0 fixtures recover the analytic critical values") {
  SampleBudget budget{2048, 32, 200};

  auto circle = parse_map("x^2 + y^2", {"x", "y"});
  auto e1 = estimate_K0(circle, box2(), 1e-6, budget, 11);
  REQUIRE(e1.clusters.size() == 1);
  CHECK(std::abs(e1.clusters[0].center[0]) <= 1e-3);

  auto cubic = parse_map("x^3 - 3*x", {"x"});
  Domain line;
  line.box = {{-2.0, 2.0}};
  auto e2 = estimate_K0(cubic, line, 1e-6, budget, 11);
  REQUIRE(e2.clusters.size() == 2);  // f(+-1) = {-2, +2}
  CHECK(std::abs(e2.clusters[0].center[0] + 2.0) <= 1e-3);
  CHECK(std::abs(e2.clusters[1].center[0] - 2.0) <= 1e-3);

  auto broughton = parse_map("x + x^2*y", {"x", "y"});
  auto e3 = estimate_K0(broughton, box2(), 1e-6, budget, 11);
  CHECK(e3.clusters.empty());  // the gradient never vanishes on the box
}

TEST_CASE("Kinf fixture: one persistent asymptotic value for x + x^2*y") {
  auto broughton = parse_map("x + x^2*y", {"x", "y"});
  Schedule schedule;
  schedule.i = 2;
  schedule.scales = {10.0, 100.0, 1000.0};
  schedule.samples_per_scale = 1024;
  schedule.seed = 5;
  auto estimate = estimate_Kinf(broughton, schedule);
  REQUIRE(estimate.clusters.size() == 1);
  CHECK(std::abs(estimate.clusters[0].center[0]) <= 1e-2);

  auto circle = parse_map("x^2 + y^2", {"x", "y"});
  CHECK(estimate_Kinf(circle, schedule).clusters.empty());  // (1+|x|)nu blows up

  auto ident = parse_map("x; y", {"x", "y"});
  CHECK(estimate_Kinf(ident, schedule).clusters.empty());  // nu == 1 everywhere
}

TEST_CASE("K1 fixture: x*y against the frontier {x = 0}") {
  auto xy = parse_map("x*y", {"x", "y"});
  Domain halfplane = box2();
  auto g = parse_map("x", {"x", "y"});
  halfplane.constraints.push_back(g.components[0]);
  halfplane.constraint_text.push_back("x");

  Schedule schedule;
  schedule.i = 2;
  schedule.scales = {1e-1, 1e-2, 1e-3, 1e-4};
  schedule.samples_per_scale = 2048;
  schedule.seed = 23;
  auto estimate = estimate_K1(xy, halfplane, schedule);
  REQUIRE(estimate.clusters.size() >= 1);
  bool near_zero = false;
  for (const auto& c : estimate.clusters)
    if (std::abs(c.center[0]) <= 1e-2) near_zero = true;
  CHECK(near_zero);

  // f(x,y) = y on the unit disc: nu == 1 > t^(1/2), so nothing is retained.
  auto height = parse_map("y", {"x", "y"});
  Domain disc = box2();
  auto gd = parse_map("1 - x^2 - y^2", {"x", "y"});
  disc.constraints.push_back(gd.components[0]);
  disc.constraint_text.push_back("1 - x^2 - y^2");
  auto empty = estimate_K1(height, disc, schedule);
  CHECK(empty.clusters.empty());

  CHECK_THROWS_AS(estimate_K1(xy, box2(), schedule), Error);  // no constraints
}

TEST_CASE("schedules are validated") {
  auto broughton = parse_map("x + x^2*y", {"x", "y"});
  Schedule bad;
  bad.scales = {10.0, 10.0};
  CHECK_THROWS_AS(estimate_Kinf(broughton, bad), NumericError);
  bad.scales = {100.0, 10.0};
  CHECK_THROWS_AS(estimate_Kinf(broughton, bad), NumericError);
  bad.scales = {10.0, 100.0};
  bad.i = 0;
  CHECK_THROWS_AS(estimate_Kinf(broughton, bad), NumericError);
}

TEST_CASE("witnesses satisfy their defining inequalities on re-evaluation") {
  SampleBudget budget{1024, 16, 150};

  auto circle = parse_map("x^2 + y^2", {"x", "y"});
  MapEvaluator circle_ev(circle);
  auto k0 = estimate_K0(circle, box2(), 1e-6, budget, 29);
  for (const auto& c : k0.clusters)
    for (const auto& w : c.witnesses) CHECK(circle_ev.nu(w.x) <= 1e-6);

  auto broughton = parse_map("x + x^2*y", {"x", "y"});
  MapEvaluator ev(broughton);
  Schedule schedule;
  schedule.i = 2;
  schedule.scales = {10.0, 100.0, 1000.0};
  schedule.samples_per_scale = 512;
  schedule.seed = 31;
  auto kinf = estimate_Kinf(broughton, schedule);
  for (const auto& c : kinf.clusters)
    for (const auto& w : c.witnesses) {
      CHECK(ev.nu(w.x) <= std::pow(w.scale, -1.5));
      CHECK(std::abs(norm(w.x) - w.scale) <= 1e-9 * w.scale);  // on the sphere
      Vec value = ev.value(w.x);
      CHECK(value == w.value);
    }

  auto xy = parse_map("x*y", {"x", "y"});
  Domain halfplane = box2();
  auto g = parse_map("x", {"x", "y"});
  halfplane.constraints.push_back(g.components[0]);
  halfplane.constraint_text.push_back("x");
  Schedule k1s;
  k1s.i = 2;
  k1s.scales = {1e-1, 1e-2, 1e-3};
  k1s.samples_per_scale = 512;
  k1s.seed = 37;
  auto k1 = estimate_K1(xy, halfplane, k1s);
  MapEvaluator xy_ev(xy);
  FrontierProxy frontier(halfplane, xy.vars);
  for (const auto& c : k1.clusters)
    for (const auto& w : c.witnesses) {
      CHECK(xy_ev.nu(w.x) <= std::pow(w.scale, 0.5));
      double d = frontier.distance(w.x);
      CHECK(d > w.scale / 2.0);
      CHECK(d < 2.0 * w.scale);
    }
}

TEST_CASE("estimates are bit-for-bit deterministic at the JSON level") {
  auto broughton = parse_map("x + x^2*y", {"x", "y"});
  Schedule schedule;
  schedule.i = 2;
  schedule.scales = {10.0, 100.0};
  schedule.samples_per_scale = 512;
  schedule.seed = 101;
  CHECK(dump(estimate_Kinf(broughton, schedule)) ==
        dump(estimate_Kinf(broughton, schedule)));

  SampleBudget budget{512, 8, 100};
  auto circle = parse_map("x^2 + y^2", {"x", "y"});
  CHECK(dump(estimate_K0(circle, box2(), 1e-6, budget, 7)) ==
        dump(estimate_K0(circle, box2(), 1e-6, budget, 7)));
}

TEST_CASE("rescaling identity nu(d_x g_t) = nu(d_{x/t} f) / t") {
  Rng rng(888);
  int done = 0;
  while (done < 100) {
    std::size_t n = 1 + rng.next_u64() % 3;
    std::size_t k = 1 + rng.next_u64() % n;
    auto map = random_map(rng, n, k);
    int j = static_cast<int>(rng.next_u64() % 9) - 6;  // power of two in [2^-6, 2^3]
    if (j == 0) j = 1;
    Rational t = j > 0 ? Rational(1L << j) : Rational(1, 1L << (-j));
    double td = to_double(t);

    Vec x(n);
    for (auto& c : x) c = rng.uniform(-2.0, 2.0);

    auto g = scale_argument(map, Rational(1) / t);  // g_t(x) = f(x/t)
    double route1 = nu_at(g, x);

    Vec x_over_t(n);
    for (std::size_t c = 0; c < n; ++c) x_over_t[c] = x[c] / td;  // exact: t is 2^j
    double route2 = nu_at(map, x_over_t) / td;

    if (std::max(route1, route2) < 1e-9) continue;  // no relative baseline
    ++done;
    CHECK(std::abs(route1 - route2) <= 1e-9 * std::max(route1, route2));
  }
}

TEST_CASE("sard experiment on the disc, identity and constant fixtures") {
  SampleBudget budget{2048, 32, 200};
  const double delta = 5e-3;

  auto circle = parse_map("x^2 + y^2", {"x", "y"});
  auto report = sard_experiment(circle, box2(), {0.5, 0.25, 0.125}, budget, delta, 8, 19);
  REQUIRE(report.entries.size() == 3);
  for (const auto& entry : report.entries)
    CHECK(entry.thin.score <= entry.z * entry.z / 4.0 + 2 * delta);
  CHECK(report.entries[0].thin.score > report.entries[1].thin.score);
  CHECK(report.entries[1].thin.score > report.entries[2].thin.score);
  CHECK(report.scores_non_increasing);

  auto ident = parse_map("x; y", {"x", "y"});
  auto flat = sard_experiment(ident, box2(), {0.5, 0.25}, budget, delta, 8, 19);
  for (const auto& entry : flat.entries) {
    CHECK(entry.critical_points == 0);
    CHECK(entry.thin.score == 0.0);
  }

  auto constant = parse_map("3", {"x", "y"});
  auto single = sard_experiment(constant, box2(), {0.5, 0.25}, budget, delta, 8, 19);
  for (const auto& entry : single.entries) {
    CHECK(entry.critical_points > 0);
    CHECK(entry.thin.score == 0.0);  // a single value contains no ball
  }

  CHECK_THROWS_AS(sard_experiment(circle, box2(), {0.25, 0.5}, budget, delta, 8, 19),
                  NumericError);
}

TEST_CASE("z schedules can come from a Puiseux germ") {
  auto germ = PuiseuxSeries::monomial(1, 1, Rational(16));  // the germ T
  auto zs = z_schedule_from_germ(germ, {0.5, 0.25, 0.125});
  CHECK(zs == std::vector<double>{0.5, 0.25, 0.125});
}
