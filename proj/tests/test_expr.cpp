#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "gcv/expr.hpp"
#include "gcv/puiseux.hpp"
#include "gcv/rng.hpp"

using namespace gcv;

namespace {

double eval_at(const PolynomialMap& map, std::vector<double> x, std::size_t comp = 0) {
  return eval_map<double>(map, x)[comp];
}

// Random polynomial map: up to `max_terms` monomials per component with
// small rational coefficients and degree <= 3 per variable.
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

}  // namespace

TEST_CASE("parsing and evaluation") {
  auto map = parse_map("x + x^2*y", {"x", "y"});
  REQUIRE(map.n() == 2);
  REQUIRE(map.k() == 1);
  CHECK(eval_at(map, {1, 1}) == 2.0);
  CHECK(eval_at(map, {2, 3}) == 14.0);

  auto ident = parse_map("x; y", {"x", "y"});
  REQUIRE(ident.k() == 2);
  auto v = eval_map<double>(ident, std::vector<double>{3.0, -4.0});
  CHECK(v[0] == 3.0);
  CHECK(v[1] == -4.0);
}

TEST_CASE("syntax errors carry the offset") {
  try {
    parse_map("x + ", {"x"});
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 4);
  }

  CHECK_THROWS_AS(parse_map("x + z", {"x", "y"}), ParseError);       // undeclared
  CHECK_THROWS_AS(parse_map("x^-2", {"x"}), ParseError);             // negative exponent
  CHECK_THROWS_AS(parse_map("x^0.5", {"x"}), ParseError);            // non-integer exponent
  CHECK_THROWS_AS(parse_map("x^y", {"x", "y"}), ParseError);         // non-literal exponent
  CHECK_THROWS_AS(parse_map("x y", {"x", "y"}), ParseError);         // implicit product
  CHECK_THROWS_AS(parse_map("x / 2", {"x"}), ParseError);            // no division operator
  CHECK_THROWS_AS(parse_map("", {"x"}), ParseError);
}

TEST_CASE("precedence: ^ binds tighter than unary minus, which beats *") {
  auto m1 = parse_map("-x^2", {"x"});
  CHECK(eval_at(m1, {3}) == -9.0);

  auto m2 = parse_map("-2*x", {"x"});
  CHECK(eval_at(m2, {5}) == -10.0);

  auto m3 = parse_map("(0-3)^2", {"x"});
  CHECK(eval_at(m3, {1}) == 9.0);

  auto m4 = parse_map("2 - 3 - 4", {"x"});
  CHECK(eval_at(m4, {0}) == -5.0);

  auto m5 = parse_map("1/2*x + 0.25", {"x"});
  CHECK(eval_at(m5, {1}) == 0.75);
}

TEST_CASE("differentiation matches hand derivatives") {
  auto map = parse_map("x + x^2*y", {"x", "y"});
  auto jac = differentiate(map);
  REQUIRE(jac.rows == 1);
  REQUIRE(jac.cols == 2);

  // d(x + x^2 y) = [1 + 2xy, x^2]
  auto at = [&](double x, double y) {
    std::vector<double> p{x, y};
    return eval_jacobian<double>(jac, p);
  };
  CHECK(at(0, 0)[0] == 1.0);
  CHECK(at(0, 0)[1] == 0.0);
  CHECK(at(1, 1)[0] == 3.0);
  CHECK(at(1, 1)[1] == 1.0);

  auto constant = parse_map("5", {"x", "y"});
  auto cjac = differentiate(constant);
  auto cvals = eval_jacobian<double>(cjac, std::vector<double>{7.0, -2.0});
  CHECK(cvals[0] == 0.0);
  CHECK(cvals[1] == 0.0);

  auto ident = parse_map("x; y", {"x", "y"});
  auto ijac = differentiate(ident);
  auto m = eval_jacobian_matrix(ijac, std::vector<double>{0.3, 0.7});
  CHECK(m(0, 0) == 1.0);
  CHECK(m(0, 1) == 0.0);
  CHECK(m(1, 0) == 0.0);
  CHECK(m(1, 1) == 1.0);
}

TEST_CASE("evaluation over Puiseux scalars") {
  auto map = parse_map("x + x^2*y", {"x", "y"});
  std::vector<PuiseuxSeries> point{
      PuiseuxSeries::indeterminate(Rational(4)),
      PuiseuxSeries::constant(1),
  };
  auto out = eval_map<PuiseuxSeries>(map, point);
  REQUIRE(out.size() == 1);
  // x + x^2 y at (T, 1) = T + T^2
  REQUIRE(out[0].terms().size() == 2);
  CHECK(out[0].terms()[0].exponent == 1);
  CHECK(out[0].terms()[0].coefficient == 1);
  CHECK(out[0].terms()[1].exponent == 2);
  CHECK(out[0].terms()[1].coefficient == 1);
}

TEST_CASE("dimension mismatches are rejected") {
  auto map = parse_map("x + x^2*y", {"x", "y"});
  CHECK_THROWS_AS(eval_map<double>(map, std::vector<double>{1.0}), DimensionError);
  auto jac = differentiate(map);
  CHECK_THROWS_AS(eval_jacobian<double>(jac, std::vector<double>{1.0, 2.0, 3.0}),
                  DimensionError);
}

TEST_CASE("symbolic Jacobian agrees with central finite differences") {
  Rng rng(1234);
  const double h = 1e-5;
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t n = 1 + rng.next_u64() % 3;
    std::size_t k = 1 + rng.next_u64() % 3;
    auto map = random_map(rng, n, k);
    auto jac = differentiate(map);
    std::vector<double> x(n);
    for (auto& c : x) c = rng.uniform(-1.5, 1.5);

    auto sym = eval_jacobian<double>(jac, x);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        auto xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        double fd = (eval_map<double>(map, xp)[i] - eval_map<double>(map, xm)[i]) / (2 * h);
        double s = sym[i * n + j];
        CHECK(std::abs(s - fd) <= 1e-6 * (1.0 + std::max(std::abs(s), std::abs(fd))));
      }
  }
}

TEST_CASE("print / re-parse round-trips at value level") {
  Rng rng(777);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t n = 1 + rng.next_u64() % 3;
    auto map = random_map(rng, n, 1 + rng.next_u64() % 2);
    auto printed = to_string(map);
    auto reparsed = parse_map(printed, map.vars);
    REQUIRE(reparsed.k() == map.k());
    // Exact equality over the rational ring at random rational points.
    std::vector<Rational> x(n);
    for (auto& c : x)
      c = Rational(static_cast<long>(rng.next_u64() % 17) - 8,
                   1 + static_cast<long>(rng.next_u64() % 5));
    auto a = eval_map<Rational>(map, x);
    auto b = eval_map<Rational>(reparsed, x);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  }
}

TEST_CASE("rational evaluation matches double evaluation") {
  Rng rng(31337);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t n = 1 + rng.next_u64() % 3;
    auto map = random_map(rng, n, 1);
    std::vector<Rational> xr(n);
    std::vector<double> xd(n);
    for (std::size_t j = 0; j < n; ++j) {
      long num = static_cast<long>(rng.next_u64() % 2001) - 1000;
      xr[j] = Rational(num, 1);
      xd[j] = static_cast<double>(num);
    }
    double exact = to_double(eval_map<Rational>(map, xr)[0]);
    double approx = eval_map<double>(map, xd)[0];
    CHECK(std::abs(exact - approx) <= 1e-12 * (1.0 + std::abs(exact)));
  }
}

TEST_CASE("argument scaling composes exactly") {
  auto map = parse_map("x + x^2*y", {"x", "y"});
  auto scaled = scale_argument(map, Rational(1, 2));  // f(x/2, y/2)
  CHECK(eval_at(scaled, {2, 2}) == eval_at(map, {1, 1}));
  CHECK(eval_at(scaled, {4, 6}) == eval_at(map, {2, 3}));
}
