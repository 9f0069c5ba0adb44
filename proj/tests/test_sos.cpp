#include "ratecert/sos.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace ratecert;

namespace {

const Polynomial x = Polynomial::variable("x");
const Polynomial y = Polynomial::variable("y");

Polynomial motzkin() { return x.pow(4) * y.pow(2) + x.pow(2) * y.pow(4) - 3.0 * x * x * y * y + 1.0; }

void check_reconstructs(const SosCertificate& c, const Polynomial& p) {
  CHECK(c.polynomial().approx_equal(p, 1e-7 * std::max(1.0, p.max_abs_coefficient())));
}

struct Constrained {
  Polynomial objective;
  std::vector<Polynomial> g;
  std::vector<Point> feasible;  // sample feasible points
};

std::vector<Constrained> constrained_problems() {
  return {
      {x * y, {1.0 - x * x, 1.0 - y * y}, {{{"x", 1.0}, {"y", -1.0}}, {{"x", 0.3}, {"y", 0.2}}}},
      {x.pow(3) - x, {1.0 - x * x}, {{{"x", 1.0 / std::sqrt(3.0)}}, {{"x", -0.5}}}},
      {x.pow(4) * y + y * y - x, {1.0 - x * x - y * y, x}, {{{"x", 0.9}, {"y", -0.3}}, {{"x", 0.6}, {"y", 0.1}}}},
  };
}

}  // namespace

TEST_SUITE("sos") {
  TEST_CASE("monomial basis order and size") {
    const MonomialBasis b({"x", "y"}, 2);
    REQUIRE(b.size() == 6);
    CHECK(MonomialBasis::count(2, 2) == 6);
    CHECK(MonomialBasis::count(7, 4) == 330);
    CHECK(b.monomial(0) == Polynomial(1.0));
    CHECK(b.monomial(1) == x);
    CHECK(b.monomial(2) == y);
    CHECK(b.monomial(3) == x * x);
    CHECK(b.monomial(4) == x * y);
    CHECK(b.monomial(5) == y * y);
  }

  TEST_CASE("a perfect square is SOS") {
    const Polynomial p = x.pow(4) + 2.0 * x * x + 1.0;
    const SosCheck r = check_sos(p);
    REQUIRE(r.is_sos);
    REQUIRE(r.certificate);
    check_reconstructs(*r.certificate, p);
    CHECK(is_psd(r.certificate->gram, 1e-9));
  }

  TEST_CASE("polynomials negative somewhere are not SOS") {
    const SosCheck r = check_sos(x * x - 1.0);
    CHECK_FALSE(r.is_sos);
    REQUIRE(r.separating);
    CHECK(r.separating->apply(x * x - 1.0) < 0.0);
    CHECK_THROWS_AS(check_sos(x.pow(3)), std::invalid_argument);
  }

  TEST_CASE("the Motzkin polynomial is nonnegative but not SOS") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 1000; ++i) CHECK(motzkin().evaluate(Point{{"x", u(rng)}, {"y", u(rng)}}) >= 0.0);
    const SosCheck r = check_sos(motzkin());
    CHECK_FALSE(r.is_sos);
    CHECK(r.margin < 0.0);
  }

  TEST_CASE("SOS polynomials are nonnegative at random points") {
    const Polynomial p = (x * x - y + 0.5).pow(2) + (x * y - 1.0).pow(2) + 0.1 * y * y;
    const SosCheck r = check_sos(p);
    REQUIRE(r.is_sos);
    check_reconstructs(*r.certificate, p);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 10000; ++i) REQUIRE(p.evaluate(Point{{"x", u(rng)}, {"y", u(rng)}}) >= -1e-6);
  }

  TEST_CASE("SOS matrices") {
    Matrix k(2, 2);
    k << 2, 1, 1, 2;
    CHECK(check_sos_matrix(PolyMatrix::from(SymMatrix(k))).is_sos);

    PolyMatrix square(2);
    square.set(0, 0, Polynomial(1.0));
    square.set(0, 1, x);
    square.set(1, 1, x * x);
    const SosCheck r = check_sos_matrix(square);
    REQUIRE(r.is_sos);
    CHECK(r.certificate->matrix().evaluate(Point{{"x", 1.7}}).dense().isApprox(
        square.evaluate(Point{{"x", 1.7}}).dense(), 1e-6));

    PolyMatrix indefinite(2);
    indefinite.set(0, 0, Polynomial(1.0));
    indefinite.set(0, 1, x);
    CHECK_FALSE(check_sos_matrix(indefinite).is_sos);
    CHECK(min_eigenvalue(indefinite.evaluate(Point{{"x", 1.0}})) < 0.0);
  }

  TEST_CASE("unconstrained lower bounds") {
    CHECK(lower_bound_unconstrained(x * x).gamma == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(std::abs(lower_bound_unconstrained((x * x - 1.0).pow(2)).gamma) <= 1e-6);
    const LowerBoundResult r = lower_bound_unconstrained(x.pow(4) - 3.0 * x * x);
    CHECK(std::abs(r.gamma + 2.25) <= 1e-6);
    CHECK(r.residual <= 1e-7);
    check_reconstructs(r.s0, x.pow(4) - 3.0 * x * x - r.gamma);
  }

  TEST_CASE("unbounded and odd polynomials") {
    CHECK_THROWS_AS(lower_bound_unconstrained(1.0 - x.pow(4)), UnboundedBelow);
    CHECK_THROWS(lower_bound_unconstrained(x.pow(3)));
  }

  TEST_CASE("constrained lower bounds") {
    const LowerBoundResult a = lower_bound_constrained(x, {1.0 - x * x}, 1);
    CHECK(a.gamma == doctest::Approx(-1.0).epsilon(1e-6));
    const LowerBoundResult b = lower_bound_constrained(x * x, {x - 1.0});
    CHECK(b.gamma == doctest::Approx(1.0).epsilon(1e-6));
  }

  TEST_CASE("empty feasible set") {
    CHECK_THROWS_AS(lower_bound_constrained(x, {x - 2.0, 1.0 - x}, 1), EmptyFeasibleSet);
  }

  TEST_CASE("moment candidates") {
    const Point a = moment_candidate(lower_bound_unconstrained((x - 2.0).pow(2)));
    CHECK(a.at("x") == doctest::Approx(2.0).epsilon(1e-4));
    const Point b = moment_candidate(lower_bound_constrained(x, {1.0 - x * x}, 1));
    CHECK(b.at("x") == doctest::Approx(-1.0).epsilon(1e-4));
  }

  TEST_CASE("lower bounds never exceed feasible values") {
    for (const auto& pr : constrained_problems()) {
      const LowerBoundResult r = lower_bound_constrained(pr.objective, pr.g);
      for (const auto& pt : pr.feasible) CHECK(r.gamma <= pr.objective.evaluate(pt) + 1e-6);
    }
  }

  TEST_CASE("raising the order never lowers the bound") {
    for (const auto& pr : constrained_problems()) {
      int lowest = 1;
      for (const auto& g : pr.g) lowest = std::max(lowest, (g.degree() + 1) / 2);
      lowest = std::max(lowest, (pr.objective.degree() + 1) / 2);
      double previous = -std::numeric_limits<double>::infinity();
      for (int order = lowest; order <= lowest + 2; ++order) {
        const double gamma = lower_bound_constrained(pr.objective, pr.g, order).gamma;
        CHECK(gamma >= previous - 1e-6);
        previous = gamma;
      }
    }
  }

  TEST_CASE("size limit") {
    Polynomial p(1.0);
    for (int i = 0; i < 10; ++i) p += Polynomial::variable("v" + std::to_string(i)).pow(6);
    CHECK_THROWS_AS(check_sos(p), SizeError);
  }
}
