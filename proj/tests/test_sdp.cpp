#include "ratecert/sdp.hpp"
#include "ratecert/sdpa_io.hpp"

#include <doctest.h>

#include <limits>
#include <random>

using namespace ratecert;

namespace {

// min t s.t. t I - D >= 0, written as X = t I - D with t free.
SdpProblem lambda_max_problem(const Matrix& D) {
  const Index n = D.rows();
  SdpProblem p;
  p.blocks = {n};
  p.num_free = 1;
  p.free_cost = Vector::Ones(1);
  for (Index i = 0; i < n; ++i)
    for (Index j = i; j < n; ++j) {
      SdpConstraint c;
      c.entries.push_back({0, i, j, i == j ? 1.0 : 0.5});
      if (i == j) c.free_coeffs.push_back({0, -1.0});
      c.b = -D(i, j);
      p.constraints.push_back(c);
    }
  return p;
}

// min c'x s.t. A x = b, x >= 0 as an SDP with 1x1 blocks.
SdpProblem lp_problem(const Matrix& A, const Vector& b, const Vector& c) {
  SdpProblem p;
  p.blocks.assign(static_cast<std::size_t>(A.cols()), 1);
  for (Index j = 0; j < A.cols(); ++j) p.objective.push_back({j, 0, 0, c(j)});
  for (Index i = 0; i < A.rows(); ++i) {
    SdpConstraint con;
    for (Index j = 0; j < A.cols(); ++j) con.entries.push_back({j, 0, 0, A(i, j)});
    con.b = b(i);
    p.constraints.push_back(con);
  }
  return p;
}

// Brute force over bases: every vertex of {A x = b, x >= 0} is a basic
// feasible solution.
double lp_by_vertices(const Matrix& A, const Vector& b, const Vector& c) {
  const Index m = A.rows(), n = A.cols();
  double best = std::numeric_limits<double>::infinity();
  std::vector<bool> mask(static_cast<std::size_t>(n), false);
  std::fill(mask.begin(), mask.begin() + m, true);
  do {
    std::vector<Index> cols;
    for (Index j = 0; j < n; ++j)
      if (mask[static_cast<std::size_t>(j)]) cols.push_back(j);
    Matrix B(m, m);
    for (Index k = 0; k < m; ++k) B.col(k) = A.col(cols[static_cast<std::size_t>(k)]);
    Eigen::FullPivLU<Matrix> lu(B);
    if (!lu.isInvertible()) continue;
    const Vector xb = lu.solve(b);
    if (xb.minCoeff() < -1e-12) continue;
    double obj = 0.0;
    for (Index k = 0; k < m; ++k) obj += c(cols[static_cast<std::size_t>(k)]) * xb(k);
    best = std::min(best, obj);
  } while (std::prev_permutation(mask.begin(), mask.end()));
  return best;
}

void check_optimal_solution(const SdpProblem& p, const SdpSolution& s, double tol) {
  for (const auto& X : s.X) CHECK(is_psd(SymMatrix(X), 10.0 * tol * std::max(1.0, X.norm())));
  for (const auto& c : p.constraints) {
    double lhs = inner(c.entries, s.X);
    for (const auto& [l, f] : c.free_coeffs) lhs += f * s.u(l);
    CHECK(std::abs(lhs - c.b) <= 10.0 * tol * (1.0 + std::abs(c.b)));
  }
  CHECK(s.primal_objective >= s.dual_objective - 1e-9 * (1.0 + std::abs(s.primal_objective)));
}

const char* kSdpaExample =
    "\"Example 1: mDim = 3, nBLOCK = 1, {2}\n"
    "   3  =  mDIM\n"
    "   1  =  nBLOCK\n"
    "   2  =  bLOCKsTRUCT\n"
    "{48, -8, 20}\n"
    "0 1 1 1 -11\n"
    "0 1 2 2 23\n"
    "1 1 1 1 10\n"
    "1 1 1 2 4\n"
    "2 1 2 2 -8\n"
    "3 1 1 2 -8\n"
    "3 1 2 2 -2\n";

}  // namespace

TEST_SUITE("sdp") {
  TEST_CASE("largest eigenvalue of diag(1, 3)") {
    Matrix D = Matrix::Zero(2, 2);
    D.diagonal() << 1.0, 3.0;
    const SdpProblem p = lambda_max_problem(D);
    const SdpSolution s = solve_sdp(p);
    REQUIRE(s.status == SdpStatus::Optimal);
    CHECK(s.u(0) == doctest::Approx(3.0).epsilon(1e-6));
    check_optimal_solution(p, s, 1e-8);
  }

  TEST_CASE("largest eigenvalue family") {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> g;
    for (Index n = 2; n <= 7; ++n) {
      Matrix a(n, n);
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) a(i, j) = g(rng);
      const Matrix D = 0.5 * (a + a.transpose());
      const SdpProblem p = lambda_max_problem(D);
      const SdpSolution s = solve_sdp(p);
      REQUIRE(s.status == SdpStatus::Optimal);
      CHECK(std::abs(s.primal_objective - max_eigenvalue(SymMatrix(D))) <= 1e-6);
      check_optimal_solution(p, s, 1e-8);
    }
  }

  TEST_CASE("diagonal SDPs match vertex enumeration") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.1, 2.0);
    for (int trial = 0; trial < 10; ++trial) {
      const Index m = 2 + trial % 2, n = 5;
      Matrix A(m, n);
      Vector x0(n), c(n);
      for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < n; ++j) A(i, j) = u(rng);
      for (Index j = 0; j < n; ++j) {
        x0(j) = pos(rng);
        c(j) = pos(rng);
      }
      const Vector b = A * x0;
      const SdpProblem p = lp_problem(A, b, c);
      const SdpSolution s = solve_sdp(p);
      REQUIRE(s.status == SdpStatus::Optimal);
      CHECK(std::abs(s.primal_objective - lp_by_vertices(A, b, c)) <= 1e-6);
      check_optimal_solution(p, s, 1e-8);
    }
  }

  TEST_CASE("negative trace is infeasible") {
    SdpProblem p;
    p.blocks = {3};
    SdpConstraint c;
    for (Index i = 0; i < 3; ++i) c.entries.push_back({0, i, i, 1.0});
    c.b = -1.0;
    p.constraints.push_back(c);
    CHECK(solve_sdp(p).status == SdpStatus::Infeasible);
  }

  TEST_CASE("unbounded objective") {
    // min -X11 with only X12 pinned
    SdpProblem p;
    p.blocks = {2};
    p.objective.push_back({0, 0, 0, -1.0});
    SdpConstraint c;
    c.entries.push_back({0, 0, 1, 0.5});
    c.b = 1.0;
    p.constraints.push_back(c);
    CHECK(solve_sdp(p).status == SdpStatus::Unbounded);
  }

  TEST_CASE("feasibility margins") {
    SdpProblem p;
    p.blocks = {2};
    SdpConstraint c;
    c.entries.push_back({0, 0, 0, 1.0});
    c.b = 1.0;
    p.constraints.push_back(c);
    const MarginResult r = feasibility_margin(p);
    CHECK(r.margin == doctest::Approx(1.0).epsilon(1e-6));

    p.constraints[0].b = -1.0;
    CHECK(feasibility_margin(p).margin < 0.0);

    SdpProblem empty;
    empty.blocks = {2};
    CHECK(feasibility_margin(empty).margin == std::numeric_limits<double>::infinity());
  }

  TEST_CASE("solves are reproducible") {
    Matrix D(3, 3);
    D << 1, 2, 0, 2, -1, 1, 0, 1, 3;
    const SdpProblem p = lambda_max_problem(D);
    const SdpSolution a = solve_sdp(p), b = solve_sdp(p);
    CHECK(a.primal_objective == b.primal_objective);
    CHECK(a.iterations == b.iterations);
    CHECK(a.y == b.y);
    CHECK(a.X[0] == b.X[0]);
  }

  TEST_CASE("malformed problems are rejected") {
    SdpProblem p;
    p.blocks = {2};
    SdpConstraint c;
    c.entries.push_back({0, 2, 0, 1.0});
    p.constraints.push_back(c);
    CHECK_THROWS(solve_sdp(p));
  }

  TEST_CASE("SDPA example file") {
    const SdpProblem p = parse_sdpa(kSdpaExample);
    CHECK(p.blocks.size() == 1);
    CHECK(p.constraints.size() == 3);
    const SdpSolution s = solve_sdp(p);
    REQUIRE(s.status == SdpStatus::Optimal);
    // The three equalities pin Y = [[5.9, -1.375], [-1.375, 1]], which is
    // PSD, so min <C, X> = -<F0, Y> = 41.9.
    CHECK(s.primal_objective == doctest::Approx(41.9).epsilon(1e-6));
  }

  TEST_CASE("SDPA round trip, including free variables and diagonal blocks") {
    Matrix D(3, 3);
    D << 0.5, 1, 0, 1, -2, 0.25, 0, 0.25, 1;
    const SdpProblem p = lambda_max_problem(D);
    const std::string text = to_sdpa(p);
    const SdpProblem q = parse_sdpa(text);
    CHECK(q.num_free == 0);
    const SdpSolution a = solve_sdp(p), b = solve_sdp(q);
    REQUIRE(b.status == SdpStatus::Optimal);
    CHECK(a.primal_objective == doctest::Approx(b.primal_objective).epsilon(1e-6));
    CHECK(to_sdpa(q) == to_sdpa(parse_sdpa(to_sdpa(q))));
  }

  TEST_CASE("SDPA parse errors carry a line number") {
    CHECK_THROWS_AS(parse_sdpa("1\n1\n2\n1.0\n1 1 3 1 2.0\n"), ParseError);
    CHECK_THROWS_WITH_AS(parse_sdpa("1\n1\n2\nabc\n"), doctest::Contains("line 4"), ParseError);
    CHECK_THROWS_AS(parse_sdpa("1\n"), ParseError);
  }
}
