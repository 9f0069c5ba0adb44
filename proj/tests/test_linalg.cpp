#include "ratecert/linalg.hpp"

#include <doctest.h>

#include <numeric>
#include <random>
#include <vector>

using namespace ratecert;

namespace {

// det by cofactor expansion along the first row; independent of any
// factorization.
long double cofactor_det(const std::vector<std::vector<long double>>& a) {
  const std::size_t n = a.size();
  if (n == 1) return a[0][0];
  long double det = 0.0L;
  for (std::size_t c = 0; c < n; ++c) {
    std::vector<std::vector<long double>> minor;
    for (std::size_t r = 1; r < n; ++r) {
      std::vector<long double> row;
      for (std::size_t k = 0; k < n; ++k)
        if (k != c) row.push_back(a[r][k]);
      minor.push_back(row);
    }
    det += (c % 2 ? -1.0L : 1.0L) * a[0][c] * cofactor_det(minor);
  }
  return det;
}

// Coefficients of det(tI - A), lowest degree first, by interpolating the
// cofactor determinant at n + 1 integer nodes.
std::vector<long double> char_poly(const Matrix& A) {
  const Index n = A.rows();
  std::vector<long double> nodes, values;
  for (Index k = 0; k <= n; ++k) {
    const long double t = static_cast<long double>(k) - n / 2.0L;
    std::vector<std::vector<long double>> m(n, std::vector<long double>(n));
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) m[i][j] = (i == j ? t : 0.0L) - A(i, j);
    nodes.push_back(t);
    values.push_back(cofactor_det(m));
  }
  // Newton divided differences, then expand to monomial coefficients.
  std::vector<long double> dd = values;
  for (std::size_t level = 1; level < dd.size(); ++level)
    for (std::size_t i = dd.size() - 1; i >= level; --i)
      dd[i] = (dd[i] - dd[i - 1]) / (nodes[i] - nodes[i - level]);
  std::vector<long double> coef(1, dd.back());
  for (std::size_t i = dd.size() - 1; i-- > 0;) {
    std::vector<long double> next(coef.size() + 1, 0.0L);
    for (std::size_t k = 0; k < coef.size(); ++k) {
      next[k + 1] += coef[k];
      next[k] -= nodes[i] * coef[k];
    }
    next[0] += dd[i];
    coef = next;
  }
  return coef;
}

std::vector<long double> poly_from_roots(const Vector& roots) {
  std::vector<long double> coef(1, 1.0L);
  for (Index r = 0; r < roots.size(); ++r) {
    std::vector<long double> next(coef.size() + 1, 0.0L);
    for (std::size_t k = 0; k < coef.size(); ++k) {
      next[k + 1] += coef[k];
      next[k] -= roots(r) * coef[k];
    }
    coef = next;
  }
  return coef;
}

SymMatrix random_sym(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix a(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) a(i, j) = g(rng);
  return SymMatrix(0.5 * (a + a.transpose()));
}

}  // namespace

TEST_SUITE("linalg") {
  TEST_CASE("eigenvalues of identity and diagonal matrices") {
    const Vector e = eigenvalues(SymMatrix::identity(3));
    for (Index i = 0; i < 3; ++i) CHECK(e(i) == doctest::Approx(1.0));
    Matrix d = Matrix::Zero(3, 3);
    d.diagonal() << 5.0, -2.0, 0.0;
    const Vector ed = eigenvalues(SymMatrix(d));
    CHECK(ed(0) == doctest::Approx(-2.0));
    CHECK(ed(1) == doctest::Approx(0.0));
    CHECK(ed(2) == doctest::Approx(5.0));
  }

  TEST_CASE("eigenvalues agree with the characteristic polynomial") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 5; ++trial) {
      const SymMatrix m = random_sym(5, rng);
      const auto oracle = char_poly(m.dense());
      const auto ours = poly_from_roots(eigenvalues(m));
      REQUIRE(oracle.size() == ours.size());
      for (std::size_t k = 0; k < ours.size(); ++k)
        CHECK(static_cast<double>(ours[k]) == doctest::Approx(static_cast<double>(oracle[k])).epsilon(1e-8));
    }
  }

  TEST_CASE("eigenvalues sum to the trace") {
    std::mt19937_64 rng(11);
    for (Index n = 1; n <= 12; ++n) {
      const SymMatrix m = random_sym(n, rng);
      const double tr = m.trace();
      CHECK(std::abs(eigenvalues(m).sum() - tr) <= 1e-9 * std::max(1.0, std::abs(tr)));
    }
  }

  TEST_CASE("is_psd") {
    CHECK(is_psd(SymMatrix::identity(3), 0.0));
    Matrix swap(2, 2);
    swap << 0, 1, 1, 0;
    CHECK_FALSE(is_psd(SymMatrix(swap), 1e-9));
    CHECK(is_psd(SymMatrix(Matrix::Ones(2, 2)), 1e-9));

    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      const SymMatrix m = random_sym(4, rng);
      if (is_psd(m, 0.0))
        for (Index i = 0; i < 4; ++i) CHECK(m(i, i) >= 0.0);
    }
  }

  TEST_CASE("kron_reduce inverts kron_expand") {
    CHECK(kron_reduce(SymMatrix::identity(6), 3) == SymMatrix::identity(2));
    Matrix t(2, 2);
    t << 2, -1, -1, 2;
    CHECK(kron_reduce(kron_expand(SymMatrix(t), 4), 4) == SymMatrix(t));

    std::mt19937_64 rng(5);
    for (Index d = 1; d <= 8; ++d) {
      const SymMatrix r = random_sym(3, rng);
      const SymMatrix back = kron_reduce(kron_expand(r, d), d);
      CHECK((back.dense() - r.dense()).cwiseAbs().maxCoeff() == 0.0);
    }
  }

  TEST_CASE("kron_reduce rejects non-Kronecker input") {
    SymMatrix full = kron_expand(SymMatrix::identity(2), 3);
    full.set(0, 1, 0.25);
    CHECK_THROWS_AS(kron_reduce(full, 3), StructureError);
    CHECK_THROWS_AS(kron_reduce(full, 4), DimensionError);
  }
}
