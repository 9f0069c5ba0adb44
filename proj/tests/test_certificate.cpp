#include "ratecert/analysis.hpp"
#include "ratecert/certificate.hpp"
#include "ratecert/simulate.hpp"

#include <doctest.h>

#include <random>

using namespace ratecert;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

double max_diff(const SymMatrix& a, const SymMatrix& b) { return (a.dense() - b.dense()).cwiseAbs().maxCoeff(); }

SymMatrix random_psd(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix f(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) f(i, j) = g(rng);
  return SymMatrix(f * f.transpose());
}

}  // namespace

TEST_SUITE("certificate") {
  TEST_CASE("at rho = 1 with no multiplier M collapses to M0 + M1") {
    for (const auto& name : builtin_family_names()) {
      const CertificateProblem prob(builtin_family(name), FunctionClass(1, 10));
      Vector th = Vector::Constant(prob.family.num_params(), 0.3);
      th(0) = 0.1;
      const SymMatrix P = SymMatrix::zero(prob.n());
      const DecreaseFactors t = decrease_factors(prob, th, 1.0, P);
      CHECK(max_diff(build_numeric(prob, th, 1.0, 0.0, P), t.M0 + t.M1) <= 1e-15);
    }
  }

  TEST_CASE("gradient at rho = 1 with P = 0 has the hand-computed form") {
    const CertificateProblem prob(builtin_family("gradient"), FunctionClass(1, 10));
    for (double h : {0.05, 0.1, 0.2}) {
      const SymMatrix M = build_numeric(prob, vec({h}), 1.0, 0.0, SymMatrix::zero(1));
      CHECK(M(0, 0) == doctest::Approx(0.0));
      CHECK(M(0, 1) == doctest::Approx(0.0));
      CHECK(M(1, 1) == doctest::Approx((10.0 * h * h - 2.0 * h) / 2.0));
      Certificate c;
      c.rho = 1.0;
      c.P = SymMatrix::zero(1);
      CHECK(verify_certificate(prob, vec({h}), c, 4).numeric_ok);
    }
  }

  TEST_CASE("M is affine in lambda and P and exactly symmetric") {
    std::mt19937_64 rng(1);
    for (const auto& name : builtin_family_names()) {
      const CertificateProblem prob(builtin_family(name), FunctionClass(1, 10));
      Vector th = Vector::Constant(prob.family.num_params(), 0.4);
      th(0) = 0.15;
      const Index n = prob.n();
      const SymMatrix P1 = random_psd(n, rng), P2 = random_psd(n, rng), Z = SymMatrix::zero(n);
      const double l1 = 0.7, l2 = 1.9, r2 = 0.6;
      const SymMatrix base = build_numeric(prob, th, r2, 0.0, Z);
      const SymMatrix lhs = build_numeric(prob, th, r2, l1 + l2, P1 + P2) - base;
      const SymMatrix rhs = (build_numeric(prob, th, r2, l1, P1) - base) + (build_numeric(prob, th, r2, l2, P2) - base);
      CHECK(max_diff(lhs, rhs) <= 1e-12);
      const Matrix d = build_numeric(prob, th, r2, l1, P1).dense();
      CHECK((d - d.transpose()).cwiseAbs().maxCoeff() == 0.0);
    }
  }

  TEST_CASE("symbolic and numeric construction agree") {
    std::mt19937_64 rng(2);
    for (const auto& name : builtin_family_names()) {
      const CertificateProblem prob(builtin_family(name), FunctionClass(2, 30));
      Vector th = Vector::Constant(prob.family.num_params(), 0.25);
      th(0) = 0.04;
      const SymMatrix P = random_psd(prob.n(), rng);
      const SymMatrix num = build_numeric(prob, th, 0.8, 1.3, P);

      const PolyMatrix constant = build_symbolic(prob, Unknowns{}, th, 0.8, 1.3, P);
      CHECK(max_diff(constant.evaluate({}), num) <= 1e-12);

      Unknowns all;
      all.theta = all.rho2 = all.lambda = all.P = true;
      const PolyMatrix sym = build_symbolic(prob, all);
      Point pt = prob.family.point(th);
      pt["rho2"] = 0.8;
      pt["lambda"] = 1.3;
      for (Index i = 0; i < prob.n(); ++i)
        for (Index j = i; j < prob.n(); ++j) pt[SymbolicInputs::p_name(prob.n(), i, j)] = P(i, j);
      CHECK(max_diff(sym.evaluate(pt), num) <= 1e-10);
    }
  }

  TEST_CASE("gradient determinant in closed form") {
    for (auto [m, L] : {std::pair{1.0, 10.0}, std::pair{2.0, 8.0}}) {
      const CertificateProblem prob(builtin_family("gradient"), FunctionClass(m, L));
      Unknowns u;
      u.theta = u.rho2 = u.lambda = u.P = u.scalar_P = true;
      const auto [tr, det] = trace_det_scalarize(build_symbolic(prob, u));
      CHECK(det.coefficient({{"lambda", 1}, {"h", 2}, {"p", 1}}) == doctest::Approx(-2.0 * m * L));
      CHECK(det.coefficient({{"lambda", 2}}) == doctest::Approx(-(L - m) * (L - m)));
      const Point pt{{"h", 0.1}, {"rho2", 0.7}, {"lambda", 0.3}, {"p", 2.0}};
      const Matrix v = build_numeric(prob, vec({0.1}), 0.7, 0.3, SymMatrix(2.0 * Matrix::Ones(1, 1))).dense();
      CHECK(det.evaluate(pt) == doctest::Approx(v.determinant()).epsilon(1e-12));
      CHECK(tr.evaluate(pt) == doctest::Approx(v.trace()).epsilon(1e-12));
    }
  }

  TEST_CASE("certified gradient rate verifies") {
    const CertificateProblem prob(builtin_family("gradient"), FunctionClass(1, 10));
    const AnalysisResult r = certify_rate(prob, vec({0.1}));
    const VerificationReport v = verify_certificate(prob, vec({0.1}), r.certificate);
    CHECK(v.passed);
    CHECK(v.trials == 20);
    CHECK(r.rho_star == doctest::Approx(0.9).epsilon(1e-3));
  }

  TEST_CASE("corrupted certificate is rejected") {
    const CertificateProblem prob(builtin_family("gradient"), FunctionClass(1, 10));
    Certificate c = certify_rate(prob, vec({0.1})).certificate;
    c.lambda = -c.lambda;
    const VerificationReport v = verify_certificate(prob, vec({0.1}), c);
    CHECK_FALSE(v.passed);
    CHECK_FALSE(v.numeric_ok);
    CHECK(v.max_eigenvalue > 0.0);
  }

  TEST_CASE("a non-monotone method still verifies") {
    const double kappa = 100.0, sk = 10.0;
    const CertificateProblem prob(builtin_family("nesterov"), FunctionClass(1, kappa));
    const Vector th = vec({1.0 / kappa, (sk - 1.0) / (sk + 1.0)});
    const AnalysisResult r = certify_rate(prob, th);
    CHECK(verify_certificate(prob, th, r.certificate).passed);

    std::mt19937_64 rng(3);
    const QuadraticFunction f = QuadraticFunction::random(prob.fc, 4, rng);
    Matrix xi0 = Matrix::Zero(2, 4);
    xi0.row(0).setConstant(1.0);
    xi0.row(1).setConstant(1.0);
    const Trajectory t = simulate(prob.family, th, f, xi0, 200);
    bool increased = false;
    for (std::size_t k = 0; k + 1 < t.objective_gaps.size(); ++k)
      increased = increased || t.objective_gaps[k + 1] > t.objective_gaps[k];
    CHECK(increased);
  }
}
