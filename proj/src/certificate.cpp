#include "ratecert/certificate.hpp"

#include <algorithm>
#include <sstream>

namespace ratecert {

namespace {

SymMatrix sandwich(const Matrix& T, const Matrix& mid) {
  return SymMatrix(Matrix(T.transpose() * mid * T));
}

Matrix middle(double diag, double off) {
  Matrix m(2, 2);
  m << diag, off, off, 0.0;
  return m;
}

// Rows [first; e_last] with the given first row.
Matrix transform(const Matrix& first_row) {
  const Index k = first_row.cols();
  Matrix T = Matrix::Zero(2, k);
  T.row(0) = first_row;
  T(1, k - 1) = 1.0;
  return T;
}

}  // namespace

DecreaseFactors decrease_factors(const CertificateProblem& prob, const Vector& theta, double rho2,
                                 const SymMatrix& P) {
  const Index n = prob.n();
  if (P.dim() != n)
    throw DimensionError("decrease_factors: P must be " + std::to_string(n) + " x " + std::to_string(n));
  const StateSpace ss = prob.family.matrices(theta);
  const double m = prob.fc.m_f(), L = prob.fc.L_f();

  Matrix AB(n, n + 1);
  AB << ss.A, ss.B;
  Matrix M0 = AB.transpose() * P.dense() * AB;
  M0.topLeftCorner(n, n) -= rho2 * P.dense();

  Matrix r1(1, n + 1), r2 = Matrix::Zero(1, n + 1), r3 = Matrix::Zero(1, n + 1);
  r1 << ss.E * ss.A - ss.C, ss.E * ss.B;
  r2.leftCols(n) = ss.C - ss.E;
  r3.leftCols(n) = ss.C;

  DecreaseFactors t;
  t.N1 = sandwich(transform(r1), middle(L / 2.0, 0.5));
  t.N2 = sandwich(transform(r2), middle(-m / 2.0, 0.5));
  t.N3 = sandwich(transform(r3), middle(-m / 2.0, 0.5));
  t.M0 = SymMatrix(M0);
  t.M1 = t.N1 + t.N2;
  t.M2 = t.N1 + t.N3;
  t.M3 = sandwich(transform(r3), qf_matrix(prob.fc).dense());
  return t;
}

SymMatrix build_numeric(const CertificateProblem& prob, const Vector& theta, double rho2, double lam,
                        const SymMatrix& P, double a) {
  const DecreaseFactors t = decrease_factors(prob, theta, rho2, P);
  return t.M0 + a * (rho2 * t.M1 + (1.0 - rho2) * t.M2) + lam * t.M3;
}

std::string SymbolicInputs::p_name(Index n, Index i, Index j) {
  if (n == 1) return "p";
  if (i > j) std::swap(i, j);
  return "p" + std::to_string(i + 1) + std::to_string(j + 1);
}

PolyMatrix SymbolicInputs::symbolic_P(Index n, bool scalar) {
  PolyMatrix P(n);
  if (scalar) {
    const Polynomial p = Polynomial::variable("p");
    for (Index i = 0; i < n; ++i) P.set(i, i, p);
    return P;
  }
  for (Index i = 0; i < n; ++i)
    for (Index j = i; j < n; ++j) P.set(i, j, Polynomial::variable(p_name(n, i, j)));
  return P;
}

namespace {

PolyArray sandwich(const PolyArray& T, const PolyArray& mid) {
  return T.transpose() * mid * T;
}

PolyArray poly_middle(const Polynomial& diag, double off) {
  PolyArray m(2, 2);
  m(0, 0) = diag;
  m(0, 1) = off;
  m(1, 0) = off;
  return m;
}

PolyArray transform(const PolyArray& first_row) {
  const Index k = first_row.cols();
  PolyArray T(2, k);
  for (Index j = 0; j < k; ++j) T(0, j) = first_row(0, j);
  T(1, k - 1) = 1.0;
  return T;
}

PolyArray pad_right(const PolyArray& row) {
  return hstack(row, PolyArray(1, 1));
}

}  // namespace

PolyMatrix build_symbolic(const CertificateProblem& prob, const SymbolicInputs& in) {
  const Index n = prob.n();
  const auto& sym = prob.family.symbolic();
  if (sym.A.rows() == 0) throw UnsupportedFamily("family '" + prob.family.name() + "' has no symbolic matrices");
  if (in.P.dim() != n)
    throw DimensionError("build_symbolic: P must be " + std::to_string(n) + " x " + std::to_string(n));

  const auto A = sym.A.substitute(in.theta), B = sym.B.substitute(in.theta);
  const auto C = sym.C.substitute(in.theta), E = sym.E.substitute(in.theta);
  const double m = prob.fc.m_f(), L = prob.fc.L_f();

  const PolyArray AB = hstack(A, B);
  PolyArray P = in.P.as_array();
  PolyArray M0 = AB.transpose() * P * AB;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) M0(i, j) = M0(i, j) - in.rho2 * P(i, j);

  const PolyArray r1 = hstack(E * A - C, E * B);
  const PolyArray N1 = sandwich(transform(r1), poly_middle(L / 2.0, 0.5));
  const PolyArray N2 = sandwich(transform(pad_right(C - E)), poly_middle(-m / 2.0, 0.5));
  const PolyArray N3 = sandwich(transform(pad_right(C)), poly_middle(-m / 2.0, 0.5));
  const PolyArray M3 = sandwich(transform(pad_right(C)), PolyArray::from(qf_matrix(prob.fc).dense()));
  const PolyArray M1 = N1 + N2, M2 = N1 + N3;

  const PolyArray total = M0 + in.a * (in.rho2 * M1 + (1.0 - in.rho2) * M2) + in.lambda * M3;
  return PolyMatrix(total, 1e-12);
}

PolyMatrix build_symbolic(const CertificateProblem& prob, const Unknowns& unknowns, const Vector& theta,
                          double rho2, double lam, const SymMatrix& P) {
  const Index n = prob.n();
  SymbolicInputs in;
  const auto& names = prob.family.param_names();
  if (!unknowns.theta && theta.size() != prob.family.num_params())
    throw DimensionError("build_symbolic: theta values required when theta is not unknown");
  for (std::size_t i = 0; i < names.size(); ++i)
    in.theta[names[i]] = unknowns.theta ? Polynomial::variable(names[i])
                                        : Polynomial(theta(static_cast<Index>(i)));
  in.rho2 = unknowns.rho2 ? Polynomial::variable("rho2") : Polynomial(rho2);
  in.lambda = unknowns.lambda ? Polynomial::variable("lambda") : Polynomial(lam);
  if (unknowns.P) {
    in.P = SymbolicInputs::symbolic_P(n, unknowns.scalar_P);
  } else {
    if (P.dim() != n) throw DimensionError("build_symbolic: P value has the wrong dimension");
    in.P = PolyMatrix::from(P);
  }
  return build_symbolic(prob, in);
}

VerificationReport verify_certificate(const CertificateProblem& prob, const Vector& theta,
                                      const Certificate& cert, int trials, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("verify_certificate: trials must be >= 1");
  VerificationReport rep;
  rep.trials = trials;
  const double rho2 = cert.rho * cert.rho;
  std::ostringstream detail;

  const SymMatrix M = build_numeric(prob, theta, rho2, cert.lambda, cert.P);
  rep.max_eigenvalue = max_eigenvalue(M);
  rep.numeric_ok = rep.max_eigenvalue <= 1e-8 && is_psd(cert.P, 1e-9) && cert.lambda >= -1e-12;
  if (!rep.numeric_ok)
    detail << "matrix inequality violated: max eig(M) = " << rep.max_eigenvalue
           << ", min eig(P) = " << min_eigenvalue(cert.P) << ", lambda = " << cert.lambda << "; ";

  constexpr int kSteps = 200;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> dim_dist(1, 5);
  rep.empirical_ok = true;
  for (int t = 0; t < trials; ++t) {
    const Index d = dim_dist(rng);
    std::unique_ptr<TestFunction> f;
    if (t % 2 == 0)
      f = std::make_unique<QuadraticFunction>(QuadraticFunction::random(prob.fc, d, rng));
    else
      f = std::make_unique<LogSumExpFunction>(LogSumExpFunction::random(prob.fc, d, 2 * d + 1, rng));
    Matrix xi0(prob.n(), d);
    for (Index i = 0; i < xi0.rows(); ++i)
      for (Index j = 0; j < d; ++j) xi0(i, j) = normal(rng);

    Trajectory traj;
    try {
      traj = simulate(prob.family, theta, *f, xi0, kSteps);
    } catch (const DivergenceError& e) {
      rep.empirical_ok = false;
      detail << "trial " << t << " (" << f->kind() << "): " << e.what() << "; ";
      continue;
    }
    const auto V = lyapunov_values(traj, cert.P, fixed_point_state(prob.family, theta, f->minimizer()));
    double decay = 1.0;
    for (std::size_t k = 0; k + 1 < V.size(); ++k) {
      const double viol = (V[k + 1] - rho2 * V[k]) / std::max(1.0, V[k]);
      rep.worst_decrease_violation = std::max(rep.worst_decrease_violation, viol);
      decay *= rho2;
      const double bound = decay * V[0];
      const double gap = traj.objective_gaps[k + 1];
      if (bound > 1e-9) rep.worst_bound_violation = std::max(rep.worst_bound_violation, gap / bound - 1.0);
      if (gap > bound * (1.0 + 1e-6) + 1e-12) {
        if (rep.empirical_ok)
          detail << "trial " << t << " (" << f->kind() << "): gap " << gap << " above rho^2k V0 = " << bound
                 << " at k = " << k + 1 << "; ";
        rep.empirical_ok = false;
      }
    }
  }
  if (rep.worst_decrease_violation > 1e-8) {
    rep.empirical_ok = false;
    detail << "Lyapunov decrease violated by " << rep.worst_decrease_violation << "; ";
  }
  rep.passed = rep.numeric_ok && rep.empirical_ok;
  rep.detail = detail.str();
  return rep;
}

}  // namespace ratecert
