#pragma once

#include "ratecert/model.hpp"
#include "ratecert/simulate.hpp"

#include <cstdint>
#include <map>
#include <string>

namespace ratecert {

struct UnsupportedFamily : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct CertificateProblem {
  CertificateProblem(AlgorithmFamily family, FunctionClass fc)
      : family(std::move(family)), fc(fc) {}

  AlgorithmFamily family;
  FunctionClass fc;

  Index n() const { return family.state_dim(); }
};

/// V(xi) = f(x) - f* + (xi - xi*)'(P (x) I)(xi - xi*) decreases by rho^2 per step.
struct Certificate {
  double rho = 1.0;
  SymMatrix P;
  double lambda = 0.0;
  /// -max eig of M; nonnegative means the matrix inequality holds.
  double margin = 0.0;
};

/// The factors of the decrease condition, all (n+1) x (n+1).
struct DecreaseFactors {
  SymMatrix N1, N2, N3;
  SymMatrix M0, M1, M2, M3;
};

DecreaseFactors decrease_factors(const CertificateProblem& prob, const Vector& theta, double rho2,
                                 const SymMatrix& P);

/// M = M0 + a (rho2 M1 + (1 - rho2) M2) + lam M3. `a` weighs the
/// function-value part of V; a = 1 is the standard certificate.
SymMatrix build_numeric(const CertificateProblem& prob, const Vector& theta, double rho2, double lam,
                        const SymMatrix& P, double a = 1.0);

/// Symbolic inputs to M. Any entry may be a constant or a polynomial in
/// named indeterminates.
struct SymbolicInputs {
  std::map<std::string, Polynomial> theta;
  Polynomial rho2;
  Polynomial lambda;
  Polynomial a = Polynomial(1.0);
  PolyMatrix P;

  /// Name of the (i, j) entry of P: "p" for 1x1, otherwise "p11", "p12", ...
  static std::string p_name(Index n, Index i, Index j);
  /// P as a symmetric matrix of fresh indeterminates (or p * I when scalar).
  static PolyMatrix symbolic_P(Index n, bool scalar);
};

struct Unknowns {
  bool theta = false;
  bool rho2 = false;
  bool lambda = false;
  bool P = false;
  bool scalar_P = false;  // P = p * I instead of a full symmetric block
};

PolyMatrix build_symbolic(const CertificateProblem& prob, const SymbolicInputs& in);

/// Indeterminates named after the parameters, `rho2`, `lambda` and the P
/// entries; quantities that are not unknown take the supplied values.
PolyMatrix build_symbolic(const CertificateProblem& prob, const Unknowns& unknowns,
                          const Vector& theta = {}, double rho2 = 0.0, double lam = 0.0,
                          const SymMatrix& P = SymMatrix());

struct VerificationReport {
  bool passed = false;
  bool numeric_ok = false;
  double max_eigenvalue = 0.0;  // of M; must be <= 1e-8
  bool empirical_ok = false;
  int trials = 0;
  /// max over trials and steps of (V_{k+1} - rho^2 V_k) / max(1, V_k)
  double worst_decrease_violation = 0.0;
  /// max of (f(x_k) - f*) / (rho^{2k} V_0) - 1
  double worst_bound_violation = 0.0;
  std::string detail;
};

/// Checks -M >= -1e-8 and simulates `trials` random members of F(m_f, L_f)
/// (alternating quadratics and regularized log-sum-exp), 200 steps each.
VerificationReport verify_certificate(const CertificateProblem& prob, const Vector& theta,
                                      const Certificate& cert, int trials = 20,
                                      std::uint64_t seed = 1);

}  // namespace ratecert
