#pragma once

#include "ratecert/certificate.hpp"
#include "ratecert/sdp.hpp"

#include <optional>
#include <vector>

namespace ratecert {

/// Even rho = 1 admits no certificate.
struct NeverFeasible : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The feasibility SDP did not reach a decision.
struct SolverFailure : std::runtime_error {
  SolverFailure(const std::string& what, double rho2, SdpStatus status)
      : std::runtime_error(what), rho2(rho2), status(status) {}
  double rho2;
  SdpStatus status;
};

struct AnalysisOptions {
  double eps = 1e-4;  // bisection tolerance on rho^2
  /// Minimum strict-feasibility margin (normalized units, see feasibility_at)
  /// for a rho^2 to count as feasible. Kept well above the solver tolerance
  /// so that accepted witnesses survive exact re-evaluation.
  double margin_threshold = 1e-7;
  SdpOptions sdp;
};

struct FeasibilityResult {
  bool feasible = false;
  /// max t with -M >= t I, P >= t I, lambda >= t, a >= t under a + lambda + tr P = 1
  /// (computed for the class rescaled to (m/L, 1)).
  double margin = 0.0;
  /// Certificate rescaled to a = 1, present when feasible.
  std::optional<Certificate> certificate;
  /// Raw SDP solution; when infeasible its dual is the separating certificate.
  SdpSolution solution;
};

struct BisectionStep {
  double rho2;
  bool feasible;
  double margin;
};

struct AnalysisResult {
  double rho_star = 1.0;
  Certificate certificate;
  std::vector<BisectionStep> bisection_trace;
  int iterations = 0;  // number of feasibility SDPs solved
  /// Empirical check of `certificate`, when requested (see verify_design).
  std::optional<VerificationReport> verification;
};

/// Decides whether the decrease condition is strictly feasible at rho2.
///
/// The SDP searches over V = a (f - f*) + (xi - xi*)'(P (x) I)(xi - xi*) with
/// a + lambda + tr P = 1, so that M is linear in (a, lambda, P); a feasible
/// witness is rescaled by 1/a.
FeasibilityResult feasibility_at(const CertificateProblem& prob, const Vector& theta, double rho2,
                                 const AnalysisOptions& opts = {});

/// Bisection on rho^2 over [0, 1] after a probe at rho^2 = 1.
AnalysisResult certify_rate(const CertificateProblem& prob, const Vector& theta,
                            const AnalysisOptions& opts = {});
AnalysisResult certify_rate(const CertificateProblem& prob, const Vector& theta, double eps);

}  // namespace ratecert
