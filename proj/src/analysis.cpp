#include "ratecert/analysis.hpp"

#include <cmath>
#include <sstream>

namespace ratecert {

namespace {

enum Block : Index { kS = 0, kP = 1, kA = 2, kLambda = 3 };

SdpProblem feasibility_sdp(const CertificateProblem& prob, const Vector& theta, double rho2) {
  const Index n = prob.n(), q = n + 1;
  const SymMatrix zeroP(n);
  const SymMatrix Ma = build_numeric(prob, theta, rho2, 0.0, zeroP, 1.0);
  const SymMatrix Ml = build_numeric(prob, theta, rho2, 1.0, zeroP, 0.0);
  std::vector<std::pair<std::pair<Index, Index>, SymMatrix>> Mp;
  for (Index i = 0; i < n; ++i)
    for (Index j = i; j < n; ++j) {
      SymMatrix E(n);
      E.set(i, j, 1.0);
      Mp.push_back({{i, j}, build_numeric(prob, theta, rho2, 0.0, E, 0.0)});
    }

  SdpProblem sdp;
  sdp.blocks = {q, n, 1, 1};
  // S + M(a, lambda, P) = 0, entrywise on the upper triangle
  for (Index r = 0; r < q; ++r)
    for (Index c = r; c < q; ++c) {
      SdpConstraint con;
      con.entries.push_back({kS, r, c, r == c ? 1.0 : 0.5});
      if (Ma(r, c) != 0.0) con.entries.push_back({kA, 0, 0, Ma(r, c)});
      if (Ml(r, c) != 0.0) con.entries.push_back({kLambda, 0, 0, Ml(r, c)});
      for (const auto& [ij, B] : Mp) {
        const double v = B(r, c);
        if (v == 0.0) continue;
        const auto [i, j] = ij;
        con.entries.push_back({kP, i, j, i == j ? v : 0.5 * v});
      }
      sdp.constraints.push_back(std::move(con));
    }
  SdpConstraint norm;
  norm.entries.push_back({kA, 0, 0, 1.0});
  norm.entries.push_back({kLambda, 0, 0, 1.0});
  for (Index i = 0; i < n; ++i) norm.entries.push_back({kP, i, i, 1.0});
  norm.b = 1.0;
  sdp.constraints.push_back(std::move(norm));
  return sdp;
}

}  // namespace

FeasibilityResult feasibility_at(const CertificateProblem& prob, const Vector& theta, double rho2,
                                 const AnalysisOptions& opts) {
  if (!(rho2 >= 0.0 && rho2 <= 1.0))
    throw std::invalid_argument("feasibility_at: rho2 must lie in [0, 1], got " + std::to_string(rho2));
  const double L = prob.fc.L_f();
  const CertificateProblem unit(prob.family, FunctionClass(prob.fc.m_f() / L, 1.0));
  const Vector theta_hat = prob.family.nondimensionalize(theta, prob.fc);

  const MarginResult mr = feasibility_margin(feasibility_sdp(unit, theta_hat, rho2), opts.sdp);
  FeasibilityResult res;
  res.solution = mr.solution;
  if (mr.status != SdpStatus::Optimal) {
    std::ostringstream msg;
    msg << "feasibility SDP at rho2 = " << rho2 << " ended with status " << to_string(mr.status);
    throw SolverFailure(msg.str(), rho2, mr.status);
  }
  res.margin = mr.margin;
  res.feasible = mr.margin >= opts.margin_threshold;
  if (!res.feasible) return res;

  const double a = mr.X[kA](0, 0);
  Certificate cert;
  cert.rho = std::sqrt(rho2);
  // back to the original class: P = L P_hat, lambda = lambda_hat / L
  cert.P = SymMatrix(Matrix(mr.X[kP] * (L / a)));
  cert.lambda = mr.X[kLambda](0, 0) / a / L;
  cert.margin = -max_eigenvalue(build_numeric(prob, theta, rho2, cert.lambda, cert.P));
  res.certificate = cert;
  return res;
}

AnalysisResult certify_rate(const CertificateProblem& prob, const Vector& theta, const AnalysisOptions& opts) {
  if (!(opts.eps > 0.0 && opts.eps <= 1.0))
    throw std::invalid_argument("certify_rate: eps must lie in (0, 1]");
  AnalysisResult out;
  auto probe = [&](double rho2) {
    FeasibilityResult r = feasibility_at(prob, theta, rho2, opts);
    ++out.iterations;
    out.bisection_trace.push_back({rho2, r.feasible, r.margin});
    return r;
  };

  FeasibilityResult top = probe(1.0);
  if (!top.feasible) {
    std::ostringstream msg;
    msg << "family '" << prob.family.name() << "' admits no certificate even at rho = 1 (margin " << top.margin
        << ")";
    throw NeverFeasible(msg.str());
  }
  Certificate best = *top.certificate;
  double lo = 0.0, hi = 1.0;
  while (hi - lo > opts.eps) {
    const double mid = 0.5 * (lo + hi);
    FeasibilityResult r = probe(mid);
    if (r.feasible) {
      hi = mid;
      best = *r.certificate;
    } else {
      lo = mid;
    }
  }
  out.rho_star = std::sqrt(hi);
  out.certificate = best;
  return out;
}

AnalysisResult certify_rate(const CertificateProblem& prob, const Vector& theta, double eps) {
  AnalysisOptions opts;
  opts.eps = eps;
  return certify_rate(prob, theta, opts);
}

}  // namespace ratecert
