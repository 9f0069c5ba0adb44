#pragma once

#include "ratecert/polynomial.hpp"
#include "ratecert/sdp.hpp"

#include <optional>
#include <vector>

namespace ratecert {

/// Relaxation has no gamma at this order (caller may escalate).
struct RelaxationInfeasible : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// p - gamma is SOS for no gamma.
struct UnboundedBelow : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The constraints admit -1 = s0 + sum s_i g_i, i.e. the set is empty.
struct EmptyFeasibleSet : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Moment matrix too far from rank one to read off a point.
struct NoCandidate : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The SDP behind a relaxation ended without a decision.
struct RelaxationSolverError : std::runtime_error {
  RelaxationSolverError(const std::string& what, SdpStatus status) : std::runtime_error(what), status(status) {}
  SdpStatus status;
};

/// All monomials of total degree <= d: 1, x1, ..., xn, then degree 2 and up,
/// each degree in descending lex order (x1^2, x1 x2, ...).
class MonomialBasis {
 public:
  MonomialBasis() = default;
  MonomialBasis(std::vector<std::string> vars, int degree);
  /// Explicit monomial list (used for the bilinear z x basis).
  MonomialBasis(std::vector<std::string> vars, std::vector<Exponent> monomials);

  static Index count(Index nvars, int degree);

  const std::vector<std::string>& vars() const { return vars_; }
  int degree() const { return degree_; }
  Index size() const { return static_cast<Index>(monomials_.size()); }
  const Exponent& operator[](Index i) const { return monomials_[static_cast<std::size_t>(i)]; }
  const std::vector<Exponent>& monomials() const { return monomials_; }
  Polynomial monomial(Index i) const;

 private:
  std::vector<std::string> vars_;
  int degree_ = 0;
  std::vector<Exponent> monomials_;
};

/// Gram certificate s(x) = (I_r (x) z)' Q (I_r (x) z); r = 1 for a scalar SOS,
/// r > 1 for an SOS matrix multiplier.
struct SosCertificate {
  MonomialBasis basis;
  Index rows = 1;
  SymMatrix gram;
  double residual = 0.0;

  Polynomial polynomial() const;  // r == 1
  PolyMatrix matrix() const;
};

/// Linear functional on monomials (a pseudo-moment vector).
struct Moments {
  std::vector<std::string> vars;
  std::map<Exponent, double, GradedLexLess> values;

  double operator()(const Exponent& e) const;
  double apply(const Polynomial& p) const;
  /// y_{e_i} in vars order.
  Vector first_order() const;
  /// Moment matrix over the basis of degree `order`.
  SymMatrix matrix(int order) const;
};

struct SosOptions {
  SdpOptions sdp;
  double residual_tol = 1e-7;
  /// A solve that stalls short of tolerance is still accepted when the
  /// moment side is feasible to this accuracy (relative dual residual).
  double moment_accept_tol = 1e-6;
  /// Variable order of the compiled problem; empty means union order.
  std::vector<std::string> vars;
};

struct SosCheck {
  bool is_sos = false;
  std::optional<SosCertificate> certificate;
  /// max t with Q - t I >= 0 over Gram matrices of the (max-norm scaled) target
  double margin = 0.0;
  /// When not SOS: L with L(p) < 0 and L(q^2) >= 0 for every q in the basis span.
  std::optional<Moments> separating;
};

/// Gram-matrix SOS test over the full basis of degree `degree`/2 (`degree` < 0
/// means deg p). Throws SizeError when the basis exceeds 200 monomials.
SosCheck check_sos(const Polynomial& p, int degree = -1, const SosOptions& opts = {});

/// z' M(x) z over the bilinear basis {z_i x^a}.
SosCheck check_sos_matrix(const PolyMatrix& m, const SosOptions& opts = {});

struct LowerBoundResult {
  double gamma = 0.0;
  int order = 0;
  std::vector<std::string> vars;
  SosCertificate s0;
  std::vector<SosCertificate> multipliers;         // one per scalar constraint
  std::vector<SosCertificate> matrix_multipliers;  // one per matrix constraint
  Moments moments;                                 // from the SDP dual
  std::optional<Point> moment_candidate;
  /// max |coefficient| of p - gamma - s0 - sum s_i g_i - sum tr(S_j G_j)
  double residual = 0.0;
  int iterations = 0;
  /// "sos" when gamma comes from the SOS certificate. "moment" when the SOS
  /// side was not solved to tolerance (typically a supremum that is not
  /// attained) and gamma is the moment-relaxation value, which also bounds
  /// the minimum from below; the multipliers then carry `residual`.
  std::string bound_source = "sos";
};

/// sup gamma with p - gamma SOS. Requires even degree.
LowerBoundResult lower_bound_unconstrained(const Polynomial& p, const SosOptions& opts = {});

/// sup gamma with p - gamma = s0 + sum s_i g_i + sum tr(S_j G_j) where s0 has
/// degree 2*order, deg s_i = 2*order - deg g_i rounded down to even, and the
/// S_j are SOS matrices of the analogous degree. order < 0 picks the smallest
/// admissible order.
LowerBoundResult lower_bound_constrained(const Polynomial& p, const std::vector<Polynomial>& g, int order = -1,
                                         const SosOptions& opts = {});
LowerBoundResult lower_bound_constrained(const Polynomial& p, const std::vector<Polynomial>& g,
                                         const std::vector<PolyMatrix>& matrix_g, int order = -1,
                                         const SosOptions& opts = {});

/// First-order moments as a point. Throws NoCandidate when the order-1 moment
/// matrix has top-eigenvalue ratio below `min_ratio`.
Point moment_candidate(const LowerBoundResult& result, double min_ratio = 10.0);

}  // namespace ratecert
