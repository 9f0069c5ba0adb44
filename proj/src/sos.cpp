#include "ratecert/sos.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ratecert {

namespace {

constexpr Index kMaxBasis = 200;

Exponent add(const Exponent& a, const Exponent& b) {
  Exponent out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = static_cast<std::uint8_t>(a[i] + b[i]);
  return out;
}

Exponent add(const Exponent& a, const Exponent& b, const Exponent& c) { return add(add(a, b), c); }

void descending(std::size_t var, int left, Exponent& cur, std::vector<Exponent>& out) {
  if (var + 1 == cur.size()) {
    cur[var] = static_cast<std::uint8_t>(left);
    out.push_back(cur);
    return;
  }
  for (int k = left; k >= 0; --k) {
    cur[var] = static_cast<std::uint8_t>(k);
    descending(var + 1, left - k, cur, out);
  }
  cur[var] = 0;
}

// One PSD block of the identity: (I_r (x) z)' Q (I_r (x) z) weighted by G.
// Contribution to the identity is tr(S G) with S the SOS matrix above.
struct Block {
  MonomialBasis basis;
  Index rows = 1;
  std::vector<Polynomial> weight;  // rows*rows, aligned to the compile vars
  double scale = 1.0;              // weight = original / scale
};

struct Compiled {
  SdpProblem sdp;
  std::vector<Exponent> monomials;  // per constraint
};

// target = sum_k tr(S_k G_k) (+ gamma on the constant term when with_gamma)
Compiled compile(const Polynomial& target, const std::vector<Block>& blocks, bool with_gamma) {
  Compiled c;
  std::map<Exponent, Index> row;
  auto row_of = [&](const Exponent& e) {
    auto [it, fresh] = row.try_emplace(e, static_cast<Index>(c.monomials.size()));
    if (fresh) {
      c.monomials.push_back(e);
      c.sdp.constraints.emplace_back();
    }
    return static_cast<std::size_t>(it->second);
  };

  for (const auto& [e, v] : target.terms()) c.sdp.constraints[row_of(e)].b += v;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const Block& blk = blocks[k];
    const Index nz = blk.basis.size(), r = blk.rows, dim = nz * r;
    c.sdp.blocks.push_back(dim);
    for (Index I = 0; I < dim; ++I)
      for (Index J = I; J < dim; ++J) {
        const Index a = I / nz, i = I % nz, b = J / nz, j = J % nz;
        const Polynomial& g = blk.weight[static_cast<std::size_t>(b * r + a)];
        for (const auto& [e, v] : g.terms()) {
          const std::size_t ri = row_of(add(blk.basis[i], blk.basis[j], e));
          c.sdp.constraints[ri].entries.push_back({static_cast<Index>(k), I, J, v});
        }
      }
  }
  if (with_gamma) {
    const Index nv = static_cast<Index>(target.vars().size());
    c.sdp.num_free = 1;
    c.sdp.free_cost = Vector::Constant(1, -1.0);
    c.sdp.constraints[row_of(Exponent(static_cast<std::size_t>(nv), 0))].free_coeffs.emplace_back(0, 1.0);
  }
  return c;
}

// max_alpha |b - A(X) - F u|
double identity_residual(const SdpProblem& sdp, const std::vector<Matrix>& X, const Vector& u) {
  double worst = 0.0;
  for (const auto& con : sdp.constraints) {
    double s = inner(con.entries, X);
    for (const auto& [l, f] : con.free_coeffs) s += f * u(l);
    worst = std::max(worst, std::abs(con.b - s));
  }
  return worst;
}

Matrix psd_part(const Matrix& x) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(x);
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() * es.eigenvectors().transpose();
}

Moments moments_from(const Compiled& c, const Vector& y, const std::vector<std::string>& vars) {
  Moments m;
  m.vars = vars;
  for (std::size_t r = 0; r < c.monomials.size(); ++r) m.values[c.monomials[r]] = -y(static_cast<Index>(r));
  return m;
}

std::vector<std::string> compile_vars(const Polynomial& p, const std::vector<Polynomial>& g,
                                      const std::vector<PolyMatrix>& mg, const SosOptions& opts) {
  std::vector<std::string> vars = p.vars();
  for (const auto& gi : g) vars = union_vars(vars, gi.vars());
  for (const auto& gm : mg) vars = union_vars(vars, gm.vars());
  if (opts.vars.empty()) return vars;
  for (const auto& v : vars)
    if (std::find(opts.vars.begin(), opts.vars.end(), v) == opts.vars.end())
      throw std::invalid_argument("sos: variable '" + v + "' missing from SosOptions::vars");
  return opts.vars;
}

void check_basis_size(const MonomialBasis& b, const char* where) {
  if (b.size() > kMaxBasis)
    throw SizeError(std::string(where) + ": basis of " + std::to_string(b.size()) + " monomials exceeds " +
                    std::to_string(kMaxBasis));
}

SosCheck gram_check(const Polynomial& target, const MonomialBasis& basis, const SosOptions& opts) {
  check_basis_size(basis, "check_sos");
  const double scale = std::max(target.max_abs_coefficient(), 1e-300);
  const Polynomial scaled = target.with_vars(basis.vars()) * (1.0 / scale);
  Block blk{basis, 1, {Polynomial(1.0).with_vars(basis.vars())}, 1.0};
  const Compiled c = compile(scaled, {blk}, false);
  const MarginResult mr = feasibility_margin(c.sdp, opts.sdp);

  SosCheck out;
  out.margin = mr.margin;
  if (mr.status == SdpStatus::Unbounded) {  // no constraints touch the Gram matrix
    out.is_sos = true;
    out.certificate = SosCertificate{basis, 1, SymMatrix(Matrix::Identity(basis.size(), basis.size())), 0.0};
    return out;
  }
  if (mr.status == SdpStatus::Infeasible) {
    out.margin = -std::numeric_limits<double>::infinity();
    return out;
  }
  if (mr.status != SdpStatus::Optimal)
    throw RelaxationSolverError("check_sos: Gram SDP ended with status " + std::string(to_string(mr.status)),
                                mr.status);

  std::vector<Matrix> X{psd_part(mr.X[0])};
  const double res = scale * identity_residual(c.sdp, X, Vector());
  if (res <= opts.residual_tol) {
    out.is_sos = true;
    out.certificate = SosCertificate{basis, 1, SymMatrix(Matrix(scale * X[0])), res};
  } else {
    out.separating = moments_from(c, mr.solution.y, basis.vars());
  }
  return out;
}

int ceil_half(int d) { return (d + 1) / 2; }

}  // namespace

MonomialBasis::MonomialBasis(std::vector<std::string> vars, int degree) : vars_(std::move(vars)), degree_(degree) {
  if (degree < 0) throw std::invalid_argument("MonomialBasis: degree must be >= 0");
  const std::size_t n = vars_.size();
  monomials_.push_back(Exponent(n, 0));
  if (n == 0) return;
  Exponent cur(n, 0);
  for (int k = 1; k <= degree; ++k) descending(0, k, cur, monomials_);
}

MonomialBasis::MonomialBasis(std::vector<std::string> vars, std::vector<Exponent> monomials)
    : vars_(std::move(vars)), monomials_(std::move(monomials)) {
  for (const auto& e : monomials_) {
    if (e.size() != vars_.size()) throw DimensionError("MonomialBasis: exponent length differs from vars");
    degree_ = std::max(degree_, total_degree(e));
  }
}

Index MonomialBasis::count(Index nvars, int degree) {
  Index c = 1;
  for (Index k = 1; k <= degree; ++k) c = c * (nvars + k) / k;
  return c;
}

Polynomial MonomialBasis::monomial(Index i) const { return Polynomial(vars_, {{(*this)[i], 1.0}}); }

Polynomial SosCertificate::polynomial() const {
  if (rows != 1) throw DimensionError("SosCertificate::polynomial: certificate is a matrix");
  return matrix()(0, 0);
}

PolyMatrix SosCertificate::matrix() const {
  const Index nz = basis.size();
  PolyMatrix out(rows);
  for (Index a = 0; a < rows; ++a)
    for (Index b = a; b < rows; ++b) {
      Polynomial::Terms t;
      for (Index i = 0; i < nz; ++i)
        for (Index j = 0; j < nz; ++j) t[add(basis[i], basis[j])] += gram(a * nz + i, b * nz + j);
      out.set(a, b, Polynomial(basis.vars(), std::move(t)));
    }
  return out;
}

double Moments::operator()(const Exponent& e) const {
  const auto it = values.find(e);
  return it == values.end() ? 0.0 : it->second;
}

double Moments::apply(const Polynomial& p) const {
  double s = 0.0;
  const Polynomial q = p.with_vars(vars);
  for (const auto& [e, v] : q.terms()) s += v * (*this)(e);
  return s;
}

Vector Moments::first_order() const {
  const std::size_t n = vars.size();
  Vector out(static_cast<Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    Exponent e(n, 0);
    e[i] = 1;
    out(static_cast<Index>(i)) = (*this)(e);
  }
  return out;
}

SymMatrix Moments::matrix(int order) const {
  const MonomialBasis b(vars, order);
  Matrix m(b.size(), b.size());
  for (Index i = 0; i < b.size(); ++i)
    for (Index j = i; j < b.size(); ++j) m(i, j) = (*this)(add(b[i], b[j]));
  return SymMatrix(m);
}

SosCheck check_sos(const Polynomial& p, int degree, const SosOptions& opts) {
  const int dp = p.degree();
  if (degree < 0) degree = std::max(dp, 0);
  if (dp > degree) throw std::invalid_argument("check_sos: polynomial degree exceeds the requested degree");
  if (degree % 2 != 0) throw std::invalid_argument("check_sos: degree must be even");
  if (dp % 2 != 0) return SosCheck{};  // odd degree: never SOS
  const std::vector<std::string> vars = opts.vars.empty() ? p.vars() : opts.vars;
  return gram_check(p.with_vars(vars), MonomialBasis(vars, degree / 2), opts);
}

SosCheck check_sos_matrix(const PolyMatrix& m, const SosOptions& opts) {
  const Index r = m.dim();
  const std::vector<std::string> xvars = opts.vars.empty() ? m.vars() : opts.vars;
  const int deg = std::max(m.degree(), 0);

  // fresh z names
  std::vector<std::string> vars = xvars, znames;
  for (Index a = 0; a < r; ++a) {
    std::string z = "_z" + std::to_string(a);
    while (std::find(vars.begin(), vars.end(), z) != vars.end()) z = "_" + z;
    znames.push_back(z);
    vars.push_back(z);
  }
  Polynomial q = Polynomial(0.0).with_vars(vars);
  for (Index a = 0; a < r; ++a)
    for (Index b = 0; b < r; ++b)
      q += m(a, b) * Polynomial::variable(znames[static_cast<std::size_t>(a)]) *
           Polynomial::variable(znames[static_cast<std::size_t>(b)]);

  const MonomialBasis xb(xvars, ceil_half(deg));
  std::vector<Exponent> bilinear;
  for (Index a = 0; a < r; ++a)
    for (const auto& e : xb.monomials()) {
      Exponent f(vars.size(), 0);
      std::copy(e.begin(), e.end(), f.begin());
      f[xvars.size() + static_cast<std::size_t>(a)] = 1;
      bilinear.push_back(f);
    }
  SosCheck out = gram_check(q.with_vars(vars), MonomialBasis(vars, bilinear), opts);
  if (out.certificate) out.certificate = SosCertificate{xb, r, out.certificate->gram, out.certificate->residual};
  return out;
}

LowerBoundResult lower_bound_unconstrained(const Polynomial& p, const SosOptions& opts) {
  if (p.degree() % 2 != 0 && !p.is_zero())
    throw std::invalid_argument("lower_bound_unconstrained: degree must be even");
  try {
    return lower_bound_constrained(p, {}, {}, -1, opts);
  } catch (const RelaxationInfeasible&) {
    throw UnboundedBelow("lower_bound_unconstrained: p - gamma is SOS for no gamma");
  }
}

LowerBoundResult lower_bound_constrained(const Polynomial& p, const std::vector<Polynomial>& g, int order,
                                         const SosOptions& opts) {
  return lower_bound_constrained(p, g, {}, order, opts);
}

LowerBoundResult lower_bound_constrained(const Polynomial& p, const std::vector<Polynomial>& g,
                                         const std::vector<PolyMatrix>& matrix_g, int order,
                                         const SosOptions& opts) {
  const std::vector<std::string> vars = compile_vars(p, g, matrix_g, opts);
  int min_order = ceil_half(std::max(p.degree(), 0));
  for (const auto& gi : g) min_order = std::max(min_order, ceil_half(gi.degree()));
  for (const auto& gm : matrix_g) min_order = std::max(min_order, ceil_half(gm.degree()));
  if (order < 0) order = std::max(min_order, 1);
  if (order < min_order)
    throw std::invalid_argument("lower_bound_constrained: order " + std::to_string(order) +
                                " below the smallest admissible order " + std::to_string(min_order));

  const double pscale = std::max(p.max_abs_coefficient(), 1e-300);
  const Polynomial target = p.with_vars(vars) * (1.0 / pscale);

  std::vector<Block> blocks;
  blocks.push_back({MonomialBasis(vars, order), 1, {Polynomial(1.0).with_vars(vars)}, 1.0});
  check_basis_size(blocks.back().basis, "lower_bound_constrained");
  for (const auto& gi : g) {
    if (gi.is_zero()) throw std::invalid_argument("lower_bound_constrained: zero constraint polynomial");
    const double s = gi.max_abs_coefficient();
    blocks.push_back({MonomialBasis(vars, (2 * order - gi.degree()) / 2), 1, {gi.with_vars(vars) * (1.0 / s)}, s});
  }
  for (const auto& gm : matrix_g) {
    const Index r = gm.dim();
    double s = 0.0;
    for (Index a = 0; a < r; ++a)
      for (Index b = 0; b < r; ++b) s = std::max(s, gm(a, b).max_abs_coefficient());
    if (s == 0.0) throw std::invalid_argument("lower_bound_constrained: zero constraint matrix");
    Block blk{MonomialBasis(vars, (2 * order - std::max(gm.degree(), 0)) / 2), r, {}, s};
    for (Index a = 0; a < r; ++a)
      for (Index b = 0; b < r; ++b) blk.weight.push_back(gm(a, b).with_vars(vars) * (1.0 / s));
    blocks.push_back(std::move(blk));
  }

  const Compiled c = compile(target, blocks, true);
  const SdpSolution sol = solve_sdp(c.sdp, opts.sdp);
  bool from_moments = false;
  switch (sol.status) {
    case SdpStatus::Optimal:
      break;
    case SdpStatus::IterLimit:
    case SdpStatus::NumericalFailure:
      if (sol.y.size() > 0 && sol.residuals.dual <= opts.moment_accept_tol) {
        from_moments = true;
        break;
      }
      {
        std::ostringstream msg;
        msg << "lower_bound_constrained: SDP ended with status " << to_string(sol.status) << " (primal "
            << sol.residuals.primal << ", dual " << sol.residuals.dual << ", gap " << sol.residuals.gap << ")";
        throw RelaxationSolverError(msg.str(), sol.status);
      }
    case SdpStatus::Infeasible:
      throw RelaxationInfeasible("lower_bound_constrained: no certificate at order " + std::to_string(order));
    case SdpStatus::Unbounded:
      throw EmptyFeasibleSet("lower_bound_constrained: constraints certified empty at order " +
                             std::to_string(order));
    default:
      {
        std::ostringstream msg;
        msg << "lower_bound_constrained: SDP ended with status " << to_string(sol.status) << " (primal "
            << sol.residuals.primal << ", dual " << sol.residuals.dual << ", gap " << sol.residuals.gap << ")";
        throw RelaxationSolverError(msg.str(), sol.status);
      }
  }

  LowerBoundResult out;
  out.order = order;
  out.vars = vars;
  out.iterations = sol.iterations;
  out.gamma = pscale * (from_moments ? -sol.dual_objective : sol.u(0));
  if (from_moments) out.bound_source = "moment";
  out.residual = pscale * identity_residual(c.sdp, sol.X, sol.u);
  auto cert = [&](std::size_t k) {
    const Block& b = blocks[k];
    return SosCertificate{b.basis, b.rows, SymMatrix(Matrix(sol.X[k] * (pscale / b.scale))), out.residual};
  };
  out.s0 = cert(0);
  for (std::size_t k = 0; k < g.size(); ++k) out.multipliers.push_back(cert(1 + k));
  for (std::size_t k = 0; k < matrix_g.size(); ++k) out.matrix_multipliers.push_back(cert(1 + g.size() + k));
  out.moments = moments_from(c, sol.y, vars);
  try {
    out.moment_candidate = moment_candidate(out);
  } catch (const NoCandidate&) {
  }
  return out;
}

Point moment_candidate(const LowerBoundResult& result, double min_ratio) {
  const Vector ev = eigenvalues(result.moments.matrix(1));
  const Index k = ev.size();
  if (k >= 2) {
    const double top = ev(k - 1), second = std::max(ev(k - 2), 0.0);
    if (!(top > 0.0) || top < min_ratio * second) {
      std::ostringstream msg;
      msg << "moment_candidate: order-1 moment matrix eigenvalue ratio " << (second > 0.0 ? top / second : 0.0)
          << " below " << min_ratio;
      throw NoCandidate(msg.str());
    }
  }
  const Vector y = result.moments.first_order();
  Point pt;
  for (std::size_t i = 0; i < result.vars.size(); ++i) pt[result.vars[i]] = y(static_cast<Index>(i));
  return pt;
}

}  // namespace ratecert
