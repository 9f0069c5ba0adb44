#include "ratecert/sdp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <algorithm>
#include <functional>
#include <cmath>
#include <cstdio>
#include <map>
#include <tuple>

namespace ratecert {

Index SdpProblem::total_dim() const {
  Index n = 0;
  for (auto b : blocks) n += b;
  return n;
}

bool SdpProblem::has_objective() const {
  for (const auto& e : objective)
    if (e.value != 0.0) return true;
  for (Index l = 0; l < free_cost.size(); ++l)
    if (free_cost(l) != 0.0) return true;
  return false;
}

void SdpProblem::validate() const {
  auto check_entry = [&](const SdpEntry& e) {
    if (e.block < 0 || e.block >= static_cast<Index>(blocks.size()))
      throw DimensionError("SdpProblem: entry refers to block " + std::to_string(e.block));
    const Index n = blocks[static_cast<std::size_t>(e.block)];
    if (e.i < 0 || e.j < 0 || e.i >= n || e.j >= n)
      throw DimensionError("SdpProblem: entry (" + std::to_string(e.i) + "," + std::to_string(e.j) +
                           ") outside block " + std::to_string(e.block) + " of size " + std::to_string(n));
    if (!std::isfinite(e.value)) throw std::invalid_argument("SdpProblem: non-finite coefficient");
  };
  for (auto b : blocks)
    if (b < 1) throw DimensionError("SdpProblem: block sizes must be positive");
  if (num_free < 0) throw DimensionError("SdpProblem: negative free variable count");
  if (free_cost.size() != 0 && free_cost.size() != num_free)
    throw DimensionError("SdpProblem: free_cost length must equal num_free");
  for (const auto& e : objective) check_entry(e);
  for (const auto& c : constraints) {
    for (const auto& e : c.entries) check_entry(e);
    for (const auto& [l, v] : c.free_coeffs)
      if (l < 0 || l >= num_free) throw DimensionError("SdpProblem: free variable index out of range");
    if (!std::isfinite(c.b)) throw std::invalid_argument("SdpProblem: non-finite right-hand side");
  }
}

const char* to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::Optimal: return "Optimal";
    case SdpStatus::Infeasible: return "Infeasible";
    case SdpStatus::Unbounded: return "Unbounded";
    case SdpStatus::IterLimit: return "IterLimit";
    case SdpStatus::NumericalFailure: return "NumericalFailure";
  }
  return "?";
}

double inner(const std::vector<SdpEntry>& entries, const std::vector<Matrix>& X) {
  double s = 0.0;
  for (const auto& e : entries) {
    const double x = X[static_cast<std::size_t>(e.block)](e.i, e.j);
    s += (e.i == e.j ? 1.0 : 2.0) * e.value * x;
  }
  return s;
}

namespace {

using Blocks = std::vector<Matrix>;

struct Term {
  Index i, j;
  double v;
};

// Problem in solver form: merged upper-triangle entries, row and objective
// scaling applied.
struct Prepared {
  std::vector<Index> n;
  Index m = 0;
  Index nf = 0;
  // rows[c][k]: entries of constraint c in block k
  std::vector<std::vector<std::vector<Term>>> rows;
  // per block: constraints having entries there
  std::vector<std::vector<Index>> active;
  Matrix F;
  Vector b;
  Blocks C;
  Vector cf;
  Vector row_scale;  // original row = scaled row / row_scale
  double obj_scale = 1.0;
  std::vector<Index> kept;  // original index of each kept constraint
};

double dot(const Blocks& a, const Blocks& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k].cwiseProduct(b[k]).sum();
  return s;
}

double norm(const Blocks& a) { return std::sqrt(dot(a, a)); }

Blocks zeros(const std::vector<Index>& n) {
  Blocks out;
  for (auto s : n) out.push_back(Matrix::Zero(s, s));
  return out;
}

Blocks identity(const std::vector<Index>& n) {
  Blocks out;
  for (auto s : n) out.push_back(Matrix::Identity(s, s));
  return out;
}

Vector apply_A(const Prepared& P, const Blocks& X) {
  Vector out = Vector::Zero(P.m);
  for (Index c = 0; c < P.m; ++c) {
    double s = 0.0;
    const auto& row = P.rows[static_cast<std::size_t>(c)];
    for (std::size_t k = 0; k < row.size(); ++k)
      for (const auto& t : row[k]) s += (t.i == t.j ? 1.0 : 2.0) * t.v * X[k](t.i, t.j);
    out(c) = s;
  }
  return out;
}

Blocks apply_At(const Prepared& P, const Vector& y) {
  Blocks out = zeros(P.n);
  for (Index c = 0; c < P.m; ++c) {
    const double yc = y(c);
    if (yc == 0.0) continue;
    const auto& row = P.rows[static_cast<std::size_t>(c)];
    for (std::size_t k = 0; k < row.size(); ++k)
      for (const auto& t : row[k]) {
        out[k](t.i, t.j) += yc * t.v;
        if (t.i != t.j) out[k](t.j, t.i) += yc * t.v;
      }
  }
  return out;
}

Prepared prepare(const SdpProblem& p) {
  Prepared P;
  P.n = p.blocks;
  P.nf = p.num_free;
  const std::size_t K = p.blocks.size();

  using Key = std::tuple<Index, Index, Index>;
  auto merge = [&](const std::vector<SdpEntry>& entries) {
    std::map<Key, double> acc;
    for (const auto& e : entries) {
      const Index i = std::min(e.i, e.j), j = std::max(e.i, e.j);
      acc[{e.block, i, j}] += e.value;
    }
    std::vector<std::vector<Term>> out(K);
    for (const auto& [key, v] : acc)
      if (v != 0.0) out[static_cast<std::size_t>(std::get<0>(key))].push_back({std::get<1>(key), std::get<2>(key), v});
    return out;
  };

  P.C = zeros(P.n);
  const auto cterms = merge(p.objective);
  for (std::size_t k = 0; k < K; ++k)
    for (const auto& t : cterms[k]) {
      P.C[k](t.i, t.j) = t.v;
      P.C[k](t.j, t.i) = t.v;
    }
  P.cf = p.free_cost.size() ? p.free_cost : Vector::Zero(p.num_free);

  std::vector<std::vector<std::vector<Term>>> rows;
  std::vector<Vector> frows;
  std::vector<double> bs;
  for (std::size_t c = 0; c < p.constraints.size(); ++c) {
    const auto& con = p.constraints[c];
    auto merged = merge(con.entries);
    Vector f = Vector::Zero(p.num_free);
    for (const auto& [l, v] : con.free_coeffs) f(l) += v;
    bool empty = f.isZero(0.0);
    for (const auto& blk : merged) empty = empty && blk.empty();
    if (empty) continue;  // 0 = b: handled by the caller
    rows.push_back(std::move(merged));
    frows.push_back(f);
    bs.push_back(con.b);
    P.kept.push_back(static_cast<Index>(c));
  }

  P.m = static_cast<Index>(rows.size());
  P.rows = std::move(rows);
  P.F = Matrix::Zero(P.m, P.nf);
  P.b = Vector::Zero(P.m);
  P.row_scale = Vector::Ones(P.m);
  for (Index c = 0; c < P.m; ++c) {
    double nrm2 = frows[static_cast<std::size_t>(c)].squaredNorm();
    for (const auto& blk : P.rows[static_cast<std::size_t>(c)])
      for (const auto& t : blk) nrm2 += (t.i == t.j ? 1.0 : 2.0) * t.v * t.v;
    const double s = nrm2 > 0.0 ? 1.0 / std::sqrt(nrm2) : 1.0;
    P.row_scale(c) = s;
    for (auto& blk : P.rows[static_cast<std::size_t>(c)])
      for (auto& t : blk) t.v *= s;
    P.F.row(c) = s * frows[static_cast<std::size_t>(c)].transpose();
    P.b(c) = s * bs[static_cast<std::size_t>(c)];
  }

  const double cnorm = std::sqrt(norm(P.C) * norm(P.C) + P.cf.squaredNorm());
  P.obj_scale = cnorm > 1.0 ? 1.0 / cnorm : 1.0;
  for (auto& c : P.C) c *= P.obj_scale;
  P.cf *= P.obj_scale;

  P.active.assign(K, {});
  for (Index c = 0; c < P.m; ++c)
    for (std::size_t k = 0; k < K; ++k)
      if (!P.rows[static_cast<std::size_t>(c)][k].empty()) P.active[k].push_back(c);
  return P;
}

// H_ij = <A_i, W A_j W>
Matrix schur(const Prepared& P, const Blocks& W) {
  Matrix H = Matrix::Zero(P.m, P.m);
  for (std::size_t k = 0; k < P.n.size(); ++k) {
    const Matrix& w = W[k];
    const auto& act = P.active[k];
    for (std::size_t ja = 0; ja < act.size(); ++ja) {
      const Index j = act[ja];
      const auto& Aj = P.rows[static_cast<std::size_t>(j)][k];
      for (std::size_t ia = 0; ia <= ja; ++ia) {
        const Index i = act[ia];
        const auto& Ai = P.rows[static_cast<std::size_t>(i)][k];
        double s = 0.0;
        for (const auto& e : Ai) {
          const double he = e.i == e.j ? 0.5 : 1.0;
          for (const auto& f : Aj) {
            const double hf = f.i == f.j ? 0.5 : 1.0;
            s += he * hf * e.v * f.v * (w(e.j, f.i) * w(e.i, f.j) + w(e.j, f.j) * w(e.i, f.i));
          }
        }
        H(i, j) += 2.0 * s;
      }
    }
  }
  H.triangularView<Eigen::StrictlyLower>() = H.transpose();
  return H;
}

struct NtScaling {
  Blocks R, Rinv, W;
  std::vector<Vector> lambda;
};

bool nt_scaling(const Blocks& X, const Blocks& Z, NtScaling& s) {
  const std::size_t K = X.size();
  s.R.resize(K);
  s.Rinv.resize(K);
  s.W.resize(K);
  s.lambda.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    Eigen::LLT<Matrix> cx(X[k]), cz(Z[k]);
    if (cx.info() != Eigen::Success || cz.info() != Eigen::Success) return false;
    const Matrix L1 = cx.matrixL(), L2 = cz.matrixL();
    Eigen::JacobiSVD<Matrix> svd(L2.transpose() * L1, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector lam = svd.singularValues();
    if (lam.minCoeff() <= 0.0 || !lam.allFinite()) return false;
    const Vector isq = lam.array().rsqrt();
    s.R[k] = L1 * svd.matrixV() * isq.asDiagonal();
    const Matrix L1inv = L1.triangularView<Eigen::Lower>().solve(Matrix::Identity(L1.rows(), L1.cols()));
    s.Rinv[k] = lam.cwiseSqrt().asDiagonal() * svd.matrixV().transpose() * L1inv;
    s.W[k] = s.R[k] * s.R[k].transpose();
    s.W[k] = (0.5 * (s.W[k] + s.W[k].transpose())).eval();
    s.lambda[k] = lam;
  }
  return true;
}

// Largest alpha <= 1e30 with diag(lam) + alpha * D >= 0.
double max_step(const Vector& lam, const Matrix& D) {
  const Vector is = lam.array().rsqrt();
  Matrix M = is.asDiagonal() * D * is.asDiagonal();
  M = (0.5 * (M + M.transpose())).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(M, Eigen::EigenvaluesOnly);
  const double mn = es.eigenvalues()(0);
  return mn < 0.0 ? -1.0 / mn : 1e30;
}

class KktSolver {
 public:
  using Apply = std::function<Vector(const Vector&)>;

  // `apply_h` evaluates H exactly (from the operator, not the stored matrix);
  // it drives the iterative refinement.
  bool factor(const Matrix& H, const Matrix& F, Apply apply_h) {
    const Index m = H.rows();
    apply_h_ = std::move(apply_h);
    F_ = F;
    double reg = 0.0;
    const double scale = m > 0 ? std::max(1.0, H.diagonal().cwiseAbs().maxCoeff()) : 1.0;
    for (int attempt = 0;; ++attempt) {
      Matrix Hr = H;
      if (reg > 0.0) Hr.diagonal().array() += reg;
      llt_.compute(Hr);
      if (llt_.info() == Eigen::Success) break;
      if (attempt == 7) return false;
      reg = reg == 0.0 ? 1e-14 * scale : reg * 100.0;
    }
    if (F_.cols() > 0) {
      HiF_ = llt_.solve(F_);
      Matrix S = F_.transpose() * HiF_;
      S = (0.5 * (S + S.transpose())).eval();
      sfact_.compute(S);
    }
    return true;
  }

  // [H F; F' 0] [p; q] = [r1; r2], with iterative refinement
  void solve(const Vector& r1, const Vector& r2, Vector& p, Vector& q) const {
    solve_once(r1, r2, p, q);
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k) {
      const Vector e1 = r1 - apply_h_(p) - F_ * q;
      const Vector e2 = r2 - F_.transpose() * p;
      const double err = std::sqrt(e1.squaredNorm() + e2.squaredNorm());
      if (!(err < 0.5 * prev)) break;
      prev = err;
      Vector dp, dq;
      solve_once(e1, e2, dp, dq);
      p += dp;
      q += dq;
    }
  }

 private:
  void solve_once(const Vector& r1, const Vector& r2, Vector& p, Vector& q) const {
    const Vector hr = llt_.solve(r1);
    if (F_.cols() == 0) {
      p = hr;
      q = Vector::Zero(0);
      return;
    }
    q = sfact_.solve(F_.transpose() * hr - r2);
    p = hr - HiF_ * q;
  }

  Apply apply_h_;
  Eigen::LLT<Matrix> llt_;
  Matrix F_, HiF_;
  Eigen::ColPivHouseholderQR<Matrix> sfact_;
};

}  // namespace

SdpSolution solve_sdp(const SdpProblem& problem, const SdpOptions& opts) {
  problem.validate();
  const Prepared P = prepare(problem);
  const std::size_t K = P.n.size();
  const Index m = P.m, nf = P.nf;
  Index N = 0;
  for (auto s : P.n) N += s;

  SdpSolution sol;

  // Constraints with no coefficients at all: 0 = b.
  for (std::size_t c = 0; c < problem.constraints.size(); ++c) {
    const auto& con = problem.constraints[c];
    bool empty = true;
    for (const auto& e : con.entries) empty = empty && e.value == 0.0;
    for (const auto& f : con.free_coeffs) empty = empty && f.second == 0.0;
    if (empty && con.b != 0.0) {
      sol.status = SdpStatus::Infeasible;
      sol.y = Vector::Zero(static_cast<Index>(problem.constraints.size()));
      sol.y(static_cast<Index>(c)) = 1.0 / con.b;
      sol.X = zeros(P.n);
      sol.Z = zeros(P.n);
      sol.u = Vector::Zero(nf);
      sol.dual_objective = 1.0;
      return sol;
    }
  }

  // A free variable that no constraint touches but the objective does.
  for (Index l = 0; l < nf; ++l) {
    if (P.cf(l) == 0.0 || !P.F.col(l).isZero(0.0)) continue;
    sol.status = SdpStatus::Unbounded;
    sol.X = zeros(P.n);
    sol.Z = zeros(P.n);
    sol.y = Vector::Zero(static_cast<Index>(problem.constraints.size()));
    sol.u = Vector::Zero(nf);
    sol.u(l) = -1.0 / (P.cf(l) / P.obj_scale);
    sol.primal_objective = -1.0;
    return sol;
  }

  Blocks X = identity(P.n), Z = identity(P.n);
  Vector y = Vector::Zero(m), u = Vector::Zero(nf);
  double tau = 1.0, kappa = 1.0;

  const double bnorm = P.b.norm();
  const double cnorm = std::sqrt(std::pow(norm(P.C), 2) + P.cf.squaredNorm());

  SdpStatus status = SdpStatus::IterLimit;
  int it = 0;
  NtScaling nt;
  KktSolver kkt;
  int stalls = 0;
  struct Iterate {
    double merit = std::numeric_limits<double>::infinity();
    Blocks X, Z;
    Vector y, u;
    double tau = 1.0, kappa = 1.0;
  } best;
  int no_improve = 0;
  bool restore = false;

  for (;; ++it) {
    const Vector AX = apply_A(P, X);
    const Blocks Aty = apply_At(P, y);
    const Vector rp = P.b * tau - AX - P.F * u;
    Blocks rd(K);
    for (std::size_t k = 0; k < K; ++k) rd[k] = P.C[k] * tau - Aty[k] - Z[k];
    const Vector rf = P.cf * tau - P.F.transpose() * y;
    const double cx = dot(P.C, X) + P.cf.dot(u);
    const double by = P.b.dot(y);
    const double rg = kappa - by + cx;
    const double mu = (dot(X, Z) + tau * kappa) / static_cast<double>(N + 1);

    // termination
    const double pres = rp.norm() / tau / (1.0 + bnorm);
    const double dres = std::sqrt(std::pow(norm(rd), 2) + rf.squaredNorm()) / tau / (1.0 + cnorm);
    const double pobj = cx / tau, dobj = by / tau;
    const double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj));
    if (opts.verbose)
      std::fprintf(stderr, "%3d pres %.2e dres %.2e gap %.2e pobj %+.8e dobj %+.8e tau %.2e kappa %.2e mu %.2e\n", it,
                   pres, dres, gap, pobj, dobj, tau, kappa, mu);
    if (pres <= opts.tol && dres <= opts.tol && gap <= opts.tol) {
      status = SdpStatus::Optimal;
      break;
    }
    const double merit = std::max({pres, dres, gap});
    if (merit < best.merit) {
      best = {merit, X, Z, y, u, tau, kappa};
      no_improve = 0;
    } else if (++no_improve >= 5 && best.merit <= 10.0 * opts.tol) {
      status = SdpStatus::Optimal;
      restore = true;
      break;
    }
    if (by > 0.0) {
      double r = 0.0;
      for (std::size_t k = 0; k < K; ++k) r += (Aty[k] + Z[k]).squaredNorm();
      r = std::sqrt(r + (P.F.transpose() * y).squaredNorm()) / by;
      if (r <= opts.tol) {
        status = SdpStatus::Infeasible;
        break;
      }
    }
    if (cx < 0.0) {
      const double r = (AX + P.F * u).norm() / (-cx);
      if (r <= opts.tol) {
        status = SdpStatus::Unbounded;
        break;
      }
    }
    if (it >= opts.max_iter) {
      status = SdpStatus::IterLimit;
      break;
    }

    if (!nt_scaling(X, Z, nt)) {
      status = SdpStatus::NumericalFailure;
      break;
    }
    const Matrix H = schur(P, nt.W);
    auto apply_h = [&P, &nt, K](const Vector& v) {
      Blocks t = apply_At(P, v);
      for (std::size_t k = 0; k < K; ++k) t[k] = nt.W[k] * t[k] * nt.W[k];
      return apply_A(P, t);
    };
    if (!kkt.factor(H, P.F, apply_h)) {
      status = SdpStatus::NumericalFailure;
      break;
    }

    Blocks WCW(K), WrdW(K);
    for (std::size_t k = 0; k < K; ++k) {
      WCW[k] = nt.W[k] * P.C[k] * nt.W[k];
      WrdW[k] = nt.W[k] * rd[k] * nt.W[k];
    }
    const Vector g = apply_A(P, WCW);
    const double omega = dot(P.C, WCW);
    Vector p2, q2;
    kkt.solve(g + P.b, P.cf, p2, q2);
    const double den = (P.b - g).dot(p2) - P.cf.dot(q2) + omega + kappa / tau;

    struct Direction {
      Blocks dX, dZ;
      Vector dy, du;
      double dtau, dkappa;
    };

    // S: scaled complementarity right-hand side per block, rc: tau-kappa part
    auto direction = [&](double eta, const Blocks& S, double rc) {
      Direction d;
      Blocks G(K), T(K);
      for (std::size_t k = 0; k < K; ++k) {
        G[k] = nt.R[k] * S[k] * nt.R[k].transpose();
        T[k] = G[k] - eta * WrdW[k];
      }
      const Vector rhs1 = eta * rp - apply_A(P, T);
      Vector p1, q1;
      kkt.solve(rhs1, eta * rf, p1, q1);
      const double num = eta * rg + dot(P.C, T) + rc / tau - (P.b - g).dot(p1) + P.cf.dot(q1);
      d.dtau = num / den;
      d.dy = p1 + d.dtau * p2;
      d.du = q1 + d.dtau * q2;
      const Blocks Atdy = apply_At(P, d.dy);
      d.dZ.resize(K);
      d.dX.resize(K);
      for (std::size_t k = 0; k < K; ++k) {
        d.dZ[k] = eta * rd[k] + P.C[k] * d.dtau - Atdy[k];
        d.dX[k] = G[k] - nt.W[k] * d.dZ[k] * nt.W[k];
        d.dX[k] = (0.5 * (d.dX[k] + d.dX[k].transpose())).eval();
      }
      d.dkappa = (rc - kappa * d.dtau) / tau;
      return d;
    };

    auto scaled = [&](const Direction& d, Blocks& sx, Blocks& sz) {
      sx.resize(K);
      sz.resize(K);
      for (std::size_t k = 0; k < K; ++k) {
        sx[k] = nt.Rinv[k] * d.dX[k] * nt.Rinv[k].transpose();
        sz[k] = nt.R[k].transpose() * d.dZ[k] * nt.R[k];
      }
    };

    auto step_length = [&](const Direction& d, const Blocks& sx, const Blocks& sz) {
      double a = 1e30;
      for (std::size_t k = 0; k < K; ++k) {
        a = std::min(a, max_step(nt.lambda[k], sx[k]));
        a = std::min(a, max_step(nt.lambda[k], sz[k]));
      }
      if (d.dtau < 0.0) a = std::min(a, -tau / d.dtau);
      if (d.dkappa < 0.0) a = std::min(a, -kappa / d.dkappa);
      return a;
    };

    // predictor
    Blocks Saff(K);
    for (std::size_t k = 0; k < K; ++k) Saff[k] = Matrix((-nt.lambda[k]).asDiagonal());
    const Direction aff = direction(1.0, Saff, -tau * kappa);
    Blocks sxa, sza;
    scaled(aff, sxa, sza);
    const double a_aff = std::min(1.0, step_length(aff, sxa, sza));
    double mu_aff = (tau + a_aff * aff.dtau) * (kappa + a_aff * aff.dkappa);
    for (std::size_t k = 0; k < K; ++k)
      mu_aff += ((X[k] + a_aff * aff.dX[k]).cwiseProduct(Z[k] + a_aff * aff.dZ[k])).sum();
    mu_aff /= static_cast<double>(N + 1);
    const double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, 3.0), 0.0, 1.0);

    // corrector
    Blocks Sc(K);
    for (std::size_t k = 0; k < K; ++k) {
      const Vector& lam = nt.lambda[k];
      const Index n = lam.size();
      Matrix corr = sxa[k] * sza[k];
      corr = (corr + corr.transpose()).eval();
      Matrix T = -corr;
      T.diagonal().array() += 2.0 * sigma * mu;
      T.diagonal() -= 2.0 * lam.cwiseProduct(lam);
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) T(i, j) /= lam(i) + lam(j);
      Sc[k] = T;
    }
    const double rc = sigma * mu - tau * kappa - aff.dtau * aff.dkappa;
    const Direction d = direction(1.0 - sigma, Sc, rc);
    Blocks sx, sz;
    scaled(d, sx, sz);
    const double amax = step_length(d, sx, sz);
    const double alpha = std::min(1.0, opts.step_fraction * amax);

    for (std::size_t k = 0; k < K; ++k) {
      X[k] += alpha * d.dX[k];
      Z[k] += alpha * d.dZ[k];
      X[k] = (0.5 * (X[k] + X[k].transpose())).eval();
      Z[k] = (0.5 * (Z[k] + Z[k].transpose())).eval();
    }
    y += alpha * d.dy;
    u += alpha * d.du;
    tau += alpha * d.dtau;
    kappa += alpha * d.dkappa;

    if (!std::isfinite(tau) || !std::isfinite(kappa)) {
      status = SdpStatus::NumericalFailure;
      break;
    }
    stalls = alpha < 1e-10 ? stalls + 1 : 0;
    if (stalls >= 5) {
      status = SdpStatus::NumericalFailure;
      break;
    }
    // keep the embedding well scaled
    const double s = std::max({1.0, tau, kappa});
    if (s > 1e8) {
      for (std::size_t k = 0; k < K; ++k) {
        X[k] /= s;
        Z[k] /= s;
      }
      y /= s;
      u /= s;
      tau /= s;
      kappa /= s;
    }
  }

  if (status == SdpStatus::IterLimit || status == SdpStatus::NumericalFailure) {
    // hand back the best iterate either way; promote it when it is accurate
    if (best.merit <= 10.0 * opts.tol) status = SdpStatus::Optimal;
    restore = std::isfinite(best.merit);
  }
  if (restore) {
    X = best.X;
    Z = best.Z;
    y = best.y;
    u = best.u;
    tau = best.tau;
    kappa = best.kappa;
  }
  sol.status = status;
  sol.iterations = it;

  // Map back to the original scaling. Scaled dual y' relates to the original
  // by y_i = y'_i * row_scale_i / obj_scale, Z = Z' / obj_scale.
  auto unscale_y = [&](const Vector& ys, double div) {
    Vector out = Vector::Zero(static_cast<Index>(problem.constraints.size()));
    for (Index c = 0; c < m; ++c) out(P.kept[static_cast<std::size_t>(c)]) = ys(c) * P.row_scale(c) / div;
    return out;
  };

  if (status == SdpStatus::Infeasible) {
    const double by = P.b.dot(y);
    sol.y = unscale_y(y, by);
    sol.Z.resize(K);
    for (std::size_t k = 0; k < K; ++k) sol.Z[k] = Z[k] / by;
    sol.X = zeros(P.n);
    sol.u = Vector::Zero(nf);
    sol.dual_objective = 1.0;
  } else if (status == SdpStatus::Unbounded) {
    const double cx = -(dot(P.C, X) + P.cf.dot(u)) / P.obj_scale;
    sol.X.resize(K);
    for (std::size_t k = 0; k < K; ++k) sol.X[k] = X[k] / cx;
    sol.u = u / cx;
    sol.y = Vector::Zero(static_cast<Index>(problem.constraints.size()));
    sol.Z = zeros(P.n);
    sol.primal_objective = -1.0;
  } else {
    sol.X.resize(K);
    sol.Z.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
      sol.X[k] = X[k] / tau;
      sol.Z[k] = Z[k] / tau / P.obj_scale;
    }
    sol.u = u / tau;
    sol.y = unscale_y(y, tau * P.obj_scale);
  }

  // residuals in the original data
  {
    double r2 = 0.0, b2 = 0.0;
    for (std::size_t c = 0; c < problem.constraints.size(); ++c) {
      const auto& con = problem.constraints[c];
      double v = inner(con.entries, sol.X);
      for (const auto& [l, f] : con.free_coeffs) v += f * sol.u(l);
      const double rhs = status == SdpStatus::Unbounded || status == SdpStatus::Infeasible ? 0.0 : con.b;
      r2 += (rhs - v) * (rhs - v);
      b2 += con.b * con.b;
    }
    Blocks Cfull = zeros(P.n);
    for (const auto& e : problem.objective) {
      Cfull[static_cast<std::size_t>(e.block)](e.i, e.j) += e.value;
      if (e.i != e.j) Cfull[static_cast<std::size_t>(e.block)](e.j, e.i) += e.value;
    }
    const Vector cfree = problem.free_cost.size() ? problem.free_cost : Vector::Zero(nf);
    Blocks Aty = zeros(P.n);
    Vector Fty = Vector::Zero(nf);
    for (std::size_t c = 0; c < problem.constraints.size(); ++c) {
      const auto& con = problem.constraints[c];
      const double yc = sol.y(static_cast<Index>(c));
      for (const auto& e : con.entries) {
        Aty[static_cast<std::size_t>(e.block)](e.i, e.j) += yc * e.value;
        if (e.i != e.j) Aty[static_cast<std::size_t>(e.block)](e.j, e.i) += yc * e.value;
      }
      for (const auto& [l, f] : con.free_coeffs) Fty(l) += f * yc;
    }
    const bool farkas = status == SdpStatus::Infeasible;
    double d2 = 0.0;
    for (std::size_t k = 0; k < K; ++k)
      d2 += ((farkas ? Matrix::Zero(P.n[k], P.n[k]) : Cfull[k]) - Aty[k] - sol.Z[k]).squaredNorm();
    d2 += ((farkas ? Vector::Zero(nf) : cfree) - Fty).squaredNorm();
    const double cn = std::sqrt(std::pow(norm(Cfull), 2) + cfree.squaredNorm());
    sol.residuals.primal = std::sqrt(r2) / (1.0 + std::sqrt(b2));
    sol.residuals.dual = std::sqrt(d2) / (1.0 + cn);
    if (status != SdpStatus::Infeasible && status != SdpStatus::Unbounded) {
      sol.primal_objective = dot(Cfull, sol.X) + cfree.dot(sol.u);
      double dobj = 0.0;
      for (std::size_t c = 0; c < problem.constraints.size(); ++c)
        dobj += problem.constraints[c].b * sol.y(static_cast<Index>(c));
      sol.dual_objective = dobj;
      sol.residuals.gap =
          std::abs(sol.primal_objective - sol.dual_objective) / (1.0 + std::abs(sol.primal_objective));
    }
  }
  return sol;
}

MarginResult feasibility_margin(const SdpProblem& p, const SdpOptions& opts) {
  p.validate();
  if (p.has_objective()) throw std::invalid_argument("feasibility_margin: problem must have no objective");
  SdpProblem q = p;
  const Index t = p.num_free;
  q.num_free = p.num_free + 1;
  q.free_cost = Vector::Zero(q.num_free);
  q.free_cost(t) = -1.0;
  for (auto& con : q.constraints) {
    double tr = 0.0;
    for (const auto& e : con.entries)
      if (e.i == e.j) tr += e.value;
    if (tr != 0.0) con.free_coeffs.emplace_back(t, tr);
  }
  MarginResult r;
  r.solution = solve_sdp(q, opts);
  r.status = r.solution.status;
  switch (r.status) {
    case SdpStatus::Unbounded:
      r.margin = std::numeric_limits<double>::infinity();
      break;
    case SdpStatus::Infeasible:
      r.margin = -std::numeric_limits<double>::infinity();
      break;
    default: {
      r.margin = r.solution.u(t);
      r.X = r.solution.X;
      for (auto& x : r.X) x.diagonal().array() += r.margin;
      r.u = r.solution.u.head(p.num_free);
    }
  }
  return r;
}

}  // namespace ratecert
