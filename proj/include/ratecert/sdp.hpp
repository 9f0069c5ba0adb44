#pragma once

#include "ratecert/linalg.hpp"

#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace ratecert {

/// One entry of a symmetric block coefficient matrix: value v at (i, j) and
/// (j, i). Only i <= j is stored; solve() normalizes the order.
struct SdpEntry {
  Index block;
  Index i;
  Index j;
  double value;
};

/// sum_k <A_k, X_k> + sum_l f_l u_l = b
struct SdpConstraint {
  std::vector<SdpEntry> entries;
  std::vector<std::pair<Index, double>> free_coeffs;
  double b = 0.0;
};

/// min <C, X> + c_f' u  s.t.  constraints,  X = diag(X_1, ..., X_K) >= 0, u free.
/// Dual: max b'y  s.t.  C - sum_i y_i A_i = Z >= 0,  F'y = c_f.
struct SdpProblem {
  std::vector<Index> blocks;
  Index num_free = 0;
  std::vector<SdpEntry> objective;
  Vector free_cost;  // empty means zero
  std::vector<SdpConstraint> constraints;

  Index total_dim() const;
  bool has_objective() const;
  /// Throws DimensionError on out-of-range indices or non-positive block sizes.
  void validate() const;
};

enum class SdpStatus { Optimal, Infeasible, Unbounded, IterLimit, NumericalFailure };

const char* to_string(SdpStatus s);

struct SdpOptions {
  double tol = 1e-8;
  int max_iter = 200;
  double step_fraction = 0.99;
  bool verbose = false;  // one line per iteration on stderr
};

struct KktResiduals {
  double primal = 0.0;  // |b - A(X) - F u| / (1 + |b|)
  double dual = 0.0;    // |C - A*(y) - Z| + |c_f - F'y|, relative to 1 + |C| + |c_f|
  double gap = 0.0;     // |pobj - dobj| / (1 + |pobj|)
};

/// For IterLimit and NumericalFailure the best iterate seen is returned.
/// For Infeasible, y is a Farkas ray: b'y = 1, Z = -A*(y) >= 0, F'y = 0.
/// For Unbounded, (X, u) is an improving ray: <C,X> + c_f'u = -1, A(X) + F u = 0.
struct SdpSolution {
  SdpStatus status = SdpStatus::NumericalFailure;
  std::vector<Matrix> X;
  std::vector<Matrix> Z;
  Vector y;
  Vector u;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  KktResiduals residuals;
  int iterations = 0;
};

/// Homogeneous self-dual interior-point method, Nesterov-Todd direction,
/// Mehrotra predictor-corrector. Free variables enter the Newton system
/// directly (no splitting).
SdpSolution solve_sdp(const SdpProblem& p, const SdpOptions& opts = {});

struct MarginResult {
  /// max t s.t. constraints hold with X >= t I; +inf when unbounded.
  double margin = 0.0;
  SdpStatus status = SdpStatus::NumericalFailure;
  std::vector<Matrix> X;  // maximizing X (not shifted)
  Vector u;
  SdpSolution solution;  // of the shifted problem; its last free variable is t
};

/// Strict-feasibility query. The problem must have no objective.
MarginResult feasibility_margin(const SdpProblem& p, const SdpOptions& opts = {});

/// <A, X> for a list of entries over block matrices.
double inner(const std::vector<SdpEntry>& entries, const std::vector<Matrix>& X);

}  // namespace ratecert
