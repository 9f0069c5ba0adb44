#include "ratecert/design.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace ratecert {

const char* to_string(DesignMethod m) {
  switch (m) {
    case DesignMethod::grid: return "grid";
    case DesignMethod::sos: return "sos";
    case DesignMethod::both: return "both";
  }
  return "?";
}

const char* to_string(Scalarization s) {
  switch (s) {
    case Scalarization::matrix: return "matrix";
    case Scalarization::trace_det: return "trace_det";
    case Scalarization::minors: return "minors";
  }
  return "?";
}

DesignMethod design_method_from(const std::string& s) {
  if (s == "grid") return DesignMethod::grid;
  if (s == "sos") return DesignMethod::sos;
  if (s == "both") return DesignMethod::both;
  throw std::invalid_argument("unknown design method '" + s + "' (grid | sos | both)");
}

Scalarization scalarization_from(const std::string& s) {
  if (s == "matrix") return Scalarization::matrix;
  if (s == "trace_det") return Scalarization::trace_det;
  if (s == "minors") return Scalarization::minors;
  throw std::invalid_argument("unknown scalarization '" + s + "' (matrix | trace_det | minors)");
}

DesignSpec::DesignSpec(AlgorithmFamily family_, FunctionClass fc_)
    : family(std::move(family_)), fc(fc_), box(family.default_box(fc)) {}

void DesignSpec::validate() const {
  const auto& names = family.param_names();
  if (box.size() != names.size())
    throw std::invalid_argument("design: box has " + std::to_string(box.size()) + " intervals, family '" +
                                family.name() + "' has " + std::to_string(names.size()) + " parameters");
  for (std::size_t i = 0; i < box.size(); ++i) {
    const auto [lo, hi] = box[i];
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi)
      throw std::invalid_argument("design: empty or unbounded interval for parameter '" + names[i] + "'");
  }
  for (const auto& [name, v] : frozen) {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw std::invalid_argument("design: unknown frozen parameter '" + name + "'");
    const auto [lo, hi] = box[static_cast<std::size_t>(it - names.begin())];
    if (v < lo || v > hi) throw std::invalid_argument("design: frozen value of '" + name + "' lies outside the box");
  }
}

bool DesignSpec::contains(const Vector& theta) const {
  if (theta.size() != static_cast<Index>(box.size())) return false;
  for (std::size_t i = 0; i < box.size(); ++i) {
    const auto [lo, hi] = box[i];
    const double slack = 1e-12 * std::max({1.0, std::abs(lo), std::abs(hi)});
    const double v = theta(static_cast<Index>(i));
    if (!(v >= lo - slack && v <= hi + slack)) return false;
  }
  for (const auto& [name, v] : frozen) {
    const auto& names = family.param_names();
    const auto idx = std::find(names.begin(), names.end(), name) - names.begin();
    if (std::abs(theta(idx) - v) > 1e-12 * std::max(1.0, std::abs(v))) return false;
  }
  return true;
}

std::vector<Index> DesignSpec::free_params() const {
  std::vector<Index> out;
  const auto& names = family.param_names();
  for (std::size_t i = 0; i < names.size(); ++i)
    if (!frozen.count(names[i])) out.push_back(static_cast<Index>(i));
  return out;
}

namespace {

Vector base_theta(const DesignSpec& spec) {
  const auto& names = spec.family.param_names();
  Vector theta(static_cast<Index>(names.size()));
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto it = spec.frozen.find(names[i]);
    theta(static_cast<Index>(i)) = it != spec.frozen.end() ? it->second : spec.box[i].first;
  }
  return theta;
}

AnalysisResult certify_and_verify(const DesignSpec& spec, const Vector& theta, const DesignOptions& opts) {
  const CertificateProblem prob(spec.family, spec.fc);
  AnalysisOptions ao = opts.analysis;
  ao.eps = opts.fine_eps;
  AnalysisResult res = certify_rate(prob, theta, ao);
  res.verification = verify_certificate(prob, theta, res.certificate, opts.verify_trials, opts.seed);
  return res;
}

double rate_or_two(const CertificateProblem& prob, const Vector& theta, const AnalysisOptions& ao) {
  try {
    return certify_rate(prob, theta, ao).rho_star;
  } catch (const NeverFeasible&) {
    return 2.0;
  } catch (const SolverFailure&) {
    return 2.0;
  }
}

// Golden-section search of the certified rate, one free parameter at a time,
// in a bracket around the current value (moved up to three times when the
// best point sits on a bracket end). Never returns a worse point.
Vector polish(const DesignSpec& spec, Vector theta, const DesignOptions& opts, double& rho_start) {
  const CertificateProblem prob(spec.family, spec.fc);
  AnalysisOptions ao = opts.analysis;
  ao.eps = opts.fine_eps;
  double rho = rho_start = rate_or_two(prob, theta, ao);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (const Index p : spec.free_params()) {
    const auto [lo, hi] = spec.box[static_cast<std::size_t>(p)];
    const double w = opts.polish_width * (hi - lo), tol = 1e-4 * (hi - lo);
    if (!(w > 0.0)) continue;
    auto f = [&](double v) {
      Vector t = theta;
      t(p) = v;
      const double r = rate_or_two(prob, t, ao);
      if (r < rho) {
        rho = r;
        theta = t;
      }
      return r;
    };
    double a = std::max(lo, theta(p) - w), b = std::min(hi, theta(p) + w);
    for (int shift = 0; shift < 4; ++shift) {
      const double a0 = a, b0 = b;
      double x1 = b - g * (b - a), x2 = a + g * (b - a);
      double f1 = f(x1), f2 = f(x2);
      while (b - a > tol) {
        if (f1 <= f2) {
          b = x2;
          x2 = x1;
          f2 = f1;
          x1 = b - g * (b - a);
          f1 = f(x1);
        } else {
          a = x1;
          x1 = x2;
          f1 = f2;
          x2 = a + g * (b - a);
          f2 = f(x2);
        }
      }
      const double c = theta(p);
      if (a0 > lo && c - a0 <= 2.0 * tol) {
        b = c;
        a = std::max(lo, c - w);
      } else if (b0 < hi && b0 - c <= 2.0 * tol) {
        a = c;
        b = std::min(hi, c + w);
      } else {
        break;
      }
    }
  }
  return theta;
}

}  // namespace

AnalysisResult verify_design(const DesignSpec& spec, const Vector& theta, const DesignOptions& opts) {
  spec.validate();
  if (!spec.contains(theta)) throw std::invalid_argument("verify_design: theta lies outside the design box");
  return certify_and_verify(spec, theta, opts);
}

DesignResult design_grid(const DesignSpec& spec, const DesignOptions& opts) {
  spec.validate();
  if (opts.resolution < 2) throw std::invalid_argument("design_grid: resolution must be >= 2");
  const std::vector<Index> free = spec.free_params();

  // axis values per free parameter (a degenerate interval is a single point)
  std::vector<std::vector<double>> axes;
  double total = 1.0;
  for (const Index p : free) {
    const auto [lo, hi] = spec.box[static_cast<std::size_t>(p)];
    std::vector<double> ax;
    if (lo == hi) {
      ax.push_back(lo);
    } else {
      for (int k = 0; k < opts.resolution; ++k) ax.push_back(lo + (hi - lo) * k / (opts.resolution - 1));
    }
    total *= static_cast<double>(ax.size());
    axes.push_back(std::move(ax));
  }
  if (total > 1e5) throw std::invalid_argument("design_grid: more than 1e5 grid points");
  const std::size_t count = static_cast<std::size_t>(total);

  const Vector base = base_theta(spec);
  auto theta_at = [&](std::size_t idx) {
    Vector th = base;
    for (std::size_t d = free.size(); d-- > 0;) {
      const std::size_t len = axes[d].size();
      th(free[d]) = axes[d][idx % len];
      idx /= len;
    }
    return th;
  };

  const CertificateProblem prob(spec.family, spec.fc);
  AnalysisOptions coarse = opts.analysis;
  coarse.eps = opts.coarse_eps;
  std::vector<SweepRow> rows(count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      SweepRow& row = rows[i];
      row.theta = theta_at(i);
      try {
        row.rho = certify_rate(prob, row.theta, coarse).rho_star;
        // Near the stability boundary the coarse bisection never probes
        // close enough to 1; resolve those rows at the fine tolerance.
        if (row.rho >= 1.0 && opts.fine_eps < opts.coarse_eps) {
          AnalysisOptions fine = opts.analysis;
          fine.eps = opts.fine_eps;
          row.rho = certify_rate(prob, row.theta, fine).rho_star;
        }
        row.feasible = row.rho < 1.0;
        row.status = "certified";
      } catch (const NeverFeasible&) {
        row.status = "never_feasible";
      } catch (const SolverFailure&) {
        row.status = "solver_failure";
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(count);
        return;
      }
    }
  };

  unsigned nthreads = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  nthreads = static_cast<unsigned>(std::min<std::size_t>(nthreads, count));
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::size_t best = count;
  for (std::size_t i = 0; i < count; ++i)
    if (rows[i].feasible && (best == count || rows[i].rho < rows[best].rho)) best = i;
  if (best == count) throw AllInfeasible("design_grid: no grid point certifies rho < 1");

  DesignResult out;
  out.method = "grid";
  out.theta_star = rows[best].theta;
  out.analysis = certify_and_verify(spec, out.theta_star, opts);
  out.rho_certified = out.analysis.rho_star;
  out.sweep_table = std::move(rows);
  return out;
}

DesignProgram design_program(const DesignSpec& spec, Scalarization s) {
  spec.validate();
  const double L = spec.fc.L_f();
  const FunctionClass unit(spec.fc.m_f() / L, 1.0);
  const CertificateProblem prob(spec.family, unit);
  const auto& names = spec.family.param_names();
  const auto& units = spec.family.param_units();
  auto to_unit = [&](std::size_t i, double v) { return units[i] == ParamUnit::inverse_curvature ? v * L : v; };

  DesignProgram prog;
  const Polynomial rho2 = Polynomial::variable("rho2");
  prog.vars.push_back("rho2");
  prog.objective = rho2;
  prog.constraints.push_back(rho2);
  prog.constraints.push_back(1.0 - rho2);

  SymbolicInputs in;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto it = spec.frozen.find(names[i]);
    if (it != spec.frozen.end()) {
      in.theta[names[i]] = Polynomial(to_unit(i, it->second));
      continue;
    }
    const Polynomial v = Polynomial::variable(names[i]);
    in.theta[names[i]] = v;
    prog.vars.push_back(names[i]);
    const double lo = to_unit(i, spec.box[i].first), hi = to_unit(i, spec.box[i].second);
    prog.constraints.push_back(v - lo);
    prog.constraints.push_back(hi - v);
  }

  const Index n = prob.n();
  const Polynomial lam = Polynomial::variable("lambda");
  prog.vars.push_back("lambda");
  prog.constraints.push_back(lam);
  in.rho2 = rho2;
  in.lambda = lam;
  in.P = SymbolicInputs::symbolic_P(n, n == 1);
  Polynomial trace = 0.0;
  for (Index i = 0; i < n; ++i) trace += in.P(i, i);
  for (Index i = 0; i < n; ++i)
    for (Index j = i; j < n; ++j)
      if (n > 1 || (i == 0 && j == 0)) prog.vars.push_back(SymbolicInputs::p_name(n, i, j));
  for (const auto& minor : principal_minors(in.P)) prog.constraints.push_back(minor);
  // homogeneous normalization a + lambda + tr P = 1 with a >= 0
  in.a = 1.0 - lam - trace;
  prog.constraints.push_back(in.a);

  const PolyMatrix negM = Polynomial(-1.0) * build_symbolic(prob, in);
  switch (s) {
    case Scalarization::matrix:
      prog.matrix_constraints.push_back(negM);
      break;
    case Scalarization::trace_det: {
      const auto [tr, det] = trace_det_scalarize(negM);
      prog.constraints.push_back(tr);
      prog.constraints.push_back(det);
      break;
    }
    case Scalarization::minors:
      for (const auto& minor : principal_minors(negM)) prog.constraints.push_back(minor);
      break;
  }
  return prog;
}

DesignResult design_sos(const DesignSpec& spec, const DesignOptions& opts) {
  spec.validate();
  const DesignProgram prog = design_program(spec, opts.scalarization);
  SosOptions so = opts.sos;
  so.vars = prog.vars;

  int order = opts.order > 0 ? opts.order : 3;
  std::optional<LowerBoundResult> lb;
  for (;; ++order) {
    try {
      lb = lower_bound_constrained(prog.objective, prog.constraints, prog.matrix_constraints, order, so);
      break;
    } catch (const RelaxationInfeasible&) {
      if (order >= opts.max_order) throw;
    }
  }

  DesignResult out;
  out.method = "sos";
  out.rho_lower_bound = std::sqrt(std::max(lb->gamma, 0.0));
  out.relaxation = lb;

  // candidate theta (in units of the class (m/L, 1)), clamped to the box
  Point cand;
  if (lb->moment_candidate) {
    cand = *lb->moment_candidate;
    out.candidate_source = "moments";
  } else {
    const Vector y = lb->moments.first_order();
    for (std::size_t i = 0; i < lb->vars.size(); ++i) cand[lb->vars[i]] = y(static_cast<Index>(i));
    out.candidate_source = "first_moments";
  }
  const double L = spec.fc.L_f();
  const auto& names = spec.family.param_names();
  const auto& units = spec.family.param_units();
  Vector theta = base_theta(spec);
  for (const Index p : spec.free_params()) {
    const std::size_t i = static_cast<std::size_t>(p);
    double v = cand.at(names[i]);
    if (units[i] == ParamUnit::inverse_curvature) v /= L;
    theta(p) = std::clamp(v, spec.box[i].first, spec.box[i].second);
  }
  out.theta_candidate = theta;
  if (opts.polish) {
    double rho = 2.0;
    theta = polish(spec, theta, opts, rho);
    out.rho_candidate = rho;
  }
  out.theta_star = theta;

  try {
    out.analysis = certify_and_verify(spec, theta, opts);
  } catch (const NeverFeasible& e) {
    throw ExtractionFailed(std::string("design_sos: candidate could not be certified: ") + e.what(), out);
  } catch (const SolverFailure& e) {
    throw ExtractionFailed(std::string("design_sos: candidate could not be certified: ") + e.what(), out);
  }
  out.rho_certified = out.analysis.rho_star;
  out.gap = out.rho_certified - *out.rho_lower_bound;
  return out;
}

DesignResult design(const DesignSpec& spec, const DesignOptions& opts) {
  switch (spec.method) {
    case DesignMethod::grid:
      return design_grid(spec, opts);
    case DesignMethod::sos:
      return design_sos(spec, opts);
    case DesignMethod::both: {
      DesignResult grid = design_grid(spec, opts);
      DesignResult sos;
      try {
        sos = design_sos(spec, opts);
      } catch (const ExtractionFailed& e) {
        sos = e.partial;
        sos.rho_certified = std::numeric_limits<double>::infinity();
      }
      DesignResult out = sos.rho_certified < grid.rho_certified ? sos : grid;
      out.method = "both";
      out.sweep_table = std::move(grid.sweep_table);
      out.rho_lower_bound = sos.rho_lower_bound;
      out.relaxation = std::move(sos.relaxation);
      out.candidate_source = sos.candidate_source;
      if (out.rho_lower_bound) out.gap = out.rho_certified - *out.rho_lower_bound;
      return out;
    }
  }
  throw std::logic_error("design: unreachable");
}

}  // namespace ratecert
