// Prints one PASS/FAIL line per acceptance criterion; exits nonzero on any
// failure.

#include "ratecert/design.hpp"
#include "ratecert/sos.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>

using namespace ratecert;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& why) {
    if (!ok) {
      pass = false;
      detail << " [" << why << "]";
    }
  }
};

// Criterion 6 collects every certificate produced by the others.
struct Soundness {
  int checked = 0;
  int failed = 0;
  std::string first_failure;

  void add(const std::string& label, bool passed) {
    ++checked;
    if (!passed && failed++ == 0) first_failure = label;
  }
  void add(const CertificateProblem& prob, const Vector& theta, const AnalysisResult& r, const std::string& label) {
    add(label, verify_certificate(prob, theta, r.certificate, 20, 1).passed);
  }
  void add(const DesignResult& r, const std::string& label) {
    add(label, r.analysis.verification && r.analysis.verification->passed);
  }
};

Soundness soundness;

void report(int id, const std::string& title, const Outcome& o) {
  std::printf("criterion %d: %s  %s:%s\n", id, o.pass ? "PASS" : "FAIL", title.c_str(), o.detail.str().c_str());
  std::fflush(stdout);
}

std::string fmt(double v, int prec = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

Outcome gradient_rows() {
  Outcome o;
  double worst_dev = 0.0, worst_time = 0.0;
  for (double k : {2.0, 5.0, 10.0, 100.0}) {
    const auto t0 = Clock::now();
    const CertificateProblem prob(builtin_family("gradient"), FunctionClass(1, k));
    const std::pair<double, double> rows[] = {{1.0 / k, 1.0 - 1.0 / k}, {2.0 / (1.0 + k), (k - 1.0) / (k + 1.0)}};
    std::vector<std::pair<Vector, AnalysisResult>> done;
    for (const auto& [h, expect] : rows) {
      const AnalysisResult r = certify_rate(prob, vec({h}));
      const double dev = std::abs(r.rho_star - expect);
      worst_dev = std::max(worst_dev, dev);
      o.require(dev <= 1e-3, "kappa " + fmt(k) + " h " + fmt(h) + ": rho " + fmt(r.rho_star));
      done.emplace_back(vec({h}), r);
    }
    const double t = seconds_since(t0);
    worst_time = std::max(worst_time, t);
    o.require(t < 5.0, "kappa " + fmt(k) + " took " + fmt(t, 3) + " s");
    for (const auto& [th, r] : done) soundness.add(prob, th, r, "gradient kappa " + fmt(k));
  }
  o.detail << " max deviation " << fmt(worst_dev, 3) << ", slowest kappa " << fmt(worst_time, 3) << " s";
  return o;
}

Outcome nesterov_row() {
  Outcome o;
  for (double k : {10.0, 100.0}) {
    const double sk = std::sqrt(k), bound = std::sqrt(1.0 - 1.0 / sk);
    const CertificateProblem prob(builtin_family("nesterov"), FunctionClass(1, k));
    const Vector th = vec({1.0 / k, (sk - 1.0) / (sk + 1.0)});
    const auto t0 = Clock::now();
    const AnalysisResult r = certify_rate(prob, th);
    const double t = seconds_since(t0);
    o.require(r.rho_star <= bound + 1e-3, "kappa " + fmt(k) + ": rho " + fmt(r.rho_star) + " > " + fmt(bound));
    o.require(t < 10.0, "kappa " + fmt(k) + " took " + fmt(t, 3) + " s");
    o.detail << " kappa " << k << " rho " << fmt(r.rho_star) << " (bound " << fmt(bound) << ", " << fmt(t, 2) << " s)";
    soundness.add(prob, th, r, "nesterov kappa " + fmt(k));
  }
  return o;
}

Outcome gradient_design() {
  Outcome o;
  for (double k : {2.0, 5.0, 10.0, 50.0}) {
    DesignSpec spec(builtin_family("gradient"), FunctionClass(1, k));
    spec.method = DesignMethod::sos;
    const auto t0 = Clock::now();
    try {
      const DesignResult r = design(spec);
      const double t = seconds_since(t0), expect = (k - 1.0) / (k + 1.0);
      o.require(std::abs(r.rho_certified - expect) <= 1e-2, "kappa " + fmt(k) + ": rho " + fmt(r.rho_certified));
      o.require(r.gap && *r.gap <= 2e-2, "kappa " + fmt(k) + ": gap " + (r.gap ? fmt(*r.gap) : "missing"));
      o.require(t < 30.0, "kappa " + fmt(k) + " took " + fmt(t, 3) + " s");
      o.detail << " kappa " << k << " rho " << fmt(r.rho_certified) << " gap " << (r.gap ? fmt(*r.gap, 2) : "-")
               << " (" << fmt(t, 2) << " s)";
      soundness.add(r, "gradient design kappa " + fmt(k));
    } catch (const std::exception& e) {
      o.require(false, "kappa " + fmt(k) + ": " + e.what());
    }
  }
  return o;
}

Outcome nesterov_design() {
  Outcome o;
  for (double k : {10.0, 100.0}) {
    const double sk = std::sqrt(k), lo = (sk - 1.0) / (sk + 1.0), hi = std::sqrt(1.0 - 1.0 / sk);
    DesignSpec spec(builtin_family("nesterov"), FunctionClass(1, k));
    spec.method = DesignMethod::sos;
    spec.frozen["h"] = 1.0 / k;
    const auto t0 = Clock::now();
    try {
      const DesignResult r = design(spec);
      const double t = seconds_since(t0);
      o.require(r.rho_certified >= lo - 1e-3 && r.rho_certified <= hi + 1e-3,
                "kappa " + fmt(k) + ": rho " + fmt(r.rho_certified) + " outside [" + fmt(lo) + ", " + fmt(hi) + "]");
      o.detail << " kappa " << k << " rho " << fmt(r.rho_certified) << " in [" << fmt(lo, 4) << ", " << fmt(hi, 4)
               << "] beta " << fmt(r.theta_star(1), 4) << " (" << fmt(t, 2) << " s)";
      soundness.add(r, "nesterov design kappa " + fmt(k));
    } catch (const std::exception& e) {
      o.require(false, "kappa " + fmt(k) + ": " + e.what());
    }
  }
  return o;
}

Outcome contour_sweep() {
  Outcome o;
  const double k = 10.0, sk = std::sqrt(k);
  DesignSpec spec(builtin_family("nesterov"), FunctionClass(1, k));
  spec.box = {{0.0, 2.0 / k}, {0.0, 1.0}};
  DesignOptions opts;
  opts.resolution = 50;
  const auto t0 = Clock::now();
  const DesignResult r = design_grid(spec, opts);
  const double t = seconds_since(t0);

  const CertificateProblem prob(spec.family, spec.fc);
  const Vector textbook = vec({1.0 / k, (sk - 1.0) / (sk + 1.0)});
  const double ref = certify_rate(prob, textbook).rho_star;
  int certified = 0, never = 0, other = 0;
  bool finite_below_one = true;
  for (const auto& row : *r.sweep_table) {
    if (row.status == "certified") {
      ++certified;
      finite_below_one = finite_below_one && std::isfinite(row.rho) && row.rho < 1.0;
    } else if (row.status == "never_feasible") {
      ++never;
    } else {
      ++other;
    }
  }
  o.require(r.sweep_table->size() == 2500, "grid has " + std::to_string(r.sweep_table->size()) + " points");
  o.require(r.rho_certified <= ref + 1e-3, "grid minimum " + fmt(r.rho_certified) + " above " + fmt(ref));
  o.require(certified > 0 && finite_below_one, "no finite region below one");
  o.require(never > 0 && other == 0, "points neither certified nor never feasible: " + std::to_string(other));
  o.require(t < 600.0, "took " + fmt(t, 4) + " s");
  o.detail << " minimum " << fmt(r.rho_certified) << " at h " << fmt(r.theta_star(0), 4) << " beta "
           << fmt(r.theta_star(1), 4) << " (textbook tuning " << fmt(ref) << "); " << certified << " certified, "
           << never << " never feasible, " << fmt(t, 3) << " s";
  soundness.add(r, "grid argmin");
  return o;
}

// Solver and relaxation checks.

SdpProblem lambda_max_problem(const Matrix& D) {
  const Index n = D.rows();
  SdpProblem p;
  p.blocks = {n};
  p.num_free = 1;
  p.free_cost = Vector::Ones(1);
  for (Index i = 0; i < n; ++i)
    for (Index j = i; j < n; ++j) {
      SdpConstraint c;
      c.entries.push_back({0, i, j, i == j ? 1.0 : 0.5});
      if (i == j) c.free_coeffs.push_back({0, -1.0});
      c.b = -D(i, j);
      p.constraints.push_back(c);
    }
  return p;
}

double lp_by_vertices(const Matrix& A, const Vector& b, const Vector& c) {
  const Index m = A.rows(), n = A.cols();
  double best = std::numeric_limits<double>::infinity();
  std::vector<bool> mask(static_cast<std::size_t>(n), false);
  std::fill(mask.begin(), mask.begin() + m, true);
  do {
    std::vector<Index> cols;
    for (Index j = 0; j < n; ++j)
      if (mask[static_cast<std::size_t>(j)]) cols.push_back(j);
    Matrix B(m, m);
    for (Index q = 0; q < m; ++q) B.col(q) = A.col(cols[static_cast<std::size_t>(q)]);
    Eigen::FullPivLU<Matrix> lu(B);
    if (!lu.isInvertible()) continue;
    const Vector xb = lu.solve(b);
    if (xb.minCoeff() < -1e-12) continue;
    double obj = 0.0;
    for (Index q = 0; q < m; ++q) obj += c(cols[static_cast<std::size_t>(q)]) * xb(q);
    best = std::min(best, obj);
  } while (std::prev_permutation(mask.begin(), mask.end()));
  return best;
}

Outcome unit_checks() {
  Outcome o;
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.1, 2.0);

  double worst_eig = 0.0;
  for (Index n = 2; n <= 7; ++n) {
    Matrix a(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) a(i, j) = g(rng);
    const Matrix D = 0.5 * (a + a.transpose());
    const SdpSolution s = solve_sdp(lambda_max_problem(D));
    const double err = s.status == SdpStatus::Optimal ? std::abs(s.primal_objective - max_eigenvalue(SymMatrix(D)))
                                                       : std::numeric_limits<double>::infinity();
    worst_eig = std::max(worst_eig, err);
  }
  o.require(worst_eig <= 1e-6, "largest-eigenvalue error " + fmt(worst_eig));

  double worst_lp = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const Index m = 2 + trial % 2, n = 5;
    Matrix A(m, n);
    Vector x0(n), c(n);
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < n; ++j) A(i, j) = u(rng);
    for (Index j = 0; j < n; ++j) {
      x0(j) = pos(rng);
      c(j) = pos(rng);
    }
    const Vector b = A * x0;
    SdpProblem p;
    p.blocks.assign(static_cast<std::size_t>(n), 1);
    for (Index j = 0; j < n; ++j) p.objective.push_back({j, 0, 0, c(j)});
    for (Index i = 0; i < m; ++i) {
      SdpConstraint con;
      for (Index j = 0; j < n; ++j) con.entries.push_back({j, 0, 0, A(i, j)});
      con.b = b(i);
      p.constraints.push_back(con);
    }
    const SdpSolution s = solve_sdp(p);
    const double err = s.status == SdpStatus::Optimal ? std::abs(s.primal_objective - lp_by_vertices(A, b, c))
                                                       : std::numeric_limits<double>::infinity();
    worst_lp = std::max(worst_lp, err);
  }
  o.require(worst_lp <= 1e-6, "diagonal-SDP error " + fmt(worst_lp));

  const Polynomial x = Polynomial::variable("x"), y = Polynomial::variable("y");
  const bool square = check_sos((x * x + 1.0).pow(2)).is_sos;
  const bool negative = check_sos(x * x - 1.0).is_sos;
  const bool motzkin = check_sos(x.pow(4) * y.pow(2) + x.pow(2) * y.pow(4) - 3.0 * x * x * y * y + 1.0).is_sos;
  o.require(square && !negative && !motzkin, "SOS membership");

  const double gamma = lower_bound_unconstrained(x.pow(4) - 3.0 * x * x).gamma;
  o.require(std::abs(gamma + 2.25) <= 1e-6, "quartic bound " + fmt(gamma, 10));

  const std::vector<std::pair<Polynomial, std::vector<Polynomial>>> problems = {
      {x * y, {1.0 - x * x, 1.0 - y * y}},
      {x.pow(3) - x, {1.0 - x * x}},
      {x.pow(4) * y + y * y - x, {1.0 - x * x - y * y, x}},
  };
  bool monotone = true;
  for (const auto& [p, gs] : problems) {
    int lowest = (p.degree() + 1) / 2;
    for (const auto& gi : gs) lowest = std::max(lowest, (gi.degree() + 1) / 2);
    double prev = -std::numeric_limits<double>::infinity();
    for (int order = lowest; order <= lowest + 2; ++order) {
      const double gk = lower_bound_constrained(p, gs, order).gamma;
      monotone = monotone && gk >= prev - 1e-6;
      prev = gk;
    }
  }
  o.require(monotone, "hierarchy not monotone");
  o.detail << " eigenvalue error " << fmt(worst_eig, 2) << ", diagonal error " << fmt(worst_lp, 2)
           << ", quartic bound error " << fmt(std::abs(gamma + 2.25), 2);
  return o;
}

Outcome scale_invariance() {
  Outcome o;
  double worst = 0.0;
  for (double k : {2.0, 5.0, 10.0, 100.0}) {
    for (double hL : {1.0, 2.0 / (1.0 + 1.0 / k)}) {
      const CertificateProblem a(builtin_family("gradient"), FunctionClass(1, k));
      const CertificateProblem b(builtin_family("gradient"), FunctionClass(10, 10 * k));
      const Vector ta = vec({hL / k}), tb = vec({hL / (10 * k)});
      const AnalysisResult ra = certify_rate(a, ta), rb = certify_rate(b, tb);
      worst = std::max(worst, std::abs(ra.rho_star - rb.rho_star));
      soundness.add(b, tb, rb, "scaled gradient kappa " + fmt(k));
    }
  }
  o.require(worst <= 1e-6, "difference " + fmt(worst));
  o.detail << " max difference " << fmt(worst, 3);
  return o;
}

Outcome guarded(const std::function<Outcome()>& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    Outcome o;
    o.require(false, std::string("exception: ") + e.what());
    return o;
  }
}

}  // namespace

int main() {
  std::map<int, std::pair<std::string, Outcome>> results;
  auto run = [&](int id, const std::string& title, const std::function<Outcome()>& f) {
    results[id] = {title, guarded(f)};
  };
  run(1, "gradient rates at h = 1/L and h = 2/(m+L)", gradient_rows);
  run(2, "nesterov rate at the textbook tuning", nesterov_row);
  run(3, "gradient design by relaxation", gradient_design);
  run(4, "nesterov momentum design with h = 1/L", nesterov_design);
  run(5, "50 x 50 nesterov sweep at kappa 10", contour_sweep);
  run(7, "solver and relaxation checks", unit_checks);
  run(8, "scale invariance", scale_invariance);
  // Runs last: it checks the certificates collected above.
  run(6, "every returned certificate verifies", [] {
    Outcome o;
    o.require(soundness.failed == 0, std::to_string(soundness.failed) + " failed, first: " + soundness.first_failure);
    o.detail << " " << soundness.checked << " certificates verified";
    return o;
  });
  bool all = true;
  for (const auto& [id, r] : results) {
    report(id, r.first, r.second);
    all = all && r.second.pass;
  }
  return all ? 0 : 1;
}
