#pragma once

#include "ratecert/analysis.hpp"
#include "ratecert/sos.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ratecert {

/// No grid point certifies rho < 1.
struct AllInfeasible : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class DesignMethod { grid, sos, both };
enum class Scalarization { matrix, trace_det, minors };

const char* to_string(DesignMethod m);
const char* to_string(Scalarization s);
DesignMethod design_method_from(const std::string& s);
Scalarization scalarization_from(const std::string& s);

struct DesignSpec {
  DesignSpec(AlgorithmFamily family, FunctionClass fc);

  AlgorithmFamily family;
  FunctionClass fc;
  /// Per-parameter [lo, hi]; initialized to family.default_box(fc).
  std::vector<std::pair<double, double>> box;
  /// Pinned parameter values, e.g. {"h", 1 / L_f}.
  std::map<std::string, double> frozen;
  DesignMethod method = DesignMethod::grid;

  /// Throws std::invalid_argument on an empty or non-finite box, unknown
  /// frozen names or frozen values outside the box.
  void validate() const;
  bool contains(const Vector& theta) const;
  /// Indices of parameters that are not frozen.
  std::vector<Index> free_params() const;
};

struct DesignOptions {
  int resolution = 50;        // grid points per free dimension
  double coarse_eps = 1e-3;   // bisection tolerance during the sweep
  double fine_eps = 1e-4;     // final re-certification
  unsigned threads = 0;       // 0: hardware concurrency
  Scalarization scalarization = Scalarization::matrix;
  int order = -1;             // relaxation order; -1: 3
  int max_order = 3;          // escalation cap
  AnalysisOptions analysis;
  SosOptions sos;
  /// Golden-section refinement of the certified rate around the extracted
  /// candidate, per free parameter, within +-polish_width of the box width.
  bool polish = true;
  double polish_width = 0.1;
  int verify_trials = 20;
  std::uint64_t seed = 1;
};

struct SweepRow {
  Vector theta;
  double rho = 1.0;
  bool feasible = false;  // certified rho < 1
  std::string status;     // certified | never_feasible | solver_failure
};

struct DesignResult {
  Vector theta_star;
  double rho_certified = 1.0;
  std::optional<double> rho_lower_bound;
  std::optional<double> gap;
  std::optional<std::vector<SweepRow>> sweep_table;
  AnalysisResult analysis;  // re-certification of theta_star
  std::string method;
  /// sos only
  std::optional<LowerBoundResult> relaxation;
  std::string candidate_source;  // moments | first_moments
  std::optional<Vector> theta_candidate;  // extracted, before polishing
  std::optional<double> rho_candidate;    // its certified rate (coarse eps)
};

/// Relaxation solved but its candidate could not be certified. `partial`
/// carries the lower bound.
struct ExtractionFailed : std::runtime_error {
  ExtractionFailed(const std::string& what, DesignResult partial)
      : std::runtime_error(what), partial(std::move(partial)) {}
  DesignResult partial;
};

/// certify_rate at every point of a resolution^k grid over the free
/// parameters (coarse eps), then a fine re-certification of the argmin.
DesignResult design_grid(const DesignSpec& spec, const DesignOptions& opts = {});

/// Minimize rho^2 over the scalarized matrix inequality with the SOS
/// hierarchy; certify the moment candidate.
DesignResult design_sos(const DesignSpec& spec, const DesignOptions& opts = {});

/// Runs the method(s) named in spec.method; for `both` the better certified
/// point wins and the sweep table and lower bound are both kept.
DesignResult design(const DesignSpec& spec, const DesignOptions& opts = {});

/// certify_rate at fine eps plus an empirical verify_certificate report.
/// Throws std::invalid_argument when theta lies outside the box.
AnalysisResult verify_design(const DesignSpec& spec, const Vector& theta, const DesignOptions& opts = {});

/// The polynomial program solved by design_sos, in the class (m/L, 1):
/// objective rho2 and constraints over [rho2, free params, lambda, P entries].
struct DesignProgram {
  std::vector<std::string> vars;
  Polynomial objective;
  std::vector<Polynomial> constraints;
  std::vector<PolyMatrix> matrix_constraints;
};

DesignProgram design_program(const DesignSpec& spec, Scalarization s);

}  // namespace ratecert
