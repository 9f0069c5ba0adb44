#pragma once

#include "ratecert/linalg.hpp"
#include "ratecert/polynomial.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace ratecert {

struct UnknownFamily : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// F(m_f, L_f): m_f-strongly convex and L_f-smooth functions.
class FunctionClass {
 public:
  FunctionClass(double m_f, double L_f);

  double m_f() const { return m_; }
  double L_f() const { return L_; }
  double condition_number() const { return L_ / m_; }

  static FunctionClass from_kappa(double kappa) { return FunctionClass(1.0, kappa); }

 private:
  double m_;
  double L_;
};

/// [[-2 m L, m + L], [m + L, -2]]
SymMatrix qf_matrix(const FunctionClass& fc);

/// Physical unit of a parameter. Stepsizes scale like 1/L_f; momentum
/// weights are dimensionless.
enum class ParamUnit { dimensionless, inverse_curvature };

struct StateSpace {
  Matrix A;  // n x n
  Matrix B;  // n x 1
  Matrix C;  // 1 x n
  Matrix E;  // 1 x n
};

struct SymbolicStateSpace {
  PolyArray A, B, C, E;
};

/// Parameterized method xi+ = A xi + B grad f(y), y = C xi, x = E xi, in
/// reduced form (every matrix is the reduced factor of a Kronecker product
/// with I_d).
class AlgorithmFamily {
 public:
  using NumericBuilder = std::function<StateSpace(const Vector&)>;

  AlgorithmFamily(std::string name, std::vector<std::string> param_names,
                  std::vector<ParamUnit> units, SymbolicStateSpace symbolic,
                  NumericBuilder numeric = {}, std::string description = {});

  const std::string& name() const { return name_; }
  const std::vector<std::string>& param_names() const { return param_names_; }
  const std::vector<ParamUnit>& param_units() const { return units_; }
  Index num_params() const { return static_cast<Index>(param_names_.size()); }
  Index state_dim() const { return symbolic_.A.rows(); }
  const std::string& description() const { return description_; }

  const SymbolicStateSpace& symbolic() const { return symbolic_; }
  StateSpace matrices(const Vector& theta) const;

  Point point(const Vector& theta) const;
  Vector theta_from(const Point& values) const;

  /// xi* direction: A xi = xi, C xi = E xi = 1.
  Vector fixed_point_direction(const Vector& theta) const;

  /// Default box: stepsizes in [0, 2/L_f], dimensionless parameters in [0, 1].
  std::vector<std::pair<double, double>> default_box(const FunctionClass& fc,
                                                     double slack = 0.0) const;

  /// theta expressed for the class (m/L, 1): stepsizes multiplied by L.
  Vector nondimensionalize(const Vector& theta, const FunctionClass& fc) const;
  Vector dimensionalize(const Vector& theta_hat, const FunctionClass& fc) const;

 private:
  void check_theta(const Vector& theta) const;

  std::string name_;
  std::vector<std::string> param_names_;
  std::vector<ParamUnit> units_;
  SymbolicStateSpace symbolic_;
  NumericBuilder numeric_;
  std::string description_;
};

/// gradient | heavy_ball | nesterov | general_three_param (alias: general).
///
/// heavy_ball uses theta = (h, gamma) where gamma is the momentum weight in
/// the state update and the gradient is taken at y_k = x_k. In terms of the
/// general three-parameter recursion this is beta := gamma and gamma := 0,
/// i.e. the two momentum names are swapped relative to `general`.
AlgorithmFamily builtin_family(const std::string& kind);

std::vector<std::string> builtin_family_names();

}  // namespace ratecert
