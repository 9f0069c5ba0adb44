#pragma once

#include "ratecert/model.hpp"

#include <memory>
#include <random>
#include <vector>

namespace ratecert {

struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A member of F(m_f, L_f) with known minimizer.
class TestFunction {
 public:
  virtual ~TestFunction() = default;

  virtual Index dim() const = 0;
  virtual double value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;
  virtual const char* kind() const = 0;

  const Vector& minimizer() const { return xstar_; }
  double min_value() const { return fstar_; }
  /// Constants (m, L) this instance is certified for.
  const FunctionClass& function_class() const { return fc_; }

 protected:
  explicit TestFunction(FunctionClass fc) : fc_(fc) {}

  FunctionClass fc_;
  Vector xstar_;
  double fstar_ = 0.0;
};

/// f(x) = 1/2 (x - x*)' H (x - x*) + f*, spectrum of H in [m, L].
class QuadraticFunction : public TestFunction {
 public:
  QuadraticFunction(const FunctionClass& fc, Matrix H, Vector xstar, double fstar = 0.0);

  /// Random orthogonal eigenbasis; the extreme eigenvalues m and L are always
  /// present when d >= 2.
  static QuadraticFunction random(const FunctionClass& fc, Index d, std::mt19937_64& rng);

  Index dim() const override { return H_.rows(); }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  const char* kind() const override { return "quadratic"; }
  const Matrix& hessian() const { return H_; }

 private:
  Matrix H_;
};

/// f(x) = log sum_i exp(a_i'x + b_i) + m/2 |x|^2.
/// Hessian bound: m I <= H <= (m + |A|_2^2 / 2) I.
class LogSumExpFunction : public TestFunction {
 public:
  LogSumExpFunction(double m, Matrix A, Vector b);

  /// Random data scaled so that the certified L equals fc.L_f().
  static LogSumExpFunction random(const FunctionClass& fc, Index d, Index terms,
                                  std::mt19937_64& rng);

  Index dim() const override { return A_.cols(); }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  const char* kind() const override { return "log_sum_exp"; }

 private:
  Vector softmax(const Vector& x) const;
  void find_minimizer();

  double m_;
  Matrix A_;
  Vector b_;
};

struct Trajectory {
  std::vector<Matrix> states;  // n x d, row i is block i of xi_k
  std::vector<Vector> outputs_y;
  std::vector<Vector> outputs_x;
  std::vector<double> objective_gaps;
};

/// K steps of xi+ = A xi + B grad f(C xi); states.size() == K + 1.
Trajectory simulate(const AlgorithmFamily& family, const Vector& theta, const TestFunction& f,
                    const Matrix& xi0, int K);

/// xi* = fixed_point_direction (x) x*, as an n x d block matrix.
Matrix fixed_point_state(const AlgorithmFamily& family, const Vector& theta, const Vector& xstar);

/// V_k = f(x_k) - f* + (xi_k - xi*)' (P (x) I_d) (xi_k - xi*).
std::vector<double> lyapunov_values(const Trajectory& traj, const SymMatrix& P_reduced,
                                    const Matrix& fixed_point);

}  // namespace ratecert
