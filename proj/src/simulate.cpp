#include "ratecert/simulate.hpp"

#include <Eigen/QR>

#include <algorithm>

namespace ratecert {

namespace {

Matrix random_orthogonal(Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix g(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  return qr.householderQ() * Matrix::Identity(d, d);
}

}  // namespace

QuadraticFunction::QuadraticFunction(const FunctionClass& fc, Matrix H, Vector xstar, double fstar)
    : TestFunction(fc), H_(std::move(H)) {
  if (H_.rows() != H_.cols() || H_.rows() != xstar.size())
    throw DimensionError("QuadraticFunction: H and x* sizes disagree");
  const auto ev = eigenvalues(SymMatrix(H_));
  const double slack = 1e-9 * fc.L_f();
  if (ev(0) < fc.m_f() - slack || ev(ev.size() - 1) > fc.L_f() + slack)
    throw std::invalid_argument("QuadraticFunction: spectrum outside [m_f, L_f]");
  xstar_ = std::move(xstar);
  fstar_ = fstar;
}

QuadraticFunction QuadraticFunction::random(const FunctionClass& fc, Index d, std::mt19937_64& rng) {
  if (d < 1) throw DimensionError("QuadraticFunction::random: d must be >= 1");
  std::uniform_real_distribution<double> unif(fc.m_f(), fc.L_f());
  std::normal_distribution<double> normal;
  Vector spectrum(d);
  for (Index i = 0; i < d; ++i) spectrum(i) = unif(rng);
  spectrum(0) = fc.m_f();
  if (d >= 2) spectrum(1) = fc.L_f();
  const Matrix Q = random_orthogonal(d, rng);
  Matrix H = Q * spectrum.asDiagonal() * Q.transpose();
  H = (0.5 * (H + H.transpose())).eval();
  Vector xstar(d);
  for (Index i = 0; i < d; ++i) xstar(i) = normal(rng);
  return QuadraticFunction(fc, H, xstar, normal(rng));
}

double QuadraticFunction::value(const Vector& x) const {
  const Vector e = x - xstar_;
  return 0.5 * e.dot(H_ * e) + fstar_;
}

Vector QuadraticFunction::gradient(const Vector& x) const { return H_ * (x - xstar_); }

LogSumExpFunction::LogSumExpFunction(double m, Matrix A, Vector b)
    : TestFunction(FunctionClass(m, m + 0.5 * std::pow(Eigen::JacobiSVD<Matrix>(A).singularValues()(0), 2))),
      m_(m),
      A_(std::move(A)),
      b_(std::move(b)) {
  if (A_.rows() != b_.size()) throw DimensionError("LogSumExpFunction: A and b sizes disagree");
  find_minimizer();
}

LogSumExpFunction LogSumExpFunction::random(const FunctionClass& fc, Index d, Index terms,
                                            std::mt19937_64& rng) {
  if (d < 1 || terms < 1) throw DimensionError("LogSumExpFunction::random: empty data");
  std::normal_distribution<double> normal;
  Matrix A(terms, d);
  Vector b(terms);
  for (Index i = 0; i < terms; ++i) {
    for (Index j = 0; j < d; ++j) A(i, j) = normal(rng);
    b(i) = normal(rng);
  }
  const double s = Eigen::JacobiSVD<Matrix>(A).singularValues()(0);
  const double target = std::sqrt(2.0 * (fc.L_f() - fc.m_f()));
  if (s > 0.0) A *= target / s;
  return LogSumExpFunction(fc.m_f(), A, b);
}

Vector LogSumExpFunction::softmax(const Vector& x) const {
  Vector z = A_ * x + b_;
  z.array() -= z.maxCoeff();
  Vector e = z.array().exp();
  return e / e.sum();
}

double LogSumExpFunction::value(const Vector& x) const {
  const Vector z = A_ * x + b_;
  const double zmax = z.maxCoeff();
  return zmax + std::log((z.array() - zmax).exp().sum()) + 0.5 * m_ * x.squaredNorm();
}

Vector LogSumExpFunction::gradient(const Vector& x) const {
  return A_.transpose() * softmax(x) + m_ * x;
}

void LogSumExpFunction::find_minimizer() {
  // damped Newton
  Vector x = Vector::Zero(A_.cols());
  for (int it = 0; it < 100; ++it) {
    const Vector p = softmax(x);
    const Vector g = A_.transpose() * p + m_ * x;
    if (g.norm() <= 1e-14 * std::max(1.0, x.norm())) break;
    Matrix S = Matrix(p.asDiagonal()) - p * p.transpose();
    Matrix H = A_.transpose() * S * A_ + m_ * Matrix::Identity(x.size(), x.size());
    const Vector dx = H.ldlt().solve(-g);
    double t = 1.0;
    const double f0 = value(x);
    while (t > 1e-12 && value(x + t * dx) > f0 + 0.25 * t * g.dot(dx)) t *= 0.5;
    x += t * dx;
  }
  xstar_ = x;
  fstar_ = value(x);
}

Trajectory simulate(const AlgorithmFamily& family, const Vector& theta, const TestFunction& f,
                    const Matrix& xi0, int K) {
  if (K < 1) throw std::invalid_argument("simulate: K must be >= 1");
  const Index n = family.state_dim(), d = f.dim();
  if (xi0.rows() != n || xi0.cols() != d)
    throw DimensionError("simulate: initial state must be " + std::to_string(n) + " x " +
                         std::to_string(d));
  const StateSpace ss = family.matrices(theta);
  Trajectory traj;
  traj.states.reserve(static_cast<std::size_t>(K) + 1);
  Matrix xi = xi0;
  for (int k = 0;; ++k) {
    const Vector y = (ss.C * xi).transpose();
    const Vector x = (ss.E * xi).transpose();
    traj.states.push_back(xi);
    traj.outputs_y.push_back(y);
    traj.outputs_x.push_back(x);
    traj.objective_gaps.push_back(f.value(x) - f.min_value());
    if (k == K) break;
    xi = ss.A * xi + ss.B * f.gradient(y).transpose();
    const double nrm = xi.norm();
    if (!std::isfinite(nrm) || nrm > 1e12)
      throw DivergenceError("simulate: state norm exceeded 1e12 at step " + std::to_string(k + 1));
  }
  return traj;
}

Matrix fixed_point_state(const AlgorithmFamily& family, const Vector& theta, const Vector& xstar) {
  return family.fixed_point_direction(theta) * xstar.transpose();
}

std::vector<double> lyapunov_values(const Trajectory& traj, const SymMatrix& P_reduced,
                                    const Matrix& fixed_point) {
  std::vector<double> v;
  v.reserve(traj.states.size());
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const Matrix& xi = traj.states[k];
    if (xi.rows() != P_reduced.dim() || xi.rows() != fixed_point.rows() ||
        xi.cols() != fixed_point.cols())
      throw DimensionError("lyapunov_values: state, P and fixed point dimensions disagree");
    const Matrix D = xi - fixed_point;
    v.push_back(traj.objective_gaps[k] + (D.transpose() * P_reduced.dense() * D).trace());
  }
  return v;
}

}  // namespace ratecert
