#include "ratecert/model.hpp"

#include <algorithm>

namespace ratecert {

FunctionClass::FunctionClass(double m_f, double L_f) : m_(m_f), L_(L_f) {
  if (!(m_f > 0.0) || !(L_f >= m_f) || !std::isfinite(L_f))
    throw std::invalid_argument("FunctionClass: need 0 < m_f <= L_f < inf");
}

SymMatrix qf_matrix(const FunctionClass& fc) {
  const double m = fc.m_f(), L = fc.L_f();
  Matrix q(2, 2);
  q << -2.0 * m * L, m + L, m + L, -2.0;
  return SymMatrix(q);
}

AlgorithmFamily::AlgorithmFamily(std::string name, std::vector<std::string> param_names,
                                 std::vector<ParamUnit> units, SymbolicStateSpace symbolic,
                                 NumericBuilder numeric, std::string description)
    : name_(std::move(name)),
      param_names_(std::move(param_names)),
      units_(std::move(units)),
      symbolic_(std::move(symbolic)),
      numeric_(std::move(numeric)),
      description_(std::move(description)) {
  if (units_.size() != param_names_.size())
    throw DimensionError("AlgorithmFamily: one unit per parameter required");
  const Index n = symbolic_.A.rows();
  if (n < 1 || symbolic_.A.cols() != n || symbolic_.B.rows() != n || symbolic_.B.cols() != 1 ||
      symbolic_.C.rows() != 1 || symbolic_.C.cols() != n || symbolic_.E.rows() != 1 ||
      symbolic_.E.cols() != n)
    throw DimensionError("AlgorithmFamily '" + name_ + "': inconsistent matrix shapes");
  for (const auto* arr : {&symbolic_.A, &symbolic_.B, &symbolic_.C, &symbolic_.E})
    for (const auto& v : arr->vars())
      if (std::find(param_names_.begin(), param_names_.end(), v) == param_names_.end())
        throw std::invalid_argument("AlgorithmFamily '" + name_ + "': matrix entry uses unknown parameter '" +
                                    v + "'");
}

void AlgorithmFamily::check_theta(const Vector& theta) const {
  if (theta.size() != num_params())
    throw DimensionError("family '" + name_ + "' expects " + std::to_string(num_params()) +
                         " parameters, got " + std::to_string(theta.size()));
}

Point AlgorithmFamily::point(const Vector& theta) const {
  check_theta(theta);
  Point p;
  for (Index i = 0; i < num_params(); ++i) p[param_names_[static_cast<std::size_t>(i)]] = theta(i);
  return p;
}

Vector AlgorithmFamily::theta_from(const Point& values) const {
  Vector theta(num_params());
  for (Index i = 0; i < num_params(); ++i) {
    const auto& name = param_names_[static_cast<std::size_t>(i)];
    auto it = values.find(name);
    if (it == values.end())
      throw std::invalid_argument("family '" + name_ + "': missing parameter '" + name + "'");
    theta(i) = it->second;
  }
  for (const auto& [k, v] : values)
    if (std::find(param_names_.begin(), param_names_.end(), k) == param_names_.end())
      throw std::invalid_argument("family '" + name_ + "': unknown parameter '" + k + "'");
  return theta;
}

StateSpace AlgorithmFamily::matrices(const Vector& theta) const {
  check_theta(theta);
  if (numeric_) return numeric_(theta);
  const Point p = point(theta);
  return {symbolic_.A.evaluate(p), symbolic_.B.evaluate(p), symbolic_.C.evaluate(p),
          symbolic_.E.evaluate(p)};
}

Vector AlgorithmFamily::fixed_point_direction(const Vector& theta) const {
  const StateSpace ss = matrices(theta);
  const Index n = state_dim();
  Matrix sys(n + 2, n);
  sys << ss.A - Matrix::Identity(n, n), ss.C - ss.E, ss.E;
  Vector rhs = Vector::Zero(n + 2);
  rhs(n + 1) = 1.0;
  Vector xi = sys.colPivHouseholderQr().solve(rhs);
  if ((sys * xi - rhs).norm() > 1e-9)
    throw StructureError("family '" + name_ + "': no fixed point with A xi = xi, C xi = E xi = 1");
  return xi;
}

std::vector<std::pair<double, double>> AlgorithmFamily::default_box(const FunctionClass& fc,
                                                                    double slack) const {
  std::vector<std::pair<double, double>> box;
  for (auto u : units_) {
    if (u == ParamUnit::inverse_curvature)
      box.emplace_back(0.0, 2.0 / fc.L_f() * (1.0 + slack));
    else
      box.emplace_back(0.0, 1.0);
  }
  return box;
}

Vector AlgorithmFamily::nondimensionalize(const Vector& theta, const FunctionClass& fc) const {
  check_theta(theta);
  Vector out = theta;
  for (Index i = 0; i < out.size(); ++i)
    if (units_[static_cast<std::size_t>(i)] == ParamUnit::inverse_curvature) out(i) *= fc.L_f();
  return out;
}

Vector AlgorithmFamily::dimensionalize(const Vector& theta_hat, const FunctionClass& fc) const {
  check_theta(theta_hat);
  Vector out = theta_hat;
  for (Index i = 0; i < out.size(); ++i)
    if (units_[static_cast<std::size_t>(i)] == ParamUnit::inverse_curvature) out(i) /= fc.L_f();
  return out;
}

namespace {

using P = Polynomial;

PolyArray row(std::initializer_list<Polynomial> entries) {
  PolyArray a(1, static_cast<Index>(entries.size()));
  Index j = 0;
  for (const auto& e : entries) a(0, j++) = e;
  return a;
}

PolyArray col(std::initializer_list<Polynomial> entries) { return row(entries).transpose(); }

// Three-parameter recursion
//   x+ = x + beta (x - x-) - h grad f(y),  y = x + gamma (x - x-),
// with state xi = (x-, x).
SymbolicStateSpace general_symbolic(const P& h, const P& beta, const P& gamma) {
  SymbolicStateSpace s;
  s.A = vstack(row({0.0, 1.0}), row({-1.0 * beta, beta + 1.0}));
  s.B = col({0.0, -1.0 * h});
  s.C = row({-1.0 * gamma, gamma + 1.0});
  s.E = row({0.0, 1.0});
  return s;
}

StateSpace general_numeric(double h, double beta, double gamma) {
  StateSpace s;
  s.A.resize(2, 2);
  s.A << 0.0, 1.0, -beta, beta + 1.0;
  s.B.resize(2, 1);
  s.B << 0.0, -h;
  s.C.resize(1, 2);
  s.C << -gamma, gamma + 1.0;
  s.E.resize(1, 2);
  s.E << 0.0, 1.0;
  return s;
}

constexpr auto kStep = ParamUnit::inverse_curvature;
constexpr auto kUnitless = ParamUnit::dimensionless;

}  // namespace

AlgorithmFamily builtin_family(const std::string& kind) {
  const P h = P::variable("h");
  if (kind == "gradient") {
    SymbolicStateSpace s{PolyArray::from(Matrix::Ones(1, 1)), PolyArray(1, 1),
                         PolyArray::from(Matrix::Ones(1, 1)), PolyArray::from(Matrix::Ones(1, 1))};
    s.B(0, 0) = -1.0 * h;
    auto numeric = [](const Vector& t) {
      StateSpace ss{Matrix::Ones(1, 1), Matrix::Constant(1, 1, -t(0)), Matrix::Ones(1, 1),
                    Matrix::Ones(1, 1)};
      return ss;
    };
    return AlgorithmFamily("gradient", {"h"}, {kStep}, s, numeric,
                           "x+ = x - h grad f(x)");
  }
  if (kind == "general" || kind == "general_three_param") {
    const P beta = P::variable("beta"), gamma = P::variable("gamma");
    auto numeric = [](const Vector& t) { return general_numeric(t(0), t(1), t(2)); };
    return AlgorithmFamily("general", {"h", "beta", "gamma"}, {kStep, kUnitless, kUnitless},
                           general_symbolic(h, beta, gamma), numeric,
                           "x+ = x + beta (x - x-) - h grad f(x + gamma (x - x-))");
  }
  if (kind == "nesterov") {
    const P beta = P::variable("beta");
    auto numeric = [](const Vector& t) { return general_numeric(t(0), t(1), t(1)); };
    return AlgorithmFamily("nesterov", {"h", "beta"}, {kStep, kUnitless},
                           general_symbolic(h, beta, beta), numeric,
                           "general recursion with gamma = beta");
  }
  if (kind == "heavy_ball") {
    const P gamma = P::variable("gamma");
    auto numeric = [](const Vector& t) { return general_numeric(t(0), t(1), 0.0); };
    return AlgorithmFamily("heavy_ball", {"h", "gamma"}, {kStep, kUnitless},
                           general_symbolic(h, gamma, P(0.0)), numeric,
                           "x+ = x + gamma (x - x-) - h grad f(x); gamma is the momentum weight, "
                           "gradient evaluated at y = x");
  }
  throw UnknownFamily("unknown algorithm family '" + kind + "'");
}

std::vector<std::string> builtin_family_names() {
  return {"gradient", "heavy_ball", "nesterov", "general"};
}

}  // namespace ratecert
