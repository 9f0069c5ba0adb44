#pragma once

#include "ratecert/linalg.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ratecert {

using Exponent = std::vector<std::uint8_t>;
using Point = std::map<std::string, double>;

constexpr int kMaxTotalDegree = 16;
constexpr double kCoefficientCleanup = 1e-14;

struct SizeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int total_degree(const Exponent& e);

/// Graded-lex order: lower total degree first, ties broken lexicographically
/// with the first variable most significant (so x0 > x1 within a degree).
struct GradedLexLess {
  bool operator()(const Exponent& a, const Exponent& b) const;
};

/// Sparse multivariate polynomial over named indeterminates. Zero
/// coefficients are never stored. Arithmetic between polynomials over
/// different variable lists works on the union of the lists.
class Polynomial {
 public:
  using Terms = std::map<Exponent, double, GradedLexLess>;

  Polynomial() = default;
  Polynomial(double constant);  // NOLINT: implicit so that `p + 1.0` reads naturally
  Polynomial(std::vector<std::string> vars, Terms terms);

  static Polynomial variable(const std::string& name);

  const std::vector<std::string>& vars() const { return vars_; }
  const Terms& terms() const { return terms_; }

  /// -1 for the zero polynomial.
  int degree() const;
  int degree_in(const std::string& var) const;
  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const;
  double constant_term() const;
  double max_abs_coefficient() const;

  /// Coefficient of the monomial given as var -> power (absent vars are 0).
  double coefficient(const std::map<std::string, int>& powers) const;

  /// Same polynomial expressed over `vars`, which must contain every
  /// variable that occurs with a nonzero exponent.
  Polynomial with_vars(const std::vector<std::string>& vars) const;

  Polynomial substitute(const std::string& var, const Polynomial& value) const;
  Polynomial substitute(const std::map<std::string, Polynomial>& values) const;

  /// Direct summation of c * prod(x_i^e_i).
  double evaluate(const Point& point) const;
  double evaluate(std::span<const double> values) const;  // in vars() order

  Polynomial& operator+=(const Polynomial& o);
  Polynomial& operator-=(const Polynomial& o);
  Polynomial& operator*=(const Polynomial& o);
  Polynomial& operator*=(double s);

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
  friend Polynomial operator*(double s, Polynomial a) { return a *= s; }
  friend Polynomial operator-(Polynomial a) { return a *= -1.0; }

  Polynomial pow(int k) const;

  /// Same value as a function (variables aligned), exact coefficients.
  friend bool operator==(const Polynomial& a, const Polynomial& b);
  bool approx_equal(const Polynomial& o, double tol) const;

  /// `coeff*var^e*...` terms, highest graded-lex term first.
  std::string to_string() const;
  static Polynomial parse(std::string_view text);

 private:
  void cleanup();

  std::vector<std::string> vars_;
  Terms terms_;
};

std::vector<std::string> union_vars(const std::vector<std::string>& a,
                                    const std::vector<std::string>& b);

/// Rectangular matrix with polynomial entries (state-space matrices and the
/// factors of the certificate products).
class PolyArray {
 public:
  PolyArray() = default;
  PolyArray(Index rows, Index cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
  static PolyArray from(const Matrix& m);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  const Polynomial& operator()(Index i, Index j) const { return data_[i * cols_ + j]; }
  Polynomial& operator()(Index i, Index j) { return data_[i * cols_ + j]; }

  PolyArray transpose() const;
  Matrix evaluate(const Point& point) const;
  std::vector<std::string> vars() const;
  PolyArray substitute(const std::map<std::string, Polynomial>& values) const;

  friend PolyArray operator+(const PolyArray& a, const PolyArray& b);
  friend PolyArray operator-(const PolyArray& a, const PolyArray& b);
  friend PolyArray operator*(const PolyArray& a, const PolyArray& b);
  friend PolyArray operator*(const Polynomial& s, const PolyArray& a);

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<Polynomial> data_;
};

/// Horizontal / vertical block concatenation.
PolyArray hstack(const PolyArray& a, const PolyArray& b);
PolyArray vstack(const PolyArray& a, const PolyArray& b);

/// Symmetric square matrix with polynomial entries.
class PolyMatrix {
 public:
  PolyMatrix() : PolyMatrix(1) {}
  explicit PolyMatrix(Index dim);
  /// Symmetric check with tolerance `tol` on coefficients; upper triangle kept.
  explicit PolyMatrix(const PolyArray& a, double tol = 1e-12);
  static PolyMatrix from(const SymMatrix& m);

  Index dim() const { return dim_; }
  const Polynomial& operator()(Index i, Index j) const { return data_[i * dim_ + j]; }
  void set(Index i, Index j, const Polynomial& p);

  SymMatrix evaluate(const Point& point) const;
  std::vector<std::string> vars() const;
  PolyArray as_array() const;
  PolyMatrix substitute(const std::map<std::string, Polynomial>& values) const;
  int degree() const;

  friend PolyMatrix operator+(PolyMatrix a, const PolyMatrix& b);
  friend PolyMatrix operator-(PolyMatrix a, const PolyMatrix& b);
  friend PolyMatrix operator*(const Polynomial& s, PolyMatrix a);

 private:
  Index dim_;
  std::vector<Polynomial> data_;
};

/// Determinant by cofactor expansion; square arrays up to 6x6.
Polynomial determinant(const PolyArray& a);

enum class MinorSet { all, leading };

/// Principal minors ordered by subset size, then lexicographically by index
/// set. `all` yields 2^dim - 1 polynomials, `leading` yields dim.
std::vector<Polynomial> principal_minors(const PolyMatrix& m, MinorSet which = MinorSet::all);

std::pair<Polynomial, Polynomial> trace_det_scalarize(const PolyMatrix& m);

}  // namespace ratecert
