#include "ratecert/polynomial.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <numeric>

namespace ratecert {

int total_degree(const Exponent& e) {
  return std::accumulate(e.begin(), e.end(), 0);
}

bool GradedLexLess::operator()(const Exponent& a, const Exponent& b) const {
  const int da = total_degree(a), db = total_degree(b);
  if (da != db) return da < db;
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

std::vector<std::string> union_vars(const std::vector<std::string>& a,
                                    const std::vector<std::string>& b) {
  std::vector<std::string> out = a;
  for (const auto& v : b)
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  return out;
}

Polynomial::Polynomial(double constant) {
  if (constant != 0.0) terms_.emplace(Exponent{}, constant);
}

Polynomial::Polynomial(std::vector<std::string> vars, Terms terms)
    : vars_(std::move(vars)), terms_(std::move(terms)) {
  for (const auto& [e, c] : terms_) {
    if (e.size() != vars_.size())
      throw DimensionError("Polynomial: exponent length does not match variable count");
    if (total_degree(e) > kMaxTotalDegree)
      throw SizeError("Polynomial: total degree exceeds " + std::to_string(kMaxTotalDegree));
  }
  cleanup();
}

Polynomial Polynomial::variable(const std::string& name) {
  Terms t;
  t.emplace(Exponent{1}, 1.0);
  return Polynomial({name}, std::move(t));
}

void Polynomial::cleanup() {
  for (auto it = terms_.begin(); it != terms_.end();) {
    if (std::abs(it->second) <= kCoefficientCleanup)
      it = terms_.erase(it);
    else
      ++it;
  }
}

int Polynomial::degree() const {
  return terms_.empty() ? -1 : total_degree(terms_.rbegin()->first);
}

int Polynomial::degree_in(const std::string& var) const {
  auto it = std::find(vars_.begin(), vars_.end(), var);
  if (it == vars_.end()) return terms_.empty() ? -1 : 0;
  const auto k = static_cast<std::size_t>(it - vars_.begin());
  int d = terms_.empty() ? -1 : 0;
  for (const auto& [e, c] : terms_) d = std::max(d, static_cast<int>(e[k]));
  return d;
}

bool Polynomial::is_constant() const { return degree() <= 0; }

double Polynomial::constant_term() const {
  if (terms_.empty()) return 0.0;
  const auto& [e, c] = *terms_.begin();
  return total_degree(e) == 0 ? c : 0.0;
}

double Polynomial::max_abs_coefficient() const {
  double m = 0.0;
  for (const auto& [e, c] : terms_) m = std::max(m, std::abs(c));
  return m;
}

double Polynomial::coefficient(const std::map<std::string, int>& powers) const {
  Exponent e(vars_.size(), 0);
  for (const auto& [name, k] : powers) {
    auto it = std::find(vars_.begin(), vars_.end(), name);
    if (it == vars_.end()) {
      if (k != 0) return 0.0;
      continue;
    }
    e[static_cast<std::size_t>(it - vars_.begin())] = static_cast<std::uint8_t>(k);
  }
  auto it = terms_.find(e);
  return it == terms_.end() ? 0.0 : it->second;
}

Polynomial Polynomial::with_vars(const std::vector<std::string>& vars) const {
  if (vars == vars_) return *this;
  std::vector<std::size_t> map(vars_.size());
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    auto it = std::find(vars.begin(), vars.end(), vars_[i]);
    if (it == vars.end()) {
      bool used = std::any_of(terms_.begin(), terms_.end(),
                              [i](const auto& t) { return t.first[i] != 0; });
      if (used) throw DimensionError("with_vars: variable '" + vars_[i] + "' is not in the target list");
      map[i] = vars.size();
    } else {
      map[i] = static_cast<std::size_t>(it - vars.begin());
    }
  }
  Terms out;
  for (const auto& [e, c] : terms_) {
    Exponent f(vars.size(), 0);
    for (std::size_t i = 0; i < e.size(); ++i)
      if (map[i] < vars.size()) f[map[i]] = e[i];
    out.emplace(std::move(f), c);
  }
  Polynomial p;
  p.vars_ = vars;
  p.terms_ = std::move(out);
  return p;
}

Polynomial& Polynomial::operator+=(const Polynomial& o) {
  auto vars = union_vars(vars_, o.vars_);
  *this = with_vars(vars);
  const Polynomial rhs = o.with_vars(vars);
  for (const auto& [e, c] : rhs.terms_) terms_[e] += c;
  cleanup();
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& o) { return *this += -1.0 * o; }

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  auto vars = union_vars(a.vars_, b.vars_);
  const Polynomial x = a.with_vars(vars), y = b.with_vars(vars);
  Polynomial out;
  out.vars_ = vars;
  for (const auto& [ea, ca] : x.terms_) {
    for (const auto& [eb, cb] : y.terms_) {
      Exponent e(vars.size());
      for (std::size_t i = 0; i < e.size(); ++i) e[i] = static_cast<std::uint8_t>(ea[i] + eb[i]);
      if (total_degree(e) > kMaxTotalDegree)
        throw SizeError("Polynomial: product degree exceeds " + std::to_string(kMaxTotalDegree));
      out.terms_[e] += ca * cb;
    }
  }
  out.cleanup();
  return out;
}

Polynomial& Polynomial::operator*=(const Polynomial& o) { return *this = *this * o; }

Polynomial& Polynomial::operator*=(double s) {
  for (auto& [e, c] : terms_) c *= s;
  cleanup();
  return *this;
}

Polynomial Polynomial::pow(int k) const {
  if (k < 0) throw std::invalid_argument("Polynomial::pow: negative exponent");
  Polynomial out(1.0);
  for (int i = 0; i < k; ++i) out *= *this;
  return out;
}

Polynomial Polynomial::substitute(const std::string& var, const Polynomial& value) const {
  return substitute(std::map<std::string, Polynomial>{{var, value}});
}

Polynomial Polynomial::substitute(const std::map<std::string, Polynomial>& values) const {
  Polynomial out;
  for (const auto& [e, c] : terms_) {
    Polynomial term(c);
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (e[i] == 0) continue;
      auto it = values.find(vars_[i]);
      term *= (it != values.end() ? it->second : variable(vars_[i])).pow(e[i]);
    }
    out += term;
  }
  return out;
}

double Polynomial::evaluate(std::span<const double> values) const {
  if (values.size() != vars_.size())
    throw DimensionError("Polynomial::evaluate: expected " + std::to_string(vars_.size()) + " values");
  double sum = 0.0;
  for (const auto& [e, c] : terms_) {
    double t = c;
    for (std::size_t i = 0; i < e.size(); ++i)
      for (int k = 0; k < e[i]; ++k) t *= values[i];
    sum += t;
  }
  return sum;
}

double Polynomial::evaluate(const Point& point) const {
  std::vector<double> v(vars_.size(), 0.0);
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    auto it = point.find(vars_[i]);
    if (it != point.end()) {
      v[i] = it->second;
    } else if (degree_in(vars_[i]) > 0) {
      throw std::invalid_argument("Polynomial::evaluate: no value for '" + vars_[i] + "'");
    }
  }
  return evaluate(std::span<const double>(v));
}

bool operator==(const Polynomial& a, const Polynomial& b) {
  auto vars = union_vars(a.vars_, b.vars_);
  return a.with_vars(vars).terms_ == b.with_vars(vars).terms_;
}

bool Polynomial::approx_equal(const Polynomial& o, double tol) const {
  const Polynomial d = *this - o;
  return d.max_abs_coefficient() <= tol;
}

namespace {

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) {}

  Polynomial parse_all() {
    Polynomial p = parse_sum();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected character");
    return p;
  }

 private:
  Polynomial parse_sum() {
    skip_ws();
    Polynomial acc;
    bool first = true;
    while (true) {
      skip_ws();
      double sign = 1.0;
      if (peek() == '+' || peek() == '-') {
        sign = (s_[pos_] == '-') ? -1.0 : 1.0;
        ++pos_;
      } else if (!first) {
        break;
      }
      acc += sign * parse_term();
      first = false;
      skip_ws();
      if (peek() != '+' && peek() != '-') break;
    }
    return acc;
  }

  Polynomial parse_term() {
    Polynomial t = parse_power();
    while (true) {
      skip_ws();
      if (peek() != '*') break;
      ++pos_;
      t *= parse_power();
    }
    return t;
  }

  Polynomial parse_power() {
    Polynomial base = parse_atom();
    skip_ws();
    if (peek() == '^') {
      ++pos_;
      skip_ws();
      std::size_t start = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (start == pos_) fail("expected integer exponent");
      base = base.pow(std::stoi(std::string(s_.substr(start, pos_ - start))));
    }
    return base;
  }

  Polynomial parse_atom() {
    skip_ws();
    const char c = peek();
    if (c == '(') {
      ++pos_;
      Polynomial p = parse_sum();
      skip_ws();
      if (peek() != ')') fail("expected ')'");
      ++pos_;
      return p;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::string tail(s_.substr(pos_));
      char* end = nullptr;
      double v = std::strtod(tail.c_str(), &end);
      if (end == tail.c_str()) fail("bad number");
      pos_ += static_cast<std::size_t>(end - tail.c_str());
      return Polynomial(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
        ++pos_;
      return Polynomial::variable(std::string(s_.substr(start, pos_ - start)));
    }
    fail("unexpected token");
    return {};
  }

  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("polynomial parse error at offset " + std::to_string(pos_) + ": " + what);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string Polynomial::to_string() const {
  if (terms_.empty()) return "0";
  std::string out;
  bool first = true;
  for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
    const auto& [e, c] = *it;
    double mag = c;
    if (first) {
      if (c < 0) {
        out += "-";
        mag = -c;
      }
    } else {
      out += c < 0 ? " - " : " + ";
      mag = std::abs(c);
    }
    out += format_number(mag);
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (e[i] == 0) continue;
      out += "*" + vars_[i];
      if (e[i] > 1) out += "^" + std::to_string(e[i]);
    }
    first = false;
  }
  return out;
}

Polynomial Polynomial::parse(std::string_view text) { return Parser(text).parse_all(); }

// --- PolyArray -------------------------------------------------------------

PolyArray PolyArray::from(const Matrix& m) {
  PolyArray a(m.rows(), m.cols());
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) a(i, j) = Polynomial(m(i, j));
  return a;
}

PolyArray PolyArray::transpose() const {
  PolyArray t(cols_, rows_);
  for (Index i = 0; i < rows_; ++i)
    for (Index j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix PolyArray::evaluate(const Point& point) const {
  Matrix m(rows_, cols_);
  for (Index i = 0; i < rows_; ++i)
    for (Index j = 0; j < cols_; ++j) m(i, j) = (*this)(i, j).evaluate(point);
  return m;
}

std::vector<std::string> PolyArray::vars() const {
  std::vector<std::string> v;
  for (const auto& p : data_) v = union_vars(v, p.vars());
  return v;
}

PolyArray PolyArray::substitute(const std::map<std::string, Polynomial>& values) const {
  PolyArray out(rows_, cols_);
  for (std::size_t k = 0; k < data_.size(); ++k) out.data_[k] = data_[k].substitute(values);
  return out;
}

PolyArray operator+(const PolyArray& a, const PolyArray& b) {
  if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw DimensionError("PolyArray +: shape mismatch");
  PolyArray out(a.rows_, a.cols_);
  for (std::size_t k = 0; k < a.data_.size(); ++k) out.data_[k] = a.data_[k] + b.data_[k];
  return out;
}

PolyArray operator-(const PolyArray& a, const PolyArray& b) {
  return a + Polynomial(-1.0) * b;
}

PolyArray operator*(const PolyArray& a, const PolyArray& b) {
  if (a.cols_ != b.rows_) throw DimensionError("PolyArray *: inner dimension mismatch");
  PolyArray out(a.rows_, b.cols_);
  for (Index i = 0; i < a.rows_; ++i)
    for (Index j = 0; j < b.cols_; ++j) {
      Polynomial s;
      for (Index k = 0; k < a.cols_; ++k) {
        if (a(i, k).is_zero() || b(k, j).is_zero()) continue;
        s += a(i, k) * b(k, j);
      }
      out(i, j) = std::move(s);
    }
  return out;
}

PolyArray operator*(const Polynomial& s, const PolyArray& a) {
  PolyArray out(a.rows_, a.cols_);
  for (std::size_t k = 0; k < a.data_.size(); ++k) out.data_[k] = s * a.data_[k];
  return out;
}

PolyArray hstack(const PolyArray& a, const PolyArray& b) {
  if (a.rows() != b.rows()) throw DimensionError("hstack: row mismatch");
  PolyArray out(a.rows(), a.cols() + b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) out(i, j) = a(i, j);
    for (Index j = 0; j < b.cols(); ++j) out(i, a.cols() + j) = b(i, j);
  }
  return out;
}

PolyArray vstack(const PolyArray& a, const PolyArray& b) {
  if (a.cols() != b.cols()) throw DimensionError("vstack: column mismatch");
  PolyArray out(a.rows() + b.rows(), a.cols());
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) out(i, j) = a(i, j);
    for (Index i = 0; i < b.rows(); ++i) out(a.rows() + i, j) = b(i, j);
  }
  return out;
}

// --- PolyMatrix ------------------------------------------------------------

PolyMatrix::PolyMatrix(Index dim) : dim_(dim), data_(dim * dim) {
  if (dim < 1) throw DimensionError("PolyMatrix: dim must be >= 1");
}

PolyMatrix::PolyMatrix(const PolyArray& a, double tol) : PolyMatrix(a.rows()) {
  if (a.rows() != a.cols()) throw DimensionError("PolyMatrix: array is not square");
  for (Index i = 0; i < dim_; ++i)
    for (Index j = i; j < dim_; ++j) {
      if (!a(i, j).approx_equal(a(j, i), tol))
        throw StructureError("PolyMatrix: entries (" + std::to_string(i) + "," + std::to_string(j) +
                             ") and its transpose differ");
      set(i, j, a(i, j));
    }
}

PolyMatrix PolyMatrix::from(const SymMatrix& m) {
  PolyMatrix p(m.dim());
  for (Index i = 0; i < m.dim(); ++i)
    for (Index j = i; j < m.dim(); ++j) p.set(i, j, Polynomial(m(i, j)));
  return p;
}

void PolyMatrix::set(Index i, Index j, const Polynomial& p) {
  data_[i * dim_ + j] = p;
  data_[j * dim_ + i] = p;
}

SymMatrix PolyMatrix::evaluate(const Point& point) const {
  Matrix m(dim_, dim_);
  for (Index i = 0; i < dim_; ++i)
    for (Index j = i; j < dim_; ++j) m(i, j) = (*this)(i, j).evaluate(point);
  return SymMatrix(m);
}

std::vector<std::string> PolyMatrix::vars() const {
  std::vector<std::string> v;
  for (const auto& p : data_) v = union_vars(v, p.vars());
  return v;
}

PolyArray PolyMatrix::as_array() const {
  PolyArray a(dim_, dim_);
  for (Index i = 0; i < dim_; ++i)
    for (Index j = 0; j < dim_; ++j) a(i, j) = (*this)(i, j);
  return a;
}

PolyMatrix PolyMatrix::substitute(const std::map<std::string, Polynomial>& values) const {
  PolyMatrix out(dim_);
  for (Index i = 0; i < dim_; ++i)
    for (Index j = i; j < dim_; ++j) out.set(i, j, (*this)(i, j).substitute(values));
  return out;
}

int PolyMatrix::degree() const {
  int d = -1;
  for (const auto& p : data_) d = std::max(d, p.degree());
  return d;
}

PolyMatrix operator+(PolyMatrix a, const PolyMatrix& b) {
  if (a.dim_ != b.dim_) throw DimensionError("PolyMatrix +: dimension mismatch");
  for (Index i = 0; i < a.dim_; ++i)
    for (Index j = i; j < a.dim_; ++j) a.set(i, j, a(i, j) + b(i, j));
  return a;
}

PolyMatrix operator-(PolyMatrix a, const PolyMatrix& b) {
  return a + Polynomial(-1.0) * b;
}

PolyMatrix operator*(const Polynomial& s, PolyMatrix a) {
  for (Index i = 0; i < a.dim_; ++i)
    for (Index j = i; j < a.dim_; ++j) a.set(i, j, s * a(i, j));
  return a;
}

// --- scalarization ----------------------------------------------------------

namespace {

Polynomial cofactor_det(const PolyArray& a, const std::vector<Index>& rows,
                        const std::vector<Index>& cols) {
  const std::size_t n = rows.size();
  if (n == 1) return a(rows[0], cols[0]);
  if (n == 2)
    return a(rows[0], cols[0]) * a(rows[1], cols[1]) - a(rows[0], cols[1]) * a(rows[1], cols[0]);
  Polynomial det;
  std::vector<Index> sub_rows(rows.begin() + 1, rows.end());
  for (std::size_t j = 0; j < n; ++j) {
    const Polynomial& pivot = a(rows[0], cols[j]);
    if (pivot.is_zero()) continue;
    std::vector<Index> sub_cols;
    for (std::size_t k = 0; k < n; ++k)
      if (k != j) sub_cols.push_back(cols[k]);
    Polynomial term = pivot * cofactor_det(a, sub_rows, sub_cols);
    if (j % 2 == 0)
      det += term;
    else
      det -= term;
  }
  return det;
}

}  // namespace

Polynomial determinant(const PolyArray& a) {
  if (a.rows() != a.cols()) throw DimensionError("determinant: matrix is not square");
  if (a.rows() > 6) throw SizeError("determinant: cofactor expansion limited to 6x6");
  std::vector<Index> idx(static_cast<std::size_t>(a.rows()));
  std::iota(idx.begin(), idx.end(), Index{0});
  return cofactor_det(a, idx, idx);
}

std::vector<Polynomial> principal_minors(const PolyMatrix& m, MinorSet which) {
  const Index n = m.dim();
  if (n > 6) throw SizeError("principal_minors: dimension " + std::to_string(n) + " exceeds 6");
  const PolyArray a = m.as_array();
  std::vector<Polynomial> out;
  if (which == MinorSet::leading) {
    for (Index k = 1; k <= n; ++k) {
      std::vector<Index> idx(static_cast<std::size_t>(k));
      std::iota(idx.begin(), idx.end(), Index{0});
      out.push_back(cofactor_det(a, idx, idx));
    }
    return out;
  }
  for (Index k = 1; k <= n; ++k) {
    // index subsets of size k in lexicographic order
    std::vector<bool> mask(static_cast<std::size_t>(n), false);
    std::fill(mask.begin(), mask.begin() + k, true);
    do {
      std::vector<Index> idx;
      for (Index i = 0; i < n; ++i)
        if (mask[static_cast<std::size_t>(i)]) idx.push_back(i);
      out.push_back(cofactor_det(a, idx, idx));
    } while (std::prev_permutation(mask.begin(), mask.end()));
  }
  return out;
}

std::pair<Polynomial, Polynomial> trace_det_scalarize(const PolyMatrix& m) {
  if (m.dim() != 2) throw SizeError("trace_det_scalarize: requires a 2x2 matrix");
  return {m(0, 0) + m(1, 1), m(0, 0) * m(1, 1) - m(0, 1) * m(0, 1)};
}

}  // namespace ratecert
