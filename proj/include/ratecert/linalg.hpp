#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace ratecert {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

struct StructureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dense symmetric matrix. The upper triangle of the input is authoritative;
/// the lower triangle is overwritten on construction so that entries(i,j) ==
/// entries(j,i) holds exactly.
template <typename Scalar>
class SymmetricMatrix {
 public:
  using DenseType = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  SymmetricMatrix() : data_(DenseType::Zero(1, 1)) {}

  explicit SymmetricMatrix(Index dim) : data_(DenseType::Zero(dim, dim)) {
    if (dim < 1) throw DimensionError("SymmetricMatrix: dim must be >= 1");
  }

  template <typename Derived>
  SymmetricMatrix(const Eigen::MatrixBase<Derived>& m) : data_(m) {
    if (data_.rows() != data_.cols() || data_.rows() < 1)
      throw DimensionError("SymmetricMatrix: input must be square and non-empty");
    data_.template triangularView<Eigen::StrictlyLower>() = data_.transpose();
  }

  static SymmetricMatrix identity(Index dim) { return SymmetricMatrix(DenseType::Identity(dim, dim)); }
  static SymmetricMatrix zero(Index dim) { return SymmetricMatrix(dim); }

  Index dim() const { return data_.rows(); }
  Scalar operator()(Index i, Index j) const { return data_(i, j); }

  void set(Index i, Index j, Scalar v) {
    data_(i, j) = v;
    data_(j, i) = v;
  }

  const DenseType& dense() const { return data_; }
  Scalar trace() const { return data_.trace(); }

  SymmetricMatrix& operator+=(const SymmetricMatrix& o) {
    check_same(o);
    data_ += o.data_;
    return *this;
  }
  SymmetricMatrix& operator-=(const SymmetricMatrix& o) {
    check_same(o);
    data_ -= o.data_;
    return *this;
  }
  SymmetricMatrix& operator*=(Scalar s) {
    data_ *= s;
    return *this;
  }

  friend SymmetricMatrix operator+(SymmetricMatrix a, const SymmetricMatrix& b) { return a += b; }
  friend SymmetricMatrix operator-(SymmetricMatrix a, const SymmetricMatrix& b) { return a -= b; }
  friend SymmetricMatrix operator*(Scalar s, SymmetricMatrix a) { return a *= s; }
  friend SymmetricMatrix operator*(SymmetricMatrix a, Scalar s) { return a *= s; }
  friend SymmetricMatrix operator-(SymmetricMatrix a) { return a *= Scalar(-1); }

  friend bool operator==(const SymmetricMatrix& a, const SymmetricMatrix& b) {
    return a.dim() == b.dim() && a.data_ == b.data_;
  }

 private:
  void check_same(const SymmetricMatrix& o) const {
    if (o.dim() != dim()) throw DimensionError("SymmetricMatrix: dimension mismatch");
  }

  DenseType data_;
};

using SymMatrix = SymmetricMatrix<double>;

template <typename Scalar>
struct EigenDecomposition {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> values;                 // ascending
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> vectors;  // columns
};

template <typename Scalar>
EigenDecomposition<Scalar> eigen_decomposition(const SymmetricMatrix<Scalar>& m) {
  Eigen::SelfAdjointEigenSolver<typename SymmetricMatrix<Scalar>::DenseType> es(m.dense());
  if (es.info() != Eigen::Success)
    throw ConvergenceError("eigen_decomposition: QL iteration did not converge");
  return {es.eigenvalues(), es.eigenvectors()};
}

/// All eigenvalues, ascending.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> eigenvalues(const SymmetricMatrix<Scalar>& m) {
  Eigen::SelfAdjointEigenSolver<typename SymmetricMatrix<Scalar>::DenseType> es(m.dense(),
                                                                                Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw ConvergenceError("eigenvalues: QL iteration did not converge");
  return es.eigenvalues();
}

template <typename Scalar>
Scalar min_eigenvalue(const SymmetricMatrix<Scalar>& m) {
  return eigenvalues(m)(0);
}

template <typename Scalar>
Scalar max_eigenvalue(const SymmetricMatrix<Scalar>& m) {
  auto ev = eigenvalues(m);
  return ev(ev.size() - 1);
}

/// True iff the smallest eigenvalue is >= -tol.
template <typename Scalar>
bool is_psd(const SymmetricMatrix<Scalar>& m, Scalar tol = Scalar(1e-9)) {
  if (tol < 0) throw std::invalid_argument("is_psd: tol must be nonnegative");
  return min_eigenvalue(m) >= -tol;
}

/// r ⊗ I_d.
template <typename Scalar>
SymmetricMatrix<Scalar> kron_expand(const SymmetricMatrix<Scalar>& r, Index d) {
  if (d < 1) throw DimensionError("kron_expand: d must be >= 1");
  using Dense = typename SymmetricMatrix<Scalar>::DenseType;
  const Index n = r.dim();
  Dense full = Dense::Zero(n * d, n * d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      for (Index k = 0; k < d; ++k) full(i * d + k, j * d + k) = r(i, j);
  return SymmetricMatrix<Scalar>(full);
}

/// Inverse of kron_expand: recovers R with R ⊗ I_d == full, or throws
/// StructureError when full is not of that form (deviation above tol).
template <typename Scalar>
SymmetricMatrix<Scalar> kron_reduce(const SymmetricMatrix<Scalar>& full, Index d,
                                    Scalar tol = Scalar(1e-12)) {
  if (d < 1 || full.dim() % d != 0)
    throw DimensionError("kron_reduce: dimension " + std::to_string(full.dim()) +
                         " is not divisible by " + std::to_string(d));
  const Index n = full.dim() / d;
  SymmetricMatrix<Scalar> r(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i; j < n; ++j) {
      const Scalar v = full(i * d, j * d);
      for (Index k = 0; k < d; ++k) {
        for (Index l = 0; l < d; ++l) {
          const Scalar expected = (k == l) ? v : Scalar(0);
          if (std::abs(full(i * d + k, j * d + l) - expected) > tol)
            throw StructureError("kron_reduce: block (" + std::to_string(i) + "," +
                                 std::to_string(j) + ") is not a multiple of I_" +
                                 std::to_string(d));
        }
      }
      r.set(i, j, v);
    }
  }
  return r;
}

}  // namespace ratecert
