#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace prefine::linalg {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

/// Symmetric operator K consumed by the iterative solvers.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;

  virtual Eigen::Index size() const = 0;
  /// y = K x; y is resized as needed.
  virtual void apply(const Vector& x, Vector& y) const = 0;
  virtual Vector diagonal() const = 0;
  /// Whether assembled() is available for this operator.
  virtual bool can_assemble() const = 0;
  /// Explicit sparse matrix (row-major, compressed). Throws when !can_assemble().
  virtual const SparseMatrix& assembled() const = 0;
};

/// Wraps an explicit sparse matrix.
class MatrixOperator final : public LinearOperator {
 public:
  explicit MatrixOperator(SparseMatrix matrix);
  template <typename Derived>
  static MatrixOperator from_dense(const Eigen::MatrixBase<Derived>& dense) {
    return MatrixOperator(SparseMatrix(dense.sparseView()));
  }

  Eigen::Index size() const override { return matrix_.rows(); }
  void apply(const Vector& x, Vector& y) const override;
  Vector diagonal() const override { return matrix_.diagonal(); }
  bool can_assemble() const override { return true; }
  const SparseMatrix& assembled() const override { return matrix_; }

 private:
  SparseMatrix matrix_;
};

}  // namespace prefine::linalg
