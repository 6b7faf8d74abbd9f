#include <stdexcept>

#include "prefine/linear_operator.hpp"

namespace prefine::linalg {

MatrixOperator::MatrixOperator(SparseMatrix matrix) : matrix_(std::move(matrix)) {
  if (matrix_.rows() != matrix_.cols()) throw std::invalid_argument("operator must be square");
  matrix_.makeCompressed();
}

void MatrixOperator::apply(const Vector& x, Vector& y) const {
  if (x.size() != matrix_.cols()) throw std::invalid_argument("dimension mismatch in apply");
  y.noalias() = matrix_ * x;
}

}  // namespace prefine::linalg
