#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "prefine/linear_operator.hpp"

namespace prefine::solvers {

enum class Method { Jacobi, DampedJacobi, GaussSeidel, SOR, CG, PCG };
enum class PreconditionerKind { None, JacobiDiag, IncompleteCholesky0 };

std::string_view to_string(Method method);
std::string_view to_string(PreconditionerKind kind);
Method parse_method(std::string_view text);
PreconditionerKind parse_preconditioner(std::string_view text);

struct SolverConfig {
  Method method = Method::PCG;
  double tol = 1e-5;
  int max_iters = 20000;
  double damping = 1.0;      // DampedJacobi, in (0, 1]
  double relaxation = 1.0;   // SOR, in (0, 2)
  PreconditionerKind preconditioner = PreconditionerKind::IncompleteCholesky0;
  std::optional<double> tol_fine;

  /// Throws InvalidArgument when a field is outside its documented range.
  void validate() const;
};

struct SolveReport {
  std::string method;
  std::string preconditioner;
  bool preconditioner_fallback = false;
  double tol = 0.0;
  int iterations = 0;
  bool converged = false;
  bool diverged = false;
  bool finetune_skipped = false;
  double initial_residual = 0.0;
  std::vector<double> residual_history;  // entry 0 is the initial residual
  double wall_time_s = 0.0;
  std::string diagnostic;

  double final_residual() const { return residual_history.back(); }
};

class Preconditioner {
 public:
  virtual ~Preconditioner() = default;
  /// z = M^-1 r
  virtual void apply(const linalg::Vector& r, linalg::Vector& z) const = 0;
  virtual std::string name() const = 0;
};

class IdentityPreconditioner final : public Preconditioner {
 public:
  void apply(const linalg::Vector& r, linalg::Vector& z) const override { z = r; }
  std::string name() const override { return "none"; }
};

class JacobiPreconditioner final : public Preconditioner {
 public:
  explicit JacobiPreconditioner(const linalg::Vector& diagonal);
  void apply(const linalg::Vector& r, linalg::Vector& z) const override;
  std::string name() const override { return "jacobi"; }

 private:
  linalg::Vector inverse_diagonal_;
};

/// Zero-fill incomplete Cholesky, L L^T ~ A on the sparsity pattern of tril(A).
/// On a non-positive pivot the factorization restarts with A + shift * diag(A).
class IncompleteCholesky0 final : public Preconditioner {
 public:
  explicit IncompleteCholesky0(const linalg::SparseMatrix& matrix);
  void apply(const linalg::Vector& r, linalg::Vector& z) const override;
  std::string name() const override { return "ic0"; }

  double shift() const { return shift_; }
  const linalg::SparseMatrix& factor() const;

 private:
  bool factorize(const linalg::SparseMatrix& matrix, double shift);

  Eigen::Index n_ = 0;
  std::vector<int> row_ptr_;
  std::vector<int> cols_;
  std::vector<double> values_;
  std::vector<int> diag_pos_;
  double shift_ = 0.0;
  mutable std::unique_ptr<linalg::SparseMatrix> factor_view_;
};

struct PreparedPreconditioner {
  std::unique_ptr<Preconditioner> preconditioner;
  bool fallback = false;
  std::string note;
};

/// IC0 needs an assembled matrix; operators that cannot assemble get the Jacobi diagonal
/// instead, flagged as a fallback.
PreparedPreconditioner make_preconditioner(const linalg::LinearOperator& op,
                                           PreconditionerKind kind);

/// ||K X - f|| / ||f||; the absolute residual when f = 0.
double relative_residual(const linalg::LinearOperator& op, const linalg::Vector& x,
                         const linalg::Vector& f);

using IterateObserver = std::function<void(int iteration, const linalg::Vector& x)>;

struct SolveOptions {
  /// Reused across solves when given; otherwise built from the config.
  const Preconditioner* preconditioner = nullptr;
  bool preconditioner_fallback = false;
  IterateObserver observer;
};

struct SolveResult {
  linalg::Vector x;
  SolveReport report;
};

/// Iterates from `initial_guess` (zero when null) until the relative residual drops
/// below config.tol or max_iters iterations have been spent. One iteration is one
/// application of the operator in the main loop.
SolveResult solve(const linalg::LinearOperator& op, const linalg::Vector& f,
                  const SolverConfig& config, const linalg::Vector* initial_guess = nullptr,
                  const SolveOptions& options = {});

/// True when the initial guess is not accurate enough to skip the iterative phase.
bool decide_finetune(const linalg::LinearOperator& op, const linalg::Vector& initial_guess,
                     const linalg::Vector& f, double tol_fine);

/// Least-squares slope of -ln(residual) against iteration over the tail half of the
/// history. Requires at least 10 entries.
double empirical_convergence_rate(const SolveReport& report);

}  // namespace prefine::solvers
