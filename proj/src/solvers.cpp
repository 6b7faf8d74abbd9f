#include "prefine/solvers.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "prefine/geometry.hpp"

namespace prefine::solvers {

using linalg::LinearOperator;
using linalg::SparseMatrix;
using linalg::Vector;

std::string_view to_string(Method method) {
  switch (method) {
    case Method::Jacobi: return "jacobi";
    case Method::DampedJacobi: return "damped_jacobi";
    case Method::GaussSeidel: return "gauss_seidel";
    case Method::SOR: return "sor";
    case Method::CG: return "cg";
    case Method::PCG: return "pcg";
  }
  return "unknown";
}

std::string_view to_string(PreconditionerKind kind) {
  switch (kind) {
    case PreconditionerKind::None: return "none";
    case PreconditionerKind::JacobiDiag: return "jacobi";
    case PreconditionerKind::IncompleteCholesky0: return "ic0";
  }
  return "unknown";
}

Method parse_method(std::string_view text) {
  if (text == "jacobi") return Method::Jacobi;
  if (text == "damped_jacobi" || text == "djacobi") return Method::DampedJacobi;
  if (text == "gauss_seidel" || text == "gs") return Method::GaussSeidel;
  if (text == "sor") return Method::SOR;
  if (text == "cg") return Method::CG;
  if (text == "pcg") return Method::PCG;
  throw InvalidArgument("unknown solver method '" + std::string(text) + "'");
}

PreconditionerKind parse_preconditioner(std::string_view text) {
  if (text == "none") return PreconditionerKind::None;
  if (text == "jacobi" || text == "diag") return PreconditionerKind::JacobiDiag;
  if (text == "ic0" || text == "ic") return PreconditionerKind::IncompleteCholesky0;
  throw InvalidArgument("unknown preconditioner '" + std::string(text) + "'");
}

void SolverConfig::validate() const {
  if (!(tol > 0.0) || !std::isfinite(tol)) throw InvalidArgument("tol must be positive");
  if (max_iters < 1) throw InvalidArgument("max_iters must be at least 1");
  if (method == Method::DampedJacobi && !(damping > 0.0 && damping <= 1.0)) {
    throw InvalidArgument("damping must lie in (0, 1]");
  }
  if (method == Method::SOR && !(relaxation > 0.0 && relaxation < 2.0)) {
    throw InvalidArgument("SOR relaxation must lie in (0, 2)");
  }
  if (tol_fine && !(*tol_fine > 0.0)) throw InvalidArgument("tol_fine must be positive");
}

JacobiPreconditioner::JacobiPreconditioner(const Vector& diagonal)
    : inverse_diagonal_(diagonal.size()) {
  for (Eigen::Index i = 0; i < diagonal.size(); ++i) {
    if (!(diagonal[i] > 0.0)) throw std::runtime_error("Jacobi preconditioner needs a positive diagonal");
    inverse_diagonal_[i] = 1.0 / diagonal[i];
  }
}

void JacobiPreconditioner::apply(const Vector& r, Vector& z) const {
  z = r.cwiseProduct(inverse_diagonal_);
}

IncompleteCholesky0::IncompleteCholesky0(const SparseMatrix& matrix) : n_(matrix.rows()) {
  if (matrix.rows() != matrix.cols()) throw InvalidArgument("IC0 needs a square matrix");
  if (!matrix.isCompressed()) throw InvalidArgument("IC0 needs a compressed matrix");
  double shift = 0.0;
  while (!factorize(matrix, shift)) {
    shift = shift == 0.0 ? 1e-3 : 10.0 * shift;
    if (shift > 1e3) throw std::runtime_error("IC0 factorization failed for every diagonal shift");
  }
  shift_ = shift;
}

bool IncompleteCholesky0::factorize(const SparseMatrix& matrix, double shift) {
  row_ptr_.assign(static_cast<std::size_t>(n_) + 1, 0);
  cols_.clear();
  values_.clear();
  diag_pos_.assign(static_cast<std::size_t>(n_), -1);

  const int* outer = matrix.outerIndexPtr();
  const int* inner = matrix.innerIndexPtr();
  const double* vals = matrix.valuePtr();
  for (Eigen::Index i = 0; i < n_; ++i) {
    for (int t = outer[i]; t < outer[i + 1]; ++t) {
      if (inner[t] > i) break;
      cols_.push_back(inner[t]);
      values_.push_back(vals[t]);
    }
    if (cols_.empty() || cols_.back() != i) return false;  // missing diagonal
    diag_pos_[i] = static_cast<int>(cols_.size()) - 1;
    values_.back() *= 1.0 + shift;
    row_ptr_[i + 1] = static_cast<int>(cols_.size());
  }

  for (Eigen::Index i = 0; i < n_; ++i) {
    const int begin = row_ptr_[i];
    const int diag = diag_pos_[i];
    const double a_ii = values_[diag];
    for (int t = begin; t < diag; ++t) {
      const int j = cols_[t];
      // s = a_ij - sum_{m < j} L_im L_jm over the shared pattern of rows i and j.
      double s = values_[t];
      int p = begin;
      int q = row_ptr_[j];
      const int q_end = diag_pos_[j];
      while (p < t && q < q_end) {
        if (cols_[p] == cols_[q]) {
          s -= values_[p] * values_[q];
          ++p;
          ++q;
        } else if (cols_[p] < cols_[q]) {
          ++p;
        } else {
          ++q;
        }
      }
      values_[t] = s / values_[q_end];
    }
    double d = a_ii;
    for (int t = begin; t < diag; ++t) d -= values_[t] * values_[t];
    if (!(d > 1e-10 * a_ii) || !std::isfinite(d)) return false;
    values_[diag] = std::sqrt(d);
  }
  factor_view_.reset();
  return true;
}

void IncompleteCholesky0::apply(const Vector& r, Vector& z) const {
  z.resize(n_);
  for (Eigen::Index i = 0; i < n_; ++i) {
    double s = r[i];
    for (int t = row_ptr_[i]; t < diag_pos_[i]; ++t) s -= values_[t] * z[cols_[t]];
    z[i] = s / values_[diag_pos_[i]];
  }
  for (Eigen::Index i = n_ - 1; i >= 0; --i) {
    z[i] /= values_[diag_pos_[i]];
    const double zi = z[i];
    for (int t = row_ptr_[i]; t < diag_pos_[i]; ++t) z[cols_[t]] -= values_[t] * zi;
  }
}

const SparseMatrix& IncompleteCholesky0::factor() const {
  if (!factor_view_) {
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(values_.size());
    for (Eigen::Index i = 0; i < n_; ++i) {
      for (int t = row_ptr_[i]; t < row_ptr_[i + 1]; ++t) {
        triplets.emplace_back(static_cast<int>(i), cols_[t], values_[t]);
      }
    }
    auto L = std::make_unique<SparseMatrix>(n_, n_);
    L->setFromTriplets(triplets.begin(), triplets.end());
    factor_view_ = std::move(L);
  }
  return *factor_view_;
}

PreparedPreconditioner make_preconditioner(const LinearOperator& op, PreconditionerKind kind) {
  PreparedPreconditioner out;
  switch (kind) {
    case PreconditionerKind::None:
      out.preconditioner = std::make_unique<IdentityPreconditioner>();
      break;
    case PreconditionerKind::JacobiDiag:
      out.preconditioner = std::make_unique<JacobiPreconditioner>(op.diagonal());
      break;
    case PreconditionerKind::IncompleteCholesky0:
      if (op.can_assemble()) {
        auto ic = std::make_unique<IncompleteCholesky0>(op.assembled());
        if (ic->shift() > 0.0) out.note = "ic0 used diagonal shift " + std::to_string(ic->shift());
        out.preconditioner = std::move(ic);
      } else {
        out.preconditioner = std::make_unique<JacobiPreconditioner>(op.diagonal());
        out.fallback = true;
        out.note = "ic0 needs an assembled operator; fell back to jacobi";
      }
      break;
  }
  return out;
}

double relative_residual(const LinearOperator& op, const Vector& x, const Vector& f) {
  if (x.size() != op.size() || f.size() != op.size()) {
    throw InvalidArgument("dimension mismatch in relative_residual");
  }
  Vector kx;
  op.apply(x, kx);
  const double fn = f.norm();
  const double rn = (kx - f).norm();
  return fn > 0.0 ? rn / fn : rn;
}

bool decide_finetune(const LinearOperator& op, const Vector& initial_guess, const Vector& f,
                     double tol_fine) {
  return !(relative_residual(op, initial_guess, f) < tol_fine);
}

namespace {

constexpr double kDivergenceFactor = 1e6;

struct Tracker {
  SolveReport& report;
  double f_norm;
  double tol;

  double scale(double r) const { return f_norm > 0.0 ? r / f_norm : r; }
  void check_finite(double rel) {
    if (!std::isfinite(rel)) {
      report.diverged = true;
      report.diagnostic = "residual became non-finite";
    }
  }
  /// Records one iteration; returns true when the loop should stop.
  bool record(double rel) {
    report.residual_history.push_back(rel);
    report.iterations = static_cast<int>(report.residual_history.size()) - 1;
    check_finite(rel);
    if (report.diverged) return true;
    if (rel < tol) {
      report.converged = true;
      return true;
    }
    if (rel > kDivergenceFactor * report.initial_residual) {
      report.diverged = true;
      report.diagnostic = "residual grew beyond " + std::to_string(kDivergenceFactor) +
                          " times its initial value";
      return true;
    }
    return false;
  }
};

void stationary(const LinearOperator& op, const Vector& f, const SolverConfig& config,
                Vector& x, Tracker& tracker, const IterateObserver& observer) {
  if (!op.can_assemble()) {
    throw InvalidArgument("stationary methods need an operator that can be assembled");
  }
  const SparseMatrix& A = op.assembled();
  const Eigen::Index n = A.rows();
  const int* outer = A.outerIndexPtr();
  const int* inner = A.innerIndexPtr();
  const double* vals = A.valuePtr();

  Vector diag(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double d = 0.0;
    for (int t = outer[i]; t < outer[i + 1]; ++t) {
      if (inner[t] == i) d = vals[t];
    }
    if (!(d > 0.0)) throw std::runtime_error("stationary method needs a positive diagonal");
    diag[i] = d;
  }

  const bool jacobi = config.method == Method::Jacobi || config.method == Method::DampedJacobi;
  const double alpha = config.method == Method::DampedJacobi ? config.damping : 1.0;
  const double omega = config.method == Method::SOR ? config.relaxation : 1.0;

  Vector r(n);
  Vector next(n);
  for (int it = 0; it < config.max_iters; ++it) {
    if (jacobi) {
      for (Eigen::Index i = 0; i < n; ++i) {
        double s = f[i];
        for (int t = outer[i]; t < outer[i + 1]; ++t) s -= vals[t] * x[inner[t]];
        next[i] = x[i] + alpha * s / diag[i];
      }
      x.swap(next);
    } else {
      for (Eigen::Index i = 0; i < n; ++i) {
        double s = f[i];
        for (int t = outer[i]; t < outer[i + 1]; ++t) {
          if (inner[t] != i) s -= vals[t] * x[inner[t]];
        }
        x[i] = (1.0 - omega) * x[i] + omega * s / diag[i];
      }
    }
    if (observer) observer(it + 1, x);
    r.noalias() = f - A * x;
    if (tracker.record(tracker.scale(r.norm()))) return;
  }
  tracker.report.diagnostic = "iteration limit reached";
}

void conjugate_gradient(const LinearOperator& op, const Vector& f, const SolverConfig& config,
                        const Preconditioner& precond, Vector& x, Tracker& tracker,
                        const IterateObserver& observer) {
  Vector r(f.size());
  Vector q;
  op.apply(x, q);
  r = f - q;
  Vector z;
  precond.apply(r, z);
  Vector p = z;
  double rz = r.dot(z);

  for (int it = 0; it < config.max_iters; ++it) {
    op.apply(p, q);
    const double pq = p.dot(q);
    if (!(pq > 0.0) || !std::isfinite(pq)) {
      tracker.report.residual_history.push_back(tracker.report.residual_history.back());
      tracker.report.iterations = static_cast<int>(tracker.report.residual_history.size()) - 1;
      tracker.report.diagnostic = "search direction lost positive curvature";
      return;
    }
    const double alpha = rz / pq;
    x.noalias() += alpha * p;
    r.noalias() -= alpha * q;
    if (observer) observer(it + 1, x);

    double rel = tracker.scale(r.norm());
    bool restart = false;
    if (rel < tracker.tol) {
      // The recursive residual drifts from f - Kx; confirm before declaring convergence.
      Vector kx;
      op.apply(x, kx);
      Vector true_r = f - kx;
      const double true_rel = tracker.scale(true_r.norm());
      if (!(true_rel < tracker.tol)) {
        r = std::move(true_r);
        rel = true_rel;
        restart = true;
      } else {
        rel = true_rel;
      }
    }
    if (tracker.record(rel)) return;

    precond.apply(r, z);
    const double rz_next = r.dot(z);
    if (restart) {
      p = z;
    } else {
      p = z + (rz_next / rz) * p;
    }
    rz = rz_next;
  }
  tracker.report.diagnostic = "iteration limit reached";
}

}  // namespace

SolveResult solve(const LinearOperator& op, const Vector& f, const SolverConfig& config,
                  const Vector* initial_guess, const SolveOptions& options) {
  config.validate();
  const Eigen::Index n = op.size();
  if (f.size() != n) throw InvalidArgument("right-hand side has the wrong length");
  if (initial_guess && initial_guess->size() != n) {
    throw InvalidArgument("initial guess has the wrong length");
  }

  const auto start = std::chrono::steady_clock::now();
  SolveResult result;
  SolveReport& report = result.report;
  report.method = std::string(to_string(config.method));
  report.tol = config.tol;
  result.x = initial_guess ? *initial_guess : Vector::Zero(n);

  PreparedPreconditioner owned;
  const Preconditioner* precond = nullptr;
  if (config.method == Method::PCG) {
    if (options.preconditioner) {
      precond = options.preconditioner;
      report.preconditioner_fallback = options.preconditioner_fallback;
    } else {
      owned = make_preconditioner(op, config.preconditioner);
      precond = owned.preconditioner.get();
      report.preconditioner_fallback = owned.fallback;
      report.diagnostic = owned.note;
    }
    report.preconditioner = precond->name();
  } else if (config.method == Method::CG) {
    owned.preconditioner = std::make_unique<IdentityPreconditioner>();
    precond = owned.preconditioner.get();
    report.preconditioner = "none";
  } else {
    report.preconditioner = "none";
  }

  Tracker tracker{report, f.norm(), config.tol};
  report.initial_residual = relative_residual(op, result.x, f);
  report.residual_history.push_back(report.initial_residual);
  tracker.check_finite(report.initial_residual);

  if (!report.diverged) {
    if (report.initial_residual < config.tol) {
      report.converged = true;
    } else if (config.tol_fine && !decide_finetune(op, result.x, f, *config.tol_fine)) {
      report.converged = report.initial_residual < config.tol;
      report.finetune_skipped = true;
    } else if (precond) {
      conjugate_gradient(op, f, config, *precond, result.x, tracker, options.observer);
    } else {
      stationary(op, f, config, result.x, tracker, options.observer);
    }
  }

  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

double empirical_convergence_rate(const SolveReport& report) {
  const auto& h = report.residual_history;
  if (h.size() < 10) throw InvalidArgument("convergence rate needs at least 10 residuals");
  const std::size_t first = h.size() / 2;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  double count = 0;
  for (std::size_t i = first; i < h.size(); ++i) {
    if (!(h[i] > 0.0)) continue;
    const double x = static_cast<double>(i);
    const double y = -std::log(h[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    count += 1;
  }
  if (count < 2) throw InvalidArgument("convergence rate needs positive residuals");
  return (count * sxy - sx * sy) / (count * sxx - sx * sx);
}

}  // namespace prefine::solvers
