#include "prefine/pipeline.hpp"

#include <numeric>

#include "prefine/container.hpp"
#include "prefine/prolongation.hpp"
#include "prefine/serialization.hpp"
#include "prefine/work_pool.hpp"

namespace prefine::pipeline {

int HomogenizeResult::total_iterations() const {
  return std::accumulate(reports.begin(), reports.end(), 0,
                         [](int acc, const solvers::SolveReport& r) { return acc + r.iterations; });
}

double HomogenizeResult::mean_iterations() const {
  return static_cast<double>(total_iterations()) / fem::kLoadCases;
}

HomogenizeResult homogenize(const fem::LinearSystem& system, const solvers::SolverConfig& config,
                            const fem::DisplacementFields* initial) {
  config.validate();
  const int n = system.model().resolution();
  if (initial && initial->resolution != n) {
    throw InvalidArgument("initial guess resolution " + std::to_string(initial->resolution) +
                          " does not match model resolution " + std::to_string(n));
  }

  solvers::PreparedPreconditioner prepared;
  solvers::SolveOptions options;
  if (config.method == solvers::Method::PCG) {
    prepared = solvers::make_preconditioner(system, config.preconditioner);
    options.preconditioner = prepared.preconditioner.get();
    options.preconditioner_fallback = prepared.fallback;
  }

  HomogenizeResult result;
  result.fields.resolution = n;
  parallel_for(fem::kLoadCases, [&](std::size_t c) {
    linalg::Vector start;
    if (initial) {
      start = initial->cases[c];
      system.enforce_constraints(start);
    }
    auto solved = solvers::solve(system, system.rhs(static_cast<int>(c)), config,
                                 initial ? &start : nullptr, options);
    if (!prepared.note.empty() && solved.report.diagnostic.empty()) {
      solved.report.diagnostic = prepared.note;
    }
    result.fields.cases[c] = std::move(solved.x);
    result.reports[c] = std::move(solved.report);
  });

  for (int c = 0; c < fem::kLoadCases; ++c) {
    const auto& r = result.reports[c];
    if (!r.converged) {
      result.all_converged = false;
      result.warnings.push_back("load case " + std::to_string(c) + " did not converge" +
                                (r.diagnostic.empty() ? std::string() : ": " + r.diagnostic));
    }
  }
  result.tensor = homogenization::homogenized_tensor(system, result.fields);
  result.tensor.solver_tol = config.tol;
  return result;
}

namespace {

/// Coarse DOFs with no stiffness, and one pinned node to remove the rigid translation,
/// become identity rows and columns.
linalg::SparseMatrix pin_coarse(const linalg::SparseMatrix& kc, std::vector<std::uint8_t>& pinned) {
  const Eigen::Index n = kc.rows();
  pinned.assign(static_cast<std::size_t>(n), 0);
  const linalg::Vector diag = kc.diagonal();
  bool anchored = false;
  for (Eigen::Index node = 0; node < n / 3; ++node) {
    const bool active = diag[3 * node] > 0.0 && diag[3 * node + 1] > 0.0 && diag[3 * node + 2] > 0.0;
    if (!active || !anchored) {
      for (int a = 0; a < 3; ++a) pinned[3 * node + a] = 1;
      if (active) anchored = true;
    }
  }
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(kc.nonZeros()));
  for (Eigen::Index r = 0; r < n; ++r) {
    if (pinned[r]) {
      triplets.emplace_back(static_cast<int>(r), static_cast<int>(r), 1.0);
      continue;
    }
    for (linalg::SparseMatrix::InnerIterator it(kc, r); it; ++it) {
      if (!pinned[it.col()]) triplets.emplace_back(static_cast<int>(r), static_cast<int>(it.col()), it.value());
    }
  }
  linalg::SparseMatrix out(n, n);
  out.setFromTriplets(triplets.begin(), triplets.end());
  out.makeCompressed();
  return out;
}

CoarseGuess galerkin_guess(const fem::LinearSystem& fine, int factor, double coarse_tol) {
  const int n = fine.model().resolution();
  if (factor < 2 || n % factor != 0 || n / factor < 2) {
    throw InvalidArgument("coarsening factor " + std::to_string(factor) +
                          " incompatible with resolution " + std::to_string(n));
  }
  const auto P = fem::prolongation_matrix(n / factor, factor);
  const linalg::SparseMatrix Pt = P.transpose();
  const linalg::SparseMatrix ku = fine.assemble_unconstrained();
  const linalg::SparseMatrix kc_raw = Pt * ku * P;
  std::vector<std::uint8_t> pinned;
  const linalg::MatrixOperator kc(pin_coarse(kc_raw, pinned));

  // The unconstrained loads sum to zero per axis, so P^T f is consistent with P^T K P.
  const auto loads = fem::load_vectors(fine, false);
  solvers::SolverConfig config;
  config.tol = coarse_tol;
  const auto prepared = solvers::make_preconditioner(kc, config.preconditioner);
  solvers::SolveOptions options;
  options.preconditioner = prepared.preconditioner.get();

  CoarseGuess guess;
  guess.coarse_operator = CoarseOperator::Galerkin;
  guess.fields.resolution = n;
  std::array<int, fem::kLoadCases> iterations{};
  parallel_for(fem::kLoadCases, [&](std::size_t c) {
    linalg::Vector fc = Pt * loads[c];
    for (Eigen::Index d = 0; d < fc.size(); ++d)
      if (pinned[d]) fc[d] = 0.0;
    const auto solved = solvers::solve(kc, fc, config, nullptr, options);
    linalg::Vector x = P * solved.x;
    fine.enforce_constraints(x);
    guess.fields.cases[c] = std::move(x);
    iterations[c] = solved.report.iterations;
  });
  for (int it : iterations) guess.coarse_iterations += it;
  return guess;
}

}  // namespace

CoarseGuess coarse_prolongation_guess(const fem::LinearSystem& fine, int factor, double coarse_tol,
                                      CoarseOperator op) {
  if (op == CoarseOperator::Galerkin && fine.can_assemble()) {
    return galerkin_guess(fine, factor, coarse_tol);
  }
  const auto coarse_model = geometry::coarsen(fine.model(), factor);
  const fem::LinearSystem coarse_system(coarse_model);
  solvers::SolverConfig config;
  config.tol = coarse_tol;
  const auto coarse = homogenize(coarse_system, config);
  CoarseGuess guess;
  guess.coarse_operator = CoarseOperator::Rediscretized;
  guess.coarse_iterations = coarse.total_iterations();
  guess.fields = fem::prolongate(coarse.fields, factor);
  for (auto& field : guess.fields.cases) fine.enforce_constraints(field);
  return guess;
}

HomogenizeRun run_homogenize(const HomogenizeRequest& request) {
  auto loaded = io::read_model(request.model_path, request.poisson_ratio, request.young_modulus);
  const fem::LinearSystem system(loaded.model);
  std::optional<fem::DisplacementFields> initial;
  if (request.init_path) {
    initial = io::import_initial_guess(*request.init_path, loaded.model.resolution());
  } else if (request.coarse_factor) {
    initial = coarse_prolongation_guess(system, *request.coarse_factor, 1e-8,
                                        request.coarse_operator).fields;
  }
  HomogenizeRun run{homogenize(system, request.solver, initial ? &*initial : nullptr),
                    std::move(loaded.metadata)};
  return run;
}

nlohmann::json to_json(const HomogenizeResult& result) {
  nlohmann::json reports = nlohmann::json::array();
  for (const auto& r : result.reports) reports.push_back(r);
  return {{"tensor", result.tensor},
          {"reports", reports},
          {"all_converged", result.all_converged},
          {"total_iterations", result.total_iterations()},
          {"warnings", result.warnings}};
}

void write_outputs(const std::filesystem::path& out_dir, const HomogenizeResult& result) {
  std::filesystem::create_directories(out_dir);
  const auto j = to_json(result);
  nlohmann::json tensor = j.at("tensor");
  tensor["all_converged"] = result.all_converged;
  tensor["warnings"] = result.warnings;
  io::write_json(out_dir / "tensor.json", tensor);
  io::write_json(out_dir / "reports.json", j.at("reports"));
  io::write_fields(out_dir / "fields.pfht", result.fields);
}

}  // namespace prefine::pipeline
