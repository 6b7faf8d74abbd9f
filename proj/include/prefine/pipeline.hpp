#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "prefine/fem.hpp"
#include "prefine/homogenization.hpp"
#include "prefine/solvers.hpp"

namespace prefine::pipeline {

struct HomogenizeResult {
  homogenization::HomogenizedTensor tensor;
  std::array<solvers::SolveReport, fem::kLoadCases> reports;
  fem::DisplacementFields fields;
  bool all_converged = true;
  std::vector<std::string> warnings;

  int total_iterations() const;
  double mean_iterations() const;
};

/// Solves the six load cases (in parallel, sharing one preconditioner), each warm-started
/// from the matching slice of `initial` when given, then evaluates the effective tensor.
/// Warm starts are first shifted onto the system's constraints.
HomogenizeResult homogenize(const fem::LinearSystem& system, const solvers::SolverConfig& config,
                            const fem::DisplacementFields* initial = nullptr);

enum class CoarseOperator {
  /// P^T K P with P the trilinear prolongation: the best guess in the coarse space,
  /// measured in the energy norm.
  Galerkin,
  /// Stiffness of the majority-vote coarsened voxel model.
  Rediscretized,
};

struct CoarseGuess {
  fem::DisplacementFields fields;
  CoarseOperator coarse_operator = CoarseOperator::Galerkin;
  int coarse_iterations = 0;  // summed over load cases, on the coarse grid
};

/// Solves a coarse problem (resolution n / factor) to `coarse_tol` and maps the result
/// back with periodic trilinear prolongation, then onto the fine constraints. A stand-in
/// for a learned initial guess. Galerkin needs the assembled fine matrix and falls back
/// to Rediscretized above the assembly limit.
CoarseGuess coarse_prolongation_guess(const fem::LinearSystem& fine, int factor,
                                      double coarse_tol = 1e-8,
                                      CoarseOperator op = CoarseOperator::Galerkin);

struct HomogenizeRequest {
  std::filesystem::path model_path;
  std::optional<double> poisson_ratio;
  std::optional<double> young_modulus;
  solvers::SolverConfig solver;
  std::optional<std::filesystem::path> init_path;
  std::optional<int> coarse_factor;  // warm start from coarse prolongation instead of a file
  CoarseOperator coarse_operator = CoarseOperator::Galerkin;
};

struct HomogenizeRun {
  HomogenizeResult result;
  nlohmann::json model_metadata;
};

HomogenizeRun run_homogenize(const HomogenizeRequest& request);

/// {tensor, reports, all_converged, total_iterations, warnings}
nlohmann::json to_json(const HomogenizeResult& result);

/// Writes tensor.json, reports.json and fields.pfht into `out_dir`.
void write_outputs(const std::filesystem::path& out_dir, const HomogenizeResult& result);

}  // namespace prefine::pipeline
