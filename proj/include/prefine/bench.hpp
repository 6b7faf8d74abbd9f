#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "prefine/geometry.hpp"
#include "prefine/pipeline.hpp"
#include "prefine/solvers.hpp"

namespace prefine::bench {

struct ModelSource {
  std::string name;
  std::optional<std::filesystem::path> path;  // model container; otherwise generated
  // generated TPMS
  geometry::Family family = geometry::Family::SchoenGyroid;
  geometry::Network network = geometry::Network::Solid;
  double volume_fraction = 0.4;
  // generated GRF when set
  std::optional<geometry::GrfSpec> grf;
  int resolution = 16;
  double poisson_ratio = 0.3;
  std::optional<std::filesystem::path> init_file;  // used by InitKind::File
};

enum class InitKind { Zero, File, Coarse };

struct InitSource {
  InitKind kind = InitKind::Zero;
  int factor = 2;  // Coarse
  pipeline::CoarseOperator coarse_operator = pipeline::CoarseOperator::Galerkin;

  std::string label() const;
};

struct BenchmarkSpec {
  std::vector<ModelSource> models;
  std::vector<double> tols{1e-3, 1e-5, 1e-10};
  std::vector<InitSource> inits{{InitKind::Zero}, {InitKind::Coarse}};
  solvers::SolverConfig solver;
  double coarse_tol = 1e-8;

  void validate() const;
};

BenchmarkSpec spec_from_json(const nlohmann::json& json, const std::filesystem::path& base_dir = {});

struct BenchCell {
  std::string model;
  double tol = 0.0;
  std::string init;
  bool ok = true;
  std::string error;
  double mean_iterations = 0.0;   // over the six load cases
  int total_iterations = 0;
  double wall_time_s = 0.0;
  double mean_initial_residual = 0.0;
  int coarse_iterations = 0;  // cost of building a coarse guess, coarse-grid iterations
  bool converged = false;
  std::vector<int> case_iterations;
  std::vector<int> history_lengths;  // residual_history sizes, for accounting checks
};

struct GroupMean {
  std::string init;
  double tol = 0.0;
  double mean_iterations = 0.0;
  double mean_wall_time_s = 0.0;
  int cells = 0;
};

struct RatioPoint {
  std::string init;
  double tol = 0.0;
  double ratio = 0.0;  // mean iterations(init) / mean iterations(zero)
};

struct BenchResult {
  std::vector<BenchCell> cells;
  std::vector<GroupMean> groups;
  std::vector<RatioPoint> ratio_curve;

  const GroupMean* group(const std::string& init, double tol) const;
  std::optional<double> ratio(const std::string& init, double tol) const;
};

/// Runs every (model, tol, init) cell. Initial guesses are built once per model and
/// reused across tolerances; failing cells are marked and excluded from the means.
BenchResult bench_warmstart(const BenchmarkSpec& spec);

nlohmann::json to_json(const BenchResult& result);
std::string cells_csv(const BenchResult& result);
std::string ratio_csv(const BenchResult& result);

/// bench.json, bench.csv and ratio_curve.csv.
void write_outputs(const std::filesystem::path& out_dir, const BenchResult& result);

}  // namespace prefine::bench
