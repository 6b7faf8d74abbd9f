// Command-line front end: model generation, homogenization, datasets, benchmarks and
// scaling-factor calibration.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "prefine/bench.hpp"
#include "prefine/container.hpp"
#include "prefine/dataset.hpp"
#include "prefine/geometry.hpp"
#include "prefine/homogenization.hpp"
#include "prefine/pipeline.hpp"
#include "prefine/serialization.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace prefine;

namespace {

struct GenArgs {
  std::string family = "gyroid";
  std::string network = "solid";
  double vf = 0.4;
  int res = 16;
  double nu = 0.3;
  double E = 1.0;
  std::uint64_t seed = 0;
  int waves = 16;
  std::string out;
};

int run_gen(const GenArgs& a) {
  json meta;
  std::optional<geometry::VoxelModel> model;
  if (a.family == "grf") {
    geometry::GrfSpec spec{a.waves, a.seed, 1.0 - a.vf};
    auto grf = geometry::generate_grf(spec, a.res, a.nu, a.E);
    meta = {{"family", "grf"}, {"network", "solid"}, {"c", grf.threshold}, {"seed", a.seed},
            {"waves", a.waves}, {"porosity", spec.target_porosity}};
    model = std::move(grf.model);
  } else {
    const auto family = geometry::parse_family(a.family);
    const auto network = geometry::parse_network(a.network);
    const auto level = geometry::solve_level_for_fraction(family, network, a.vf, a.res);
    model = geometry::voxelize({family, network, level.level}, a.res, a.nu, a.E);
    meta = {{"family", geometry::to_string(family)}, {"network", geometry::to_string(network)},
            {"c", level.level}, {"splits_ties", level.splits_ties}, {"seed", a.seed}};
  }
  io::write_model(a.out, *model, meta);
  std::cout << io::read_json(io::sidecar_path(a.out)).dump() << '\n';
  return 0;
}

struct HomogArgs {
  std::string model;
  double tol = 1e-5;
  std::string solver = "pcg";
  std::string precond = "ic0";
  int max_iters = 20000;
  std::string init;
  int coarse_init = 0;
  std::string coarse_operator = "galerkin";
  std::optional<double> tol_fine;
  std::optional<double> nu;
  std::optional<double> E;
  std::string out;
};

int run_homog(const HomogArgs& a) {
  pipeline::HomogenizeRequest req;
  req.model_path = a.model;
  req.poisson_ratio = a.nu;
  req.young_modulus = a.E;
  req.solver.method = solvers::parse_method(a.solver);
  req.solver.preconditioner = solvers::parse_preconditioner(a.precond);
  req.solver.tol = a.tol;
  req.solver.max_iters = a.max_iters;
  req.solver.tol_fine = a.tol_fine;
  if (!a.init.empty()) req.init_path = a.init;
  if (a.coarse_init > 0) req.coarse_factor = a.coarse_init;
  req.coarse_operator = a.coarse_operator == "rediscretized" ? pipeline::CoarseOperator::Rediscretized
                                                             : pipeline::CoarseOperator::Galerkin;
  const auto run = pipeline::run_homogenize(req);
  pipeline::write_outputs(a.out, run.result);
  for (const auto& w : run.result.warnings) std::cerr << "warning: " << w << '\n';
  json summary = {{"total_iterations", run.result.total_iterations()},
                  {"all_converged", run.result.all_converged},
                  {"out", a.out}};
  std::cout << summary.dump() << '\n';
  return 0;
}

int run_dataset(const std::string& config_path, const std::string& out) {
  const auto config = dataset::config_from_json(io::read_json(config_path));
  const auto manifest = dataset::gen_dataset(config, out);
  const auto failures = manifest.contains("failures") ? manifest.at("failures").size() : 0;
  std::cout << json{{"samples", manifest.at("samples").size()}, {"failures", failures}}.dump() << '\n';
  return failures == 0 ? 0 : 3;
}

int run_bench(const std::string& config_path, const std::string& out) {
  const fs::path cfg(config_path);
  const auto spec = bench::spec_from_json(io::read_json(cfg), cfg.parent_path());
  const auto result = bench::bench_warmstart(spec);
  bench::write_outputs(out, result);
  std::cout << bench::ratio_csv(result);
  return 0;
}

int run_calibrate(const std::string& manifest_path, const std::string& out, double threshold) {
  const fs::path mpath(manifest_path);
  const fs::path dir = mpath.parent_path();
  const auto manifest = io::read_json(mpath);
  std::vector<std::pair<homogenization::HomogenizedTensor, homogenization::HomogenizedTensor>> pairs;
  for (const auto& s : manifest.at("samples")) {
    if (!s.contains("prediction_file")) continue;
    const auto model = io::read_model(dir / s.at("model_file").get<std::string>(),
                                      s.at("nu").get<double>(), s.value("E", 1.0)).model;
    const fem::LinearSystem system(model);
    const auto predicted = io::import_initial_guess(dir / s.at("prediction_file").get<std::string>(),
                                                    model.resolution());
    homogenization::HomogenizedTensor truth;
    if (s.contains("tensor_file")) {
      truth = io::read_json(dir / s.at("tensor_file").get<std::string>())
                  .get<homogenization::HomogenizedTensor>();
    } else {
      truth = homogenization::homogenized_tensor(
          system, io::read_fields(dir / s.at("fields_file").get<std::string>(), model.resolution()));
    }
    pairs.emplace_back(homogenization::homogenized_tensor(system, predicted), truth);
  }
  if (pairs.empty()) {
    std::cerr << "error: no manifest sample carries a prediction_file\n";
    return 2;
  }
  const auto factor = homogenization::calibrate_scaling(pairs, threshold);
  double before = 0.0, after = 0.0;
  for (const auto& [pred, truth] : pairs) {
    before += homogenization::relative_error_matrix(pred, truth, threshold).mean_unmasked();
    after += homogenization::relative_error_matrix(homogenization::apply_scaling(pred, factor),
                                                   truth, threshold).mean_unmasked();
  }
  json j = factor;
  j["mean_error_before"] = before / pairs.size();
  j["mean_error_after"] = after / pairs.size();
  io::write_json(out, j);
  std::cout << json{{"pairs", pairs.size()}, {"mean_error_before", before / pairs.size()},
                    {"mean_error_after", after / pairs.size()}}.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Periodic voxel homogenization with warm-started iterative solvers"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a TPMS or GRF voxel model");
  gen_cmd->add_option("--family", gen.family, "primitive | gyroid | diamond | fks | grf")
      ->check(CLI::IsMember({"primitive", "gyroid", "diamond", "fks", "grf"}));
  gen_cmd->add_option("--network", gen.network, "solid | sheet")->check(CLI::IsMember({"solid", "sheet"}));
  gen_cmd->add_option("--vf", gen.vf, "Target volume fraction (grf: 1 - porosity)");
  gen_cmd->add_option("--res", gen.res, "Voxels per axis");
  gen_cmd->add_option("--nu", gen.nu, "Poisson ratio");
  gen_cmd->add_option("--E", gen.E, "Young's modulus");
  gen_cmd->add_option("--seed", gen.seed, "Random seed (grf waves)");
  gen_cmd->add_option("--waves", gen.waves, "Number of GRF waves");
  gen_cmd->add_option("--out", gen.out, "Output model container")->required();

  HomogArgs homog;
  auto* homog_cmd = app.add_subcommand("homog", "Solve the six load cases and homogenize");
  homog_cmd->add_option("--model", homog.model, "Model container")->required();
  homog_cmd->add_option("--tol", homog.tol, "Relative residual tolerance");
  homog_cmd->add_option("--solver", homog.solver, "pcg | cg | jacobi | damped_jacobi | gauss_seidel | sor");
  homog_cmd->add_option("--precond", homog.precond, "ic0 | jacobi | none");
  homog_cmd->add_option("--max-iters", homog.max_iters, "Iteration cap per load case");
  homog_cmd->add_option("--init", homog.init, "Warm-start field container");
  homog_cmd->add_option("--coarse-init", homog.coarse_init, "Warm start from a coarse solve, by this factor");
  homog_cmd->add_option("--coarse-operator", homog.coarse_operator, "galerkin | rediscretized")
      ->check(CLI::IsMember({"galerkin", "rediscretized"}));
  homog_cmd->add_option("--tol-fine", homog.tol_fine, "Skip iterating when the initial residual is below this");
  homog_cmd->add_option("--nu", homog.nu, "Override the Poisson ratio");
  homog_cmd->add_option("--E", homog.E, "Override Young's modulus");
  homog_cmd->add_option("--out", homog.out, "Output directory")->required();

  std::string dataset_config, dataset_out;
  auto* dataset_cmd = app.add_subcommand("dataset", "Generate a solved dataset with a manifest");
  dataset_cmd->add_option("--config", dataset_config, "Dataset config JSON")->required();
  dataset_cmd->add_option("--out", dataset_out, "Output directory")->required();

  std::string bench_config, bench_out;
  auto* bench_cmd = app.add_subcommand("bench", "Cold vs warm-start iteration benchmark");
  bench_cmd->add_option("--config", bench_config, "Benchmark config JSON")->required();
  bench_cmd->add_option("--out", bench_out, "Output directory")->required();

  std::string calib_manifest, calib_out;
  double calib_threshold = homogenization::kDefaultMaskThreshold;
  auto* calib_cmd = app.add_subcommand("calibrate", "Fit the per-entry scaling factor");
  calib_cmd->add_option("--manifest", calib_manifest, "Manifest with prediction_file entries")->required();
  calib_cmd->add_option("--out", calib_out, "Output JSON")->required();
  calib_cmd->add_option("--mask-threshold", calib_threshold, "Relative near-zero mask threshold");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen_cmd) return run_gen(gen);
    if (*homog_cmd) return run_homog(homog);
    if (*dataset_cmd) return run_dataset(dataset_config, dataset_out);
    if (*bench_cmd) return run_bench(bench_config, bench_out);
    if (*calib_cmd) return run_calibrate(calib_manifest, calib_out, calib_threshold);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
