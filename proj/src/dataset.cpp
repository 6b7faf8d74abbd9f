#include "prefine/dataset.hpp"

#include <cstdio>
#include <random>
#include <optional>

#include "prefine/container.hpp"
#include "prefine/pipeline.hpp"
#include "prefine/serialization.hpp"
#include "prefine/work_pool.hpp"

namespace prefine::dataset {

namespace fs = std::filesystem;

void DatasetConfig::validate() const {
  if (families.empty()) throw InvalidArgument("dataset needs at least one family");
  if (networks.empty()) throw InvalidArgument("dataset needs at least one network");
  if (!(0.0 < vf_range[0] && vf_range[0] <= vf_range[1] && vf_range[1] < 1.0)) {
    throw InvalidArgument("vf_range must satisfy 0 < lo <= hi < 1");
  }
  if (!(0.0 < nu_range[0] && nu_range[0] <= nu_range[1] && nu_range[1] < 0.5)) {
    throw InvalidArgument("nu_range must satisfy 0 < lo <= hi < 0.5");
  }
  if (resolution < 2) throw InvalidArgument("resolution must be at least 2");
  if (count < 1) throw InvalidArgument("count must be at least 1");
  if (!(solver_tol > 0.0)) throw InvalidArgument("solver_tol must be positive");
}

DatasetConfig config_from_json(const nlohmann::json& j) {
  DatasetConfig c;
  if (j.contains("families")) {
    c.families.clear();
    for (const auto& f : j.at("families")) c.families.push_back(geometry::parse_family(f.get<std::string>()));
  }
  if (j.contains("networks")) {
    c.networks.clear();
    for (const auto& n : j.at("networks")) c.networks.push_back(geometry::parse_network(n.get<std::string>()));
  }
  if (j.contains("vf_range")) c.vf_range = j.at("vf_range").get<std::array<double, 2>>();
  if (j.contains("nu_range")) c.nu_range = j.at("nu_range").get<std::array<double, 2>>();
  c.resolution = j.value("n", c.resolution);
  c.count = j.value("count", c.count);
  c.seed = j.value("seed", c.seed);
  c.solver_tol = j.value("solver_tol", c.solver_tol);
  c.normalization = j.value("normalization", c.normalization);
  c.validate();
  return c;
}

std::vector<SamplePlan> plan_samples(const DatasetConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> vf(config.vf_range[0], config.vf_range[1]);
  std::uniform_real_distribution<double> nu(config.nu_range[0], config.nu_range[1]);
  std::uniform_int_distribution<std::size_t> network(0, config.networks.size() - 1);
  std::vector<SamplePlan> plans;
  for (int i = 0; i < config.count; ++i) {
    SamplePlan p;
    p.id = i;
    p.family = config.families[static_cast<std::size_t>(i) % config.families.size()];
    p.network = config.networks[network(rng)];
    p.target_vf = vf(rng);
    p.nu = nu(rng);
    plans.push_back(p);
  }
  return plans;
}

namespace {

std::string stem(int id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sample_%04d", id);
  return buf;
}

struct SampleOutcome {
  std::optional<nlohmann::json> entry;
  std::optional<fem::DisplacementFields> fields;
  std::string error;
};

}  // namespace

nlohmann::json gen_dataset(const DatasetConfig& config, const fs::path& out_dir) {
  const auto plans = plan_samples(config);
  fs::create_directories(out_dir);
  std::vector<SampleOutcome> outcomes(plans.size());

  parallel_for(plans.size(), [&](std::size_t i) {
    const auto& plan = plans[i];
    auto& out = outcomes[i];
    try {
      const auto level = geometry::solve_level_for_fraction(plan.family, plan.network, plan.target_vf,
                                                            config.resolution);
      const auto model = geometry::voxelize({plan.family, plan.network, level.level},
                                            config.resolution, plan.nu, 1.0);
      const std::string base = stem(plan.id);
      const nlohmann::json meta = {{"family", geometry::to_string(plan.family)},
                                   {"network", geometry::to_string(plan.network)},
                                   {"c", level.level},
                                   {"splits_ties", level.splits_ties},
                                   {"seed", config.seed}};
      io::write_model(out_dir / (base + ".model.pfht"), model, meta);

      solvers::SolverConfig solver;
      solver.tol = config.solver_tol;
      const auto result = pipeline::homogenize(fem::LinearSystem(model), solver);
      io::write_fields(out_dir / (base + ".fields.pfht"), result.fields);
      nlohmann::json reports = nlohmann::json::array();
      for (const auto& r : result.reports) reports.push_back(r);
      io::write_json(out_dir / (base + ".report.json"), reports);
      io::write_json(out_dir / (base + ".tensor.json"), result.tensor);
      if (!result.all_converged) throw std::runtime_error("solver did not converge for every load case");

      out.entry = nlohmann::json{{"id", plan.id},
                                 {"model_file", base + ".model.pfht"},
                                 {"fields_file", base + ".fields.pfht"},
                                 {"report_file", base + ".report.json"},
                                 {"tensor_file", base + ".tensor.json"},
                                 {"family", geometry::to_string(plan.family)},
                                 {"network", geometry::to_string(plan.network)},
                                 {"c", level.level},
                                 {"n", config.resolution},
                                 {"nu", plan.nu},
                                 {"E", 1.0},
                                 {"volume_fraction", geometry::volume_fraction(model)},
                                 {"solver_tol", config.solver_tol}};
      if (config.normalization) out.fields = result.fields;
    } catch (const std::exception& e) {
      out.error = e.what();
    }
  });

  nlohmann::json samples = nlohmann::json::array();
  nlohmann::json failures = nlohmann::json::array();
  std::vector<fem::DisplacementFields> solved;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i].entry) {
      samples.push_back(*outcomes[i].entry);
      if (outcomes[i].fields) solved.push_back(std::move(*outcomes[i].fields));
    } else {
      failures.push_back({{"id", plans[i].id}, {"error", outcomes[i].error}});
    }
  }

  nlohmann::json manifest = {{"samples", samples}};
  if (!failures.empty()) manifest["failures"] = failures;
  if (config.normalization && !solved.empty()) {
    manifest["normalization"] = io::to_json(io::compute_normalization(solved))["channels"];
  }
  io::write_json(out_dir / "manifest.json", manifest);
  return manifest;
}

}  // namespace prefine::dataset
