#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "json.hpp"
#include "prefine/geometry.hpp"

namespace prefine::dataset {

struct DatasetConfig {
  std::vector<geometry::Family> families{geometry::Family::SchoenGyroid,
                                         geometry::Family::SchwarzPrimitive,
                                         geometry::Family::SchwarzDiamond};
  std::vector<geometry::Network> networks{geometry::Network::Solid};
  std::array<double, 2> vf_range{0.26, 0.66};
  std::array<double, 2> nu_range{0.1, 0.4};
  int resolution = 16;
  int count = 4;
  std::uint64_t seed = 0;
  double solver_tol = 1e-6;
  bool normalization = true;

  void validate() const;
};

DatasetConfig config_from_json(const nlohmann::json& json);

struct SamplePlan {
  int id = 0;
  geometry::Family family{};
  geometry::Network network{};
  double target_vf = 0.0;
  double nu = 0.0;
};

/// All random draws happen here, sequentially, so the plan depends only on the config.
std::vector<SamplePlan> plan_samples(const DatasetConfig& config);

/// Writes per-sample model, fields and report files plus manifest.json into `out_dir` and
/// returns the manifest. Failed samples are listed under "failures" and skipped.
nlohmann::json gen_dataset(const DatasetConfig& config, const std::filesystem::path& out_dir);

}  // namespace prefine::dataset
