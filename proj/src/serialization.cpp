#include "prefine/serialization.hpp"

#include "prefine/container.hpp"

namespace prefine::solvers {

void to_json(nlohmann::json& j, const SolveReport& r) {
  j = {{"method", r.method},
       {"preconditioner", r.preconditioner},
       {"preconditioner_fallback", r.preconditioner_fallback},
       {"tol", r.tol},
       {"iterations", r.iterations},
       {"converged", r.converged},
       {"diverged", r.diverged},
       {"finetune_skipped", r.finetune_skipped},
       {"initial_residual", r.initial_residual},
       {"residual_history", r.residual_history},
       {"wall_time_s", r.wall_time_s}};
  if (!r.diagnostic.empty()) j["diagnostic"] = r.diagnostic;
}

void from_json(const nlohmann::json& j, SolveReport& r) {
  r.method = j.at("method").get<std::string>();
  r.preconditioner = j.value("preconditioner", std::string("none"));
  r.preconditioner_fallback = j.value("preconditioner_fallback", false);
  r.tol = j.at("tol").get<double>();
  r.iterations = j.at("iterations").get<int>();
  r.converged = j.at("converged").get<bool>();
  r.diverged = j.value("diverged", false);
  r.finetune_skipped = j.value("finetune_skipped", false);
  r.initial_residual = j.at("initial_residual").get<double>();
  r.residual_history = j.at("residual_history").get<std::vector<double>>();
  r.wall_time_s = j.value("wall_time_s", 0.0);
  r.diagnostic = j.value("diagnostic", std::string());
}

}  // namespace prefine::solvers

namespace prefine::homogenization {

namespace {

nlohmann::json flat(const Matrix6& m) {
  std::vector<double> v;
  for (int i = 0; i < 6; ++i)
    for (int k = 0; k < 6; ++k) v.push_back(m(i, k));
  return v;
}

nlohmann::json flat(const Mask6& mask) {
  std::vector<bool> v;
  for (const auto& row : mask) v.insert(v.end(), row.begin(), row.end());
  return v;
}

Matrix6 matrix_from(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 36) throw io::FormatError("tensor JSON needs 36 values");
  Matrix6 m;
  for (int i = 0; i < 6; ++i)
    for (int k = 0; k < 6; ++k) m(i, k) = v[6 * i + k];
  return m;
}

Mask6 mask_from(const nlohmann::json& j) {
  const auto v = j.get<std::vector<bool>>();
  if (v.size() != 36) throw io::FormatError("mask JSON needs 36 entries");
  Mask6 m{};
  for (int i = 0; i < 6; ++i)
    for (int k = 0; k < 6; ++k) m[i][k] = v[6 * i + k];
  return m;
}

Mask6 default_mask(const Matrix6& values) {
  Mask6 mask{};
  const double cutoff = kDefaultMaskThreshold * values.cwiseAbs().maxCoeff();
  for (int i = 0; i < 6; ++i)
    for (int k = 0; k < 6; ++k) mask[i][k] = std::abs(values(i, k)) < cutoff || values(i, k) == 0.0;
  return mask;
}

}  // namespace

void to_json(nlohmann::json& j, const HomogenizedTensor& t) {
  j = {{"values", flat(t.values)},
       {"mask", flat(default_mask(t.values))},
       {"model_hash", t.model_hash},
       {"solver_tol", t.solver_tol},
       {"scaled", t.scaled}};
}

void from_json(const nlohmann::json& j, HomogenizedTensor& t) {
  t.values = matrix_from(j.at("values"));
  t.model_hash = j.value("model_hash", std::string());
  t.solver_tol = j.value("solver_tol", 0.0);
  t.scaled = j.value("scaled", false);
}

void to_json(nlohmann::json& j, const ErrorMatrix& e) {
  j = {{"values", flat(e.values)},
       {"mask", flat(e.masked)},
       {"mean_unmasked", e.mean_unmasked()},
       {"max_unmasked", e.max_unmasked()}};
}

void to_json(nlohmann::json& j, const ScalingFactor& f) {
  j = {{"values", flat(f.values)}, {"mask", flat(f.masked)}, {"train_count", f.train_count}};
}

void from_json(const nlohmann::json& j, ScalingFactor& f) {
  f.values = matrix_from(j.at("values"));
  f.masked = mask_from(j.at("mask"));
  f.train_count = j.value("train_count", 0);
}

}  // namespace prefine::homogenization
