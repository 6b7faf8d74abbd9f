#include "prefine/homogenization.hpp"

#include <cmath>
#include <cstdio>

namespace prefine::homogenization {

double ErrorMatrix::mean_unmasked() const {
  double sum = 0.0;
  int count = 0;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      if (!masked[i][j]) {
        sum += values(i, j);
        ++count;
      }
  return count ? sum / count : 0.0;
}

double ErrorMatrix::max_unmasked() const {
  double best = 0.0;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      if (!masked[i][j]) best = std::max(best, values(i, j));
  return best;
}

int ErrorMatrix::unmasked_count() const {
  int count = 0;
  for (const auto& row : masked)
    for (bool m : row) count += m ? 0 : 1;
  return count;
}

std::string model_hash(const geometry::VoxelModel& model) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](std::uint8_t byte) {
    h ^= byte;
    h *= 1099511628211ull;
  };
  const auto n = static_cast<std::uint32_t>(model.resolution());
  for (int b = 0; b < 4; ++b) mix(static_cast<std::uint8_t>(n >> (8 * b)));
  for (auto v : model.occupancy()) mix(v);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

HomogenizedTensor homogenized_tensor(const fem::LinearSystem& system,
                                     const fem::DisplacementFields& fields) {
  const auto& model = system.model();
  const auto& mesh = system.mesh();
  if (fields.resolution != model.resolution()) {
    throw InvalidArgument("displacement fields resolution " + std::to_string(fields.resolution) +
                          " does not match model resolution " +
                          std::to_string(model.resolution()));
  }
  for (const auto& field : fields.cases) {
    if (field.size() != mesh.dof_count()) throw InvalidArgument("displacement field has wrong length");
  }

  const double h = mesh.cell_size();
  const auto strains = fem::macro_strains();
  std::array<fem::ElementVector, fem::kLoadCases> affine;
  for (int c = 0; c < fem::kLoadCases; ++c) affine[c] = fem::element_affine_field(strains[c], h);

  const fem::ElementMatrix& ke = system.solid_stiffness();
  Eigen::Matrix<double, 24, fem::kLoadCases> chi;
  Eigen::Matrix<double, 24, fem::kLoadCases> kchi;
  Matrix6 sum = Matrix6::Zero();
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    if (!model.solid(e)) continue;
    for (int c = 0; c < fem::kLoadCases; ++c) chi.col(c) = affine[c] - system.gather(fields.cases[c], e);
    kchi.noalias() = ke * chi;
    sum.noalias() += chi.transpose() * kchi;
  }

  HomogenizedTensor out;
  out.values = 0.5 * (sum + sum.transpose());
  out.model_hash = model_hash(model);
  return out;
}

HomogenizedTensor homogenized_tensor(const geometry::VoxelModel& model,
                                     const fem::DisplacementFields& fields) {
  return homogenized_tensor(fem::LinearSystem(model), fields);
}

ErrorMatrix relative_error_matrix(const HomogenizedTensor& pred, const HomogenizedTensor& ref,
                                  double mask_threshold) {
  if (!(mask_threshold >= 0.0)) throw InvalidArgument("mask threshold must be non-negative");
  ErrorMatrix out;
  const double cutoff = mask_threshold * ref.values.cwiseAbs().maxCoeff();
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) {
      const double r = ref.values(i, j);
      if (std::abs(r) < cutoff || r == 0.0) {
        out.masked[i][j] = true;
        continue;
      }
      out.values(i, j) = std::abs(pred.values(i, j) - r) / std::abs(r);
    }
  return out;
}

ScalingFactor calibrate_scaling(
    const std::vector<std::pair<HomogenizedTensor, HomogenizedTensor>>& pairs,
    double mask_threshold) {
  if (pairs.empty()) throw InvalidArgument("calibration needs at least one (pred, truth) pair");
  if (!(mask_threshold >= 0.0)) throw InvalidArgument("mask threshold must be non-negative");
  Matrix6 sum = Matrix6::Zero();
  Eigen::Matrix<int, 6, 6> count = Eigen::Matrix<int, 6, 6>::Zero();
  for (const auto& [pred, truth] : pairs) {
    const double cutoff = mask_threshold * truth.values.cwiseAbs().maxCoeff();
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) {
        const double t = truth.values(i, j);
        const double p = pred.values(i, j);
        if (std::abs(t) < cutoff || t == 0.0 || p == 0.0) continue;
        const double ratio = t / p;
        if (!(ratio > 0.0) || !std::isfinite(ratio)) continue;
        sum(i, j) += ratio;
        count(i, j) += 1;
      }
  }
  ScalingFactor out;
  out.train_count = static_cast<int>(pairs.size());
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) {
      if (count(i, j) == 0) {
        out.masked[i][j] = true;
        out.values(i, j) = 1.0;
      } else {
        out.values(i, j) = sum(i, j) / count(i, j);
      }
    }
  return out;
}

HomogenizedTensor apply_scaling(const HomogenizedTensor& pred, const ScalingFactor& factor) {
  HomogenizedTensor out = pred;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      if (!factor.masked[i][j]) out.values(i, j) *= factor.values(i, j);
  out.scaled = true;
  return out;
}

}  // namespace prefine::homogenization
