#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "prefine/fem.hpp"
#include "prefine/geometry.hpp"

namespace prefine::homogenization {

using Matrix6 = Eigen::Matrix<double, 6, 6>;
using Mask6 = std::array<std::array<bool, 6>, 6>;

inline constexpr double kDefaultMaskThreshold = 1e-3;

struct HomogenizedTensor {
  Matrix6 values = Matrix6::Zero();
  std::string model_hash;
  double solver_tol = 0.0;
  bool scaled = false;
};

struct ErrorMatrix {
  Matrix6 values = Matrix6::Zero();
  Mask6 masked{};  // true = excluded from statistics

  double mean_unmasked() const;
  double max_unmasked() const;
  int unmasked_count() const;
};

struct ScalingFactor {
  Matrix6 values = Matrix6::Ones();
  Mask6 masked{};
  int train_count = 0;
};

/// FNV-1a hash of resolution and occupancy, hex encoded.
std::string model_hash(const geometry::VoxelModel& model);

/// E^H_ij = sum_e (X0^i - X^i)_e^T k_e (X0^j - X^j)_e over solid voxels, |cell| = 1.
HomogenizedTensor homogenized_tensor(const fem::LinearSystem& system,
                                     const fem::DisplacementFields& fields);
HomogenizedTensor homogenized_tensor(const geometry::VoxelModel& model,
                                     const fem::DisplacementFields& fields);

/// |pred - ref| / |ref|, masking entries with |ref| < threshold * max|ref|.
ErrorMatrix relative_error_matrix(const HomogenizedTensor& pred, const HomogenizedTensor& ref,
                                  double mask_threshold = kDefaultMaskThreshold);

/// R_ij = mean over pairs of truth_ij / pred_ij. Pairs whose truth entry is near zero
/// (relative to that tensor's largest entry) or whose prediction entry vanishes do not
/// contribute; an entry with no contributing pair stays masked.
ScalingFactor calibrate_scaling(const std::vector<std::pair<HomogenizedTensor, HomogenizedTensor>>& pairs,
                                double mask_threshold = kDefaultMaskThreshold);

HomogenizedTensor apply_scaling(const HomogenizedTensor& pred, const ScalingFactor& factor);

}  // namespace prefine::homogenization
