#include "prefine/material.hpp"

#include <string>

namespace prefine::material {

double lame_lambda(const IsotropicMaterial& mat) {
  const double nu = mat.poisson_ratio;
  return mat.young_modulus * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
}

double lame_mu(const IsotropicMaterial& mat) {
  return mat.young_modulus / (2.0 * (1.0 + mat.poisson_ratio));
}

ElasticTensor6 isotropic_tensor(const IsotropicMaterial& mat) {
  if (!(mat.young_modulus > 0.0)) throw InvalidArgument("Young's modulus must be positive");
  if (!(mat.poisson_ratio > -1.0 && mat.poisson_ratio < 0.5)) {
    throw InvalidArgument("Poisson ratio " + std::to_string(mat.poisson_ratio) +
                          " outside (-1, 0.5)");
  }
  const double lambda = lame_lambda(mat);
  const double mu = lame_mu(mat);
  ElasticTensor6 C = ElasticTensor6::Zero();
  C.topLeftCorner<3, 3>().setConstant(lambda);
  for (int i = 0; i < 3; ++i) {
    C(i, i) = lambda + 2.0 * mu;
    C(i + 3, i + 3) = mu;
  }
  return C;
}

ElasticTensor6 voxel_tensor(const geometry::VoxelModel& model, std::size_t index) {
  if (index >= model.voxel_count()) {
    throw InvalidArgument("voxel index " + std::to_string(index) + " out of range");
  }
  if (!model.solid(index)) return ElasticTensor6::Zero();
  return isotropic_tensor({model.young_modulus(), model.poisson_ratio()});
}

}  // namespace prefine::material
