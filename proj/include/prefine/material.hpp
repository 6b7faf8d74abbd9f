#pragma once

#include <Eigen/Core>

#include "prefine/geometry.hpp"

namespace prefine::material {

/// 6x6 stiffness in engineering Voigt order (xx, yy, zz, xy, xz, yz); shear rows
/// act on engineering shear strains (gamma = 2 * epsilon).
using ElasticTensor6 = Eigen::Matrix<double, 6, 6>;

struct IsotropicMaterial {
  double young_modulus = 1.0;
  double poisson_ratio = 0.3;
};

double lame_lambda(const IsotropicMaterial& mat);
double lame_mu(const IsotropicMaterial& mat);

/// Throws InvalidArgument unless E > 0 and -1 < nu < 0.5.
ElasticTensor6 isotropic_tensor(const IsotropicMaterial& mat);

/// Solid voxels carry the isotropic tensor of the model's material, void voxels zero.
ElasticTensor6 voxel_tensor(const geometry::VoxelModel& model, std::size_t index);

}  // namespace prefine::material
