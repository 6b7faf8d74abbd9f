#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "prefine/material.hpp"

using namespace prefine;
using namespace prefine::material;

TEST_CASE("isotropic tensor entries for E = 1, nu = 0.3") {
  const auto C = isotropic_tensor({1.0, 0.3});
  CHECK(C(0, 0) == doctest::Approx(1.346154).epsilon(1e-6));
  CHECK(C(0, 1) == doctest::Approx(0.576923).epsilon(1e-6));
  CHECK(C(3, 3) == doctest::Approx(0.384615).epsilon(1e-6));
  CHECK(C(1, 1) == C(0, 0));
  CHECK(C(2, 2) == C(0, 0));
  CHECK(C(4, 4) == C(3, 3));
  CHECK(C(5, 5) == C(3, 3));
  CHECK(C(0, 3) == 0.0);
  CHECK(C(3, 4) == 0.0);
  CHECK((C - C.transpose()).norm() == 0.0);
}

TEST_CASE("Lame parameters and tensor consistency") {
  for (double nu : {0.1, 0.25, 0.4, 0.49}) {
    const double E = 2.5;
    const double lambda = lame_lambda({E, nu});
    const double mu = lame_mu({E, nu});
    const auto C = isotropic_tensor({E, nu});
    CHECK(C(0, 0) == doctest::Approx(lambda + 2 * mu));
    CHECK(C(0, 2) == doctest::Approx(lambda));
    CHECK(C(5, 5) == doctest::Approx(mu));
    // uniaxial stress: inverse tensor gives 1/E on the diagonal, -nu/E off it
    const auto S = C.inverse();
    CHECK(S(0, 0) == doctest::Approx(1.0 / E).epsilon(1e-10));
    CHECK(S(0, 1) == doctest::Approx(-nu / E).epsilon(1e-10));
    Eigen::SelfAdjointEigenSolver<ElasticTensor6> eig(C);
    CHECK(eig.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("tensor is linear in Young's modulus") {
  const auto C1 = isotropic_tensor({1.0, 0.2});
  const auto C3 = isotropic_tensor({3.0, 0.2});
  CHECK((C3 - 3.0 * C1).norm() < 1e-14);
}

TEST_CASE("invalid materials are rejected") {
  CHECK_THROWS_AS(isotropic_tensor({0.0, 0.3}), InvalidArgument);
  CHECK_THROWS_AS(isotropic_tensor({1.0, 0.5}), InvalidArgument);
  CHECK_THROWS_AS(isotropic_tensor({1.0, -1.0}), InvalidArgument);
}

TEST_CASE("voxel tensor is zero for void voxels") {
  const geometry::VoxelModel m(2, {1, 0, 0, 0, 0, 0, 0, 0}, 0.3, 2.0);
  CHECK((voxel_tensor(m, 0) - isotropic_tensor({2.0, 0.3})).norm() == 0.0);
  CHECK(voxel_tensor(m, 1).norm() == 0.0);
  CHECK_THROWS_AS(voxel_tensor(m, 8), InvalidArgument);
}
