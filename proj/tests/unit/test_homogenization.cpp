#include <cmath>

#include "dense_oracle.hpp"
#include "doctest.h"
#include "prefine/geometry.hpp"
#include "prefine/homogenization.hpp"
#include "prefine/material.hpp"
#include "prefine/pipeline.hpp"

using namespace prefine;
using homogenization::HomogenizedTensor;
using homogenization::Matrix6;

namespace {

pipeline::HomogenizeResult solve_tight(const geometry::VoxelModel& model, double tol = 1e-10) {
  solvers::SolverConfig cfg;
  cfg.tol = tol;
  const fem::LinearSystem sys(model);
  return pipeline::homogenize(sys, cfg);
}

double rel_max(const Matrix6& a, const Matrix6& b) {
  return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff();
}

HomogenizedTensor tensor_of(const Matrix6& m) {
  HomogenizedTensor t;
  t.values = m;
  return t;
}

geometry::VoxelModel tpms(geometry::Family family, double vf, int n, double nu = 0.3) {
  const auto lv = geometry::solve_level_for_fraction(family, geometry::Network::Solid, vf, n);
  return geometry::voxelize({family, geometry::Network::Solid, lv.level}, n, nu);
}

}  // namespace

TEST_CASE("a fully solid cell homogenizes to the base material") {
  for (double nu : {0.2, 0.3, 0.45}) {
    const auto r = solve_tight(geometry::VoxelModel::filled(8, true, nu, 2.5));
    const Matrix6 C = material::isotropic_tensor({2.5, nu});
    CHECK(rel_max(r.tensor.values, C) <= 1e-6);
    for (const auto& rep : r.reports) CHECK(rep.iterations == 0);  // f = 0 on a uniform cell
  }
}

TEST_CASE("a void cell has zero stiffness") {
  const auto r = solve_tight(geometry::VoxelModel::filled(4, false, 0.3));
  CHECK(r.tensor.values.cwiseAbs().maxCoeff() == 0.0);
  CHECK(r.all_converged);
}

TEST_CASE("random 4^3 models match the dense direct oracle") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    auto cell = oracle::random_cell(4, seed, 0.55 + 0.05 * (seed % 3), 0.2 + 0.03 * seed);
    const geometry::VoxelModel model(4, cell.solid, cell.nu, cell.E);
    const auto r = solve_tight(model, 1e-12);
    const Matrix6 ref = oracle::homogenize(cell);
    CHECK(rel_max(r.tensor.values, ref) <= 1e-8);
  }
}

TEST_CASE("tensor from the oracle's own fields matches the oracle summation") {
  auto cell = oracle::random_cell(4, 99, 0.6);
  const geometry::VoxelModel model(4, cell.solid, cell.nu);
  const oracle::Dense X = oracle::pseudo_solve(oracle::assemble(cell), oracle::loads(cell));
  fem::DisplacementFields fields = fem::DisplacementFields::zeros(4);
  for (int c = 0; c < 6; ++c) fields.cases[c] = X.col(c);
  const auto t = homogenization::homogenized_tensor(model, fields);
  CHECK(rel_max(t.values, oracle::homogenize(cell, X)) <= 1e-12);
}

TEST_CASE("the effective tensor is symmetric, PSD and scales linearly with E") {
  const auto model = tpms(geometry::Family::SchoenGyroid, 0.45, 8);
  const auto a = solve_tight(model);
  const auto b = solve_tight(model.with_material(0.3, 7.0));
  CHECK((a.tensor.values - a.tensor.values.transpose()).norm() == 0.0);
  CHECK(rel_max(b.tensor.values, 7.0 * a.tensor.values) <= 1e-8);
  Eigen::SelfAdjointEigenSolver<Matrix6> eig(a.tensor.values);
  CHECK(eig.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("the primitive surface has cubic symmetry") {
  const auto lv = geometry::solve_level_for_fraction(geometry::Family::SchwarzPrimitive, geometry::Network::Solid, 0.3, 16);
  REQUIRE_FALSE(lv.splits_ties);
  const auto r = solve_tight(geometry::voxelize({geometry::Family::SchwarzPrimitive, geometry::Network::Solid, lv.level}, 16, 0.3));
  const Matrix6& E = r.tensor.values;
  const double scale = E.cwiseAbs().maxCoeff();
  CHECK(std::abs(E(0, 0) - E(1, 1)) <= 1e-6 * scale);
  CHECK(std::abs(E(1, 1) - E(2, 2)) <= 1e-6 * scale);
  CHECK(std::abs(E(0, 1) - E(0, 2)) <= 1e-6 * scale);
  CHECK(std::abs(E(0, 1) - E(1, 2)) <= 1e-6 * scale);
  CHECK(std::abs(E(3, 3) - E(4, 4)) <= 1e-6 * scale);
  CHECK(std::abs(E(4, 4) - E(5, 5)) <= 1e-6 * scale);
  for (int i = 0; i < 3; ++i)
    for (int j = 3; j < 6; ++j) CHECK(std::abs(E(i, j)) <= 1e-6 * scale);
}

TEST_CASE("stiffness grows with volume fraction") {
  double previous = 0.0;
  for (double vf : {0.25, 0.4, 0.55, 0.7}) {
    const auto r = solve_tight(tpms(geometry::Family::SchwarzDiamond, vf, 12), 1e-8);
    CHECK(r.tensor.values(0, 0) > previous);
    previous = r.tensor.values(0, 0);
  }
  CHECK(previous < material::isotropic_tensor({1.0, 0.3})(0, 0));
}

TEST_CASE("relative error matrix") {
  Matrix6 ref = Matrix6::Zero();
  ref.diagonal() << 1, 1, 1, 0.5, 0.5, 0.5;
  ref(0, 1) = ref(1, 0) = 0.3;
  ref(2, 5) = ref(5, 2) = 1e-5;  // below 1e-3 * max
  const Matrix6 pred = 1.02 * ref;
  const auto err = homogenization::relative_error_matrix(tensor_of(pred), tensor_of(ref));
  CHECK(err.unmasked_count() == 8);
  CHECK(err.masked[2][5]);
  CHECK(err.masked[3][4]);
  CHECK_FALSE(err.masked[0][1]);
  CHECK(err.values(0, 0) == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(err.mean_unmasked() == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(err.max_unmasked() == doctest::Approx(0.02).epsilon(1e-12));

  const auto loose = homogenization::relative_error_matrix(tensor_of(pred), tensor_of(ref), 1e-6);
  CHECK_FALSE(loose.masked[2][5]);
  CHECK(loose.unmasked_count() == 10);
}

TEST_CASE("scaling factor is the mean truth/prediction ratio") {
  Matrix6 truth = Matrix6::Zero();
  truth.diagonal().setOnes();
  truth(0, 1) = truth(1, 0) = 0.4;
  std::vector<std::pair<HomogenizedTensor, HomogenizedTensor>> pairs;
  for (double ratio : {1.0, 1.1, 1.2}) pairs.emplace_back(tensor_of(truth / ratio), tensor_of(truth));
  const auto R = homogenization::calibrate_scaling(pairs);
  CHECK(R.train_count == 3);
  CHECK(R.values(0, 0) == doctest::Approx(1.1).epsilon(1e-12));
  CHECK(R.values(0, 1) == doctest::Approx(1.1).epsilon(1e-12));
  CHECK(R.masked[0][3]);
  CHECK(R.values(0, 3) == 1.0);

  const auto scaled = homogenization::apply_scaling(tensor_of(truth / 1.1), R);
  CHECK(scaled.scaled);
  CHECK(rel_max(scaled.values, truth) <= 1e-12);
}

TEST_CASE("calibration ignores pairs with a vanishing prediction entry") {
  Matrix6 truth = Matrix6::Identity();
  Matrix6 p1 = truth;
  Matrix6 p2 = truth / 2.0;
  p2(1, 1) = 0.0;
  const auto R = homogenization::calibrate_scaling({{tensor_of(p1), tensor_of(truth)}, {tensor_of(p2), tensor_of(truth)}});
  CHECK(R.values(0, 0) == doctest::Approx(1.5));
  CHECK(R.values(1, 1) == doctest::Approx(1.0));
  CHECK_THROWS_AS(homogenization::calibrate_scaling({}), InvalidArgument);
}

TEST_CASE("model hash distinguishes occupancy") {
  const auto a = geometry::VoxelModel::filled(4, true, 0.3);
  auto occ = a.occupancy();
  occ[5] = 0;
  const geometry::VoxelModel b(4, occ, 0.3);
  CHECK(homogenization::model_hash(a) != homogenization::model_hash(b));
  CHECK(homogenization::model_hash(a) == homogenization::model_hash(a.with_material(0.2, 3.0)));
  CHECK(homogenization::model_hash(a).size() == 16);
}
