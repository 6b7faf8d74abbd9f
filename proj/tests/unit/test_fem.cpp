#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "dense_oracle.hpp"
#include "doctest.h"
#include "prefine/fem.hpp"

using namespace prefine;
using namespace prefine::fem;

namespace {

geometry::VoxelModel model_from(const oracle::Cell& c) {
  return geometry::VoxelModel(c.n, c.solid, c.nu, c.E);
}

linalg::Vector random_vector(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  linalg::Vector v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_CASE("element stiffness matches the 27-point quadrature oracle") {
  for (double nu : {0.1, 0.3, 0.45}) {
    for (double h : {1.0, 0.25, 1.0 / 16}) {
      const auto ke = element_stiffness(material::isotropic_tensor({1.7, nu}), h);
      const auto ref = oracle::element_matrix(oracle::lame_tensor(1.7, nu), h);
      CHECK((ke - ref).norm() <= 1e-12 * ref.norm());
      CHECK((ke - ke.transpose()).norm() == 0.0);
    }
  }
}

TEST_CASE("element stiffness has exactly the six rigid-body modes as null space") {
  const double h = 0.125;
  const auto ke = element_stiffness(material::isotropic_tensor({1.0, 0.3}), h);
  Eigen::SelfAdjointEigenSolver<ElementMatrix> eig(ke);
  const auto& lam = eig.eigenvalues();
  const double scale = lam.maxCoeff();
  int zero = 0;
  for (int i = 0; i < 24; ++i) {
    CHECK(lam[i] > -1e-12 * scale);
    if (lam[i] < 1e-10 * scale) ++zero;
  }
  CHECK(zero == 6);

  // translations and an infinitesimal rotation about z
  ElementVector t = ElementVector::Zero();
  for (int a = 0; a < 8; ++a) t[3 * a + 1] = 1.0;
  CHECK((ke * t).norm() < 1e-12 * scale);
  ElementVector rot;
  for (int a = 0; a < 8; ++a) {
    const auto& o = kLocalNodeOffsets[a];
    rot.segment<3>(3 * a) << -o[1] * h, o[0] * h, 0.0;
  }
  CHECK((ke * rot).norm() < 1e-12 * scale);
}

TEST_CASE("affine fields reproduce their strain at every quadrature point") {
  const double h = 0.2;
  const auto strains = macro_strains();
  for (int c = 0; c < kLoadCases; ++c) {
    const auto u = element_affine_field(strains[c], h);
    CHECK((element_strain(u, h) - strains[c]).norm() < 1e-13);
    for (double xi : {-0.57, 0.3})
      for (double eta : {-0.9, 0.1})
        CHECK((strain_displacement(xi, eta, 0.77, h) * u - strains[c]).norm() < 1e-13);
  }
  Vector6 mixed;
  mixed << 0.1, -0.2, 0.3, 0.05, -0.15, 0.25;
  CHECK((element_strain(element_affine_field(mixed, h), h) - mixed).norm() < 1e-13);
}

TEST_CASE("periodic mesh connectivity") {
  const PeriodicMesh mesh(3);
  CHECK(mesh.node_count() == 27);
  CHECK(mesh.dof_count() == 81);
  CHECK(mesh.node_index(3, -1, 4) == mesh.node_index(0, 2, 1));
  for (std::size_t p = 0; p < mesh.node_count(); ++p) {
    const auto elems = mesh.node_elements(p);
    for (int a = 0; a < 8; ++a) CHECK(mesh.element_nodes(elems[a])[a] == p);
  }
  const auto nodes = mesh.element_nodes(mesh.node_index(2, 2, 2));
  CHECK(nodes[0] == mesh.node_index(2, 2, 2));
  CHECK(nodes[6] == mesh.node_index(0, 0, 0));
  const auto pos = mesh.node_position(mesh.node_index(1, 2, 0));
  CHECK(pos[0] == doctest::Approx(1.0 / 3));
  CHECK(pos[1] == doctest::Approx(2.0 / 3));
  CHECK(pos[2] == 0.0);
}

TEST_CASE("operator, assembly and loads agree with the dense oracle") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto cell = oracle::random_cell(4, seed, 0.55);
    const LinearSystem sys(model_from(cell));
    const auto ref = oracle::constrained(cell);

    const auto x = random_vector(sys.size(), seed + 100);
    linalg::Vector y;
    sys.apply(x, y);
    const linalg::Vector y_ref = ref.K * x;
    CHECK((y - y_ref).norm() <= 1e-12 * y_ref.norm());

    const linalg::Vector y_asm = sys.assembled() * x;
    CHECK((y_asm - y_ref).norm() <= 1e-12 * y_ref.norm());
    CHECK((sys.diagonal() - ref.K.diagonal()).norm() <= 1e-12 * ref.K.diagonal().norm());

    linalg::Vector yu;
    sys.apply_unconstrained(x, yu);
    const linalg::Vector yu_ref = oracle::assemble(cell) * x;
    CHECK((yu - yu_ref).norm() <= 1e-12 * yu_ref.norm());
    const linalg::Vector yu_asm = sys.assemble_unconstrained() * x;
    CHECK((yu_asm - yu_ref).norm() <= 1e-12 * yu_ref.norm());

    for (int c = 0; c < kLoadCases; ++c) {
      const linalg::Vector f_ref = ref.F.col(c);
      CHECK((sys.rhs(c) - f_ref).norm() <= 1e-12 * f_ref.norm());
    }
    for (Eigen::Index d = 0; d < sys.size(); ++d) CHECK(sys.is_constrained(d) == ref.fixed[d]);
  }
}

TEST_CASE("unconstrained loads are self-equilibrated") {
  const auto cell = oracle::random_cell(4, 9, 0.5);
  const LinearSystem sys(model_from(cell));
  const auto loads = load_vectors(sys, false);
  for (int c = 0; c < kLoadCases; ++c)
    for (int a = 0; a < 3; ++a) {
      double sum = 0.0, mag = 0.0;
      for (std::size_t p = 0; p < sys.mesh().node_count(); ++p) {
        sum += loads[c][3 * p + a];
        mag += std::abs(loads[c][3 * p + a]);
      }
      CHECK(std::abs(sum) <= 1e-13 * std::max(mag, 1.0));
    }
}

TEST_CASE("homogeneous cells have exactly zero load") {
  const LinearSystem sys(geometry::VoxelModel::filled(6, true, 0.3));
  for (int c = 0; c < kLoadCases; ++c) CHECK(sys.rhs(c).cwiseAbs().maxCoeff() == 0.0);
  CHECK(sys.constrained_count() == 3);
  CHECK(sys.anchor_node() == 0);
}

TEST_CASE("all-void cells constrain every node") {
  const LinearSystem sys(geometry::VoxelModel::filled(3, false, 0.3));
  CHECK(sys.constrained_count() == static_cast<std::size_t>(sys.size()));
  const auto x = random_vector(sys.size(), 5);
  linalg::Vector y;
  sys.apply(x, y);
  CHECK((y - x).norm() == 0.0);
}

TEST_CASE("anchor moves off a void corner node") {
  std::vector<std::uint8_t> occ(27, 0);
  occ[(1 * 3 + 1) * 3 + 1] = 1;  // only the centre voxel
  const LinearSystem sys(geometry::VoxelModel(3, occ, 0.3));
  CHECK(sys.anchor_node() == sys.mesh().node_index(1, 1, 1));
  CHECK(sys.node_has_stiffness(sys.mesh().node_index(2, 2, 2)));
  CHECK_FALSE(sys.node_has_stiffness(0));
}

TEST_CASE("enforce_constraints removes the anchor translation only") {
  const auto cell = oracle::random_cell(4, 3, 0.6);
  const LinearSystem sys(model_from(cell));
  auto x = random_vector(sys.size(), 77);
  auto y = x;
  sys.enforce_constraints(y);
  const auto a = 3 * static_cast<Eigen::Index>(sys.anchor_node());
  CHECK(y.segment<3>(a).norm() == 0.0);
  for (std::size_t p = 0; p < sys.mesh().node_count(); ++p) {
    const auto d = 3 * static_cast<Eigen::Index>(p);
    if (sys.is_constrained(d)) {
      CHECK(y.segment<3>(d).norm() == 0.0);
    } else {
      CHECK((y.segment<3>(d) - (x.segment<3>(d) - x.segment<3>(a))).norm() < 1e-15);
    }
  }
  // energy of the raw field equals that of the shifted one
  linalg::Vector kx, ky;
  sys.apply_unconstrained(x, kx);
  sys.apply_unconstrained(y, ky);
  CHECK(x.dot(kx) == doctest::Approx(y.dot(ky)).epsilon(1e-12));
}

TEST_CASE("local strains of affine and constant fields") {
  const PeriodicMesh mesh(4);
  const auto strains = local_strains(linalg::Vector::Constant(mesh.dof_count(), 0.3), mesh);
  for (const auto& s : strains) CHECK(s.norm() < 1e-14);

  // x-displacement sin(2 pi x) gives exx = d/dx at element centres (finite difference)
  linalg::Vector u = linalg::Vector::Zero(mesh.dof_count());
  for (std::size_t p = 0; p < mesh.node_count(); ++p) {
    u[3 * p] = std::sin(2 * std::numbers::pi * mesh.node_position(p)[0]);
  }
  const auto s = local_strains(u, mesh);
  const std::size_t e = mesh.node_index(1, 2, 3);
  const double fd = (std::sin(2 * std::numbers::pi * 0.5) - std::sin(2 * std::numbers::pi * 0.25)) * 4;
  CHECK(s[e][0] == doctest::Approx(fd).epsilon(1e-12));
  CHECK(std::abs(s[e][1]) < 1e-14);
}

TEST_CASE("assembly is offered only up to the size limit") {
  CHECK(LinearSystem(geometry::VoxelModel::filled(4, true, 0.3)).can_assemble());
  const LinearSystem big(geometry::VoxelModel::filled(LinearSystem::kMaxAssemblyResolution + 1, true, 0.3));
  CHECK_FALSE(big.can_assemble());
  CHECK_THROWS_AS(big.assembled(), std::logic_error);
}

TEST_CASE("dimension mismatches are rejected") {
  const LinearSystem sys(geometry::VoxelModel::filled(2, true, 0.3));
  linalg::Vector y;
  CHECK_THROWS_AS(sys.apply(linalg::Vector::Zero(5), y), InvalidArgument);
}
