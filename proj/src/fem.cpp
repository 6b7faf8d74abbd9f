#include "prefine/fem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace prefine::fem {

namespace {

constexpr double kGauss = 0.57735026918962576451;  // 1 / sqrt(3)

int wrap(int i, int n) { return ((i % n) + n) % n; }

void check_size(const linalg::Vector& v, Eigen::Index expected, const char* what) {
  if (v.size() != expected) {
    throw InvalidArgument(std::string(what) + ": vector has " + std::to_string(v.size()) +
                          " entries, expected " + std::to_string(expected));
  }
}

}  // namespace

std::array<Vector6, kLoadCases> macro_strains() {
  std::array<Vector6, kLoadCases> out;
  for (int i = 0; i < kLoadCases; ++i) out[i] = Vector6::Unit(i);
  return out;
}

StrainDisplacement strain_displacement(double xi, double eta, double zeta, double h) {
  StrainDisplacement B = StrainDisplacement::Zero();
  const double scale = 2.0 / h;
  for (int a = 0; a < 8; ++a) {
    const double sx = 2.0 * kLocalNodeOffsets[a][0] - 1.0;
    const double sy = 2.0 * kLocalNodeOffsets[a][1] - 1.0;
    const double sz = 2.0 * kLocalNodeOffsets[a][2] - 1.0;
    const double dx = 0.125 * sx * (1.0 + sy * eta) * (1.0 + sz * zeta) * scale;
    const double dy = 0.125 * sy * (1.0 + sx * xi) * (1.0 + sz * zeta) * scale;
    const double dz = 0.125 * sz * (1.0 + sx * xi) * (1.0 + sy * eta) * scale;
    const int c = 3 * a;
    B(0, c) = dx;
    B(1, c + 1) = dy;
    B(2, c + 2) = dz;
    B(3, c) = dy;  // xy
    B(3, c + 1) = dx;
    B(4, c) = dz;  // xz
    B(4, c + 2) = dx;
    B(5, c + 1) = dz;  // yz
    B(5, c + 2) = dy;
  }
  return B;
}

ElementMatrix element_stiffness(const material::ElasticTensor6& C, double h) {
  if (!(h > 0.0)) throw InvalidArgument("cell size must be positive");
  ElementMatrix ke = ElementMatrix::Zero();
  const double det_j = h * h * h / 8.0;
  for (int gx = 0; gx < 2; ++gx)
    for (int gy = 0; gy < 2; ++gy)
      for (int gz = 0; gz < 2; ++gz) {
        const auto B = strain_displacement(gx ? kGauss : -kGauss, gy ? kGauss : -kGauss,
                                           gz ? kGauss : -kGauss, h);
        ke.noalias() += B.transpose() * C * B * det_j;
      }
  // Symmetrize away quadrature rounding.
  return 0.5 * (ke + ke.transpose());
}

Vector6 element_strain(const ElementVector& nodal, double h) {
  return strain_displacement(0.0, 0.0, 0.0, h) * nodal;
}

Eigen::Vector3d affine_displacement(const Vector6& e, const std::array<double, 3>& p) {
  Eigen::Matrix3d eps;
  eps << e[0], 0.5 * e[3], 0.5 * e[4],
         0.5 * e[3], e[1], 0.5 * e[5],
         0.5 * e[4], 0.5 * e[5], e[2];
  return eps * Eigen::Vector3d(p[0], p[1], p[2]);
}

ElementVector element_affine_field(const Vector6& strain, double h) {
  ElementVector out;
  for (int a = 0; a < 8; ++a) {
    const auto& o = kLocalNodeOffsets[a];
    out.segment<3>(3 * a) = affine_displacement(strain, {o[0] * h, o[1] * h, o[2] * h});
  }
  return out;
}

// ---------------------------------------------------------------------------
// PeriodicMesh

PeriodicMesh::PeriodicMesh(int resolution)
    : n_(resolution), nodes_(static_cast<std::size_t>(resolution) * resolution * resolution) {
  if (n_ < 2) throw InvalidArgument("mesh resolution must be at least 2");
  element_nodes_.resize(8 * nodes_);
  node_elements_.resize(8 * nodes_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      for (int k = 0; k < n_; ++k) {
        const std::size_t here = node_index(i, j, k);
        for (int a = 0; a < 8; ++a) {
          const auto& o = kLocalNodeOffsets[a];
          element_nodes_[8 * here + a] =
              static_cast<std::uint32_t>(node_index(i + o[0], j + o[1], k + o[2]));
          node_elements_[8 * here + a] =
              static_cast<std::uint32_t>(node_index(i - o[0], j - o[1], k - o[2]));
        }
      }
}

std::size_t PeriodicMesh::node_index(int i, int j, int k) const {
  return (static_cast<std::size_t>(wrap(i, n_)) * n_ + wrap(j, n_)) * n_ + wrap(k, n_);
}

std::array<int, 3> PeriodicMesh::node_coords(std::size_t node) const {
  const auto n = static_cast<std::size_t>(n_);
  return {static_cast<int>(node / (n * n)), static_cast<int>((node / n) % n),
          static_cast<int>(node % n)};
}

std::array<double, 3> PeriodicMesh::node_position(std::size_t node) const {
  const auto c = node_coords(node);
  const double h = cell_size();
  return {c[0] * h, c[1] * h, c[2] * h};
}

linalg::Vector affine_field(const Vector6& strain, const PeriodicMesh& mesh) {
  linalg::Vector out(mesh.dof_count());
  for (std::size_t p = 0; p < mesh.node_count(); ++p) {
    out.segment<3>(static_cast<Eigen::Index>(3 * p)) =
        affine_displacement(strain, mesh.node_position(p));
  }
  return out;
}

std::vector<Vector6> local_strains(const linalg::Vector& field, const PeriodicMesh& mesh) {
  check_size(field, mesh.dof_count(), "local_strains");
  const StrainDisplacement B0 = strain_displacement(0.0, 0.0, 0.0, mesh.cell_size());
  std::vector<Vector6> out(mesh.element_count());
  ElementVector ue;
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    const auto nodes = mesh.element_nodes(e);
    for (int a = 0; a < 8; ++a) ue.segment<3>(3 * a) = field.segment<3>(3 * nodes[a]);
    out[e] = B0 * ue;
  }
  return out;
}

DisplacementFields DisplacementFields::zeros(int resolution) {
  DisplacementFields f;
  f.resolution = resolution;
  const auto dofs = 3 * static_cast<Eigen::Index>(resolution) * resolution * resolution;
  for (auto& c : f.cases) c = linalg::Vector::Zero(dofs);
  return f;
}

// ---------------------------------------------------------------------------
// LinearSystem

LinearSystem::LinearSystem(geometry::VoxelModel model)
    : model_(std::move(model)), mesh_(model_.resolution()) {
  solid_ke_ = element_stiffness(
      material::isotropic_tensor({model_.young_modulus(), model_.poisson_ratio()}),
      mesh_.cell_size());

  node_active_.assign(mesh_.node_count(), 0);
  for (std::size_t p = 0; p < mesh_.node_count(); ++p) {
    for (auto e : mesh_.node_elements(p)) {
      if (model_.solid(e)) {
        node_active_[p] = 1;
        break;
      }
    }
  }
  // Anchor: node (0,0,0) when it carries stiffness, else the first node that does.
  anchor_ = 0;
  if (!node_active_[0]) {
    auto it = std::find(node_active_.begin(), node_active_.end(), 1);
    if (it != node_active_.end()) anchor_ = static_cast<std::size_t>(it - node_active_.begin());
  }
  constrained_.assign(static_cast<std::size_t>(mesh_.dof_count()), 0);
  for (std::size_t p = 0; p < mesh_.node_count(); ++p) {
    if (p == anchor_ || !node_active_[p]) {
      for (int r = 0; r < 3; ++r) constrained_[3 * p + r] = 1;
      constrained_total_ += 3;
    }
  }
  rhs_ = load_vectors(*this);
}

void LinearSystem::accumulate(const linalg::Vector& x, linalg::Vector& y) const {
  const double* ke = solid_ke_.data();  // column-major; symmetric so ke[c*24+r] == K(r,c)
  const double* xv = x.data();
  double* yv = y.data();
  for (std::size_t p = 0; p < mesh_.node_count(); ++p) {
    if (!node_active_[p]) continue;
    const auto elems = mesh_.node_elements(p);
    double acc[3] = {0.0, 0.0, 0.0};
    for (int a = 0; a < 8; ++a) {
      const std::size_t e = elems[a];
      if (!model_.solid(e)) continue;
      const auto nodes = mesh_.element_nodes(e);
      for (int b = 0; b < 8; ++b) {
        const double* xq = xv + 3 * static_cast<std::size_t>(nodes[b]);
        for (int s = 0; s < 3; ++s) {
          const double* col = ke + (3 * b + s) * 24 + 3 * a;
          acc[0] += col[0] * xq[s];
          acc[1] += col[1] * xq[s];
          acc[2] += col[2] * xq[s];
        }
      }
    }
    yv[3 * p] = acc[0];
    yv[3 * p + 1] = acc[1];
    yv[3 * p + 2] = acc[2];
  }
}

void LinearSystem::apply_unconstrained(const linalg::Vector& x, linalg::Vector& y) const {
  check_size(x, size(), "apply");
  y.setZero(size());
  accumulate(x, y);
}

void LinearSystem::apply(const linalg::Vector& x, linalg::Vector& y) const {
  check_size(x, size(), "apply");
  linalg::Vector masked = x;
  for (Eigen::Index d = 0; d < size(); ++d)
    if (constrained_[d]) masked[d] = 0.0;
  y.setZero(size());
  accumulate(masked, y);
  for (Eigen::Index d = 0; d < size(); ++d)
    if (constrained_[d]) y[d] = x[d];
}

linalg::Vector LinearSystem::diagonal() const {
  linalg::Vector d = linalg::Vector::Zero(size());
  for (std::size_t p = 0; p < mesh_.node_count(); ++p) {
    const auto elems = mesh_.node_elements(p);
    for (int a = 0; a < 8; ++a) {
      if (!model_.solid(elems[a])) continue;
      for (int r = 0; r < 3; ++r) d[3 * p + r] += solid_ke_(3 * a + r, 3 * a + r);
    }
  }
  for (Eigen::Index i = 0; i < size(); ++i)
    if (constrained_[i]) d[i] = 1.0;
  return d;
}

bool LinearSystem::can_assemble() const {
  return mesh_.resolution() <= kMaxAssemblyResolution;
}

const linalg::SparseMatrix& LinearSystem::assembled() const {
  if (!can_assemble()) {
    throw std::logic_error("explicit assembly is limited to resolution " +
                           std::to_string(kMaxAssemblyResolution));
  }
  std::call_once(assembled_once_, [this] {
    assembled_ = std::make_unique<linalg::SparseMatrix>(build_matrix(true));
  });
  return *assembled_;
}

linalg::SparseMatrix LinearSystem::assemble_unconstrained() const {
  if (!can_assemble()) {
    throw std::logic_error("explicit assembly is limited to resolution " +
                           std::to_string(kMaxAssemblyResolution));
  }
  return build_matrix(false);
}

linalg::SparseMatrix LinearSystem::build_matrix(bool constrained) const {
  const auto dofs = size();
  linalg::SparseMatrix mat(dofs, dofs);
  Eigen::VectorXi per_row = Eigen::VectorXi::Constant(dofs, 81);
  mat.reserve(per_row);

  // Row blocks gathered node by node; at most 27 distinct neighbour nodes.
  std::vector<std::pair<std::uint32_t, Eigen::Matrix3d>> blocks;
  blocks.reserve(27);
  for (std::size_t p = 0; p < mesh_.node_count(); ++p) {
    blocks.clear();
    const auto elems = mesh_.node_elements(p);
    for (int a = 0; a < 8; ++a) {
      const std::size_t e = elems[a];
      if (!model_.solid(e)) continue;
      const auto nodes = mesh_.element_nodes(e);
      for (int b = 0; b < 8; ++b) {
        auto it = std::find_if(blocks.begin(), blocks.end(),
                               [&](const auto& blk) { return blk.first == nodes[b]; });
        if (it == blocks.end()) {
          blocks.emplace_back(nodes[b], Eigen::Matrix3d::Zero());
          it = blocks.end() - 1;
        }
        it->second += solid_ke_.block<3, 3>(3 * a, 3 * b);
      }
    }
    std::sort(blocks.begin(), blocks.end(),
              [](const auto& l, const auto& r) { return l.first < r.first; });
    for (int r = 0; r < 3; ++r) {
      const auto row = static_cast<Eigen::Index>(3 * p + r);
      if (constrained && constrained_[row]) {
        mat.insert(row, row) = 1.0;
        continue;
      }
      for (const auto& [q, blk] : blocks) {
        for (int s = 0; s < 3; ++s) {
          const auto col = static_cast<Eigen::Index>(3 * q + s);
          if (constrained && constrained_[col]) continue;
          mat.insert(row, col) = blk(r, s);
        }
      }
    }
  }
  mat.makeCompressed();
  return mat;
}

void LinearSystem::enforce_constraints(linalg::Vector& field) const {
  check_size(field, size(), "enforce_constraints");
  const Eigen::Vector3d shift = field.segment<3>(static_cast<Eigen::Index>(3 * anchor_));
  for (std::size_t p = 0; p < mesh_.node_count(); ++p) {
    auto seg = field.segment<3>(static_cast<Eigen::Index>(3 * p));
    if (!node_active_[p] || p == anchor_) {
      seg.setZero();
    } else {
      seg -= shift;
    }
  }
}

ElementVector LinearSystem::gather(const linalg::Vector& field, std::size_t element) const {
  ElementVector out;
  const auto nodes = mesh_.element_nodes(element);
  for (int a = 0; a < 8; ++a) out.segment<3>(3 * a) = field.segment<3>(3 * nodes[a]);
  return out;
}

std::array<linalg::Vector, kLoadCases> load_vectors(const LinearSystem& system,
                                                    bool apply_constraints) {
  const auto& mesh = system.mesh();
  const auto& model = system.model();
  const double h = mesh.cell_size();
  const auto strains = macro_strains();
  constexpr double kFlush = 64.0 * std::numeric_limits<double>::epsilon();

  std::array<linalg::Vector, kLoadCases> out;
  for (int c = 0; c < kLoadCases; ++c) {
    const ElementVector x0 = element_affine_field(strains[c], h);
    const ElementVector g = system.solid_stiffness() * x0;
    // |k_e| |X0| bounds the magnitude of the terms summed into each entry of g
    const ElementVector g_scale = system.solid_stiffness().cwiseAbs() * x0.cwiseAbs();
    linalg::Vector f = linalg::Vector::Zero(system.size());
    for (std::size_t p = 0; p < mesh.node_count(); ++p) {
      const auto elems = mesh.node_elements(p);
      Eigen::Vector3d sum = Eigen::Vector3d::Zero();
      Eigen::Vector3d bound = Eigen::Vector3d::Zero();
      for (int a = 0; a < 8; ++a) {
        if (!model.solid(elems[a])) continue;
        sum += g.segment<3>(3 * a);
        bound += g_scale.segment<3>(3 * a);
      }
      for (int r = 0; r < 3; ++r) {
        const auto d = static_cast<Eigen::Index>(3 * p + r);
        if (apply_constraints && system.is_constrained(d)) continue;
        if (std::abs(sum[r]) <= kFlush * bound[r]) continue;
        f[d] = sum[r];
      }
    }
    out[c] = std::move(f);
  }
  return out;
}

}  // namespace prefine::fem
