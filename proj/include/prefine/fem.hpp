#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "prefine/geometry.hpp"
#include "prefine/linear_operator.hpp"
#include "prefine/material.hpp"

namespace prefine::fem {

using Vector6 = Eigen::Matrix<double, 6, 1>;
using ElementMatrix = Eigen::Matrix<double, 24, 24>;
using ElementVector = Eigen::Matrix<double, 24, 1>;
using StrainDisplacement = Eigen::Matrix<double, 6, 24>;

inline constexpr int kLoadCases = 6;

/// Local node ordering of the trilinear hexahedron as offsets from the element origin.
inline constexpr std::array<std::array<int, 3>, 8> kLocalNodeOffsets{{
    {0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
    {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1},
}};

/// The six unit macro strains; strain i is the Kronecker vector e_i.
std::array<Vector6, kLoadCases> macro_strains();

/// B at natural coordinates (xi, eta, zeta) in [-1, 1]^3 for a cube of edge h.
StrainDisplacement strain_displacement(double xi, double eta, double zeta, double h);

/// k_e = integral of B^T C B over one voxel, 2x2x2 Gauss quadrature.
ElementMatrix element_stiffness(const material::ElasticTensor6& C, double h);

/// Engineering strain at the element centroid from its 24 nodal displacements.
Vector6 element_strain(const ElementVector& nodal, double h);

/// u(x) = eps_matrix * x, engineering shears split evenly off the diagonal.
Eigen::Vector3d affine_displacement(const Vector6& strain, const std::array<double, 3>& point);

/// Affine field evaluated at the local (unwrapped) node coordinates of one voxel.
ElementVector element_affine_field(const Vector6& strain, double h);

/// Periodic node numbering on the unit cube: n^3 nodes, node (i, j, k) at (i, j, k) / n,
/// index (i * n + j) * n + k. Element (i, j, k) spans nodes (i + a, j + b, k + c) mod n.
class PeriodicMesh {
 public:
  explicit PeriodicMesh(int resolution);

  int resolution() const { return n_; }
  double cell_size() const { return 1.0 / n_; }
  std::size_t node_count() const { return nodes_; }
  std::size_t element_count() const { return nodes_; }
  Eigen::Index dof_count() const { return static_cast<Eigen::Index>(3 * nodes_); }

  std::size_t node_index(int i, int j, int k) const;
  std::array<int, 3> node_coords(std::size_t node) const;
  std::array<double, 3> node_position(std::size_t node) const;

  std::span<const std::uint32_t, 8> element_nodes(std::size_t element) const {
    return std::span<const std::uint32_t, 8>(element_nodes_.data() + 8 * element, 8);
  }
  /// Element touching `node` at local position a, for a = 0..7.
  std::span<const std::uint32_t, 8> node_elements(std::size_t node) const {
    return std::span<const std::uint32_t, 8>(node_elements_.data() + 8 * node, 8);
  }

 private:
  int n_;
  std::size_t nodes_;
  std::vector<std::uint32_t> element_nodes_;
  std::vector<std::uint32_t> node_elements_;
};

/// Nodal field of u = eps * x at the periodic node positions (not itself periodic).
linalg::Vector affine_field(const Vector6& strain, const PeriodicMesh& mesh);

/// Centroid strains of a periodic nodal field, one per element.
std::vector<Vector6> local_strains(const linalg::Vector& field, const PeriodicMesh& mesh);

/// 18 nodal fields: for each load case an interleaved 3 * n^3 vector (dof = 3 * node + axis).
struct DisplacementFields {
  int resolution = 0;
  std::array<linalg::Vector, kLoadCases> cases;

  static DisplacementFields zeros(int resolution);
  double& at(int load_case, int axis, std::size_t node) {
    return cases[load_case][static_cast<Eigen::Index>(3 * node + axis)];
  }
  double at(int load_case, int axis, std::size_t node) const {
    return cases[load_case][static_cast<Eigen::Index>(3 * node + axis)];
  }
};

/// Global periodic stiffness of a voxel model, applied matrix-free with one cached
/// element matrix for the solid phase. Constrained DOFs (the anchor node plus every
/// node without an adjacent solid voxel) act as identity rows and columns.
class LinearSystem final : public linalg::LinearOperator {
 public:
  explicit LinearSystem(geometry::VoxelModel model);

  const geometry::VoxelModel& model() const { return model_; }
  const PeriodicMesh& mesh() const { return mesh_; }
  const ElementMatrix& solid_stiffness() const { return solid_ke_; }

  Eigen::Index size() const override { return mesh_.dof_count(); }
  void apply(const linalg::Vector& x, linalg::Vector& y) const override;
  linalg::Vector diagonal() const override;
  bool can_assemble() const override;
  const linalg::SparseMatrix& assembled() const override;

  /// Stiffness without constraint rows or columns; void-only nodes give empty rows.
  linalg::SparseMatrix assemble_unconstrained() const;

  /// K x without constraint rows or columns.
  void apply_unconstrained(const linalg::Vector& x, linalg::Vector& y) const;

  const linalg::Vector& rhs(int load_case) const { return rhs_.at(load_case); }
  const std::array<linalg::Vector, kLoadCases>& rhs() const { return rhs_; }

  std::size_t anchor_node() const { return anchor_; }
  bool node_has_stiffness(std::size_t node) const { return node_active_[node] != 0; }
  bool is_constrained(Eigen::Index dof) const { return constrained_[dof] != 0; }
  std::size_t constrained_count() const { return constrained_total_; }

  /// Shifts the field by a rigid translation so the anchor node is zero, then zeros all
  /// constrained DOFs. Leaves strains and strain energy unchanged.
  void enforce_constraints(linalg::Vector& field) const;

  ElementVector gather(const linalg::Vector& field, std::size_t element) const;

  /// Largest resolution for which explicit assembly is offered.
  static constexpr int kMaxAssemblyResolution = 32;

 private:
  void accumulate(const linalg::Vector& x, linalg::Vector& y) const;
  linalg::SparseMatrix build_matrix(bool constrained) const;

  geometry::VoxelModel model_;
  PeriodicMesh mesh_;
  ElementMatrix solid_ke_;
  std::vector<std::uint8_t> node_active_;
  std::vector<std::uint8_t> constrained_;
  std::size_t constrained_total_ = 0;
  std::size_t anchor_ = 0;
  std::array<linalg::Vector, kLoadCases> rhs_;

  mutable std::once_flag assembled_once_;
  mutable std::unique_ptr<linalg::SparseMatrix> assembled_;
};

/// f_i = sum over solid elements of k_e X0_e(e_i), scattered to periodic DOFs, constrained
/// entries zeroed unless `apply_constraints` is false. Entries below the accumulated
/// rounding bound are flushed to zero.
std::array<linalg::Vector, kLoadCases> load_vectors(const LinearSystem& system,
                                                    bool apply_constraints = true);

}  // namespace prefine::fem
