#pragma once

#include "prefine/fem.hpp"

namespace prefine::fem {

/// Trilinear interpolation of a periodic nodal field from resolution nc to nf = factor * nc.
/// Fine node i sits at coarse coordinate i / factor.
linalg::Vector prolongate(const linalg::Vector& coarse, int coarse_resolution, int factor);

DisplacementFields prolongate(const DisplacementFields& coarse, int factor);

/// The same map as a sparse (3 nf^3) x (3 nc^3) matrix.
linalg::SparseMatrix prolongation_matrix(int coarse_resolution, int factor);

}  // namespace prefine::fem
