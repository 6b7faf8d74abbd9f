#include "prefine/prolongation.hpp"

namespace prefine::fem {

linalg::Vector prolongate(const linalg::Vector& coarse, int coarse_resolution, int factor) {
  const int nc = coarse_resolution;
  if (nc < 2 || factor < 1) throw InvalidArgument("invalid prolongation resolution or factor");
  const auto coarse_nodes = static_cast<Eigen::Index>(nc) * nc * nc;
  if (coarse.size() != 3 * coarse_nodes) throw InvalidArgument("coarse field has wrong length");
  const int nf = nc * factor;

  auto cnode = [nc](int i, int j, int k) {
    return 3 * ((static_cast<Eigen::Index>(i % nc) * nc + j % nc) * nc + k % nc);
  };

  linalg::Vector fine(3 * static_cast<Eigen::Index>(nf) * nf * nf);
  Eigen::Index out = 0;
  for (int i = 0; i < nf; ++i) {
    const int i0 = i / factor;
    const double ti = static_cast<double>(i % factor) / factor;
    for (int j = 0; j < nf; ++j) {
      const int j0 = j / factor;
      const double tj = static_cast<double>(j % factor) / factor;
      for (int k = 0; k < nf; ++k, out += 3) {
        const int k0 = k / factor;
        const double tk = static_cast<double>(k % factor) / factor;
        for (int a = 0; a < 3; ++a) {
          double v = 0.0;
          for (int di = 0; di < 2; ++di)
            for (int dj = 0; dj < 2; ++dj)
              for (int dk = 0; dk < 2; ++dk) {
                const double w = (di ? ti : 1.0 - ti) * (dj ? tj : 1.0 - tj) * (dk ? tk : 1.0 - tk);
                if (w != 0.0) v += w * coarse[cnode(i0 + di, j0 + dj, k0 + dk) + a];
              }
          fine[out + a] = v;
        }
      }
    }
  }
  return fine;
}

DisplacementFields prolongate(const DisplacementFields& coarse, int factor) {
  DisplacementFields fine;
  fine.resolution = coarse.resolution * factor;
  for (int c = 0; c < kLoadCases; ++c) {
    fine.cases[c] = prolongate(coarse.cases[c], coarse.resolution, factor);
  }
  return fine;
}

linalg::SparseMatrix prolongation_matrix(int coarse_resolution, int factor) {
  const int nc = coarse_resolution;
  if (nc < 2 || factor < 1) throw InvalidArgument("invalid prolongation resolution or factor");
  const int nf = nc * factor;
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(24) * nf * nf * nf);
  for (int i = 0; i < nf; ++i)
    for (int j = 0; j < nf; ++j)
      for (int k = 0; k < nf; ++k) {
        const int i0 = i / factor, j0 = j / factor, k0 = k / factor;
        const double ti = static_cast<double>(i % factor) / factor;
        const double tj = static_cast<double>(j % factor) / factor;
        const double tk = static_cast<double>(k % factor) / factor;
        const int row = 3 * ((i * nf + j) * nf + k);
        for (int di = 0; di < 2; ++di)
          for (int dj = 0; dj < 2; ++dj)
            for (int dk = 0; dk < 2; ++dk) {
              const double w = (di ? ti : 1.0 - ti) * (dj ? tj : 1.0 - tj) * (dk ? tk : 1.0 - tk);
              if (w == 0.0) continue;
              const int col = 3 * ((((i0 + di) % nc) * nc + (j0 + dj) % nc) * nc + (k0 + dk) % nc);
              for (int a = 0; a < 3; ++a) triplets.emplace_back(row + a, col + a, w);
            }
      }
  linalg::SparseMatrix P(3 * nf * nf * nf, 3 * nc * nc * nc);
  P.setFromTriplets(triplets.begin(), triplets.end());
  return P;
}

}  // namespace prefine::fem
