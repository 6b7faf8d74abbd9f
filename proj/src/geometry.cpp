#include "prefine/geometry.hpp"

#include <algorithm>
#include <functional>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <tuple>
#include <random>

namespace prefine::geometry {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Values within rounding of each other (points related by a symmetry of the surface)
// are grouped by snapping to multiples of 2^-36.
constexpr double kSnap = 68719476736.0;  // 2^36

double snap(double v) { return std::round(v * kSnap) / kSnap; }

std::size_t count_members(const std::vector<double>& phi, Network network, double level) {
  return static_cast<std::size_t>(std::count_if(
      phi.begin(), phi.end(), [&](double v) { return is_member(network, v, level); }));
}

}  // namespace

std::string_view to_string(Family family) {
  switch (family) {
    case Family::SchwarzPrimitive: return "primitive";
    case Family::SchoenGyroid: return "gyroid";
    case Family::SchwarzDiamond: return "diamond";
    case Family::FischerKochS: return "fks";
  }
  return "unknown";
}

std::string_view to_string(Network network) {
  return network == Network::Solid ? "solid" : "sheet";
}

Family parse_family(std::string_view text) {
  if (text == "primitive" || text == "SchwarzPrimitive") return Family::SchwarzPrimitive;
  if (text == "gyroid" || text == "SchoenGyroid") return Family::SchoenGyroid;
  if (text == "diamond" || text == "SchwarzDiamond") return Family::SchwarzDiamond;
  if (text == "fks" || text == "FischerKochS") return Family::FischerKochS;
  throw InvalidArgument("unknown TPMS family '" + std::string(text) + "'");
}

Network parse_network(std::string_view text) {
  if (text == "solid" || text == "Solid") return Network::Solid;
  if (text == "sheet" || text == "Sheet") return Network::Sheet;
  throw InvalidArgument("unknown network '" + std::string(text) + "'");
}

VoxelModel::VoxelModel(int resolution, std::vector<std::uint8_t> occupancy, double poisson_ratio,
                       double young_modulus)
    : n_(resolution), occupancy_(std::move(occupancy)), nu_(poisson_ratio), E_(young_modulus) {
  if (n_ < 2) throw InvalidArgument("voxel resolution must be at least 2");
  const auto expected = static_cast<std::size_t>(n_) * n_ * n_;
  if (occupancy_.size() != expected) {
    throw InvalidArgument("occupancy has " + std::to_string(occupancy_.size()) +
                          " entries, expected " + std::to_string(expected));
  }
  if (!(nu_ > 0.0 && nu_ < 0.5)) throw InvalidArgument("Poisson ratio must lie in (0, 0.5)");
  if (!(E_ > 0.0)) throw InvalidArgument("Young's modulus must be positive");
  for (auto& v : occupancy_) v = v ? 1 : 0;
}

VoxelModel VoxelModel::filled(int resolution, bool solid, double poisson_ratio,
                              double young_modulus) {
  if (resolution < 2) throw InvalidArgument("voxel resolution must be at least 2");
  const auto count = static_cast<std::size_t>(resolution) * resolution * resolution;
  return VoxelModel(resolution, std::vector<std::uint8_t>(count, solid ? 1 : 0), poisson_ratio,
                    young_modulus);
}

std::size_t VoxelModel::solid_count() const {
  return static_cast<std::size_t>(std::count(occupancy_.begin(), occupancy_.end(), 1));
}

VoxelModel VoxelModel::with_material(double poisson_ratio, double young_modulus) const {
  return VoxelModel(n_, occupancy_, poisson_ratio, young_modulus);
}

double volume_fraction(const VoxelModel& model) {
  return static_cast<double>(model.solid_count()) / static_cast<double>(model.voxel_count());
}

double evaluate_level_set(Family family, double x, double y, double z) {
  const double sx = std::sin(kTwoPi * x), cx = std::cos(kTwoPi * x);
  const double sy = std::sin(kTwoPi * y), cy = std::cos(kTwoPi * y);
  const double sz = std::sin(kTwoPi * z), cz = std::cos(kTwoPi * z);
  switch (family) {
    case Family::SchwarzPrimitive:
      return cx + cy + cz;
    case Family::SchoenGyroid:
      return sx * cy + sy * cz + sz * cx;
    case Family::SchwarzDiamond:
      return cx * cy * cz - sx * sy * sz;
    case Family::FischerKochS: {
      const double c2x = std::cos(2.0 * kTwoPi * x);
      const double c2y = std::cos(2.0 * kTwoPi * y);
      const double c2z = std::cos(2.0 * kTwoPi * z);
      return c2x * sy * cz + cx * c2y * sz + sx * cy * c2z;
    }
  }
  return 0.0;
}

bool is_member(Network network, double phi, double level) {
  if (network == Network::Solid) return phi > level;
  return -level <= phi && phi <= level;
}

std::vector<double> sample_level_set(Family family, int n) {
  if (n < 2) throw InvalidArgument("voxel resolution must be at least 2");
  std::vector<double> phi(static_cast<std::size_t>(n) * n * n);
  const double h = 1.0 / n;
  std::size_t idx = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        phi[idx++] = evaluate_level_set(family, (i + 0.5) * h, (j + 0.5) * h, (k + 0.5) * h);
  return phi;
}

VoxelModel voxelize(const LevelSetSpec& spec, int n, double poisson_ratio, double young_modulus) {
  if (spec.network == Network::Sheet && spec.level < 0.0) {
    throw InvalidArgument("sheet networks require a non-negative level (band -c <= phi <= c)");
  }
  const auto phi = sample_level_set(spec.family, n);
  std::vector<std::uint8_t> occ(phi.size());
  std::transform(phi.begin(), phi.end(), occ.begin(), [&](double v) {
    return static_cast<std::uint8_t>(is_member(spec.network, v, spec.level));
  });
  return VoxelModel(n, std::move(occ), poisson_ratio, young_modulus);
}

LevelSolveResult solve_level_for_fraction(Family family, Network network, double target_fraction,
                                          int n) {
  if (!(target_fraction > 0.0 && target_fraction < 1.0)) {
    throw InvalidArgument("target volume fraction must lie in (0, 1)");
  }
  const auto phi = sample_level_set(family, n);
  const bool solid = network == Network::Solid;
  // Membership as "score above threshold": phi > c for solid, -|phi| >= -c for sheet.
  std::vector<double> score(phi.size());
  std::transform(phi.begin(), phi.end(), score.begin(),
                 [&](double v) { return solid ? v : -std::abs(v); });
  std::sort(score.begin(), score.end(), std::greater<>());
  const auto total = static_cast<double>(score.size());

  // Boundary after position p keeps the top p + 1 scores; returns the best boundary whose
  // neighbours differ under `distinct`.
  auto best_boundary = [&](auto distinct) {
    std::optional<std::size_t> best;
    double best_err = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p + 1 < score.size(); ++p) {
      if (!distinct(score[p], score[p + 1])) continue;
      const double err = std::abs((p + 1) / total - target_fraction);
      if (err < best_err) {
        best_err = err;
        best = p;
      }
    }
    return std::pair{best, best_err};
  };

  bool splits = false;
  auto [boundary, err] = best_boundary([](double a, double b) { return snap(a) != snap(b); });
  if (!boundary || err > 0.005) {
    const auto exact = best_boundary([](double a, double b) { return a != b; });
    if (exact.first && exact.second < err) {
      std::tie(boundary, err) = exact;
      splits = true;
    }
  }
  if (!boundary || err > 0.005) {
    const double closest = boundary ? (*boundary + 1) / total : 0.0;
    throw std::runtime_error("volume fraction " + std::to_string(target_fraction) +
                             " not reachable at resolution " + std::to_string(n) +
                             " (closest " + std::to_string(closest) + ")");
  }

  const double above = score[*boundary];
  const double below = score[*boundary + 1];
  double threshold = 0.5 * (above + below);
  if (!(threshold < above && threshold > below)) threshold = solid ? below : above;
  const double level = solid ? threshold : -threshold;
  const auto count = count_members(phi, network, level);
  return {level, count / total, splits};
}

std::vector<Wave> draw_waves(int wave_count, std::uint64_t seed) {
  if (wave_count < 1) throw InvalidArgument("wave_count must be at least 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> component(-4, 4);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  std::vector<Wave> waves;
  waves.reserve(wave_count);
  while (static_cast<int>(waves.size()) < wave_count) {
    Wave w;
    for (auto& c : w.k) c = component(rng);
    if (w.k == std::array<int, 3>{0, 0, 0}) continue;
    w.phase = phase(rng);
    waves.push_back(w);
  }
  return waves;
}

std::vector<double> wave_field(const std::vector<Wave>& waves, int n) {
  if (n < 2) throw InvalidArgument("voxel resolution must be at least 2");
  std::vector<double> field(static_cast<std::size_t>(n) * n * n, 0.0);
  const double h = 1.0 / n;
  std::size_t idx = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const double x = (i + 0.5) * h, y = (j + 0.5) * h, z = (k + 0.5) * h;
        double sum = 0.0;
        for (const auto& w : waves) {
          sum += std::cos(kTwoPi * (w.k[0] * x + w.k[1] * y + w.k[2] * z) + w.phase);
        }
        field[idx++] = sum;
      }
  return field;
}

std::vector<std::uint8_t> threshold_by_porosity(const std::vector<double>& field, double porosity,
                                                double* threshold) {
  if (!(porosity > 0.0 && porosity < 1.0)) throw InvalidArgument("porosity must lie in (0, 1)");
  std::vector<std::size_t> order(field.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return field[a] < field[b]; });
  const auto void_count = static_cast<std::size_t>(
      std::llround(porosity * static_cast<double>(field.size())));
  std::vector<std::uint8_t> occ(field.size(), 1);
  for (std::size_t r = 0; r < void_count; ++r) occ[order[r]] = 0;
  if (threshold) {
    *threshold = void_count < field.size() ? field[order[void_count]]
                                           : std::numeric_limits<double>::infinity();
  }
  return occ;
}

GrfModel generate_grf(const GrfSpec& spec, int n, double poisson_ratio, double young_modulus) {
  if (spec.wave_count < 1) throw InvalidArgument("wave_count must be at least 1");
  if (!(spec.target_porosity > 0.0 && spec.target_porosity < 1.0)) {
    throw InvalidArgument("target porosity must lie in (0, 1)");
  }
  const auto field = wave_field(draw_waves(spec.wave_count, spec.seed), n);
  double threshold = 0.0;
  auto occ = threshold_by_porosity(field, spec.target_porosity, &threshold);
  return {VoxelModel(n, std::move(occ), poisson_ratio, young_modulus), threshold};
}

VoxelModel coarsen(const VoxelModel& fine, int factor) {
  const int n = fine.resolution();
  if (factor < 1 || n % factor != 0 || n / factor < 2) {
    throw InvalidArgument("coarsening factor " + std::to_string(factor) +
                          " incompatible with resolution " + std::to_string(n));
  }
  const int nc = n / factor;
  const int block = factor * factor * factor;
  std::vector<std::uint8_t> occ(static_cast<std::size_t>(nc) * nc * nc);
  std::size_t idx = 0;
  for (int I = 0; I < nc; ++I)
    for (int J = 0; J < nc; ++J)
      for (int K = 0; K < nc; ++K) {
        int solid = 0;
        for (int a = 0; a < factor; ++a)
          for (int b = 0; b < factor; ++b)
            for (int c = 0; c < factor; ++c)
              solid += fine.solid(I * factor + a, J * factor + b, K * factor + c);
        occ[idx++] = static_cast<std::uint8_t>(2 * solid >= block);
      }
  return VoxelModel(nc, std::move(occ), fine.poisson_ratio(), fine.young_modulus());
}

}  // namespace prefine::geometry
