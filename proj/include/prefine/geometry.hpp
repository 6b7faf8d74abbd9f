#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace prefine {

/// Thrown when caller-supplied arguments violate a documented precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace prefine

namespace prefine::geometry {

enum class Family { SchwarzPrimitive, SchoenGyroid, SchwarzDiamond, FischerKochS };
enum class Network { Solid, Sheet };

std::string_view to_string(Family family);
std::string_view to_string(Network network);
/// Accepts the CLI spellings (primitive, gyroid, diamond, fks) and the full names.
Family parse_family(std::string_view text);
Network parse_network(std::string_view text);

struct LevelSetSpec {
  Family family = Family::SchoenGyroid;
  Network network = Network::Solid;
  double level = 0.0;  // c
};

/// Periodic voxel grid on the unit cube. Voxel (i, j, k) has linear index
/// (i * n + j) * n + k, with i along x.
class VoxelModel {
 public:
  VoxelModel(int resolution, std::vector<std::uint8_t> occupancy, double poisson_ratio,
             double young_modulus = 1.0);

  static VoxelModel filled(int resolution, bool solid, double poisson_ratio,
                           double young_modulus = 1.0);

  int resolution() const { return n_; }
  double cell_size() const { return 1.0 / n_; }
  std::size_t voxel_count() const { return occupancy_.size(); }
  double poisson_ratio() const { return nu_; }
  double young_modulus() const { return E_; }

  bool solid(std::size_t index) const { return occupancy_[index] != 0; }
  bool solid(int i, int j, int k) const { return occupancy_[index(i, j, k)] != 0; }
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * n_ + j) * n_ + k;
  }
  const std::vector<std::uint8_t>& occupancy() const { return occupancy_; }
  std::size_t solid_count() const;

  VoxelModel with_material(double poisson_ratio, double young_modulus) const;

 private:
  int n_;
  std::vector<std::uint8_t> occupancy_;
  double nu_;
  double E_;
};

double volume_fraction(const VoxelModel& model);

/// Trigonometric TPMS level-set value; 1-periodic in each coordinate.
double evaluate_level_set(Family family, double x, double y, double z);
inline double evaluate_level_set(Family family, const std::array<double, 3>& p) {
  return evaluate_level_set(family, p[0], p[1], p[2]);
}

bool is_member(Network network, double phi, double level);

/// Level-set values at the n^3 voxel centers, in voxel index order.
std::vector<double> sample_level_set(Family family, int n);

VoxelModel voxelize(const LevelSetSpec& spec, int n, double poisson_ratio,
                    double young_modulus = 1.0);

struct LevelSolveResult {
  double level = 0.0;
  double volume_fraction = 0.0;
  bool splits_ties = false;
};

/// Level c whose voxel set is closest to the target fraction. Samples equal up to
/// rounding (symmetric images of one point) are kept together; a level that separates
/// them is used only when no such level lands within 0.005. Throws std::runtime_error
/// when the target cannot be reached within 0.005.
LevelSolveResult solve_level_for_fraction(Family family, Network network, double target_fraction,
                                          int n);

struct GrfSpec {
  int wave_count = 16;
  std::uint64_t seed = 0;
  double target_porosity = 0.3;
};

struct Wave {
  std::array<int, 3> k{};
  double phase = 0.0;
};

/// Integer wave vectors with components uniform in [-4, 4] (zero vector excluded)
/// and phases uniform in [0, 2*pi), drawn from a generator seeded with `seed`.
std::vector<Wave> draw_waves(int wave_count, std::uint64_t seed);

/// F(x) = sum_w cos(2 pi k_w . x + psi_w) at the voxel centers.
std::vector<double> wave_field(const std::vector<Wave>& waves, int n);

/// Marks the round(porosity * N) lowest field values as void; ties are broken by
/// voxel index so the achieved porosity is exact to 1/N. Returns the threshold
/// (lowest solid value) through `threshold` when given.
std::vector<std::uint8_t> threshold_by_porosity(const std::vector<double>& field,
                                                double porosity, double* threshold = nullptr);

struct GrfModel {
  VoxelModel model;
  double threshold;
};

GrfModel generate_grf(const GrfSpec& spec, int n, double poisson_ratio,
                      double young_modulus = 1.0);

/// Solid if at least half of the factor^3 fine voxels in the block are solid.
VoxelModel coarsen(const VoxelModel& fine, int factor);

}  // namespace prefine::geometry
