#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "prefine/fem.hpp"
#include "prefine/geometry.hpp"

namespace prefine::io {

/// Malformed or unexpected TensorContainer contents.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape mismatch between an otherwise valid container and what the caller expected.
class ShapeError : public FormatError {
 public:
  using FormatError::FormatError;
};

enum class DType : std::uint32_t { Float32 = 1, Float64 = 2 };

inline constexpr std::array<char, 4> kMagic{'P', 'F', 'H', 'T'};
inline constexpr std::uint32_t kVersion = 1;

/// Dense row-major array. Float32 payloads keep their values exactly (float -> double
/// -> float is lossless), so a read-modify-free write reproduces the file bytes.
struct Tensor {
  DType dtype = DType::Float64;
  std::vector<std::uint64_t> dims;
  std::vector<double> values;

  std::uint64_t element_count() const;
};

std::vector<char> encode(const Tensor& tensor);
Tensor decode(const std::vector<char>& bytes);

void write_tensor(const std::filesystem::path& path, const Tensor& tensor);
Tensor read_tensor(const std::filesystem::path& path);

std::string shape_string(const std::vector<std::uint64_t>& dims);

/// Occupancy as rank-3 Float32 {0, 1} plus a JSON sidecar at `<path>.json` carrying the
/// generation metadata (family, network, c, n, nu, E, volume_fraction, seed).
void write_model(const std::filesystem::path& path, const geometry::VoxelModel& model,
                 const nlohmann::json& metadata);

struct ModelFile {
  geometry::VoxelModel model;
  nlohmann::json metadata;
};

/// Material parameters come from the sidecar unless overridden; a missing sidecar
/// requires `poisson_ratio`.
ModelFile read_model(const std::filesystem::path& path,
                     std::optional<double> poisson_ratio = std::nullopt,
                     std::optional<double> young_modulus = std::nullopt);

std::filesystem::path sidecar_path(const std::filesystem::path& path);
std::filesystem::path normalization_path(const std::filesystem::path& path);

/// Fields as rank-5 [6][3][n][n][n]; channel = load_case * 3 + axis.
Tensor fields_tensor(const fem::DisplacementFields& fields, DType dtype = DType::Float64);
fem::DisplacementFields fields_from_tensor(const Tensor& tensor, int expected_resolution);

void write_fields(const std::filesystem::path& path, const fem::DisplacementFields& fields,
                  DType dtype = DType::Float64);
fem::DisplacementFields read_fields(const std::filesystem::path& path, int expected_resolution);

inline constexpr int kFieldChannels = 18;

struct ChannelStats {
  double mean = 0.0;
  double std = 1.0;
};
using NormalizationStats = std::array<ChannelStats, kFieldChannels>;

NormalizationStats compute_normalization(const std::vector<fem::DisplacementFields>& samples);
void normalize(fem::DisplacementFields& fields, const NormalizationStats& stats);
void denormalize(fem::DisplacementFields& fields, const NormalizationStats& stats);

nlohmann::json to_json(const NormalizationStats& stats);
NormalizationStats normalization_from_json(const nlohmann::json& json);

/// Reads a warm-start container; when `<path>.norm.json` exists the stored channels are
/// treated as normalized and mapped back with x * std + mean.
fem::DisplacementFields import_initial_guess(const std::filesystem::path& path,
                                             int expected_resolution);

nlohmann::json read_json(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline; byte-stable for equal inputs.
void write_json(const std::filesystem::path& path, const nlohmann::json& json);

}  // namespace prefine::io
