#include "prefine/container.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace prefine::io {

namespace fs = std::filesystem;

namespace {

template <typename T>
void put_le(std::vector<char>& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.insert(out.end(), bytes.begin(), bytes.end());
}

template <typename T>
T get_le(const std::vector<char>& in, std::size_t& offset) {
  if (offset + sizeof(T) > in.size()) throw FormatError("container truncated in header");
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), in.data() + offset, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  offset += sizeof(T);
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

std::size_t dtype_size(DType dtype) { return dtype == DType::Float32 ? 4 : 8; }

std::vector<std::uint64_t> fields_shape(int n) {
  const auto m = static_cast<std::uint64_t>(n);
  return {fem::kLoadCases, 3, m, m, m};
}

}  // namespace

std::uint64_t Tensor::element_count() const {
  std::uint64_t count = 1;
  for (auto d : dims) count *= d;
  return count;
}

std::string shape_string(const std::vector<std::uint64_t>& dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(dims[i]);
  }
  return s + "]";
}

std::vector<char> encode(const Tensor& tensor) {
  if (tensor.values.size() != tensor.element_count()) {
    throw InvalidArgument("tensor has " + std::to_string(tensor.values.size()) +
                          " values for shape " + shape_string(tensor.dims));
  }
  std::vector<char> out(kMagic.begin(), kMagic.end());
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.dtype));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.dims.size()));
  for (auto d : tensor.dims) put_le<std::uint64_t>(out, d);
  out.reserve(out.size() + tensor.values.size() * dtype_size(tensor.dtype));
  if (tensor.dtype == DType::Float32) {
    for (double v : tensor.values) put_le<float>(out, static_cast<float>(v));
  } else {
    for (double v : tensor.values) put_le<double>(out, v);
  }
  return out;
}

Tensor decode(const std::vector<char>& bytes) {
  if (bytes.size() < 4 || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw FormatError("not a tensor container (bad magic bytes)");
  }
  std::size_t offset = 4;
  const auto version = get_le<std::uint32_t>(bytes, offset);
  if (version != kVersion) {
    throw FormatError("unsupported container version " + std::to_string(version));
  }
  const auto code = get_le<std::uint32_t>(bytes, offset);
  if (code != 1 && code != 2) throw FormatError("unknown dtype code " + std::to_string(code));
  Tensor t;
  t.dtype = static_cast<DType>(code);
  const auto rank = get_le<std::uint32_t>(bytes, offset);
  if (rank > 16) throw FormatError("implausible container rank " + std::to_string(rank));
  for (std::uint32_t r = 0; r < rank; ++r) t.dims.push_back(get_le<std::uint64_t>(bytes, offset));

  const std::uint64_t count = t.element_count();
  const std::uint64_t expected = count * dtype_size(t.dtype);
  if (bytes.size() - offset != expected) {
    throw FormatError("payload is " + std::to_string(bytes.size() - offset) + " bytes, shape " +
                      shape_string(t.dims) + " needs " + std::to_string(expected));
  }
  t.values.resize(count);
  for (auto& v : t.values) {
    v = t.dtype == DType::Float32 ? static_cast<double>(get_le<float>(bytes, offset))
                                  : get_le<double>(bytes, offset);
  }
  return t;
}

void write_tensor(const fs::path& path, const Tensor& tensor) {
  const auto bytes = encode(tensor);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Tensor read_tensor(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode(bytes);
  } catch (const ShapeError&) {
    throw;
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

fs::path sidecar_path(const fs::path& path) { return fs::path(path.string() + ".json"); }
fs::path normalization_path(const fs::path& path) { return fs::path(path.string() + ".norm.json"); }

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::json& json) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << json.dump(2) << '\n';
}

void write_model(const fs::path& path, const geometry::VoxelModel& model,
                 const nlohmann::json& metadata) {
  const auto n = static_cast<std::uint64_t>(model.resolution());
  Tensor t{DType::Float32, {n, n, n}, {}};
  t.values.assign(model.occupancy().begin(), model.occupancy().end());
  write_tensor(path, t);
  nlohmann::json meta = metadata;
  meta["n"] = model.resolution();
  meta["nu"] = model.poisson_ratio();
  meta["E"] = model.young_modulus();
  meta["volume_fraction"] = geometry::volume_fraction(model);
  write_json(sidecar_path(path), meta);
}

ModelFile read_model(const fs::path& path, std::optional<double> poisson_ratio,
                     std::optional<double> young_modulus) {
  const Tensor t = read_tensor(path);
  if (t.dims.size() != 3 || t.dims[0] != t.dims[1] || t.dims[1] != t.dims[2]) {
    throw ShapeError(path.string() + ": expected model shape [n, n, n], found " +
                     shape_string(t.dims));
  }
  const int n = static_cast<int>(t.dims[0]);
  std::vector<std::uint8_t> occ(t.values.size());
  for (std::size_t i = 0; i < occ.size(); ++i) {
    const double v = t.values[i];
    if (v != 0.0 && v != 1.0) {
      throw FormatError(path.string() + ": occupancy must be 0 or 1, found " + std::to_string(v));
    }
    occ[i] = v == 1.0;
  }
  nlohmann::json meta = nlohmann::json::object();
  if (fs::exists(sidecar_path(path))) meta = read_json(sidecar_path(path));
  double nu = 0.0;
  if (poisson_ratio) {
    nu = *poisson_ratio;
  } else if (meta.contains("nu")) {
    nu = meta.at("nu").get<double>();
  } else {
    throw InvalidArgument(path.string() + ": no Poisson ratio in sidecar; pass one explicitly");
  }
  const double E = young_modulus ? *young_modulus : meta.value("E", 1.0);
  return {geometry::VoxelModel(n, std::move(occ), nu, E), std::move(meta)};
}

Tensor fields_tensor(const fem::DisplacementFields& fields, DType dtype) {
  const int n = fields.resolution;
  Tensor t{dtype, fields_shape(n), {}};
  const std::size_t nodes = static_cast<std::size_t>(n) * n * n;
  t.values.resize(kFieldChannels * nodes);
  for (int c = 0; c < fem::kLoadCases; ++c)
    for (int a = 0; a < 3; ++a)
      for (std::size_t p = 0; p < nodes; ++p)
        t.values[(static_cast<std::size_t>(c) * 3 + a) * nodes + p] = fields.at(c, a, p);
  return t;
}

fem::DisplacementFields fields_from_tensor(const Tensor& tensor, int expected_resolution) {
  const auto expected = fields_shape(expected_resolution);
  if (tensor.dims != expected) {
    throw ShapeError("expected field shape " + shape_string(expected) + ", found " +
                     shape_string(tensor.dims));
  }
  auto fields = fem::DisplacementFields::zeros(expected_resolution);
  const std::size_t nodes = tensor.values.size() / kFieldChannels;
  for (int c = 0; c < fem::kLoadCases; ++c)
    for (int a = 0; a < 3; ++a)
      for (std::size_t p = 0; p < nodes; ++p)
        fields.at(c, a, p) = tensor.values[(static_cast<std::size_t>(c) * 3 + a) * nodes + p];
  return fields;
}

void write_fields(const fs::path& path, const fem::DisplacementFields& fields, DType dtype) {
  write_tensor(path, fields_tensor(fields, dtype));
}

fem::DisplacementFields read_fields(const fs::path& path, int expected_resolution) {
  const Tensor t = read_tensor(path);
  try {
    return fields_from_tensor(t, expected_resolution);
  } catch (const ShapeError& e) {
    throw ShapeError(path.string() + ": " + e.what());
  }
}

NormalizationStats compute_normalization(const std::vector<fem::DisplacementFields>& samples) {
  if (samples.empty()) throw InvalidArgument("normalization needs at least one sample");
  NormalizationStats stats{};
  for (int ch = 0; ch < kFieldChannels; ++ch) {
    const int c = ch / 3, a = ch % 3;
    double sum = 0.0, count = 0.0;
    for (const auto& s : samples) {
      const std::size_t nodes = s.cases[c].size() / 3;
      for (std::size_t p = 0; p < nodes; ++p) sum += s.at(c, a, p);
      count += static_cast<double>(nodes);
    }
    const double mean = sum / count;
    double var = 0.0;
    for (const auto& s : samples) {
      const std::size_t nodes = s.cases[c].size() / 3;
      for (std::size_t p = 0; p < nodes; ++p) var += (s.at(c, a, p) - mean) * (s.at(c, a, p) - mean);
    }
    const double sd = std::sqrt(var / count);
    stats[ch] = {mean, sd > 0.0 ? sd : 1.0};
  }
  return stats;
}

void normalize(fem::DisplacementFields& fields, const NormalizationStats& stats) {
  for (int ch = 0; ch < kFieldChannels; ++ch) {
    const int c = ch / 3, a = ch % 3;
    const std::size_t nodes = fields.cases[c].size() / 3;
    for (std::size_t p = 0; p < nodes; ++p) {
      fields.at(c, a, p) = (fields.at(c, a, p) - stats[ch].mean) / stats[ch].std;
    }
  }
}

void denormalize(fem::DisplacementFields& fields, const NormalizationStats& stats) {
  for (int ch = 0; ch < kFieldChannels; ++ch) {
    const int c = ch / 3, a = ch % 3;
    const std::size_t nodes = fields.cases[c].size() / 3;
    for (std::size_t p = 0; p < nodes; ++p) {
      fields.at(c, a, p) = fields.at(c, a, p) * stats[ch].std + stats[ch].mean;
    }
  }
}

nlohmann::json to_json(const NormalizationStats& stats) {
  nlohmann::json channels = nlohmann::json::array();
  for (const auto& s : stats) channels.push_back({{"mean", s.mean}, {"std", s.std}});
  return {{"channels", channels}};
}

NormalizationStats normalization_from_json(const nlohmann::json& json) {
  const auto& channels = json.contains("channels") ? json.at("channels") : json;
  if (!channels.is_array() || channels.size() != kFieldChannels) {
    throw FormatError("normalization stats need " + std::to_string(kFieldChannels) + " channels");
  }
  NormalizationStats stats{};
  for (int ch = 0; ch < kFieldChannels; ++ch) {
    stats[ch].mean = channels[ch].at("mean").get<double>();
    stats[ch].std = channels[ch].at("std").get<double>();
    if (!(stats[ch].std > 0.0)) throw FormatError("normalization std must be positive");
  }
  return stats;
}

fem::DisplacementFields import_initial_guess(const fs::path& path, int expected_resolution) {
  auto fields = read_fields(path, expected_resolution);
  if (fs::exists(normalization_path(path))) {
    denormalize(fields, normalization_from_json(read_json(normalization_path(path))));
  }
  return fields;
}

}  // namespace prefine::io
