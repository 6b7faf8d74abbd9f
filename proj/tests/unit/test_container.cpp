#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "prefine/container.hpp"
#include "prefine/geometry.hpp"

using namespace prefine;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "prefine_container_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::vector<char> file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fem::DisplacementFields random_fields(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1e-2);
  auto f = fem::DisplacementFields::zeros(n);
  for (int c = 0; c < 6; ++c)
    for (auto& v : f.cases[c]) v = (c + 1) * 0.1 + z(rng);
  return f;
}

}  // namespace

TEST_CASE("header layout") {
  io::Tensor t{io::DType::Float32, {2, 3}, {1, 2, 3, 4, 5, 6}};
  const auto bytes = io::encode(t);
  REQUIRE(bytes.size() == 4 + 4 + 4 + 4 + 2 * 8 + 6 * 4);
  CHECK(std::string(bytes.data(), 4) == "PFHT");
  std::uint32_t version, dtype, rank;
  std::memcpy(&version, bytes.data() + 4, 4);
  std::memcpy(&dtype, bytes.data() + 8, 4);
  std::memcpy(&rank, bytes.data() + 12, 4);
  CHECK(version == 1);
  CHECK(dtype == 1);
  CHECK(rank == 2);
  std::uint64_t d0;
  std::memcpy(&d0, bytes.data() + 16, 8);
  CHECK(d0 == 2);
  float last;
  std::memcpy(&last, bytes.data() + bytes.size() - 4, 4);
  CHECK(last == 6.0f);
}

TEST_CASE("round trips are bit-identical for both dtypes") {
  for (auto dtype : {io::DType::Float32, io::DType::Float64}) {
    const auto fields = random_fields(4, 3);
    const auto path = scratch(dtype == io::DType::Float32 ? "f32.pfht" : "f64.pfht");
    io::write_fields(path, fields, dtype);
    const auto bytes = file_bytes(path);
    const auto back = io::read_fields(path, 4);
    const auto path2 = scratch("again.pfht");
    io::write_fields(path2, back, dtype);
    CHECK(file_bytes(path2) == bytes);
    if (dtype == io::DType::Float64) {
      for (int c = 0; c < 6; ++c) CHECK((back.cases[c] - fields.cases[c]).cwiseAbs().maxCoeff() == 0.0);
    } else {
      for (int c = 0; c < 6; ++c)
        for (Eigen::Index i = 0; i < fields.cases[c].size(); ++i)
          CHECK(back.cases[c][i] == static_cast<double>(static_cast<float>(fields.cases[c][i])));
    }
  }
}

TEST_CASE("field layout is [load case][axis][i][j][k]") {
  auto f = fem::DisplacementFields::zeros(3);
  f.at(4, 2, 5) = 7.0;  // node 5 = (0, 1, 2)
  const auto t = io::fields_tensor(f);
  CHECK(t.dims == std::vector<std::uint64_t>{6, 3, 3, 3, 3});
  CHECK(t.values[((4 * 3 + 2) * 27) + 5] == 7.0);
}

TEST_CASE("malformed containers are rejected") {
  io::Tensor t{io::DType::Float64, {3}, {1, 2, 3}};
  auto good = io::encode(t);
  CHECK_NOTHROW(io::decode(good));

  auto bad_magic = good;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(io::decode(bad_magic), io::FormatError);

  auto bad_version = good;
  bad_version[4] = 2;
  CHECK_THROWS_AS(io::decode(bad_version), io::FormatError);

  auto bad_dtype = good;
  bad_dtype[8] = 9;
  CHECK_THROWS_AS(io::decode(bad_dtype), io::FormatError);

  auto truncated = good;
  truncated.pop_back();
  CHECK_THROWS_AS(io::decode(truncated), io::FormatError);

  auto trailing = good;
  trailing.push_back(0);
  CHECK_THROWS_AS(io::decode(trailing), io::FormatError);

  CHECK_THROWS_AS(io::decode(std::vector<char>(6, 0)), io::FormatError);
  CHECK_THROWS(io::read_tensor(scratch("does_not_exist.pfht")));
}

TEST_CASE("shape mismatches name both shapes") {
  const auto path = scratch("rank4.pfht");
  io::write_tensor(path, io::Tensor{io::DType::Float32, {6, 3, 4, 4}, std::vector<double>(6 * 3 * 16, 0.0)});
  try {
    io::read_fields(path, 4);
    FAIL("expected ShapeError");
  } catch (const io::ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[6, 3, 4, 4, 4]") != std::string::npos);
    CHECK(msg.find("[6, 3, 4, 4]") != std::string::npos);
  }
  io::write_fields(path, fem::DisplacementFields::zeros(4));
  CHECK_THROWS_AS(io::read_fields(path, 8), io::ShapeError);
}

TEST_CASE("normalization round trip") {
  std::vector<fem::DisplacementFields> samples{random_fields(4, 1), random_fields(4, 2), random_fields(4, 3)};
  const auto stats = io::compute_normalization(samples);
  for (const auto& s : stats) CHECK(s.std > 0.0);
  auto f = samples[1];
  io::normalize(f, stats);
  double mean0 = f.cases[0](Eigen::seq(0, Eigen::last, 3)).mean();
  CHECK(std::abs(mean0) < 1.0);
  io::denormalize(f, stats);
  for (int c = 0; c < 6; ++c) CHECK((f.cases[c] - samples[1].cases[c]).cwiseAbs().maxCoeff() <= 1e-12);

  const auto back = io::normalization_from_json(io::to_json(stats));
  for (int ch = 0; ch < io::kFieldChannels; ++ch) {
    CHECK(back[ch].mean == stats[ch].mean);
    CHECK(back[ch].std == stats[ch].std);
  }
}

TEST_CASE("imported guesses are de-normalized when statistics are present") {
  const auto fields = random_fields(4, 8);
  const auto stats = io::compute_normalization({fields, random_fields(4, 9)});
  auto normalized = fields;
  io::normalize(normalized, stats);
  const auto path = scratch("guess.pfht");
  io::write_fields(path, normalized);
  io::write_json(io::normalization_path(path), io::to_json(stats));
  const auto imported = io::import_initial_guess(path, 4);
  for (int c = 0; c < 6; ++c) CHECK((imported.cases[c] - fields.cases[c]).cwiseAbs().maxCoeff() <= 1e-12);
  fs::remove(io::normalization_path(path));
  const auto raw = io::import_initial_guess(path, 4);
  CHECK((raw.cases[0] - normalized.cases[0]).norm() == 0.0);
}

TEST_CASE("model files carry their material in a sidecar") {
  const auto lv = geometry::solve_level_for_fraction(geometry::Family::SchoenGyroid, geometry::Network::Solid, 0.4, 8);
  const auto model = geometry::voxelize({geometry::Family::SchoenGyroid, geometry::Network::Solid, lv.level}, 8, 0.27, 3.0);
  const auto path = scratch("model.pfht");
  io::write_model(path, model, {{"family", "gyroid"}, {"c", lv.level}});
  const auto loaded = io::read_model(path);
  CHECK(loaded.model.occupancy() == model.occupancy());
  CHECK(loaded.model.poisson_ratio() == 0.27);
  CHECK(loaded.model.young_modulus() == 3.0);
  CHECK(loaded.metadata.at("n") == 8);
  CHECK(loaded.metadata.at("volume_fraction").get<double>() == doctest::Approx(geometry::volume_fraction(model)));
  CHECK(io::read_tensor(path).dtype == io::DType::Float32);

  const auto overridden = io::read_model(path, 0.1, 2.0);
  CHECK(overridden.model.poisson_ratio() == 0.1);

  fs::remove(io::sidecar_path(path));
  CHECK_THROWS(io::read_model(path));
  CHECK(io::read_model(path, 0.3).model.young_modulus() == 1.0);
}
