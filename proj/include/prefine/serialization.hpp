#pragma once

#include "json.hpp"
#include "prefine/homogenization.hpp"
#include "prefine/solvers.hpp"

namespace prefine::solvers {
void to_json(nlohmann::json& j, const SolveReport& report);
void from_json(const nlohmann::json& j, SolveReport& report);
}  // namespace prefine::solvers

namespace prefine::homogenization {
/// Row-major 36 values plus a row-major 36-entry boolean mask.
void to_json(nlohmann::json& j, const HomogenizedTensor& tensor);
void from_json(const nlohmann::json& j, HomogenizedTensor& tensor);
void to_json(nlohmann::json& j, const ErrorMatrix& error);
void to_json(nlohmann::json& j, const ScalingFactor& factor);
void from_json(const nlohmann::json& j, ScalingFactor& factor);
}  // namespace prefine::homogenization
