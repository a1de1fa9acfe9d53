#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "pabs/synthesis.hpp"

namespace pabs {

inline constexpr int kFormatVersion = 1;

/// +inf is written as the string "inf".
nlohmann::json radius_to_json(double r);
double radius_from_json(const nlohmann::json& j);

nlohmann::json scenario_to_json(const ScenarioConfig& cfg);
ScenarioConfig scenario_from_json(const nlohmann::json& j);

/// Versioned abstraction artifact. Besides the documented keys it stores the
/// unsafe set, initial set, percept box, norm and solver settings so that the
/// verifier can rerun the exact certification problem.
nlohmann::json abstraction_to_json(const Abstraction& abst);
Abstraction abstraction_from_json(const nlohmann::json& j);

void save_abstraction(const Abstraction& abst, const std::filesystem::path& path, const nlohmann::json& manifest = {});
Abstraction load_abstraction(const std::filesystem::path& path);

void write_json(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace pabs
