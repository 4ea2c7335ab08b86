#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "rfa/bioheat.hpp"
#include "rfa/grid.hpp"
#include "rfa/necrosis.hpp"
#include "rfa/simulator.hpp"

namespace rfa {

/// Everything besides geometry and pose that determines a simulation.
struct EngineConfig {
  std::string preset = "breast";
  MaterialTable table = MaterialTable::breast();
  BioheatConfig bioheat = BioheatConfig::breast();
  ArrheniusParams arrhenius{};
  double v_applied = kCalibratedAppliedPotential;
  double tip_length = 10.0;
  double tip_radius = 0.5;
  double solver_tol = 1e-8;

  static EngineConfig breast();
  static EngineConfig liver();
  /// "breast" or "liver"; throws on anything else.
  static EngineConfig from_preset(const std::string& name);

  SimulationRequest request(const LabelVolume& labels, const ElectrodePose& pose) const;
};

void to_json(nlohmann::json& j, const TissueProperties& p);
void from_json(const nlohmann::json& j, TissueProperties& p);
void to_json(nlohmann::json& j, const MaterialTable& t);
void from_json(const nlohmann::json& j, MaterialTable& t);
void to_json(nlohmann::json& j, const BioheatConfig& c);
void from_json(const nlohmann::json& j, BioheatConfig& c);
void to_json(nlohmann::json& j, const ArrheniusParams& p);
void from_json(const nlohmann::json& j, ArrheniusParams& p);
void to_json(nlohmann::json& j, const EngineConfig& c);
/// Starts from the named preset ("preset" key, default breast) and applies
/// any other keys present as overrides.
void from_json(const nlohmann::json& j, EngineConfig& c);

/// Applies the keys present in `overrides` on top of `base`.
EngineConfig apply_overrides(const EngineConfig& base, const nlohmann::json& overrides);

/// Content hash of the canonical JSON form.
std::uint64_t config_hash(const EngineConfig& c);

nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace rfa
