#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rfa/bioheat.hpp"
#include "rfa/electrode.hpp"
#include "rfa/grid.hpp"
#include "rfa/metrics.hpp"
#include "rfa/necrosis.hpp"

namespace rfa {

/// Applied potential (V) calibrated so the liver validation setup produces a
/// 261 mm^2 lesion cross-section. Regenerate with `rfa calibrate --preset liver`.
inline constexpr double kCalibratedAppliedPotential = 37.923828125;

struct SimulationRequest {
  LabelVolume labels;
  ElectrodePose pose;
  MaterialTable table = MaterialTable::breast();
  BioheatConfig bioheat = BioheatConfig::breast();
  ArrheniusParams arrhenius{};
  double solver_tol = 1e-8;
  int threads = 0;
};

struct StageTiming {
  std::string stage;
  double ms = 0.0;
};

struct Diagnostics {
  int cg_iterations = 0;
  double cg_residual = 0.0;
  int steps = 0;
  std::size_t electrode_voxels = 0;
  double v_applied = 0.0;
  std::vector<StageTiming> stages;
  double total_ms = 0.0;

  double stage_ms(const std::string& name) const;
};

struct SimulationResult {
  ScalarVolume temperature;  // degC at the end of the run
  ScalarVolume damage;       // Arrhenius integral
  Mask lesion;               // damage > threshold
  Mask electrode;
  Diagnostics diagnostics;
};

/// rasterize -> assign_materials -> solve_potential -> heat_source ->
/// {damage accumulate; bioheat step} per dt -> classify. The resistive source
/// is computed once and held for the whole run. Errors carry the stage name.
SimulationResult run(const SimulationRequest& request);

/// Homogeneous liver block, 41^3 at 1 mm, 10 mm tip centered along +z,
/// 20 degC start, no perfusion or metabolic heat, 180 s at dt = 0.1 s.
SimulationRequest liver_validation_request(double v_applied = kCalibratedAppliedPotential);

/// Section plane used for morphometry of a request's lesion.
SectionPlane section_plane(const SimulationRequest& request);

struct CalibrationProbe {
  double v_applied = 0.0;
  double area_mm2 = 0.0;
};

struct CalibrationResult {
  double v_applied = 0.0;
  double area_mm2 = 0.0;
  Morphometry morphometry{};
  std::vector<CalibrationProbe> probes;
};

/// Bisection on the applied potential until the lesion cross-section area is
/// within `tol` mm^2 of the target. Throws "calibration bracket failed" when
/// the target lies outside the areas at the bracket ends.
CalibrationResult calibrate_vp(double target_area_mm2, const SimulationRequest& setup, double tol,
                               double v_low = 1.0, double v_high = 200.0);

struct ResultSummary {
  double lesion_volume_mm3 = 0.0;
  double tumor_coverage_dice = 0.0;
  double healthy_ablated_mm3 = 0.0;
  double peak_temp_c = 0.0;
  double v_applied = 0.0;
};

ResultSummary summarize(const SimulationResult& result, const LabelVolume& labels);

void to_json(nlohmann::json& j, const ResultSummary& s);
nlohmann::json diagnostics_json(const Diagnostics& d);

}  // namespace rfa
