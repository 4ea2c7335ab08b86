#pragma once

#include <vector>

#include "rfa/grid.hpp"

namespace rfa {

struct BioheatConfig {
  double dt = 0.1;            // s
  double duration = 180.0;    // s
  double t_init = 37.0;       // degC, initial tissue temperature
  double t_boundary = 37.0;   // degC, held on the outer voxel shell
  BloodProperties blood{};
  bool record_snapshots = false;
  int snapshot_every = 10;    // steps between snapshots when recording
  int threads = 0;            // 0 = OpenMP default

  /// dt > 0, duration >= dt, finite temperatures.
  void validate() const;
  int step_count() const;

  /// Breast defaults: 37 degC tissue, blood and shell.
  static BioheatConfig breast();
  /// Ex vivo liver: 20 degC start and shell.
  static BioheatConfig liver();
};

/// Largest stable time step of the explicit conduction update,
/// ds^2 * min(rho c) / (6 max k) with ds the finest spacing in metres.
/// Infinite when k == 0 everywhere.
double stable_dt_limit(const MaterialFields& props);

/// Throws "unstable dt" unless cfg.dt < stable_dt_limit(props).
void check_stability(const BioheatConfig& cfg, const MaterialFields& props);

/// One explicit Pennes update: voxel-local k times the 7-point Laplacian,
/// perfusion rho_b c_b omega_b (T_b - T), metabolic and resistive sources.
/// Outer-shell voxels are set to cfg.t_boundary.
ScalarVolume step(const ScalarVolume& temperature, const MaterialFields& props, const ScalarVolume& q_r,
                  const BioheatConfig& cfg);

/// Precomputed per-voxel coefficients for repeated stepping on fixed
/// materials and sources. advance() reads `current` and writes `next`.
class BioheatStepper {
 public:
  BioheatStepper(const MaterialFields& props, const ScalarVolume& q_r, const BioheatConfig& cfg);

  /// Returns false if any updated value is non-finite.
  bool advance(const ScalarVolume& current, ScalarVolume& next) const;

  const GridSpec& spec() const { return spec_; }

  /// Upper bound on the temperature reachable after `seconds`: the hottest
  /// of the initial/held/blood temperatures plus the largest source heating
  /// rate times elapsed time.
  double temperature_bound(double seconds) const;

 private:
  GridSpec spec_;
  BioheatConfig cfg_;
  std::vector<double> diffusivity_dt_;  // dt k / (rho c)
  std::vector<double> perfusion_dt_;    // dt rho_b c_b omega_b / (rho c)
  std::vector<double> source_dt_;       // dt (rho_b c_b omega_b T_b + Q_m + Q_r) / (rho c)
  double max_source_rate_ = 0.0;        // max (Q_m + Q_r) / (rho c), K/s
  int threads_ = 1;
};

struct Trajectory {
  ScalarVolume final_temperature;
  std::vector<ScalarVolume> snapshots;
  std::vector<double> snapshot_times;  // s
  int steps = 0;
};

/// Integrates cfg.duration / cfg.dt steps from a uniform cfg.t_init field.
/// Throws "unstable dt" or "divergence".
Trajectory integrate(const MaterialFields& props, const ScalarVolume& q_r, const BioheatConfig& cfg);

/// Same, assigning materials from labels; blood constants come from the table.
Trajectory integrate(const LabelVolume& labels, const MaterialTable& table, const ScalarVolume& q_r,
                     BioheatConfig cfg);

}  // namespace rfa
