#pragma once

#include "rfa/grid.hpp"

namespace rfa {

/// First-order Arrhenius damage constants.
struct ArrheniusParams {
  double frequency_factor = 1.18e44;  // A, 1/s
  double activation_energy = 3.02e5;  // E_a, J/mol
  double gas_constant = 8.3134;       // R, J/mol/K
  double threshold = 1.0;             // necrosis where damage > threshold

  void validate() const;
};

inline constexpr double kCelsiusToKelvin = 273.15;

/// Damage rate A exp(-E_a / (R T)) for a temperature in degC, 1/s. Exponents
/// below -700 and non-positive absolute temperatures contribute exactly 0.
double damage_rate(double temperature_c, const ArrheniusParams& p);

/// psi + dt * rate(T), voxelwise (left-endpoint rule). Throws "invalid dt".
ScalarVolume accumulate(const ScalarVolume& psi, const ScalarVolume& temperature_c, double dt,
                        const ArrheniusParams& p);

/// In-place variant used inside the time loop.
void accumulate_inplace(ScalarVolume& psi, const ScalarVolume& temperature_c, double dt, const ArrheniusParams& p,
                        int threads = 0);

/// 1 where psi > threshold (strict).
Mask classify(const ScalarVolume& psi, const ArrheniusParams& p);

}  // namespace rfa
