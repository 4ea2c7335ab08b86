#include "rfa/necrosis.hpp"

#include <cmath>

#include "rfa/parallel.hpp"

namespace rfa {

namespace {
constexpr double kExponentFloor = -700.0;
}

void ArrheniusParams::validate() const {
  if (!(frequency_factor > 0 && activation_energy > 0 && gas_constant > 0))
    throw invalid_argument("Arrhenius A, E_a and R must be > 0");
}

double damage_rate(double temperature_c, const ArrheniusParams& p) {
  const double kelvin = temperature_c + kCelsiusToKelvin;
  if (!(kelvin > 0.0)) return 0.0;
  const double exponent = std::log(p.frequency_factor) - p.activation_energy / (p.gas_constant * kelvin);
  if (exponent < kExponentFloor) return 0.0;
  return std::exp(exponent);
}

void accumulate_inplace(ScalarVolume& psi, const ScalarVolume& temperature_c, double dt, const ArrheniusParams& p,
                        int threads) {
  if (!(dt >= 0.0)) throw invalid_argument("invalid dt");
  if (psi.spec() != temperature_c.spec() || psi.size() != temperature_c.size()) throw invalid_argument("grid mismatch");
  const double log_a = std::log(p.frequency_factor);
  const double e_over_r = p.activation_energy / p.gas_constant;
  double* out = psi.values().data();
  const double* t = temperature_c.values().data();
  const auto n = static_cast<std::ptrdiff_t>(psi.size());
#pragma omp parallel for schedule(static) num_threads(resolve_threads(threads))
  for (std::ptrdiff_t v = 0; v < n; ++v) {
    const double kelvin = t[v] + kCelsiusToKelvin;
    const double exponent = log_a - e_over_r / kelvin;
    if (kelvin > 0.0 && exponent >= kExponentFloor) out[v] += dt * std::exp(exponent);
  }
}

ScalarVolume accumulate(const ScalarVolume& psi, const ScalarVolume& temperature_c, double dt,
                        const ArrheniusParams& p) {
  ScalarVolume out = psi;
  accumulate_inplace(out, temperature_c, dt, p);
  return out;
}

Mask classify(const ScalarVolume& psi, const ArrheniusParams& p) {
  Mask mask(psi.spec());
  for (std::size_t v = 0; v < psi.size(); ++v) mask[v] = psi[v] > p.threshold ? 1 : 0;
  return mask;
}

}  // namespace rfa
