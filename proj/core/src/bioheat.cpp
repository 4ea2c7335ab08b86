#include "rfa/bioheat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rfa/parallel.hpp"

namespace rfa {

namespace {

constexpr double kMmToM = 1e-3;

void require_same_grid(const MaterialFields& props, const ScalarVolume& a, const ScalarVolume& b) {
  const auto& spec = props.spec();
  for (const ScalarVolume* v : {&props.rho, &props.c, &props.k, &props.omega_b, &props.q_m, &a, &b})
    if (v->spec() != spec || v->size() != spec.count()) throw invalid_argument("grid mismatch");
}

}  // namespace

void BioheatConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw invalid_argument("dt must be > 0");
  if (!(duration >= dt) || !std::isfinite(duration)) throw invalid_argument("duration must be >= dt");
  if (!std::isfinite(t_init) || !std::isfinite(t_boundary) || !std::isfinite(blood.temperature))
    throw invalid_argument("temperatures must be finite");
  if (snapshot_every < 1) throw invalid_argument("snapshot_every must be >= 1");
}

int BioheatConfig::step_count() const { return static_cast<int>(std::lround(duration / dt)); }

BioheatConfig BioheatConfig::breast() { return BioheatConfig{}; }

BioheatConfig BioheatConfig::liver() {
  BioheatConfig cfg;
  cfg.t_init = 20.0;
  cfg.t_boundary = 20.0;
  return cfg;
}

double stable_dt_limit(const MaterialFields& props) {
  const auto& spec = props.spec();
  const double ds = std::min({spec.spacing.x, spec.spacing.y, spec.spacing.z}) * kMmToM;
  double min_rho_c = std::numeric_limits<double>::infinity();
  double max_k = 0.0;
  for (std::size_t n = 0; n < props.rho.size(); ++n) {
    min_rho_c = std::min(min_rho_c, props.rho[n] * props.c[n]);
    max_k = std::max(max_k, props.k[n]);
  }
  if (max_k <= 0.0) return std::numeric_limits<double>::infinity();
  return ds * ds * min_rho_c / (6.0 * max_k);
}

void check_stability(const BioheatConfig& cfg, const MaterialFields& props) {
  if (!(cfg.dt < stable_dt_limit(props))) throw invalid_argument("unstable dt");
}

BioheatStepper::BioheatStepper(const MaterialFields& props, const ScalarVolume& q_r, const BioheatConfig& cfg)
    : spec_(props.spec()), cfg_(cfg), threads_(resolve_threads(cfg.threads)) {
  cfg.validate();
  require_same_grid(props, q_r, props.sigma);
  check_stability(cfg, props);
  const std::size_t n = spec_.count();
  diffusivity_dt_.resize(n);
  perfusion_dt_.resize(n);
  source_dt_.resize(n);
  const double blood_rc = cfg.blood.rho * cfg.blood.c;
  for (std::size_t v = 0; v < n; ++v) {
    const double rho_c = props.rho[v] * props.c[v];
    const double perf = blood_rc * props.omega_b[v];
    diffusivity_dt_[v] = cfg.dt * props.k[v] / rho_c;
    perfusion_dt_[v] = cfg.dt * perf / rho_c;
    source_dt_[v] = cfg.dt * (perf * cfg.blood.temperature + props.q_m[v] + q_r[v]) / rho_c;
    max_source_rate_ = std::max(max_source_rate_, (props.q_m[v] + q_r[v]) / rho_c);
  }
}

bool BioheatStepper::advance(const ScalarVolume& current, ScalarVolume& next) const {
  const int nx = spec_.dims[0], ny = spec_.dims[1], nz = spec_.dims[2];
  const std::size_t sy = static_cast<std::size_t>(nx), sz = static_cast<std::size_t>(nx) * ny;
  const double hx = spec_.spacing.x * kMmToM, hy = spec_.spacing.y * kMmToM, hz = spec_.spacing.z * kMmToM;
  const double wx = 1.0 / (hx * hx), wy = 1.0 / (hy * hy), wz = 1.0 / (hz * hz);
  const double* t = current.values().data();
  double* out = next.values().data();
  const double* kap = diffusivity_dt_.data();
  const double* perf = perfusion_dt_.data();
  const double* src = source_dt_.data();
  const double held = cfg_.t_boundary;
  int bad = 0;

#pragma omp parallel for schedule(static) num_threads(threads_) reduction(| : bad)
  for (int k = 0; k < nz; ++k) {
    for (int j = 0; j < ny; ++j) {
      const std::size_t row = static_cast<std::size_t>(k) * sz + static_cast<std::size_t>(j) * sy;
      if (k == 0 || k == nz - 1 || j == 0 || j == ny - 1) {
        for (int i = 0; i < nx; ++i) out[row + i] = held;
        continue;
      }
      out[row] = held;
      out[row + nx - 1] = held;
      for (std::size_t v = row + 1; v < row + nx - 1; ++v) {
        const double tc = t[v];
        const double lap = wx * ((t[v + 1] - tc) - (tc - t[v - 1])) + wy * ((t[v + sy] - tc) - (tc - t[v - sy])) +
                           wz * ((t[v + sz] - tc) - (tc - t[v - sz]));
        const double value = tc + kap[v] * lap - perf[v] * tc + src[v];
        out[v] = value;
        bad |= !std::isfinite(value);
      }
    }
  }
  return bad == 0;
}

double BioheatStepper::temperature_bound(double seconds) const {
  const double base = std::max({cfg_.t_init, cfg_.t_boundary, cfg_.blood.temperature});
  return base + seconds * max_source_rate_;
}

ScalarVolume step(const ScalarVolume& temperature, const MaterialFields& props, const ScalarVolume& q_r,
                  const BioheatConfig& cfg) {
  if (temperature.spec() != props.spec()) throw invalid_argument("grid mismatch");
  for (double v : temperature.values())
    if (!std::isfinite(v)) throw invalid_argument("temperature must be finite");
  const BioheatStepper stepper(props, q_r, cfg);
  ScalarVolume next(temperature.spec());
  if (!stepper.advance(temperature, next)) throw Error(ErrorKind::kSolver, "divergence");
  return next;
}

Trajectory integrate(const MaterialFields& props, const ScalarVolume& q_r, const BioheatConfig& cfg) {
  const BioheatStepper stepper(props, q_r, cfg);
  const int steps = cfg.step_count();
  ScalarVolume current(props.spec(), cfg.t_init);
  ScalarVolume next(props.spec());
  Trajectory traj;
  for (int s = 1; s <= steps; ++s) {
    if (!stepper.advance(current, next)) throw Error(ErrorKind::kSolver, "divergence");
    std::swap(current, next);
    if (cfg.record_snapshots && s % cfg.snapshot_every == 0) {
      traj.snapshots.push_back(current);
      traj.snapshot_times.push_back(s * cfg.dt);
    }
  }
  const double bound = stepper.temperature_bound(steps * cfg.dt);
  const double peak = *std::max_element(current.values().begin(), current.values().end());
  if (peak > bound + 1e-9 * std::max(1.0, std::abs(bound))) throw Error(ErrorKind::kSolver, "divergence");
  traj.final_temperature = std::move(current);
  traj.steps = steps;
  return traj;
}

Trajectory integrate(const LabelVolume& labels, const MaterialTable& table, const ScalarVolume& q_r,
                     BioheatConfig cfg) {
  cfg.blood = table.blood;
  return integrate(assign_materials(labels, table), q_r, cfg);
}

}  // namespace rfa
