#include "rfa/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "rfa/electrostatics.hpp"

namespace rfa {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

template <class F>
auto staged(const char* stage, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const Error& e) {
    if (!e.stage().empty()) throw;
    throw e.with_stage(stage);
  }
}

double area_at(const SimulationRequest& setup, double v) {
  SimulationRequest req = setup;
  req.pose.v_applied = v;
  const auto result = run(req);
  if (count_nonzero(result.lesion) == 0) return 0.0;
  return morphometry(result.lesion, section_plane(req)).area_mm2;
}

}  // namespace

double Diagnostics::stage_ms(const std::string& name) const {
  for (const auto& s : stages)
    if (s.stage == name) return s.ms;
  return 0.0;
}

SimulationResult run(const SimulationRequest& request) {
  const auto start = Clock::now();
  SimulationResult result;
  auto& diag = result.diagnostics;
  diag.v_applied = request.pose.v_applied;

  auto timed = [&](const char* stage, auto&& body) {
    const auto t0 = Clock::now();
    staged(stage, body);
    diag.stages.push_back({stage, elapsed_ms(t0)});
  };

  const auto& spec = request.labels.spec();
  LabelVolume labels = request.labels;
  timed("rasterize", [&] {
    validate_labels(request.labels);
    request.bioheat.validate();
    request.arrhenius.validate();
    result.electrode = rasterize(request.pose, spec);
    for (int k = 0; k < spec.dims[2]; ++k)
      for (int j = 0; j < spec.dims[1]; ++j)
        for (int i = 0; i < spec.dims[0]; ++i)
          if (result.electrode(i, j, k)) {
            if (spec.on_boundary(i, j, k)) throw invalid_argument("electrode out of bounds");
            labels(i, j, k) = to_label(Tissue::kElectrode);
          }
    diag.electrode_voxels = count_nonzero(result.electrode);
  });

  MaterialFields props;
  timed("materials", [&] { props = assign_materials(labels, request.table); });

  ScalarVolume potential;
  timed("potential", [&] {
    auto problem = grounded_electrode_problem(props.sigma, result.electrode, request.pose.v_applied);
    problem.solver_tol = request.solver_tol;
    problem.threads = request.threads;
    auto sol = solve_potential(problem);
    diag.cg_iterations = sol.iterations;
    diag.cg_residual = sol.residual;
    potential = std::move(sol.potential);
  });

  ScalarVolume q_r;
  timed("heat_source", [&] { q_r = heat_source(potential, props.sigma); });

  BioheatConfig cfg = request.bioheat;
  cfg.blood = request.table.blood;
  cfg.threads = request.threads;
  cfg.record_snapshots = false;

  double bioheat_ms = 0.0, damage_ms = 0.0;
  {
    const auto t0 = Clock::now();
    const BioheatStepper stepper = staged("bioheat", [&] { return BioheatStepper(props, q_r, cfg); });
    bioheat_ms += elapsed_ms(t0);
    ScalarVolume current(spec, cfg.t_init), next(spec);
    result.damage = ScalarVolume(spec, 0.0);
    const int steps = cfg.step_count();
    for (int s = 0; s < steps; ++s) {
      const auto td = Clock::now();
      // left endpoint: damage over [t, t + dt] uses T(t)
      accumulate_inplace(result.damage, current, cfg.dt, request.arrhenius, request.threads);
      const auto tb = Clock::now();
      damage_ms += std::chrono::duration<double, std::milli>(tb - td).count();
      if (!stepper.advance(current, next)) throw Error(ErrorKind::kSolver, "divergence", "bioheat");
      std::swap(current, next);
      bioheat_ms += elapsed_ms(tb);
    }
    const double bound = stepper.temperature_bound(steps * cfg.dt);
    const double peak = *std::max_element(current.values().begin(), current.values().end());
    if (peak > bound + 1e-9 * std::max(1.0, std::abs(bound)))
      throw Error(ErrorKind::kSolver, "divergence", "bioheat");
    diag.steps = steps;
    result.temperature = std::move(current);
  }
  diag.stages.push_back({"bioheat", bioheat_ms});
  diag.stages.push_back({"damage", damage_ms});

  timed("classify", [&] { result.lesion = classify(result.damage, request.arrhenius); });
  diag.total_ms = elapsed_ms(start);
  return result;
}

SimulationRequest liver_validation_request(double v_applied) {
  SimulationRequest req;
  req.labels = LabelVolume(standard_grid(), to_label(Tissue::kNormal));
  const auto& spec = req.labels.spec();
  req.pose.center = spec.center_mm(spec.dims[0] / 2, spec.dims[1] / 2, spec.dims[2] / 2);
  req.pose.direction = {0.0, 0.0, 1.0};
  req.pose.v_applied = v_applied;
  req.table = MaterialTable::liver();
  req.bioheat = BioheatConfig::liver();
  return req;
}

SectionPlane section_plane(const SimulationRequest& request) { return section_plane_for(request.pose.direction); }

CalibrationResult calibrate_vp(double target_area_mm2, const SimulationRequest& setup, double tol, double v_low,
                               double v_high) {
  if (!(target_area_mm2 >= 0.0) || !(tol > 0.0) || !(v_low < v_high)) throw invalid_argument("invalid calibration arguments");
  CalibrationResult out;
  auto probe = [&](double v) {
    const double a = area_at(setup, v);
    out.probes.push_back({v, a});
    return a;
  };
  auto accept = [&](double v) {
    SimulationRequest req = setup;
    req.pose.v_applied = v;
    const auto result = run(req);
    out.v_applied = v;
    if (count_nonzero(result.lesion) > 0) {
      out.morphometry = morphometry(result.lesion, section_plane(req));
      out.area_mm2 = out.morphometry.area_mm2;
    } else {
      out.area_mm2 = 0.0;
    }
    return out;
  };

  double lo = v_low, hi = v_high;
  const double area_lo = probe(lo);
  if (std::abs(area_lo - target_area_mm2) <= tol) return accept(lo);
  const double area_hi = probe(hi);
  if (std::abs(area_hi - target_area_mm2) <= tol) return accept(hi);
  if (area_lo > area_hi || target_area_mm2 < area_lo || target_area_mm2 > area_hi)
    throw invalid_argument("calibration bracket failed");

  double best_v = lo, best_gap = std::abs(area_lo - target_area_mm2);
  for (int it = 0; it < 60 && hi - lo > 1e-3; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double a = probe(mid);
    const double gap = std::abs(a - target_area_mm2);
    if (gap < best_gap) {
      best_gap = gap;
      best_v = mid;
    }
    if (gap <= tol) break;
    (a < target_area_mm2 ? lo : hi) = mid;
  }
  return accept(best_v);
}

ResultSummary summarize(const SimulationResult& result, const LabelVolume& labels) {
  const auto& spec = labels.spec();
  if (result.lesion.spec() != spec) throw invalid_argument("grid mismatch");
  const double voxel = spec.voxel_volume_mm3();
  ResultSummary s;
  std::size_t lesion = 0, healthy = 0;
  for (std::size_t v = 0; v < labels.size(); ++v) {
    if (!result.lesion[v]) continue;
    ++lesion;
    if (labels[v] == to_label(Tissue::kNormal) && !result.electrode[v]) ++healthy;
  }
  s.lesion_volume_mm3 = static_cast<double>(lesion) * voxel;
  s.healthy_ablated_mm3 = static_cast<double>(healthy) * voxel;
  s.tumor_coverage_dice = dice(result.lesion, label_mask(labels, Tissue::kTumor));
  s.peak_temp_c = *std::max_element(result.temperature.values().begin(), result.temperature.values().end());
  s.v_applied = result.diagnostics.v_applied;
  return s;
}

void to_json(nlohmann::json& j, const ResultSummary& s) {
  j = nlohmann::json{{"lesion_volume_mm3", s.lesion_volume_mm3},
                     {"tumor_coverage_dice", s.tumor_coverage_dice},
                     {"healthy_ablated_mm3", s.healthy_ablated_mm3},
                     {"peak_temp_C", s.peak_temp_c},
                     {"v_applied", s.v_applied}};
}

nlohmann::json diagnostics_json(const Diagnostics& d) {
  nlohmann::json stages = nlohmann::json::object();
  for (const auto& s : d.stages) stages[s.stage] = s.ms;
  return {{"cg_iterations", d.cg_iterations}, {"cg_residual", d.cg_residual},
          {"steps", d.steps},                 {"electrode_voxels", d.electrode_voxels},
          {"v_applied", d.v_applied},         {"stage_ms", stages},
          {"total_ms", d.total_ms}};
}

}  // namespace rfa
