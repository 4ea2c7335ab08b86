// One PASS/FAIL line per primary acceptance criterion. Exit status is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rfa/dataset.hpp"
#include "rfa/electrode.hpp"
#include "rfa/metrics.hpp"
#include "rfa/necrosis.hpp"
#include "rfa/simulator.hpp"
#include "rfa/volume_io.hpp"
#include "support.hpp"

namespace rfa {
namespace {

using Clock = std::chrono::steady_clock;
using testing::cube;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

class Verdict {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  void note(const std::string& fact) { notes_.push_back(fact); }
  bool ok() const { return failures_.empty(); }
  std::string detail() const {
    std::ostringstream out;
    const auto& items = failures_.empty() ? notes_ : failures_;
    for (std::size_t n = 0; n < items.size(); ++n) out << (n ? "; " : "") << items[n];
    return out.str();
  }

 private:
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

std::string fmt(const char* f, double v) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Mask center_voxel(const GridSpec& g) {
  Mask m(g);
  m(g.dims[0] / 2, g.dims[1] / 2, g.dims[2] / 2) = 1;
  return m;
}

MaterialFields uniform_fields(const GridSpec& g, const TissueProperties& p) {
  return {ScalarVolume(g, p.sigma), ScalarVolume(g, p.rho),     ScalarVolume(g, p.c),
          ScalarVolume(g, p.k),     ScalarVolume(g, p.omega_b), ScalarVolume(g, p.q_m)};
}

void liver_morphometry(Verdict& v) {
  const auto t0 = Clock::now();
  const auto setup = liver_validation_request(1.0);
  const auto cal = calibrate_vp(261.0, setup, 2.0, 1.0, 200.0);
  auto req = setup;
  req.pose.v_applied = cal.v_applied;
  const auto m = morphometry(run(req).lesion, section_plane(req));
  const double elapsed = seconds_since(t0);
  v.require(std::abs(m.horizontal_mm - 20.0) <= 1.0, fmt("horizontal %.1f mm", m.horizontal_mm));
  v.require(std::abs(m.vertical_mm - 16.0) <= 1.0, fmt("vertical %.1f mm", m.vertical_mm));
  v.require(std::abs(m.area_mm2 - 261.0) <= 10.0, fmt("area %.1f mm^2", m.area_mm2));
  v.require(elapsed <= 120.0, fmt("runtime %.1f s", elapsed));
  v.note(fmt("V=%.6f", cal.v_applied) + fmt(" horizontal %.0f", m.horizontal_mm) + fmt(" vertical %.0f", m.vertical_mm) +
         fmt(" area %.0f", m.area_mm2) + fmt(" in %.1f s", elapsed));
}

void electrostatics_oracle(Verdict& v) {
  const auto t0 = Clock::now();
  double dense_err = 0.0;
  {
    auto p = grounded_electrode_problem(ScalarVolume(cube(9), 1.0), center_voxel(cube(9)), 1.0);
    p.solver_tol = 1e-12;
    dense_err = testing::max_abs_diff(solve_potential(p).potential, testing::dense_solve(p));
  }
  CounterRng rng(91);
  for (int trial = 0; trial < 20; ++trial) {
    GridSpec g = cube(9);
    g.spacing = {0.5 + rng.uniform(), 0.5 + rng.uniform(), 0.5 + rng.uniform()};
    const auto sigma = testing::random_field(g, rng, 0.1, 5.0);
    Mask electrode(g);
    for (int s = 0; s < 4; ++s) electrode(1 + rng.below(7), 1 + rng.below(7), 1 + rng.below(7)) = 1;
    auto p = grounded_electrode_problem(sigma, electrode, 10.0 * rng.uniform());
    p.solver_tol = 1e-13;
    dense_err = std::max(dense_err, testing::max_abs_diff(solve_potential(p).potential, testing::dense_solve(p)));
  }
  v.require(dense_err <= 1e-8, fmt("dense max-norm %.2e", dense_err));

  const GridSpec g = standard_grid();
  PotentialProblem lin{ScalarVolume(g, 0.7), Mask(g), ScalarVolume(g)};
  for (int k = 0; k < 41; ++k)
    for (int j = 0; j < 41; ++j) {
      lin.dirichlet(0, j, k) = 1;
      lin.dirichlet_values(0, j, k) = 1.0;
      lin.dirichlet(40, j, k) = 1;
    }
  lin.solver_tol = 1e-12;
  const auto sol = solve_potential(lin);
  double lin_err = 0.0;
  for (int k = 0; k < 41; ++k)
    for (int j = 0; j < 41; ++j)
      for (int i = 0; i < 41; ++i) lin_err = std::max(lin_err, std::abs(sol.potential(i, j, k) - (1.0 - i / 40.0)));
  v.require(lin_err <= 1e-8, fmt("linear max-norm %.2e", lin_err));

  const auto req = liver_validation_request();
  const auto fields = assign_materials(req.labels, req.table);
  const auto electrode = rasterize(req.pose, g);
  const auto p = grounded_electrode_problem(fields.sigma, electrode, req.pose.v_applied);
  const auto phi = solve_potential(p).potential;
  Mask shell(g);
  for (std::size_t n = 0; n < shell.size(); ++n) shell[n] = p.dirichlet[n] && !electrode[n];
  const double out = net_current(p, phi, electrode), in = -net_current(p, phi, shell);
  const double rel = std::abs(out - in) / std::abs(out);
  v.require(out > 0.0 && rel <= 1e-6, fmt("current residual %.2e", rel));
  const double elapsed = seconds_since(t0);
  v.require(elapsed <= 60.0, fmt("runtime %.1f s", elapsed));
  v.note(fmt("dense %.1e", dense_err) + fmt(" linear %.1e", lin_err) + fmt(" current %.1e", rel) +
         fmt(" in %.1f s", elapsed));
}

void bioheat_correctness(Verdict& v) {
  {
    const GridSpec g = cube(9);
    TissueProperties p = MaterialTable::breast().find(0).value();
    p.q_m = 0.0;
    const auto out = step(ScalarVolume(g, 37.0), uniform_fields(g, p), ScalarVolume(g), BioheatConfig::breast());
    double err = 0.0;
    for (double t : out.values()) err = std::max(err, std::abs(t - 37.0));
    v.require(err == 0.0, fmt("equilibrium drift %.2e", err));
  }
  {
    const GridSpec g = cube(7);
    const auto m = uniform_fields(g, {1.0, 1000, 4000, 0.0, 0.0, 0.0});
    BioheatConfig cfg;
    cfg.dt = 0.5;
    const ScalarVolume q(g, 0.1 * 1000 * 4000 / 0.5);
    const auto out = step(ScalarVolume(g, 37.0), m, q, cfg);
    double err = 0.0;
    for (int k = 0; k < 7; ++k)
      for (int j = 0; j < 7; ++j)
        for (int i = 0; i < 7; ++i)
          err = std::max(err, std::abs(out(i, j, k) - (testing::on_shell(g, i, j, k) ? 37.0 : 37.1)));
    v.require(err <= 1e-12, fmt("source-only error %.2e", err));
  }
  {
    auto req = liver_validation_request();
    const auto coarse = run(req).temperature;
    req.bioheat.dt = 0.05;
    const auto fine = run(req).temperature;
    const double gap = testing::max_abs_diff(coarse, fine);
    v.require(gap < 0.05, fmt("dt-halving gap %.4f C", gap));
    v.note(fmt("dt-halving gap %.4f C", gap));
  }
  {
    const GridSpec g = cube(5);
    const auto m = uniform_fields(g, {0.4, 1000, 4000, 0.5, 0.0, 0.0});
    const double limit = 1e-6 * 4e6 / (6 * 0.5);
    auto rejected = [&](double dt) {
      BioheatConfig cfg;
      cfg.dt = dt;
      cfg.duration = dt;
      try {
        step(ScalarVolume(g, 37.0), m, ScalarVolume(g), cfg);
      } catch (const Error& e) {
        return e.message() == "unstable dt";
      }
      return false;
    };
    v.require(rejected(limit) && rejected(1.5 * limit), "guard accepts dt >= limit");
    v.require(!rejected(0.99 * limit), "guard rejects dt below limit");
  }
}

double integrate_trajectory(const std::vector<double>& temps, std::size_t begin, std::size_t end, double psi0 = 0.0) {
  ScalarVolume psi(cube(3), psi0);
  for (std::size_t s = begin; s < end; ++s) accumulate_inplace(psi, ScalarVolume(cube(3), temps[s]), 0.1, {}, 1);
  return psi[13];
}

std::vector<double> random_trajectory(CounterRng& rng, int steps) {
  std::vector<double> t(steps);
  double x = 37.0;
  for (auto& s : t) s = x = std::clamp(x + 6.0 * (rng.uniform() - 0.45), 20.0, 110.0);
  return t;
}

void arrhenius_properties(Verdict& v) {
  const ArrheniusParams p;
  double worst = 0.0;
  for (double t = 40.0; t <= 110.0; t += 5.0) {
    const double want = testing::closed_form_rate(t);
    worst = std::max(worst, std::abs(damage_rate(t, p) - want) / want);
    const auto psi = accumulate(ScalarVolume(cube(3)), ScalarVolume(cube(3), t), 1.0, p);
    worst = std::max(worst, std::abs(psi[0] - want) / want);
  }
  v.require(worst <= 1e-9, fmt("closed-form relative error %.2e", worst));

  CounterRng rng(5);
  int monotone_failures = 0, additive_failures = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto temps = random_trajectory(rng, 200);
    std::vector<double> hotter = temps;
    for (auto& t : hotter) t += 1.0 + 4.0 * rng.uniform();
    ScalarVolume psi(cube(3));
    double prev = 0.0;
    bool ok = true;
    for (double t : temps) {
      accumulate_inplace(psi, ScalarVolume(cube(3), t), 0.1, p, 1);
      ok = ok && psi[0] >= prev;
      prev = psi[0];
    }
    ok = ok && integrate_trajectory(hotter, 0, hotter.size()) > integrate_trajectory(temps, 0, temps.size());
    monotone_failures += !ok;

    const std::size_t cut = 1 + rng.below(temps.size() - 2);
    const double whole = integrate_trajectory(temps, 0, temps.size());
    const double first = integrate_trajectory(temps, 0, cut);
    const double second = integrate_trajectory(temps, cut, temps.size());
    const bool additive = integrate_trajectory(temps, cut, temps.size(), first) == whole &&
                          std::abs(first + second - whole) <= 1e-12 * std::max(1.0, whole);
    additive_failures += !additive;
  }
  v.require(monotone_failures == 0, std::to_string(monotone_failures) + " monotonicity failures");
  v.require(additive_failures == 0, std::to_string(additive_failures) + " additivity failures");

  ScalarVolume at50(cube(3)), at70(cube(3));
  for (int s = 0; s < 1800; ++s) {
    accumulate_inplace(at50, ScalarVolume(cube(3), 50.0), 0.1, p, 1);
    accumulate_inplace(at70, ScalarVolume(cube(3), 70.0), 0.1, p, 1);
  }
  v.require(at50[0] < 1.0, fmt("psi(50 C, 180 s) = %.3g", at50[0]));
  v.require(at70[0] > 1.0, fmt("psi(70 C, 180 s) = %.3g", at70[0]));
  v.note(fmt("rel %.1e", worst) + fmt(" psi50 %.3g", at50[0]) + fmt(" psi70 %.3g", at70[0]));
}

void metrics_oracle(Verdict& v) {
  CounterRng rng(2025);
  int mismatches = 0;
  double identity = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    GridSpec g = cube(9);
    if (trial % 2) g.spacing = {0.5 + rng.uniform(), 0.5 + rng.uniform(), 0.5 + rng.uniform()};
    const double pa = 0.02 + 0.5 * rng.uniform(), pb = 0.02 + 0.5 * rng.uniform();
    const auto a = testing::random_nonempty_mask(g, rng, pa);
    const auto b = testing::random_nonempty_mask(g, rng, pb);
    const auto c = testing::count(a, b);
    mismatches += dice(a, b) != 2.0 * c.both / (c.a + c.b);
    mismatches += jaccard(a, b) != c.both / c.either;
    mismatches += hausdorff(a, b) != testing::brute_hausdorff(a, b);
    const double j = jaccard(a, b);
    identity = std::max(identity, std::abs(dice(a, b) - 2.0 * j / (1.0 + j)));
  }
  v.require(mismatches == 0, std::to_string(mismatches) + " oracle mismatches");
  v.require(identity <= 1e-12, fmt("Dice-Jaccard identity gap %.2e", identity));

  auto keys = [](const nlohmann::json& j) {
    std::set<std::string> out;
    for (const auto& [k, _] : j.items()) out.insert(k);
    return out;
  };
  v.require(keys(lesion_report({})) == std::set<std::string>{"Dice", "Jaccard", "Hausdorff"}, "lesion report columns");
  v.require(keys(temp_report({})) == std::set<std::string>{"RMSE", "MAE", "Dice>40", "Dice>50"}, "temperature report columns");
  v.note("200 pairs exact" + fmt(", identity gap %.1e", identity));
}

std::map<std::string, std::string> file_tree(const std::filesystem::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[std::filesystem::relative(e.path(), root).string()] = read_file(e.path());
  return files;
}

void dataset_determinism(Verdict& v) {
  testing::TempDir first("accept-a"), second("accept-b");
  GenerateOptions opts;
  opts.engine = EngineConfig::breast();
  opts.engine.bioheat.duration = 5.0;
  opts.engine.v_applied = 60.0;
  opts.workers = 2;
  generate_dataset(first.path(), synth_tumors(3, 21), 2, 99, opts);
  regenerate_dataset(read_json_file(first / "manifest.json"), second.path(), 1);
  const auto a = file_tree(first.path()), b = file_tree(second.path());
  v.require(a == b, "regenerated tree differs");

  CounterRng rng(1000);
  int round_trip_failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    GridSpec g;
    g.dims = {3 + static_cast<int>(rng.below(10)), 3 + static_cast<int>(rng.below(10)), 3 + static_cast<int>(rng.below(10))};
    for (int ax = 0; ax < 3; ++ax) {
      g.spacing[ax] = static_cast<float>(0.25 + 2.0 * rng.uniform());
      g.origin[ax] = static_cast<float>(100.0 * (rng.uniform() - 0.5));
    }
    if (trial % 2) {
      ScalarVolume vol(g);
      for (auto& x : vol.values()) {
        const auto bits = static_cast<std::uint32_t>(rng.next_u64());
        float f;
        std::memcpy(&f, &bits, 4);
        x = std::isfinite(f) ? f : 0.0f;
      }
      const auto bytes = encode_volume(vol);
      const auto back = decode_f32_volume(bytes);
      round_trip_failures += !(back.spec() == g && back == vol && encode_volume(back) == bytes);
    } else {
      Volume<std::uint8_t> vol(g);
      for (auto& x : vol.values()) x = static_cast<std::uint8_t>(rng.below(256));
      const auto bytes = encode_volume(vol);
      const auto back = decode_u8_volume(bytes);
      round_trip_failures += !(back == vol && encode_volume(back) == bytes);
    }
  }
  v.require(round_trip_failures == 0, std::to_string(round_trip_failures) + " container round-trip failures");

  int leaks = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int tumors = 3 + static_cast<int>(rng.below(10));
    std::vector<SampleRef> refs;
    std::map<std::string, std::string> tumor_of;
    for (int t = 0; t < tumors; ++t)
      for (int s = 0, n = 5 + static_cast<int>(rng.below(40)); s < n; ++s) {
        const std::string tumor = "T" + std::to_string(t), id = tumor + "-" + std::to_string(s);
        refs.push_back({id, tumor});
        tumor_of[id] = tumor;
      }
    SplitConfig cfg;
    cfg.unforeseen_tumors = 1 + static_cast<int>(rng.below(tumors - 1));
    const auto m = make_splits(refs, cfg, rng.next_u64());
    const std::set<std::string> held(m.unforeseen_tumors.begin(), m.unforeseen_tumors.end());
    for (const auto* list : {&m.train, &m.val, &m.test_foreseen})
      for (const auto& id : *list) leaks += held.count(tumor_of.at(id)) > 0;
    for (const auto& id : m.test_unforeseen) leaks += held.count(tumor_of.at(id)) == 0;
  }
  v.require(leaks == 0, std::to_string(leaks) + " split leaks");
  v.note(std::to_string(a.size()) + " files identical, 1000 round trips, 50 splits disjoint");
}

void performance_budget(Verdict& v) {
  const auto req = liver_validation_request();
  run(req);
  std::vector<double> totals;
  double worst_gap = 0.0;
  for (int r = 0; r < 5; ++r) {
    const auto d = run(req).diagnostics;
    double sum = 0.0;
    for (const auto& s : d.stages) sum += s.ms;
    worst_gap = std::max(worst_gap, std::abs(sum - d.total_ms) / d.total_ms);
    totals.push_back(d.total_ms);
    if (d.steps != 1800) v.require(false, "step count " + std::to_string(d.steps));
  }
  std::sort(totals.begin(), totals.end());
  const double p50 = totals[totals.size() / 2];
  v.require(p50 <= 2000.0, fmt("p50 %.0f ms", p50));
  v.require(worst_gap <= 0.05, fmt("stage sum gap %.3f", worst_gap));
  v.note(fmt("p50 %.0f ms", p50) + fmt(", stage sum gap %.4f", worst_gap));
}

}  // namespace
}  // namespace rfa

int main() {
  const std::vector<std::pair<const char*, std::function<void(rfa::Verdict&)>>> criteria = {
      {"liver-morphometry", rfa::liver_morphometry},     {"electrostatics-oracle", rfa::electrostatics_oracle},
      {"bioheat-correctness", rfa::bioheat_correctness}, {"arrhenius-properties", rfa::arrhenius_properties},
      {"metrics-oracle", rfa::metrics_oracle},           {"dataset-determinism", rfa::dataset_determinism},
      {"performance-budget", rfa::performance_budget},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    rfa::Verdict v;
    try {
      check(v);
    } catch (const std::exception& e) {
      v.require(false, std::string("threw: ") + e.what());
    }
    std::printf("%s %s :: %s\n", v.ok() ? "PASS" : "FAIL", name, v.detail().c_str());
    std::fflush(stdout);
    failed += !v.ok();
  }
  return failed;
}
