#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <pthread.h>
#include <thread>

#include "rfa/config.hpp"
#include "rfa/dataset.hpp"
#include "rfa/metrics.hpp"
#include "rfa/parallel.hpp"
#include "rfa/rng.hpp"
#include "rfa/service.hpp"
#include "rfa/simulator.hpp"
#include "rfa/version.hpp"
#include "rfa/volume_io.hpp"

namespace rfa::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void emit(const json& record) { std::cout << record.dump() << "\n" << std::flush; }

EngineConfig resolve_engine(const EngineOptions& o) {
  EngineConfig c = EngineConfig::from_preset(o.preset);
  if (!o.config_path.empty()) {
    const json file = read_json_file(o.config_path);
    c = apply_overrides(EngineConfig::from_preset(file.value("preset", o.preset)), file);
  }
  if (o.vp) c = apply_overrides(c, {{"v_applied", *o.vp}});
  return c;
}

void write_run_manifest(const fs::path& dir, const std::string& command, const json& argv, json details) {
  details["command"] = command;
  details["argv"] = argv;
  details["engine_version"] = kEngineVersion;
  details["threads"] = resolve_threads();
  write_file_atomic(dir / "rfa_run.json", details.dump(2) + "\n");
}

ElectrodePose centered_pose(const GridSpec& spec, const EngineConfig& engine) {
  ElectrodePose pose;
  pose.center = spec.center_mm(spec.dims[0] / 2, spec.dims[1] / 2, spec.dims[2] / 2);
  pose.tip_length = engine.tip_length;
  pose.tip_radius = engine.tip_radius;
  pose.v_applied = engine.v_applied;
  return pose;
}

double percentile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
  return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

std::vector<fs::path> files_named(const fs::path& root, const std::string& name) {
  std::vector<fs::path> out;
  if (!fs::is_directory(root)) throw Error(ErrorKind::kNotFound, "not a directory: " + root.string());
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file() && e.path().filename() == name) out.push_back(fs::relative(e.path(), root));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

int simulate(const SimulateOptions& o, const json& argv) {
  const EngineConfig engine = resolve_engine(o.engine);
  const LabelVolume labels =
      o.volume.empty() ? LabelVolume(standard_grid(), to_label(Tissue::kNormal)) : read_u8_volume(o.volume);
  validate_labels(labels);
  ElectrodePose pose = centered_pose(labels.spec(), engine);
  if (!o.pose.empty()) {
    json j = read_json_file(o.pose);
    if (j.contains("pose")) j = json(j.at("pose"));
    try {
      pose = j.get<ElectrodePose>();
    } catch (const json::exception& e) {
      throw invalid_argument(std::string("invalid pose: ") + e.what());
    }
    if (!j.contains("tip_length")) pose.tip_length = engine.tip_length;
    if (!j.contains("tip_radius")) pose.tip_radius = engine.tip_radius;
    if (!j.contains("v_applied") || o.engine.vp) pose.v_applied = engine.v_applied;
  }

  auto req = engine.request(labels, pose);
  req.threads = o.engine.threads;
  const auto result = run(req);
  const auto summary = summarize(result, labels);

  const fs::path out = o.out;
  write_volume(out / "lesion.rfav", result.lesion);
  write_volume(out / "temp.rfav", result.temperature);
  write_volume(out / "damage.rfav", result.damage);
  write_volume(out / "elec.rfav", result.electrode);
  json morph = nullptr;
  if (count_nonzero(result.lesion) > 0) morph = morphometry_report(morphometry(result.lesion, section_plane(req)));
  const json record = {{"summary", summary},
                       {"morphometry", morph},
                       {"pose", pose},
                       {"diagnostics", diagnostics_json(result.diagnostics)}};
  write_file_atomic(out / "summary.json", record.dump(2) + "\n");
  write_run_manifest(out, "simulate", argv, {{"config", engine}, {"volume", o.volume}, {"pose", pose}});
  emit(record);

  std::fprintf(stderr, "lesion %.0f mm^3  healthy %.0f mm^3  coverage dice %.3f  peak %.2f C  (%.0f ms)\n",
               summary.lesion_volume_mm3, summary.healthy_ablated_mm3, summary.tumor_coverage_dice,
               summary.peak_temp_c, result.diagnostics.total_ms);
  if (!morph.is_null())
    std::fprintf(stderr, "section: horizontal %.1f mm  vertical %.1f mm  area %.1f mm^2\n",
                 morph["horizontal_mm"].get<double>(), morph["vertical_mm"].get<double>(),
                 morph["area_mm2"].get<double>());
  return kOk;
}

int calibrate(const CalibrateOptions& o, const json& argv) {
  const EngineConfig engine = resolve_engine(o.engine);
  auto setup = liver_validation_request(o.v_low);
  setup.table = engine.table;
  setup.bioheat = engine.bioheat;
  setup.arrhenius = engine.arrhenius;
  setup.solver_tol = engine.solver_tol;
  setup.pose.tip_length = engine.tip_length;
  setup.pose.tip_radius = engine.tip_radius;
  setup.threads = o.engine.threads;

  const auto start = std::chrono::steady_clock::now();
  const auto cal = calibrate_vp(o.target_area, setup, o.tol, o.v_low, o.v_high);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json probes = json::array();
  for (const auto& p : cal.probes) {
    probes.push_back({{"v_applied", p.v_applied}, {"area_mm2", p.area_mm2}});
    std::fprintf(stderr, "  probe %10.6f V  area %7.1f mm^2\n", p.v_applied, p.area_mm2);
  }
  const json record = {{"target_area_mm2", o.target_area}, {"tol_mm2", o.tol},
                       {"v_applied", cal.v_applied},       {"area_mm2", cal.area_mm2},
                       {"morphometry", morphometry_report(cal.morphometry)},
                       {"probes", probes},                 {"seconds", seconds}};
  const fs::path out = o.out;
  fs::create_directories(out);
  write_file_atomic(out / "calibration.json", record.dump(2) + "\n");
  write_run_manifest(out, "calibrate", argv, {{"config", engine}, {"target_area_mm2", o.target_area}});
  emit(record);
  std::fprintf(stderr, "v_applied %.9g V  area %.1f mm^2  horizontal %.1f mm  vertical %.1f mm  (%.1f s)\n",
               cal.v_applied, cal.area_mm2, cal.morphometry.horizontal_mm, cal.morphometry.vertical_mm, seconds);
  return kOk;
}

int gen_data(const GenDataOptions& o, const json& argv) {
  const fs::path out = o.out;
  json manifest;
  if (!o.replay.empty()) {
    manifest = regenerate_dataset(read_json_file(o.replay), out, o.workers);
  } else {
    std::vector<TumorSource> tumors;
    if (!o.import_dir.empty()) {
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(o.import_dir))
        if (e.is_regular_file() && e.path().extension() == ".rfav") files.push_back(e.path());
      std::sort(files.begin(), files.end());
      if (files.empty()) throw invalid_argument("no .rfav files in " + o.import_dir);
      for (const auto& f : files) tumors.push_back(import_tumor(f, f.stem().string()));
    } else {
      tumors = synth_tumors(o.tumors, o.seed);
    }
    GenerateOptions options;
    options.engine = resolve_engine(o.engine);
    options.workers = o.workers;
    options.retries = o.retries;
    manifest = generate_dataset(out, tumors, o.per_tumor, o.seed, options);
  }
  write_run_manifest(out, "gen-data", argv, {{"config", manifest.at("engine")}, {"seed", manifest.at("seed")}});

  int ok = 0, failed = 0;
  for (const auto& s : manifest.at("samples")) {
    emit(s);
    (s.at("ok").get<bool>() ? ok : failed)++;
  }
  std::fprintf(stderr, "%zu tumors, %d samples written, %d failed -> %s\n", manifest.at("tumors").size(), ok,
               failed, out.string().c_str());
  return kOk;
}

int split(const SplitOptions& o, const json& argv) {
  const json manifest = read_json_file(o.manifest);
  SplitConfig cfg;
  cfg.unforeseen_tumors = o.unforeseen_tumors;
  const auto splits = make_splits(manifest_samples(manifest), cfg, o.seed);
  const fs::path out = o.out.empty() ? fs::path(o.manifest).parent_path() / "splits.json" : fs::path(o.out);
  write_file_atomic(out, json(splits).dump(2) + "\n");
  write_run_manifest(out.parent_path().empty() ? fs::path(".") : out.parent_path(), "split", argv,
                     {{"manifest", o.manifest}, {"seed", o.seed}, {"unforeseen_tumors", o.unforeseen_tumors}});
  emit({{"train", splits.train.size()},
        {"val", splits.val.size()},
        {"test_foreseen", splits.test_foreseen.size()},
        {"test_unforeseen", splits.test_unforeseen.size()},
        {"unforeseen_tumors", splits.unforeseen_tumors}});
  std::fprintf(stderr, "train %zu (val %zu)  test foreseen %zu  test unforeseen %zu\n", splits.train.size(),
               splits.val.size(), splits.test_foreseen.size(), splits.test_unforeseen.size());
  return kOk;
}

int evaluate(const EvaluateOptions& o, const json& argv) {
  const bool lesion = o.kind == "lesion";
  const std::string name = lesion ? "lesion.rfav" : "temp.rfav";
  const auto truths = files_named(o.truth_dir, name);
  if (truths.empty()) throw invalid_argument("no " + name + " under " + o.truth_dir);

  std::map<std::string, double> sums;
  std::map<std::string, int> counts;
  int undefined = 0;
  std::vector<json> rows;
  for (const auto& rel : truths) {
    const fs::path pred = fs::path(o.pred_dir) / rel;
    if (!fs::exists(pred)) throw invalid_argument("missing prediction " + pred.string());
    json row;
    if (lesion) {
      const auto t = read_u8_volume(fs::path(o.truth_dir) / rel);
      const auto p = read_u8_volume(pred);
      if (t.spec() != p.spec()) throw invalid_argument("shape mismatch for " + rel.string());
      row = {{"Dice", dice(p, t)}, {"Jaccard", jaccard(p, t)}, {"Hausdorff", nullptr}};
      const bool pe = count_nonzero(p) == 0, te = count_nonzero(t) == 0;
      if (pe && te)
        row["Hausdorff"] = 0.0;
      else if (!pe && !te)
        row["Hausdorff"] = hausdorff(p, t);
      else
        ++undefined;
    } else {
      const auto t = read_f32_volume(fs::path(o.truth_dir) / rel);
      const auto p = read_f32_volume(pred);
      if (t.spec() != p.spec()) throw invalid_argument("shape mismatch for " + rel.string());
      row = temp_report(temp_metrics(p, t));
    }
    for (const auto& [k, v] : row.items())
      if (v.is_number()) {
        sums[k] += v.get<double>();
        counts[k]++;
      }
    row["sample"] = rel.parent_path().generic_string();
    emit(row);
    rows.push_back(row);
  }

  json aggregate = {{"aggregate", true}, {"kind", o.kind}, {"n", truths.size()}};
  for (const auto& [k, s] : sums) aggregate[k] = s / counts[k];
  if (lesion) aggregate["Hausdorff_undefined"] = undefined;
  emit(aggregate);

  const fs::path out = o.out;
  fs::create_directories(out);
  std::string lines;
  for (const auto& r : rows) lines += r.dump() + "\n";
  lines += aggregate.dump() + "\n";
  write_file_atomic(out / ("evaluate_" + o.kind + ".jsonl"), lines);
  write_run_manifest(out, "evaluate", argv, {{"pred_dir", o.pred_dir}, {"truth_dir", o.truth_dir}, {"kind", o.kind}});

  std::fprintf(stderr, "%-10s", "n");
  for (const auto& [k, s] : sums) std::fprintf(stderr, "%12s", k.c_str());
  std::fprintf(stderr, "\n%-10zu", truths.size());
  for (const auto& [k, s] : sums) std::fprintf(stderr, "%12.4f", s / counts[k]);
  std::fprintf(stderr, "\n");
  return kOk;
}

int bench(const BenchOptions& o, const json& argv) {
  if (o.grid < 21) throw invalid_argument("grid must be >= 21");
  if (o.steps < 1) throw invalid_argument("steps must be >= 1");
  EngineConfig engine = resolve_engine(o.engine);
  engine.bioheat.duration = o.steps * engine.bioheat.dt;

  PhantomParams phantom;
  phantom.grid.dims = {o.grid, o.grid, o.grid};
  const auto labels = synth_tumor(phantom, 0);
  auto req = engine.request(labels, centered_pose(labels.spec(), engine));
  req.threads = o.engine.threads;

  for (int w = 0; w < o.warmup; ++w) run(req);
  std::vector<double> totals;
  std::map<std::string, std::vector<double>> stages;
  std::vector<std::string> order;
  double worst_gap = 0.0;
  for (int r = 0; r < o.repeat; ++r) {
    const auto d = run(req).diagnostics;
    json row = {{"repeat", r}, {"total_ms", d.total_ms}};
    double sum = 0.0;
    for (const auto& s : d.stages) {
      if (!stages.count(s.stage)) order.push_back(s.stage);
      stages[s.stage].push_back(s.ms);
      row["stages"][s.stage] = s.ms;
      sum += s.ms;
    }
    row["stage_sum_ms"] = sum;
    worst_gap = std::max(worst_gap, std::abs(sum - d.total_ms) / d.total_ms);
    totals.push_back(d.total_ms);
    emit(row);
  }

  json summary = {{"grid", o.grid},
                  {"steps", o.steps},
                  {"repeat", o.repeat},
                  {"threads", resolve_threads(o.engine.threads)},
                  {"p50_ms", percentile(totals, 0.5)},
                  {"p95_ms", percentile(totals, 0.95)},
                  {"stage_sum_max_rel_gap", worst_gap}};
  std::fprintf(stderr, "%-12s %10s %10s\n", "stage", "p50 ms", "p95 ms");
  for (const auto& name : order) {
    const double p50 = percentile(stages[name], 0.5), p95 = percentile(stages[name], 0.95);
    summary["stages"][name] = {{"p50_ms", p50}, {"p95_ms", p95}};
    std::fprintf(stderr, "%-12s %10.1f %10.1f\n", name.c_str(), p50, p95);
  }
  std::fprintf(stderr, "%-12s %10.1f %10.1f\n", "total", summary["p50_ms"].get<double>(),
               summary["p95_ms"].get<double>());

  int code = kOk;
  if (o.assert_budget_ms) {
    summary["budget_ms"] = *o.assert_budget_ms;
    summary["within_budget"] = summary["p50_ms"].get<double>() <= *o.assert_budget_ms;
    if (!summary["within_budget"].get<bool>()) {
      std::fprintf(stderr, "p50 %.1f ms exceeds budget %.1f ms\n", summary["p50_ms"].get<double>(),
                   *o.assert_budget_ms);
      code = kBudgetExceeded;
    }
  }
  emit(summary);
  const fs::path out = o.out;
  fs::create_directories(out);
  write_run_manifest(out, "bench", argv, {{"config", engine}, {"grid", o.grid}, {"steps", o.steps}});
  return code;
}

int serve(const ServeOptions& o, const json& argv) {
  ServiceConfig cfg = o.config.empty() ? ServiceConfig{} : ServiceConfig::load(o.config);
  if (o.port) cfg.port = *o.port;
  if (!o.listen.empty()) cfg.listen = o.listen;

  // Signals are taken synchronously by a watcher thread.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  Service service(cfg);
  HttpServer server(service, cfg.listen, cfg.port);
  server.bind();

  const fs::path out = o.out;
  fs::create_directories(out);
  json resolved = cfg;
  resolved["port"] = server.port();
  write_run_manifest(out, "serve", argv, {{"service", resolved}, {"config", service.engine()}});

  std::thread watcher([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  emit({{"event", "listening"}, {"listen", cfg.listen}, {"port", server.port()}});
  std::fprintf(stderr, "listening on %s:%d (pool %d)\n", cfg.listen.c_str(), server.port(),
               cfg.resolved_pool_size());
  server.run();
  pthread_kill(watcher.native_handle(), SIGTERM);
  watcher.join();
  return kOk;
}

}  // namespace rfa::cli
