#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "rfa/error.hpp"
#include "rfa/service.hpp"
#include "rfa/version.hpp"

namespace {

void add_engine_options(CLI::App* cmd, rfa::cli::EngineOptions& e) {
  cmd->add_option("--config", e.config_path, "Engine config JSON (preset plus overrides)");
  cmd->add_option("--preset", e.preset, "Material preset")->check(CLI::IsMember({"breast", "liver"}));
  cmd->add_option("--vp", e.vp, "Applied potential (V)");
  cmd->add_option("--threads", e.threads, "Kernel threads (0 = default, capped by RFA_THREADS)");
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = rfa::cli;
  CLI::App app{"RFA thermal engine"};
  app.set_version_flag("--version", std::string(rfa::kEngineVersion));
  app.require_subcommand(1);

  nlohmann::json args = nlohmann::json::array();
  for (int i = 0; i < argc; ++i) args.push_back(argv[i]);

  cli::SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Run one simulation");
  add_engine_options(sim_cmd, sim.engine);
  sim_cmd->add_option("--volume", sim.volume, "Label container; default is a homogeneous 41^3 block");
  sim_cmd->add_option("--pose", sim.pose, "Pose JSON; default is the centered tip along +z");
  sim_cmd->add_option("--out", sim.out, "Output directory")->required();

  cli::CalibrateOptions cal;
  auto* cal_cmd = app.add_subcommand("calibrate", "Bisect the applied potential for a target lesion area");
  add_engine_options(cal_cmd, cal.engine);
  cal_cmd->add_option("--target-area", cal.target_area, "Target cross-section area (mm^2)");
  cal_cmd->add_option("--tol", cal.tol, "Accepted area error (mm^2)");
  cal_cmd->add_option("--v-low", cal.v_low, "Bracket low end (V)");
  cal_cmd->add_option("--v-high", cal.v_high, "Bracket high end (V)");
  cal_cmd->add_option("--out", cal.out, "Output directory");

  cli::GenDataOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a simulation dataset");
  add_engine_options(gen_cmd, gen.engine);
  gen_cmd->add_option("--tumors", gen.tumors, "Synthetic tumor count");
  gen_cmd->add_option("--per-tumor", gen.per_tumor, "Placements per tumor");
  gen_cmd->add_option("--seed", gen.seed, "Seed");
  gen_cmd->add_option("--out", gen.out, "Dataset directory")->required();
  gen_cmd->add_option("--import-dir", gen.import_dir, "Use label containers from this directory instead of phantoms");
  gen_cmd->add_option("--replay", gen.replay, "Regenerate from a dataset manifest");
  gen_cmd->add_option("--workers", gen.workers, "Worker count (0 = default)");
  gen_cmd->add_option("--retries", gen.retries, "Pose resamples per failed sample");

  cli::SplitOptions spl;
  auto* split_cmd = app.add_subcommand("split", "Write train/val/test splits for a dataset");
  split_cmd->add_option("--manifest", spl.manifest, "Dataset manifest.json")->required();
  split_cmd->add_option("--seed", spl.seed, "Seed");
  split_cmd->add_option("--unforeseen-tumors", spl.unforeseen_tumors, "Tumors held out entirely");
  split_cmd->add_option("--out", spl.out, "Split file; default splits.json next to the manifest");

  cli::EvaluateOptions ev;
  auto* ev_cmd = app.add_subcommand("evaluate", "Compare predicted and reference volumes");
  ev_cmd->add_option("--pred-dir", ev.pred_dir, "Predictions")->required();
  ev_cmd->add_option("--truth-dir", ev.truth_dir, "References")->required();
  ev_cmd->add_option("--kind", ev.kind, "lesion or temp")->check(CLI::IsMember({"lesion", "temp"}));
  ev_cmd->add_option("--out", ev.out, "Output directory");

  cli::BenchOptions b;
  auto* bench_cmd = app.add_subcommand("bench", "Time the simulation pipeline");
  add_engine_options(bench_cmd, b.engine);
  bench_cmd->add_option("--grid", b.grid, "Grid edge length (voxels)");
  bench_cmd->add_option("--steps", b.steps, "Bioheat steps");
  bench_cmd->add_option("--repeat", b.repeat, "Timed repetitions")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--warmup", b.warmup, "Untimed repetitions");
  bench_cmd->add_option("--assert-budget", b.assert_budget_ms, "Fail unless p50 total <= this many ms");
  bench_cmd->add_option("--out", b.out, "Output directory");

  cli::ServeOptions srv;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_cmd->add_option("--config", srv.config, "Service config JSON");
  serve_cmd->add_option("--port", srv.port, "Port override (0 = any free port)");
  serve_cmd->add_option("--listen", srv.listen, "Listen address override");
  serve_cmd->add_option("--out", srv.out, "Directory for the run manifest");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kOk : cli::kValidation;
  }

  try {
    if (*sim_cmd) return cli::simulate(sim, args);
    if (*cal_cmd) return cli::calibrate(cal, args);
    if (*gen_cmd) return cli::gen_data(gen, args);
    if (*split_cmd) return cli::split(spl, args);
    if (*ev_cmd) return cli::evaluate(ev, args);
    if (*bench_cmd) return cli::bench(b, args);
    if (*serve_cmd) return cli::serve(srv, args);
  } catch (const rfa::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == rfa::ErrorKind::kSolver ? cli::kSolver : cli::kValidation;
  } catch (const rfa::PortInUse& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kPortInUse;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kValidation;
  }
  return cli::kValidation;
}
