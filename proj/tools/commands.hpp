#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace rfa::cli {

enum ExitCode : int {
  kOk = 0,
  kBudgetExceeded = 1,
  kValidation = 2,
  kSolver = 3,
  kPortInUse = 4,
};

struct EngineOptions {
  std::string config_path;
  std::string preset = "breast";
  std::optional<double> vp;
  int threads = 0;
};

struct SimulateOptions {
  EngineOptions engine;
  std::string volume;
  std::string pose;
  std::string out;
};

struct CalibrateOptions {
  EngineOptions engine;
  double target_area = 261.0;
  double tol = 2.0;
  double v_low = 1.0;
  double v_high = 200.0;
  std::string out = ".";
};

struct GenDataOptions {
  EngineOptions engine;
  int tumors = 13;
  int per_tumor = 500;
  std::uint64_t seed = 0;
  std::string out;
  std::string import_dir;
  std::string replay;
  int workers = 0;
  int retries = 3;
};

struct SplitOptions {
  std::string manifest;
  std::uint64_t seed = 0;
  int unforeseen_tumors = 2;
  std::string out;
};

struct EvaluateOptions {
  std::string pred_dir;
  std::string truth_dir;
  std::string kind = "lesion";
  std::string out = ".";
};

struct BenchOptions {
  EngineOptions engine;
  int grid = 41;
  int steps = 1800;
  int repeat = 5;
  int warmup = 0;
  std::optional<double> assert_budget_ms;
  std::string out = ".";
};

struct ServeOptions {
  std::string config;
  std::optional<int> port;
  std::string listen;
  std::string out = ".";
};

/// Each command prints JSON lines to stdout, a human summary to stderr, and
/// writes rfa_run.json (command, argv, resolved config) into its out dir.
int simulate(const SimulateOptions& o, const nlohmann::json& argv);
int calibrate(const CalibrateOptions& o, const nlohmann::json& argv);
int gen_data(const GenDataOptions& o, const nlohmann::json& argv);
int split(const SplitOptions& o, const nlohmann::json& argv);
int evaluate(const EvaluateOptions& o, const nlohmann::json& argv);
int bench(const BenchOptions& o, const nlohmann::json& argv);
int serve(const ServeOptions& o, const nlohmann::json& argv);

}  // namespace rfa::cli
