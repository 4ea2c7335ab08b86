#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rfa/config.hpp"
#include "rfa/electrode.hpp"
#include "rfa/grid.hpp"

namespace rfa {

enum class PhantomKind { kBall, kEllipsoid, kLobulated };

std::string to_string(PhantomKind kind);
PhantomKind phantom_kind_from_string(const std::string& name);

struct PhantomParams {
  PhantomKind kind = PhantomKind::kBall;
  double radius_mm = 9.0;           // ball
  Vec3 axes_mm{20.0, 16.0, 12.0};   // ellipsoid, full axis lengths
  double target_volume_mm3 = 0.0;   // lobulated; <= 0 draws from the tumor population
  GridSpec grid = standard_grid();
};

/// Tumor volume population (mm^3): mean and standard deviation of segmented
/// breast tumors, sampled log-normally and clipped to what fits the grid.
inline constexpr double kTumorVolumeMean = 3021.0;
inline constexpr double kTumorVolumeSd = 2789.0;
inline constexpr double kTumorVolumeMin = 300.0;
inline constexpr double kTumorVolumeMax = 12000.0;

/// Connected tumor phantom centered in the grid. Lobulated phantoms are the
/// union of 3-7 balls whose centers lie inside the main lobe.
/// Throws "empty phantom" if nothing is rasterized.
LabelVolume synth_tumor(const PhantomParams& params, std::uint64_t seed);

double draw_tumor_volume(CounterRng& rng);

struct TumorSource {
  std::string id;
  std::string kind;  // phantom kind or "imported"
  std::uint64_t seed = 0;
  std::string path;  // source file for imported tumors
  LabelVolume labels;
};

/// `count` synthetic tumors T01, T02, ... cycling lobulated/ellipsoid/ball
/// with volumes drawn from the population.
std::vector<TumorSource> synth_tumors(int count, std::uint64_t seed);

/// Loads a label container and crops it to the 40 mm field of view.
TumorSource import_tumor(const std::filesystem::path& path, const std::string& id);

struct SampleProvenance {
  std::string tumor_id;
  int index = 0;
  std::uint64_t seed = 0;
  std::string engine_version;
  double v_applied = 0.0;
  int attempts = 1;
};

struct Sample {
  Mask tumor_mask;
  Mask electrode_mask;
  Mask lesion_mask;
  ScalarVolume temperature;  // degC at the end of the run
  ElectrodePose pose;
  SampleProvenance provenance;

  std::string id() const;
};

struct SampleOutcome {
  std::string id;
  std::string tumor;
  int index = 0;
  bool ok = false;
  int attempts = 0;
  std::string reason;  // last failure, empty on first-try success
};

struct GenerateOptions {
  EngineConfig engine{};
  int workers = 0;   // 0 = resolve_threads()
  int retries = 3;   // resampled poses per failed sample
};

using SampleSink = std::function<void(Sample&&)>;

/// Samples `per_tumor` placements for each tumor and simulates them. Output
/// depends only on (tumors, per_tumor, seed, engine config). The sink is
/// called serially, in unspecified order. Outcomes are in (tumor, index)
/// order. Throws "invalid count" for per_tumor < 1 or no tumors.
std::vector<SampleOutcome> generate(const std::vector<TumorSource>& tumors, int per_tumor, std::uint64_t seed,
                                    const GenerateOptions& options, const SampleSink& sink);

/// samples/<tumor>/<idx>/{tumor,elec,lesion,temp}.rfav + pose.json
std::filesystem::path sample_dir(const std::filesystem::path& root, const std::string& tumor, int index);
void write_sample(const std::filesystem::path& root, const Sample& sample);
Sample read_sample(const std::filesystem::path& dir);

/// Generates a dataset directory with manifest.json; returns the manifest.
nlohmann::json generate_dataset(const std::filesystem::path& root, const std::vector<TumorSource>& tumors,
                                int per_tumor, std::uint64_t seed, const GenerateOptions& options);

/// Rebuilds tumors and samples from a manifest into `root`.
nlohmann::json regenerate_dataset(const nlohmann::json& manifest, const std::filesystem::path& root, int workers = 0);

struct SampleRef {
  std::string id;
  std::string tumor;
};

/// Sample ids and tumors of the successful samples of a dataset manifest.
std::vector<SampleRef> manifest_samples(const nlohmann::json& manifest);

/// Proportions default to 5500 foreseen samples -> 500 test / 5000 train,
/// 200 of train for validation, and half of the unforeseen tumors' samples
/// (1000 -> 500) as the unforeseen test set.
struct SplitConfig {
  int unforeseen_tumors = 2;
  double test_foreseen_fraction = 500.0 / 5500.0;
  double val_fraction = 200.0 / 5000.0;
  double unforeseen_fraction = 500.0 / 1000.0;
};

struct SplitManifest {
  std::uint64_t seed = 0;
  std::vector<std::string> foreseen_tumors;
  std::vector<std::string> unforeseen_tumors;
  std::vector<std::string> train;  // includes val
  std::vector<std::string> val;    // subset of train
  std::vector<std::string> test_foreseen;
  std::vector<std::string> test_unforeseen;
};

/// Tumor-level exclusion for the unforeseen set, random sample-level split of
/// the rest. Throws "insufficient tumors" with fewer than unforeseen_tumors + 1.
SplitManifest make_splits(const std::vector<SampleRef>& samples, const SplitConfig& cfg, std::uint64_t seed);

void to_json(nlohmann::json& j, const SplitManifest& m);
void from_json(const nlohmann::json& j, SplitManifest& m);

}  // namespace rfa
