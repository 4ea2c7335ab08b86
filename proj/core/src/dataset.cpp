#include "rfa/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <numbers>
#include <set>
#include <thread>

#include "rfa/parallel.hpp"
#include "rfa/rng.hpp"
#include "rfa/simulator.hpp"
#include "rfa/version.hpp"
#include "rfa/volume_io.hpp"

namespace rfa {

namespace {

constexpr double kFovMm = 40.0;
// Phantoms stay this far (mm) inside the grid faces.
constexpr double kPhantomMargin = 2.0;

Vec3 grid_center(const GridSpec& g) {
  return 0.5 * (g.origin + g.extent_max_mm());
}

double max_phantom_reach(const GridSpec& g) {
  const Vec3 half = 0.5 * (g.extent_max_mm() - g.origin);
  return std::min({half.x, half.y, half.z}) - kPhantomMargin;
}

template <class Inside>
LabelVolume rasterize_phantom(const GridSpec& g, Inside&& inside) {
  LabelVolume out(g, to_label(Tissue::kNormal));
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i)
        if (inside(g.center_mm(i, j, k))) out(i, j, k) = to_label(Tissue::kTumor);
  return out;
}

struct Lobe {
  Vec3 offset;  // relative to the main lobe center, in main-radius units
  double radius;
};

LabelVolume lobulated(const PhantomParams& p, CounterRng& rng) {
  const double target = p.target_volume_mm3 > 0 ? p.target_volume_mm3 : draw_tumor_volume(rng);
  const int count = 3 + static_cast<int>(rng.below(5));
  std::vector<Lobe> lobes{{Vec3{}, 1.0}};
  for (int n = 1; n < count; ++n) {
    const double dist = 0.3 + 0.55 * rng.uniform();
    const double radius = 0.45 + 0.4 * rng.uniform();
    lobes.push_back({dist * random_direction(rng), radius});
  }
  double reach = 0.0;
  for (const auto& l : lobes) reach = std::max(reach, norm(l.offset) + l.radius);

  const Vec3 c = grid_center(p.grid);
  auto build = [&](double scale) {
    return rasterize_phantom(p.grid, [&](Vec3 x) {
      for (const auto& l : lobes)
        if (norm(x - (c + scale * l.offset)) <= scale * l.radius) return true;
      return false;
    });
  };
  // Voxel count grows with scale; bisect for the target volume.
  double lo = 0.5, hi = max_phantom_reach(p.grid) / reach;
  const double voxel = p.grid.voxel_volume_mm3();
  if (static_cast<double>(count_label(build(hi), Tissue::kTumor)) * voxel <= target) return build(hi);
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double v = static_cast<double>(count_label(build(mid), Tissue::kTumor)) * voxel;
    (v < target ? lo : hi) = mid;
  }
  return build(hi);
}

std::string tumor_name(int t) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "T%02d", t + 1);
  return buf;
}

std::string sample_name(const std::string& tumor, int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", index);
  return tumor + "/" + buf;
}

std::uint64_t placement_seed(std::uint64_t seed, std::size_t tumor) {
  return CounterRng(seed).derive(1000 + tumor).next_u64();
}

std::uint64_t retry_seed(std::uint64_t seed, std::size_t tumor, int index, int attempt) {
  return CounterRng(seed).derive(tumor).derive(static_cast<std::uint64_t>(index)).derive(
      static_cast<std::uint64_t>(attempt)).next_u64();
}

template <class T>
void shuffle(std::vector<T>& items, CounterRng& rng) {
  for (std::size_t n = items.size(); n > 1; --n) std::swap(items[n - 1], items[rng.below(n)]);
}

std::size_t rounded_share(std::size_t n, double fraction) {
  return std::min(n, static_cast<std::size_t>(std::llround(static_cast<double>(n) * fraction)));
}

LabelVolume synth_from_seed(const std::string& kind, std::uint64_t seed) {
  CounterRng rng(seed);
  PhantomParams p;
  p.kind = phantom_kind_from_string(kind);
  const double volume = draw_tumor_volume(rng);
  const double reach = max_phantom_reach(p.grid);
  switch (p.kind) {
    case PhantomKind::kBall:
      p.radius_mm = std::min(reach, std::cbrt(3.0 * volume / (4.0 * std::numbers::pi)));
      break;
    case PhantomKind::kEllipsoid: {
      const Vec3 aspect{1.0, 0.6 + 0.4 * rng.uniform(), 0.6 + 0.4 * rng.uniform()};
      const double unit = 4.0 / 3.0 * std::numbers::pi * aspect.x * aspect.y * aspect.z;
      const double a = std::cbrt(volume / unit);
      for (int ax = 0; ax < 3; ++ax) p.axes_mm[ax] = 2.0 * std::min(reach, a * aspect[ax]);
      break;
    }
    case PhantomKind::kLobulated:
      p.target_volume_mm3 = volume;
      break;
  }
  return synth_tumor(p, rng.next_u64());
}

}  // namespace

std::string to_string(PhantomKind kind) {
  switch (kind) {
    case PhantomKind::kBall:
      return "ball";
    case PhantomKind::kEllipsoid:
      return "ellipsoid";
    case PhantomKind::kLobulated:
      return "lobulated";
  }
  return "unknown";
}

PhantomKind phantom_kind_from_string(const std::string& name) {
  if (name == "ball") return PhantomKind::kBall;
  if (name == "ellipsoid") return PhantomKind::kEllipsoid;
  if (name == "lobulated") return PhantomKind::kLobulated;
  throw invalid_argument("unknown phantom kind '" + name + "'");
}

double draw_tumor_volume(CounterRng& rng) {
  const double s2 = std::log1p((kTumorVolumeSd / kTumorVolumeMean) * (kTumorVolumeSd / kTumorVolumeMean));
  const double mu = std::log(kTumorVolumeMean) - 0.5 * s2;
  return std::clamp(std::exp(mu + std::sqrt(s2) * rng.normal()), kTumorVolumeMin, kTumorVolumeMax);
}

LabelVolume synth_tumor(const PhantomParams& params, std::uint64_t seed) {
  params.grid.validate();
  const Vec3 c = grid_center(params.grid);
  CounterRng rng(seed);
  LabelVolume out;
  switch (params.kind) {
    case PhantomKind::kBall: {
      const double r = params.radius_mm;
      out = rasterize_phantom(params.grid, [&](Vec3 x) { return norm(x - c) <= r; });
      break;
    }
    case PhantomKind::kEllipsoid: {
      const Vec3 semi = 0.5 * params.axes_mm;
      if (!(semi.x > 0 && semi.y > 0 && semi.z > 0)) throw invalid_argument("ellipsoid axes must be > 0");
      out = rasterize_phantom(params.grid, [&](Vec3 x) {
        const Vec3 d = x - c;
        return (d.x / semi.x) * (d.x / semi.x) + (d.y / semi.y) * (d.y / semi.y) + (d.z / semi.z) * (d.z / semi.z) <=
               1.0;
      });
      break;
    }
    case PhantomKind::kLobulated:
      out = lobulated(params, rng);
      break;
  }
  if (count_label(out, Tissue::kTumor) == 0) throw invalid_argument("empty phantom");
  return out;
}

std::vector<TumorSource> synth_tumors(int count, std::uint64_t seed) {
  if (count < 1) throw invalid_argument("invalid count");
  static constexpr const char* kKinds[] = {"lobulated", "ellipsoid", "ball"};
  std::vector<TumorSource> out;
  for (int t = 0; t < count; ++t) {
    TumorSource src;
    src.id = tumor_name(t);
    src.kind = kKinds[t % 3];
    src.seed = CounterRng(seed).derive(static_cast<std::uint64_t>(t)).next_u64();
    src.labels = synth_from_seed(src.kind, src.seed);
    out.push_back(std::move(src));
  }
  return out;
}

TumorSource import_tumor(const std::filesystem::path& path, const std::string& id) {
  auto labels = read_u8_volume(path);
  validate_labels(labels);
  TumorSource src;
  src.id = id;
  src.kind = "imported";
  src.path = path.string();
  src.labels = crop_to_fov(labels, Vec3{kFovMm, kFovMm, kFovMm});
  return src;
}

std::string Sample::id() const { return sample_name(provenance.tumor_id, provenance.index); }

std::vector<SampleOutcome> generate(const std::vector<TumorSource>& tumors, int per_tumor, std::uint64_t seed,
                                    const GenerateOptions& options, const SampleSink& sink) {
  if (per_tumor < 1 || tumors.empty()) throw invalid_argument("invalid count");
  const auto& engine = options.engine;
  const PlacementOptions placement{engine.tip_length, engine.tip_radius, engine.v_applied};

  struct Task {
    std::size_t tumor;
    int index;
    std::optional<ElectrodePose> pose;
    std::string placement_error;
  };
  std::vector<Task> tasks;
  for (std::size_t t = 0; t < tumors.size(); ++t) {
    std::vector<ElectrodePose> poses;
    std::string error;
    try {
      poses = sample_placements(tumors[t].labels, per_tumor, placement_seed(seed, t), placement);
    } catch (const Error& e) {
      error = e.message();
    }
    for (int i = 0; i < per_tumor; ++i)
      tasks.push_back({t, i, poses.empty() ? std::nullopt : std::optional(poses[static_cast<std::size_t>(i)]), error});
  }

  std::vector<SampleOutcome> outcomes(tasks.size());
  const int workers = std::max(1, std::min<int>(resolve_threads(options.workers), static_cast<int>(tasks.size())));
  const int inner_threads = workers > 1 ? 1 : 0;
  std::atomic<std::size_t> next{0};
  std::mutex sink_mutex;

  auto work = [&] {
    for (std::size_t n = next++; n < tasks.size(); n = next++) {
      const auto& task = tasks[n];
      const auto& tumor = tumors[task.tumor];
      auto& outcome = outcomes[n];
      outcome.tumor = tumor.id;
      outcome.index = task.index;
      outcome.id = sample_name(tumor.id, task.index);
      if (!task.pose) {
        outcome.reason = task.placement_error;
        continue;
      }
      std::optional<ElectrodePose> pose = task.pose;
      for (int attempt = 0; attempt <= options.retries && !outcome.ok; ++attempt) {
        outcome.attempts = attempt + 1;
        try {
          if (attempt > 0)
            pose = sample_placements(tumor.labels, 1, retry_seed(seed, task.tumor, task.index, attempt), placement)[0];
          auto req = engine.request(tumor.labels, *pose);
          req.threads = inner_threads;
          auto result = run(req);
          Sample s{label_mask(tumor.labels, Tissue::kTumor),
                   std::move(result.electrode),
                   std::move(result.lesion),
                   std::move(result.temperature),
                   *pose,
                   {tumor.id, task.index, placement_seed(seed, task.tumor), kEngineVersion, engine.v_applied,
                    attempt + 1}};
          {
            std::lock_guard lock(sink_mutex);
            sink(std::move(s));
          }
          outcome.ok = true;
        } catch (const Error& e) {
          outcome.reason = e.what();
        }
      }
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return outcomes;
}

std::filesystem::path sample_dir(const std::filesystem::path& root, const std::string& tumor, int index) {
  return root / "samples" / sample_name(tumor, index);
}

void write_sample(const std::filesystem::path& root, const Sample& sample) {
  const auto dir = sample_dir(root, sample.provenance.tumor_id, sample.provenance.index);
  write_volume(dir / "tumor.rfav", sample.tumor_mask);
  write_volume(dir / "elec.rfav", sample.electrode_mask);
  write_volume(dir / "lesion.rfav", sample.lesion_mask);
  write_volume(dir / "temp.rfav", sample.temperature);
  const auto& p = sample.provenance;
  nlohmann::json meta = {{"pose", sample.pose},
                         {"provenance",
                          {{"tumor", p.tumor_id},
                           {"index", p.index},
                           {"seed", p.seed},
                           {"engine_version", p.engine_version},
                           {"v_applied", p.v_applied},
                           {"attempts", p.attempts}}}};
  write_file_atomic(dir / "pose.json", meta.dump(2) + "\n");
}

Sample read_sample(const std::filesystem::path& dir) {
  Sample s;
  s.tumor_mask = read_u8_volume(dir / "tumor.rfav");
  s.electrode_mask = read_u8_volume(dir / "elec.rfav");
  s.lesion_mask = read_u8_volume(dir / "lesion.rfav");
  s.temperature = read_f32_volume(dir / "temp.rfav");
  const auto meta = read_json_file(dir / "pose.json");
  s.pose = meta.at("pose").get<ElectrodePose>();
  const auto& p = meta.at("provenance");
  s.provenance = {p.at("tumor").get<std::string>(), p.at("index").get<int>(), p.at("seed").get<std::uint64_t>(),
                  p.at("engine_version").get<std::string>(), p.at("v_applied").get<double>(),
                  p.value("attempts", 1)};
  return s;
}

nlohmann::json generate_dataset(const std::filesystem::path& root, const std::vector<TumorSource>& tumors,
                                int per_tumor, std::uint64_t seed, const GenerateOptions& options) {
  nlohmann::json tumor_list = nlohmann::json::array();
  for (const auto& t : tumors) {
    write_volume(root / "tumors" / (t.id + ".rfav"), t.labels);
    tumor_list.push_back({{"id", t.id},
                          {"kind", t.kind},
                          {"seed", t.seed},
                          {"path", t.path},
                          {"tumor_voxels", count_label(t.labels, Tissue::kTumor)}});
  }
  const auto outcomes = generate(tumors, per_tumor, seed, options, [&](Sample&& s) { write_sample(root, s); });
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& o : outcomes)
    samples.push_back({{"id", o.id}, {"tumor", o.tumor}, {"index", o.index}, {"ok", o.ok},
                       {"attempts", o.attempts}, {"reason", o.reason}});
  nlohmann::json manifest = {{"format", "rfa-dataset/1"},
                             {"engine_version", kEngineVersion},
                             {"rng", CounterRng::kAlgorithm},
                             {"seed", seed},
                             {"per_tumor", per_tumor},
                             {"retries", options.retries},
                             {"engine", options.engine},
                             {"tumors", tumor_list},
                             {"samples", samples}};
  write_file_atomic(root / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

nlohmann::json regenerate_dataset(const nlohmann::json& manifest, const std::filesystem::path& root, int workers) {
  try {
    if (manifest.at("engine_version").get<std::string>() != kEngineVersion)
      throw invalid_argument("manifest engine version " + manifest.at("engine_version").get<std::string>() +
                             " differs from " + kEngineVersion);
    std::vector<TumorSource> tumors;
    for (const auto& t : manifest.at("tumors")) {
      const auto kind = t.at("kind").get<std::string>();
      const auto id = t.at("id").get<std::string>();
      if (kind == "imported") {
        tumors.push_back(import_tumor(t.at("path").get<std::string>(), id));
      } else {
        TumorSource src;
        src.id = id;
        src.kind = kind;
        src.seed = t.at("seed").get<std::uint64_t>();
        src.labels = synth_from_seed(kind, src.seed);
        tumors.push_back(std::move(src));
      }
    }
    GenerateOptions options;
    options.engine = manifest.at("engine").get<EngineConfig>();
    options.retries = manifest.value("retries", options.retries);
    options.workers = workers;
    return generate_dataset(root, tumors, manifest.at("per_tumor").get<int>(), manifest.at("seed").get<std::uint64_t>(),
                            options);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kFormat, std::string("invalid dataset manifest: ") + e.what());
  }
}

std::vector<SampleRef> manifest_samples(const nlohmann::json& manifest) {
  std::vector<SampleRef> out;
  for (const auto& s : manifest.at("samples"))
    if (s.value("ok", false)) out.push_back({s.at("id").get<std::string>(), s.at("tumor").get<std::string>()});
  return out;
}

SplitManifest make_splits(const std::vector<SampleRef>& samples, const SplitConfig& cfg, std::uint64_t seed) {
  std::map<std::string, std::vector<std::string>> by_tumor;
  for (const auto& s : samples) by_tumor[s.tumor].push_back(s.id);
  if (cfg.unforeseen_tumors < 1 || static_cast<int>(by_tumor.size()) < cfg.unforeseen_tumors + 1)
    throw invalid_argument("insufficient tumors");

  CounterRng rng(seed);
  std::vector<std::string> tumors;
  for (const auto& [t, _] : by_tumor) tumors.push_back(t);
  shuffle(tumors, rng);

  SplitManifest m;
  m.seed = seed;
  m.unforeseen_tumors.assign(tumors.begin(), tumors.begin() + cfg.unforeseen_tumors);
  m.foreseen_tumors.assign(tumors.begin() + cfg.unforeseen_tumors, tumors.end());
  std::sort(m.unforeseen_tumors.begin(), m.unforeseen_tumors.end());
  std::sort(m.foreseen_tumors.begin(), m.foreseen_tumors.end());

  std::vector<std::string> foreseen, unforeseen;
  for (const auto& t : m.foreseen_tumors) foreseen.insert(foreseen.end(), by_tumor[t].begin(), by_tumor[t].end());
  for (const auto& t : m.unforeseen_tumors)
    unforeseen.insert(unforeseen.end(), by_tumor[t].begin(), by_tumor[t].end());
  std::sort(foreseen.begin(), foreseen.end());
  std::sort(unforeseen.begin(), unforeseen.end());
  shuffle(foreseen, rng);
  shuffle(unforeseen, rng);

  const std::size_t n_test = rounded_share(foreseen.size(), cfg.test_foreseen_fraction);
  m.test_foreseen.assign(foreseen.begin(), foreseen.begin() + static_cast<std::ptrdiff_t>(n_test));
  m.train.assign(foreseen.begin() + static_cast<std::ptrdiff_t>(n_test), foreseen.end());
  const std::size_t n_val = rounded_share(m.train.size(), cfg.val_fraction);
  m.val.assign(m.train.begin(), m.train.begin() + static_cast<std::ptrdiff_t>(n_val));
  const std::size_t n_unforeseen = rounded_share(unforeseen.size(), cfg.unforeseen_fraction);
  m.test_unforeseen.assign(unforeseen.begin(), unforeseen.begin() + static_cast<std::ptrdiff_t>(n_unforeseen));
  for (auto* list : {&m.train, &m.val, &m.test_foreseen, &m.test_unforeseen}) std::sort(list->begin(), list->end());
  return m;
}

void to_json(nlohmann::json& j, const SplitManifest& m) {
  j = {{"seed", m.seed},
       {"foreseen_tumors", m.foreseen_tumors},
       {"unforeseen_tumors", m.unforeseen_tumors},
       {"train", m.train},
       {"val", m.val},
       {"test_foreseen", m.test_foreseen},
       {"test_unforeseen", m.test_unforeseen}};
}

void from_json(const nlohmann::json& j, SplitManifest& m) {
  m.seed = j.at("seed").get<std::uint64_t>();
  j.at("foreseen_tumors").get_to(m.foreseen_tumors);
  j.at("unforeseen_tumors").get_to(m.unforeseen_tumors);
  j.at("train").get_to(m.train);
  j.at("val").get_to(m.val);
  j.at("test_foreseen").get_to(m.test_foreseen);
  j.at("test_unforeseen").get_to(m.test_unforeseen);
}

}  // namespace rfa
