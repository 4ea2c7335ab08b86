#include "rfa/electrode.hpp"

#include <algorithm>
#include <cmath>

namespace rfa {

namespace {

constexpr double kUnitTolerance = 1e-9;
constexpr double kBoundsSlack = 1e-9;

bool inside_box(Vec3 p, Vec3 lo, Vec3 hi) {
  for (int a = 0; a < 3; ++a)
    if (p[a] < lo[a] - kBoundsSlack || p[a] > hi[a] + kBoundsSlack) return false;
  return true;
}

}  // namespace

void ElectrodePose::validate() const {
  if (std::abs(norm(direction) - 1.0) > kUnitTolerance) throw invalid_argument("electrode direction must be a unit vector");
  if (!(tip_length > 0.0) || !(tip_radius > 0.0)) throw invalid_argument("tip length and radius must be > 0");
  for (int a = 0; a < 3; ++a)
    if (!std::isfinite(center[a])) throw invalid_argument("electrode center must be finite");
  if (!std::isfinite(v_applied)) throw invalid_argument("applied potential must be finite");
}

void to_json(nlohmann::json& j, const ElectrodePose& pose) {
  j = nlohmann::json{{"center", {pose.center.x, pose.center.y, pose.center.z}},
                     {"direction", {pose.direction.x, pose.direction.y, pose.direction.z}},
                     {"tip_length", pose.tip_length},
                     {"tip_radius", pose.tip_radius},
                     {"v_applied", pose.v_applied}};
}

void from_json(const nlohmann::json& j, ElectrodePose& pose) {
  auto vec = [&](const char* key) {
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != 3) throw invalid_argument(std::string(key) + " must be a 3-vector");
    return Vec3{a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
  };
  ElectrodePose p;
  p.center = vec("center");
  p.direction = vec("direction");
  p.tip_length = j.value("tip_length", p.tip_length);
  p.tip_radius = j.value("tip_radius", p.tip_radius);
  p.v_applied = j.value("v_applied", p.v_applied);
  pose = p;
}

double segment_distance(Vec3 p, Vec3 a, Vec3 b) {
  const Vec3 ab = b - a;
  const double len2 = dot(ab, ab);
  double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return norm(p - (a + t * ab));
}

Mask rasterize(const ElectrodePose& pose, const GridSpec& spec) {
  pose.validate();
  spec.validate();
  const Vec3 a = pose.tip_start();
  const Vec3 b = pose.tip_end();
  if (!inside_box(a, spec.origin, spec.extent_max_mm()) || !inside_box(b, spec.origin, spec.extent_max_mm()))
    throw invalid_argument("electrode out of bounds");

  Mask mask(spec);
  Index3 lo{}, hi{};
  for (int ax = 0; ax < 3; ++ax) {
    const double mn = std::min(a[ax], b[ax]) - pose.tip_radius;
    const double mx = std::max(a[ax], b[ax]) + pose.tip_radius;
    lo[ax] = std::max(0, static_cast<int>(std::floor((mn - spec.origin[ax]) / spec.spacing[ax])));
    hi[ax] = std::min(spec.dims[ax] - 1, static_cast<int>(std::ceil((mx - spec.origin[ax]) / spec.spacing[ax])));
  }
  std::size_t marked = 0;
  for (int k = lo[2]; k <= hi[2]; ++k)
    for (int j = lo[1]; j <= hi[1]; ++j)
      for (int i = lo[0]; i <= hi[0]; ++i)
        if (segment_distance(spec.center_mm(i, j, k), a, b) <= pose.tip_radius) {
          mask(i, j, k) = 1;
          ++marked;
        }
  if (marked == 0) throw invalid_argument("degenerate rasterization");
  return mask;
}

bool tip_inside_interior(const ElectrodePose& pose, const GridSpec& spec) {
  // Every marked voxel center is within tip_radius of the segment, so keeping
  // the segment farther than max(spacing, radius) from each face keeps marked
  // voxels off the outer shell.
  Vec3 lo, hi;
  for (int ax = 0; ax < 3; ++ax) {
    const double margin = std::max(spec.spacing[ax], pose.tip_radius + kBoundsSlack);
    lo[ax] = spec.origin[ax] + margin;
    hi[ax] = spec.extent_max_mm()[ax] - margin;
  }
  return inside_box(pose.tip_start(), lo, hi) && inside_box(pose.tip_end(), lo, hi);
}

Vec3 random_direction(CounterRng& rng) {
  for (;;) {
    const Vec3 g{rng.normal(), rng.normal(), rng.normal()};
    const double n = norm(g);
    if (n > 1e-12) return (1.0 / n) * g;
  }
}

std::vector<ElectrodePose> sample_placements(const LabelVolume& labels, int n, std::uint64_t seed,
                                             const PlacementOptions& options) {
  if (n < 1) throw invalid_argument("invalid count");
  const auto& spec = labels.spec();
  std::vector<std::size_t> tumor;
  for (std::size_t idx = 0; idx < labels.size(); ++idx)
    if (labels[idx] == to_label(Tissue::kTumor)) tumor.push_back(idx);
  if (tumor.empty()) throw invalid_argument("empty tumor");

  CounterRng rng(seed);
  std::vector<ElectrodePose> poses;
  poses.reserve(static_cast<std::size_t>(n));
  const std::uint64_t max_rejections = 1000ULL * static_cast<std::uint64_t>(n);
  std::uint64_t rejections = 0;
  while (static_cast<int>(poses.size()) < n) {
    const auto [i, j, k] = spec.unravel(tumor[rng.below(tumor.size())]);
    ElectrodePose pose;
    pose.center = spec.center_mm(i, j, k);
    pose.direction = random_direction(rng);
    pose.tip_length = options.tip_length;
    pose.tip_radius = options.tip_radius;
    pose.v_applied = options.v_applied;

    bool ok = tip_inside_interior(pose, spec);
    if (ok) {
      try {
        (void)rasterize(pose, spec);
      } catch (const Error&) {
        ok = false;
      }
    }
    if (ok) {
      poses.push_back(pose);
      rejections = 0;
    } else if (++rejections > max_rejections) {
      throw invalid_argument("cannot place electrode");
    }
  }
  return poses;
}

}  // namespace rfa
