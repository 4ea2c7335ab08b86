#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "rfa/grid.hpp"
#include "rfa/rng.hpp"

namespace rfa {

/// Active electrode tip: a segment of length tip_length centered at `center`
/// along unit `direction`, with radius tip_radius. Lengths in mm, potential in V.
struct ElectrodePose {
  Vec3 center{};
  Vec3 direction{0.0, 0.0, 1.0};
  double tip_length = 10.0;
  double tip_radius = 0.5;
  double v_applied = 0.0;

  /// Throws unless |direction| = 1 within 1e-9 and tip dims are positive.
  void validate() const;

  Vec3 tip_start() const { return center - 0.5 * tip_length * direction; }
  Vec3 tip_end() const { return center + 0.5 * tip_length * direction; }

  friend bool operator==(const ElectrodePose&, const ElectrodePose&) = default;
};

void to_json(nlohmann::json& j, const ElectrodePose& pose);
void from_json(const nlohmann::json& j, ElectrodePose& pose);

/// Distance from point p to the closed segment [a, b].
double segment_distance(Vec3 p, Vec3 a, Vec3 b);

/// Marks every voxel whose center lies within tip_radius of the tip segment.
/// Throws "electrode out of bounds" if the segment leaves the grid and
/// "degenerate rasterization" if no voxel is marked.
Mask rasterize(const ElectrodePose& pose, const GridSpec& spec);

/// True when the tip segment stays at least one voxel away from the outer
/// shell, i.e. the electrode never touches the grounded/held boundary.
bool tip_inside_interior(const ElectrodePose& pose, const GridSpec& spec);

struct PlacementOptions {
  double tip_length = 10.0;
  double tip_radius = 0.5;
  double v_applied = 0.0;
};

/// n poses with centers at uniformly drawn tumor voxel centers and directions
/// uniform on the sphere. Poses that would leave the grid interior or
/// rasterize to nothing are redrawn. Throws "cannot place electrode" after
/// 1000 * n consecutive rejections.
std::vector<ElectrodePose> sample_placements(const LabelVolume& labels, int n, std::uint64_t seed,
                                             const PlacementOptions& options = {});

/// Uniform unit vector from normalized Gaussian draws.
Vec3 random_direction(CounterRng& rng);

}  // namespace rfa
