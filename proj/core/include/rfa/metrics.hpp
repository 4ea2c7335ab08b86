#pragma once

#include <nlohmann/json.hpp>

#include "rfa/grid.hpp"

namespace rfa {

struct LesionMetrics {
  double dice = 0.0;
  double jaccard = 0.0;
  double hausdorff_mm = 0.0;
};

struct TempMetrics {
  double rmse = 0.0;       // degC
  double mae = 0.0;        // degC
  double dice_gt40 = 0.0;  // Dice of (T > 40) masks
  double dice_gt50 = 0.0;  // Dice of (T > 50) masks
};

/// 2|a & b| / (|a| + |b|); 1 when both masks are empty.
double dice(const Mask& a, const Mask& b);
/// |a & b| / |a | b|; 1 when both masks are empty.
double jaccard(const Mask& a, const Mask& b);
/// Symmetric Hausdorff distance in mm between voxel-center sets.
/// Throws "undefined for empty set".
double hausdorff(const Mask& a, const Mask& b);

/// Squared distance (mm^2) from every voxel center to the nearest set voxel;
/// +inf everywhere when the set is empty.
std::vector<double> squared_distance_transform(const Mask& set);

LesionMetrics lesion_metrics(const Mask& pred, const Mask& truth);
TempMetrics temp_metrics(const ScalarVolume& pred, const ScalarVolume& truth);

/// 1 where value > threshold (strict).
Mask threshold_mask(const ScalarVolume& field, double threshold);

/// Axis-aligned cross-section containing the electrode axis: `normal_axis`
/// selects the cut, `long_axis` is the in-plane direction of the electrode.
struct SectionPlane {
  int normal_axis = 1;
  int long_axis = 2;

  void validate() const;
};

/// Plane whose long axis is the grid axis closest to `direction`.
SectionPlane section_plane_for(Vec3 direction);

struct Morphometry {
  Vec3 com{};                 // voxel coordinates
  int plane_index = 0;        // slice index along normal_axis
  double horizontal_mm = 0.0; // chord through the COM along the electrode axis
  double vertical_mm = 0.0;   // chord through the COM across the electrode axis
  double area_mm2 = 0.0;      // lesion pixels in the section times pixel area
};

/// Lesion measurements on the section through the mask's center of mass.
/// Chords are first-to-last mask voxel on the line through the rounded COM,
/// counted in voxels times spacing. Throws on an empty mask.
Morphometry morphometry(const Mask& mask, const SectionPlane& plane);

/// Report rows with the column names of the published tables.
nlohmann::json lesion_report(const LesionMetrics& m);
nlohmann::json temp_report(const TempMetrics& m);
nlohmann::json morphometry_report(const Morphometry& m);

}  // namespace rfa
