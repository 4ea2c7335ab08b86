#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rfa/error.hpp"

namespace rfa {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
  double& operator[](int axis) {
    switch (axis) {
      case 0:
        return x;
      case 1:
        return y;
      default:
        return z;
    }
  }

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend Vec3 operator*(Vec3 a, double s) { return s * a; }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }

using Index3 = std::array<int, 3>;

/// Regular voxel lattice. Lengths are millimetres; voxel (i,j,k) has its
/// center at origin + (i,j,k) * spacing.
struct GridSpec {
  Index3 dims{41, 41, 41};
  Vec3 spacing{1.0, 1.0, 1.0};
  Vec3 origin{0.0, 0.0, 0.0};

  /// Throws on dims < 3 or non-positive spacing.
  void validate() const;

  std::size_t count() const {
    return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
           static_cast<std::size_t>(dims[2]);
  }
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(k));
  }
  Index3 unravel(std::size_t idx) const {
    const auto nx = static_cast<std::size_t>(dims[0]);
    const auto ny = static_cast<std::size_t>(dims[1]);
    return {static_cast<int>(idx % nx), static_cast<int>((idx / nx) % ny), static_cast<int>(idx / (nx * ny))};
  }
  bool contains(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < dims[0] && j < dims[1] && k < dims[2];
  }
  bool on_boundary(int i, int j, int k) const {
    return i == 0 || j == 0 || k == 0 || i == dims[0] - 1 || j == dims[1] - 1 || k == dims[2] - 1;
  }
  Vec3 center_mm(int i, int j, int k) const {
    return {origin.x + i * spacing.x, origin.y + j * spacing.y, origin.z + k * spacing.z};
  }
  /// Far corner voxel center.
  Vec3 extent_max_mm() const { return center_mm(dims[0] - 1, dims[1] - 1, dims[2] - 1); }
  double voxel_volume_mm3() const { return spacing.x * spacing.y * spacing.z; }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// 41 x 41 x 41 voxels at 1 mm, the 40 mm field of view used throughout.
GridSpec standard_grid();

/// Dense 3D field, row-major with x fastest.
template <class T>
class Volume {
 public:
  using value_type = T;

  Volume() = default;
  explicit Volume(const GridSpec& spec, T fill = T{}) : spec_(spec), data_(spec.count(), fill) { spec.validate(); }
  Volume(const GridSpec& spec, std::vector<T> data) : spec_(spec), data_(std::move(data)) {
    spec.validate();
    if (data_.size() != spec.count()) throw invalid_argument("volume data length does not match grid dims");
  }

  const GridSpec& spec() const noexcept { return spec_; }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator()(int i, int j, int k) { return data_[spec_.index(i, j, k)]; }
  const T& operator()(int i, int j, int k) const { return data_[spec_.index(i, j, k)]; }
  T& operator[](std::size_t idx) { return data_[idx]; }
  const T& operator[](std::size_t idx) const { return data_[idx]; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  friend bool operator==(const Volume&, const Volume&) = default;

 private:
  GridSpec spec_{};
  std::vector<T> data_;
};

using ScalarVolume = Volume<double>;
/// Binary masks use 0/1 bytes.
using Mask = Volume<std::uint8_t>;

enum class Tissue : std::uint8_t { kNormal = 0, kTumor = 1, kElectrode = 2 };

inline constexpr std::uint8_t to_label(Tissue t) { return static_cast<std::uint8_t>(t); }

/// Tissue labels (0 normal, 1 tumor, 2 electrode).
using LabelVolume = Volume<std::uint8_t>;

/// Throws "unknown label" if any label is outside {0,1,2}.
void validate_labels(const LabelVolume& labels);

std::size_t count_label(const LabelVolume& labels, Tissue tissue);
std::size_t count_nonzero(const Mask& mask);

/// 1 where labels == tissue.
Mask label_mask(const LabelVolume& labels, Tissue tissue);

/// Unweighted mean voxel index of tumor voxels; throws "empty tumor".
Vec3 tumor_centroid(const LabelVolume& labels);

/// Round half-up, per axis.
Index3 round_half_up(Vec3 v);

/// Crops to the field of view (fov / spacing + 1 voxels per axis) centered at
/// the rounded tumor centroid; the window is clamped into the source volume.
LabelVolume crop_to_fov(const LabelVolume& labels, Vec3 fov_mm);

struct TissueProperties {
  double sigma = 0.0;    // S/m
  double rho = 0.0;      // kg/m^3
  double c = 0.0;        // J/kg/K
  double k = 0.0;        // W/m/K
  double omega_b = 0.0;  // 1/s
  double q_m = 0.0;      // W/m^3

  void validate() const;
  friend bool operator==(const TissueProperties&, const TissueProperties&) = default;
};

struct BloodProperties {
  double rho = 1050.0;        // kg/m^3
  double c = 3617.0;          // J/kg/K
  double temperature = 37.0;  // degC
  friend bool operator==(const BloodProperties&, const BloodProperties&) = default;
};

/// Per-label tissue constants. The electrode label resolves to its own entry
/// when one is set, otherwise to the normal-tissue entry.
class MaterialTable {
 public:
  MaterialTable() = default;

  MaterialTable& set(Tissue tissue, const TissueProperties& props);
  /// nullopt when the label has no entry (or is not a known label at all).
  std::optional<TissueProperties> find(std::uint8_t label) const;
  bool has(Tissue tissue) const { return entries_[static_cast<std::size_t>(tissue)].has_value(); }

  BloodProperties blood{};

  /// Breast tissue: tumor and normal constants with blood perfusion.
  static MaterialTable breast();
  /// Homogeneous ex vivo bovine liver (no perfusion, no metabolic heat).
  static MaterialTable liver();

  friend bool operator==(const MaterialTable&, const MaterialTable&) = default;

 private:
  std::array<std::optional<TissueProperties>, 3> entries_{};
};

struct MaterialFields {
  ScalarVolume sigma;
  ScalarVolume rho;
  ScalarVolume c;
  ScalarVolume k;
  ScalarVolume omega_b;
  ScalarVolume q_m;

  const GridSpec& spec() const { return sigma.spec(); }
};

/// Per-voxel constants of each voxel's label; throws "unknown label".
MaterialFields assign_materials(const LabelVolume& labels, const MaterialTable& table);

}  // namespace rfa
