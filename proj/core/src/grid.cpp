#include "rfa/grid.hpp"

#include <algorithm>
#include <string>

namespace rfa {

void GridSpec::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (dims[a] < 3) throw invalid_argument("grid dims must be >= 3 on every axis");
    if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a])) throw invalid_argument("grid spacing must be > 0");
  }
}

GridSpec standard_grid() { return GridSpec{}; }

void validate_labels(const LabelVolume& labels) {
  for (auto v : labels.values()) {
    if (v > 2) throw invalid_argument("unknown label " + std::to_string(v));
  }
}

std::size_t count_label(const LabelVolume& labels, Tissue tissue) {
  const auto want = to_label(tissue);
  return static_cast<std::size_t>(std::count(labels.values().begin(), labels.values().end(), want));
}

std::size_t count_nonzero(const Mask& mask) {
  return static_cast<std::size_t>(
      std::count_if(mask.values().begin(), mask.values().end(), [](std::uint8_t v) { return v != 0; }));
}

Mask label_mask(const LabelVolume& labels, Tissue tissue) {
  Mask out(labels.spec());
  const auto want = to_label(tissue);
  for (std::size_t n = 0; n < labels.size(); ++n) out[n] = labels[n] == want ? 1 : 0;
  return out;
}

Vec3 tumor_centroid(const LabelVolume& labels) {
  const auto& spec = labels.spec();
  double sx = 0, sy = 0, sz = 0;
  std::size_t count = 0;
  for (int k = 0; k < spec.dims[2]; ++k)
    for (int j = 0; j < spec.dims[1]; ++j)
      for (int i = 0; i < spec.dims[0]; ++i)
        if (labels(i, j, k) == to_label(Tissue::kTumor)) {
          sx += i;
          sy += j;
          sz += k;
          ++count;
        }
  if (count == 0) throw invalid_argument("empty tumor");
  const double n = static_cast<double>(count);
  return {sx / n, sy / n, sz / n};
}

Index3 round_half_up(Vec3 v) {
  return {static_cast<int>(std::floor(v.x + 0.5)), static_cast<int>(std::floor(v.y + 0.5)),
          static_cast<int>(std::floor(v.z + 0.5))};
}

LabelVolume crop_to_fov(const LabelVolume& labels, Vec3 fov_mm) {
  const auto& src = labels.spec();
  const Index3 center = round_half_up(tumor_centroid(labels));

  GridSpec out_spec;
  out_spec.spacing = src.spacing;
  Index3 start{};
  for (int a = 0; a < 3; ++a) {
    if (!(fov_mm[a] > 0.0)) throw invalid_argument("fov must be positive");
    const int n = static_cast<int>(std::lround(fov_mm[a] / src.spacing[a])) + 1;
    if (n > src.dims[a]) throw invalid_argument("fov exceeds source volume");
    out_spec.dims[a] = n;
    start[a] = std::clamp(center[a] - n / 2, 0, src.dims[a] - n);
    out_spec.origin[a] = src.origin[a] + start[a] * src.spacing[a];
  }

  LabelVolume out(out_spec);
  for (int k = 0; k < out_spec.dims[2]; ++k)
    for (int j = 0; j < out_spec.dims[1]; ++j)
      for (int i = 0; i < out_spec.dims[0]; ++i) out(i, j, k) = labels(i + start[0], j + start[1], k + start[2]);
  return out;
}

void TissueProperties::validate() const {
  if (!(sigma > 0 && rho > 0 && c > 0 && k > 0)) throw invalid_argument("sigma, rho, c and k must be > 0");
  if (omega_b < 0 || q_m < 0) throw invalid_argument("omega_b and Q_m must be >= 0");
}

MaterialTable& MaterialTable::set(Tissue tissue, const TissueProperties& props) {
  props.validate();
  entries_[static_cast<std::size_t>(tissue)] = props;
  return *this;
}

std::optional<TissueProperties> MaterialTable::find(std::uint8_t label) const {
  if (label >= entries_.size()) return std::nullopt;
  if (entries_[label]) return entries_[label];
  if (label == to_label(Tissue::kElectrode)) return entries_[0];
  return std::nullopt;
}

MaterialTable MaterialTable::breast() {
  MaterialTable t;
  t.set(Tissue::kNormal, {.sigma = 0.4, .rho = 911.0, .c = 2348.0, .k = 0.21, .omega_b = 0.2, .q_m = 400.0});
  t.set(Tissue::kTumor, {.sigma = 4.0, .rho = 1050.0, .c = 3770.0, .k = 0.48, .omega_b = 5.3, .q_m = 13600.0});
  t.blood = BloodProperties{.rho = 1050.0, .c = 3617.0, .temperature = 37.0};
  return t;
}

MaterialTable MaterialTable::liver() {
  MaterialTable t;
  t.set(Tissue::kNormal, {.sigma = 0.69, .rho = 1079.0, .c = 3415.0, .k = 0.5, .omega_b = 0.0, .q_m = 0.0});
  t.blood = BloodProperties{.rho = 1050.0, .c = 3617.0, .temperature = 37.0};
  return t;
}

MaterialFields assign_materials(const LabelVolume& labels, const MaterialTable& table) {
  const auto& spec = labels.spec();
  MaterialFields f{ScalarVolume(spec), ScalarVolume(spec), ScalarVolume(spec),
                   ScalarVolume(spec), ScalarVolume(spec), ScalarVolume(spec)};
  std::array<std::optional<TissueProperties>, 256> lut{};
  for (int l = 0; l < 256; ++l) lut[l] = table.find(static_cast<std::uint8_t>(l));
  for (std::size_t n = 0; n < labels.size(); ++n) {
    const auto& p = lut[labels[n]];
    if (!p) throw invalid_argument("unknown label " + std::to_string(labels[n]));
    f.sigma[n] = p->sigma;
    f.rho[n] = p->rho;
    f.c[n] = p->c;
    f.k[n] = p->k;
    f.omega_b[n] = p->omega_b;
    f.q_m[n] = p->q_m;
  }
  return f;
}

}  // namespace rfa
