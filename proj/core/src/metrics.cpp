#include "rfa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace rfa {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_same(const GridSpec& a, const GridSpec& b) {
  if (a != b) throw invalid_argument("grid mismatch");
}

struct Overlap {
  std::size_t a = 0, b = 0, both = 0;
};

Overlap overlap(const Mask& a, const Mask& b) {
  require_same(a.spec(), b.spec());
  Overlap o;
  for (std::size_t v = 0; v < a.size(); ++v) {
    const bool x = a[v] != 0, y = b[v] != 0;
    o.a += x;
    o.b += y;
    o.both += x && y;
  }
  return o;
}

// Exact 1D squared distance transform of sampled function f on a lattice of
// pitch h (lower envelope of parabolas). Infinite samples are not sites.
void edt_1d(std::vector<double>& f, double h, std::vector<int>& site, std::vector<double>& bound,
            std::vector<double>& out) {
  const int n = static_cast<int>(f.size());
  int k = -1;
  auto pos = [h](int q) { return q * h; };
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    const double fq = f[q] + pos(q) * pos(q);
    while (k >= 0) {
      const int v = site[k];
      const double s = (fq - (f[v] + pos(v) * pos(v))) / (2.0 * (pos(q) - pos(v)));
      if (s <= bound[k]) {
        --k;
      } else {
        break;
      }
    }
    ++k;
    site[k] = q;
    bound[k] = k == 0 ? -kInf : (fq - (f[site[k - 1]] + pos(site[k - 1]) * pos(site[k - 1]))) /
                                    (2.0 * (pos(q) - pos(site[k - 1])));
  }
  if (k < 0) {
    std::fill(out.begin(), out.end(), kInf);
    return;
  }
  // Near-ties: take the smallest value among adjacent envelope sites.
  auto value = [&](int q, int j) {
    const double d = (q - site[j]) * h;
    return d * d + f[site[j]];
  };
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (j < k && bound[j + 1] < pos(q)) ++j;
    double best = value(q, j);
    if (j > 0) best = std::min(best, value(q, j - 1));
    if (j < k) best = std::min(best, value(q, j + 1));
    out[q] = best;
  }
}

double directed_hausdorff(const Mask& from, const std::vector<double>& dist_sq_to) {
  double worst = 0.0;
  for (std::size_t v = 0; v < from.size(); ++v)
    if (from[v]) worst = std::max(worst, dist_sq_to[v]);
  return std::sqrt(worst);
}

}  // namespace

double dice(const Mask& a, const Mask& b) {
  const auto o = overlap(a, b);
  if (o.a + o.b == 0) return 1.0;
  return 2.0 * static_cast<double>(o.both) / static_cast<double>(o.a + o.b);
}

double jaccard(const Mask& a, const Mask& b) {
  const auto o = overlap(a, b);
  const std::size_t uni = o.a + o.b - o.both;
  if (uni == 0) return 1.0;
  return static_cast<double>(o.both) / static_cast<double>(uni);
}

std::vector<double> squared_distance_transform(const Mask& set) {
  const auto& spec = set.spec();
  const int nx = spec.dims[0], ny = spec.dims[1], nz = spec.dims[2];
  std::vector<double> d(set.size());
  for (std::size_t v = 0; v < set.size(); ++v) d[v] = set[v] ? 0.0 : kInf;

  const int longest = std::max({nx, ny, nz});
  std::vector<double> line(static_cast<std::size_t>(longest)), out(static_cast<std::size_t>(longest));
  std::vector<int> site(static_cast<std::size_t>(longest));
  std::vector<double> bound(static_cast<std::size_t>(longest) + 1);

  auto pass = [&](int axis) {
    const int n = spec.dims[axis];
    const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
    line.resize(static_cast<std::size_t>(n));
    out.resize(static_cast<std::size_t>(n));
    for (int u = 0; u < spec.dims[a2]; ++u)
      for (int w = 0; w < spec.dims[a1]; ++w) {
        Index3 at{};
        at[a1] = w;
        at[a2] = u;
        for (int q = 0; q < n; ++q) {
          at[axis] = q;
          line[q] = d[spec.index(at[0], at[1], at[2])];
        }
        edt_1d(line, spec.spacing[axis], site, bound, out);
        for (int q = 0; q < n; ++q) {
          at[axis] = q;
          d[spec.index(at[0], at[1], at[2])] = out[q];
        }
      }
  };
  pass(0);
  pass(1);
  pass(2);
  return d;
}

double hausdorff(const Mask& a, const Mask& b) {
  require_same(a.spec(), b.spec());
  if (count_nonzero(a) == 0 || count_nonzero(b) == 0) throw invalid_argument("undefined for empty set");
  const auto to_b = squared_distance_transform(b);
  const auto to_a = squared_distance_transform(a);
  return std::max(directed_hausdorff(a, to_b), directed_hausdorff(b, to_a));
}

LesionMetrics lesion_metrics(const Mask& pred, const Mask& truth) {
  LesionMetrics m;
  m.dice = dice(pred, truth);
  m.jaccard = jaccard(pred, truth);
  const bool any_pred = count_nonzero(pred) > 0, any_truth = count_nonzero(truth) > 0;
  if (any_pred && any_truth) {
    m.hausdorff_mm = hausdorff(pred, truth);
  } else {
    m.hausdorff_mm = any_pred == any_truth ? 0.0 : kInf;
  }
  return m;
}

Mask threshold_mask(const ScalarVolume& field, double threshold) {
  Mask m(field.spec());
  for (std::size_t v = 0; v < field.size(); ++v) m[v] = field[v] > threshold ? 1 : 0;
  return m;
}

TempMetrics temp_metrics(const ScalarVolume& pred, const ScalarVolume& truth) {
  require_same(pred.spec(), truth.spec());
  double se = 0.0, ae = 0.0;
  for (std::size_t v = 0; v < pred.size(); ++v) {
    const double e = pred[v] - truth[v];
    se += e * e;
    ae += std::abs(e);
  }
  const double n = static_cast<double>(pred.size());
  TempMetrics m;
  m.rmse = std::sqrt(se / n);
  m.mae = ae / n;
  m.dice_gt40 = dice(threshold_mask(pred, 40.0), threshold_mask(truth, 40.0));
  m.dice_gt50 = dice(threshold_mask(pred, 50.0), threshold_mask(truth, 50.0));
  return m;
}

void SectionPlane::validate() const {
  if (normal_axis < 0 || normal_axis > 2 || long_axis < 0 || long_axis > 2 || normal_axis == long_axis)
    throw invalid_argument("section plane needs two distinct axes in 0..2");
}

SectionPlane section_plane_for(Vec3 direction) {
  const std::array<double, 3> mag{std::abs(direction.x), std::abs(direction.y), std::abs(direction.z)};
  SectionPlane plane;
  plane.long_axis = static_cast<int>(std::max_element(mag.begin(), mag.end()) - mag.begin());
  const int a = (plane.long_axis + 1) % 3, b = (plane.long_axis + 2) % 3;
  // cut across the weakest remaining component so the section holds the axis
  plane.normal_axis = mag[a] <= mag[b] ? a : b;
  return plane;
}

Morphometry morphometry(const Mask& mask, const SectionPlane& plane) {
  plane.validate();
  const auto& spec = mask.spec();
  Vec3 sum{};
  std::size_t count = 0;
  for (int k = 0; k < spec.dims[2]; ++k)
    for (int j = 0; j < spec.dims[1]; ++j)
      for (int i = 0; i < spec.dims[0]; ++i)
        if (mask(i, j, k)) {
          sum = sum + Vec3{double(i), double(j), double(k)};
          ++count;
        }
  if (count == 0) throw invalid_argument("empty mask");

  Morphometry m;
  m.com = (1.0 / static_cast<double>(count)) * sum;
  const Index3 c = round_half_up(m.com);
  m.plane_index = c[plane.normal_axis];
  const int cross_axis = 3 - plane.normal_axis - plane.long_axis;

  auto chord = [&](int axis) {
    int first = -1, last = -1;
    Index3 at = c;
    for (int q = 0; q < spec.dims[axis]; ++q) {
      at[axis] = q;
      if (mask(at[0], at[1], at[2])) {
        if (first < 0) first = q;
        last = q;
      }
    }
    return first < 0 ? 0.0 : (last - first + 1) * spec.spacing[axis];
  };
  m.horizontal_mm = chord(plane.long_axis);
  m.vertical_mm = chord(cross_axis);

  std::size_t pixels = 0;
  Index3 at{};
  at[plane.normal_axis] = m.plane_index;
  for (int u = 0; u < spec.dims[plane.long_axis]; ++u)
    for (int w = 0; w < spec.dims[cross_axis]; ++w) {
      at[plane.long_axis] = u;
      at[cross_axis] = w;
      pixels += mask(at[0], at[1], at[2]) != 0;
    }
  m.area_mm2 = static_cast<double>(pixels) * spec.spacing[plane.long_axis] * spec.spacing[cross_axis];
  return m;
}

nlohmann::json lesion_report(const LesionMetrics& m) {
  return {{"Dice", m.dice}, {"Jaccard", m.jaccard}, {"Hausdorff", m.hausdorff_mm}};
}

nlohmann::json temp_report(const TempMetrics& m) {
  return {{"RMSE", m.rmse}, {"MAE", m.mae}, {"Dice>40", m.dice_gt40}, {"Dice>50", m.dice_gt50}};
}

nlohmann::json morphometry_report(const Morphometry& m) {
  return {{"com", {m.com.x, m.com.y, m.com.z}},
          {"plane_index", m.plane_index},
          {"horizontal_mm", m.horizontal_mm},
          {"vertical_mm", m.vertical_mm},
          {"area_mm2", m.area_mm2}};
}

}  // namespace rfa
