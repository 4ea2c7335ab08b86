#include <gtest/gtest.h>

#include "rfa/grid.hpp"
#include "support.hpp"

namespace rfa {
namespace {

using testing::cube;
using testing::error_message;

TEST(GridSpec, IndexIsRowMajorXFastest) {
  const GridSpec g = cube(5);
  EXPECT_EQ(g.index(1, 0, 0), 1u);
  EXPECT_EQ(g.index(0, 1, 0), 5u);
  EXPECT_EQ(g.index(0, 0, 1), 25u);
  for (std::size_t n = 0; n < g.count(); ++n) {
    const auto [i, j, k] = g.unravel(n);
    EXPECT_EQ(g.index(i, j, k), n);
  }
}

TEST(GridSpec, StandardGridIs41CubeAt1mm) {
  const GridSpec g = standard_grid();
  EXPECT_EQ(g.dims, (Index3{41, 41, 41}));
  EXPECT_EQ(g.count(), 68921u);
  EXPECT_DOUBLE_EQ(g.extent_max_mm().x, 40.0);
}

TEST(GridSpec, RejectsBadGeometry) {
  GridSpec g = cube(5);
  g.spacing.y = 0.0;
  EXPECT_THROW(g.validate(), Error);
  g = cube(2);
  EXPECT_THROW(g.validate(), Error);
}

TEST(Volume, DataLengthMustMatchDims) {
  EXPECT_THROW(ScalarVolume(cube(3), std::vector<double>(26)), Error);
  EXPECT_NO_THROW(ScalarVolume(cube(3), std::vector<double>(27)));
}

TEST(RoundHalfUp, PerAxis) {
  EXPECT_EQ(round_half_up({0.5, 1.49, 2.5}), (Index3{1, 1, 3}));
  EXPECT_EQ(round_half_up({20.0, 19.999, 20.5}), (Index3{20, 20, 21}));
}

TEST(CropToFov, CenteredSingleVoxelIsIdentity) {
  LabelVolume l(standard_grid(), 0);
  l(20, 20, 20) = to_label(Tissue::kTumor);
  const auto out = crop_to_fov(l, {40, 40, 40});
  EXPECT_EQ(out.spec().dims, l.spec().dims);
  EXPECT_EQ(out.storage(), l.storage());
}

TEST(CropToFov, OffCenterBlobLandsAtCenterVoxel) {
  const GridSpec big = cube(101);
  const auto labels = testing::ball_labels(big, {70, 50, 50}, 6.0);
  const auto out = crop_to_fov(labels, {40, 40, 40});
  ASSERT_EQ(out.spec().dims, (Index3{41, 41, 41}));

  double sx = 0, sy = 0, sz = 0, n = 0;
  for (int k = 0; k < 41; ++k)
    for (int j = 0; j < 41; ++j)
      for (int i = 0; i < 41; ++i)
        if (out(i, j, k) == 1) {
          sx += i;
          sy += j;
          sz += k;
          n += 1;
        }
  ASSERT_GT(n, 0);
  EXPECT_EQ(static_cast<int>(std::floor(sx / n + 0.5)), 20);
  EXPECT_EQ(static_cast<int>(std::floor(sy / n + 0.5)), 20);
  EXPECT_EQ(static_cast<int>(std::floor(sz / n + 0.5)), 20);
  EXPECT_EQ(count_label(out, Tissue::kTumor), count_label(labels, Tissue::kTumor));
}

TEST(CropToFov, WindowIsClampedAtTheEdge) {
  const GridSpec big = cube(61);
  const auto labels = testing::ball_labels(big, {3, 30, 30}, 2.0);
  const auto out = crop_to_fov(labels, {40, 40, 40});
  EXPECT_DOUBLE_EQ(out.spec().origin.x, 0.0);
  EXPECT_EQ(count_label(out, Tissue::kTumor), count_label(labels, Tissue::kTumor));
}

TEST(CropToFov, EmptyTumorIsRejected) {
  const LabelVolume l(standard_grid(), 0);
  EXPECT_EQ(error_message([&] { crop_to_fov(l, {40, 40, 40}); }), "empty tumor");
}

TEST(CropToFov, IdempotentOnCroppedVolumes) {
  CounterRng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec3 c{10.0 + 40.0 * rng.uniform(), 10.0 + 40.0 * rng.uniform(), 10.0 + 40.0 * rng.uniform()};
    const auto labels = testing::ball_labels(cube(61), c, 1.0 + 5.0 * rng.uniform());
    const auto once = crop_to_fov(labels, {40, 40, 40});
    const auto twice = crop_to_fov(once, {40, 40, 40});
    EXPECT_EQ(once, twice) << "trial " << trial;
  }
}

TEST(AssignMaterials, BreastNormalConductivity) {
  const auto f = assign_materials(LabelVolume(standard_grid(), 0), MaterialTable::breast());
  for (double s : f.sigma.values()) ASSERT_EQ(s, 0.4);
}

TEST(AssignMaterials, BreastTumorConductivity) {
  const auto f = assign_materials(LabelVolume(standard_grid(), 1), MaterialTable::breast());
  for (double s : f.sigma.values()) ASSERT_EQ(s, 4.0);
}

TEST(AssignMaterials, UnknownLabelIsRejected) {
  LabelVolume l(cube(5), 0);
  l(2, 2, 2) = 7;
  EXPECT_EQ(error_message([&] { assign_materials(l, MaterialTable::breast()); }), "unknown label 7");
}

TEST(AssignMaterials, MissingTableEntryIsRejected) {
  MaterialTable t;
  t.set(Tissue::kNormal, MaterialTable::breast().find(0).value());
  LabelVolume l(cube(5), 0);
  l(1, 1, 1) = to_label(Tissue::kTumor);
  EXPECT_NE(error_message([&] { assign_materials(l, t); }).find("unknown label"), std::string::npos);
}

TEST(AssignMaterials, ExactTableValuesEverywhere) {
  const auto table = MaterialTable::breast();
  CounterRng rng(5);
  LabelVolume l(cube(9));
  for (auto& v : l.values()) v = static_cast<std::uint8_t>(rng.below(3));
  const auto f = assign_materials(l, table);
  const TissueProperties normal{0.4, 911, 2348, 0.21, 0.2, 400};
  const TissueProperties tumor{4, 1050, 3770, 0.48, 5.3, 13600};
  for (std::size_t n = 0; n < l.size(); ++n) {
    // Electrode voxels take normal-tissue constants.
    const auto& p = l[n] == 1 ? tumor : normal;
    ASSERT_EQ(f.sigma[n], p.sigma);
    ASSERT_EQ(f.rho[n], p.rho);
    ASSERT_EQ(f.c[n], p.c);
    ASSERT_EQ(f.k[n], p.k);
    ASSERT_EQ(f.omega_b[n], p.omega_b);
    ASSERT_EQ(f.q_m[n], p.q_m);
  }
}

TEST(MaterialTable, LiverConstants) {
  const auto p = MaterialTable::liver().find(0).value();
  EXPECT_EQ(p.sigma, 0.69);
  EXPECT_EQ(p.rho, 1079.0);
  EXPECT_EQ(p.c, 3415.0);
  EXPECT_EQ(p.k, 0.5);
  EXPECT_EQ(p.omega_b, 0.0);
  EXPECT_EQ(p.q_m, 0.0);
}

TEST(MaterialTable, RejectsNonPositiveConstants) {
  TissueProperties p{0.4, 911, 2348, 0.21, 0.2, 400};
  p.k = 0.0;
  EXPECT_THROW(p.validate(), Error);
  p = {0.4, 911, 2348, 0.21, -1.0, 400};
  EXPECT_THROW(p.validate(), Error);
}

TEST(Labels, ValidateAndCount) {
  LabelVolume l(cube(4), 0);
  l[3] = 1;
  l[5] = 2;
  EXPECT_NO_THROW(validate_labels(l));
  EXPECT_EQ(count_label(l, Tissue::kTumor), 1u);
  EXPECT_EQ(count_nonzero(label_mask(l, Tissue::kElectrode)), 1u);
  l[7] = 3;
  EXPECT_EQ(error_message([&] { validate_labels(l); }), "unknown label 3");
}

}  // namespace
}  // namespace rfa
