#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <unistd.h>

#include "rfa/error.hpp"
#include "rfa/grid.hpp"
#include "rfa/rng.hpp"

namespace rfa::testing {

/// Untagged message of the rfa::Error thrown by f, or "<no error>".
template <class F>
std::string error_message(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.message();
  }
  return "<no error>";
}

inline GridSpec cube(int n, double spacing = 1.0) {
  GridSpec g;
  g.dims = {n, n, n};
  g.spacing = {spacing, spacing, spacing};
  g.origin = {0.0, 0.0, 0.0};
  return g;
}

/// Bernoulli(p) mask.
inline Mask random_mask(const GridSpec& spec, CounterRng& rng, double p) {
  Mask m(spec);
  for (auto& v : m.values()) v = rng.uniform() < p ? 1 : 0;
  return m;
}

/// Random mask with at least one set voxel.
inline Mask random_nonempty_mask(const GridSpec& spec, CounterRng& rng, double p) {
  Mask m = random_mask(spec, rng, p);
  m[rng.below(m.size())] = 1;
  return m;
}

inline ScalarVolume random_field(const GridSpec& spec, CounterRng& rng, double lo, double hi) {
  ScalarVolume f(spec);
  for (auto& v : f.values()) v = lo + (hi - lo) * rng.uniform();
  return f;
}

inline LabelVolume ball_labels(const GridSpec& spec, Vec3 center_mm, double radius_mm) {
  LabelVolume l(spec, to_label(Tissue::kNormal));
  for (int k = 0; k < spec.dims[2]; ++k)
    for (int j = 0; j < spec.dims[1]; ++j)
      for (int i = 0; i < spec.dims[0]; ++i)
        if (norm(spec.center_mm(i, j, k) - center_mm) <= radius_mm) l(i, j, k) = to_label(Tissue::kTumor);
  return l;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("rfa-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace rfa::testing
