#include "rfa/electrostatics.hpp"

#include <cmath>
#include <vector>

#include "rfa/parallel.hpp"

namespace rfa {

namespace {

constexpr double kMmToM = 1e-3;

// Face conductances toward +x, +y, +z for every voxel (0 past the last plane),
// the Jacobi diagonal and the right-hand side contributed by prescribed
// neighbours.
struct Operator {
  GridSpec spec;
  std::vector<std::uint8_t> fixed;
  std::vector<double> gx, gy, gz;
  std::vector<double> diag;
  std::vector<double> rhs;

  explicit Operator(const PotentialProblem& p) : spec(p.sigma.spec()) {
    const std::size_t n = spec.count();
    fixed.assign(p.dirichlet.values().begin(), p.dirichlet.values().end());
    gx.assign(n, 0.0);
    gy.assign(n, 0.0);
    gz.assign(n, 0.0);
    diag.assign(n, 0.0);
    rhs.assign(n, 0.0);
    const auto& s = p.sigma;
    const int nx = spec.dims[0], ny = spec.dims[1], nz = spec.dims[2];
    const std::size_t sx = 1, sy = static_cast<std::size_t>(nx), sz = static_cast<std::size_t>(nx) * ny;
    for (int k = 0; k < nz; ++k)
      for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
          const std::size_t v = spec.index(i, j, k);
          const bool fv = fixed[v] != 0;
          if (i + 1 < nx) gx[v] = face_conductance(spec, 0, s[v], s[v + sx], fv, fixed[v + sx] != 0);
          if (j + 1 < ny) gy[v] = face_conductance(spec, 1, s[v], s[v + sy], fv, fixed[v + sy] != 0);
          if (k + 1 < nz) gz[v] = face_conductance(spec, 2, s[v], s[v + sz], fv, fixed[v + sz] != 0);
        }
    const auto& dv = p.dirichlet_values;
    for (int k = 0; k < nz; ++k)
      for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
          const std::size_t v = spec.index(i, j, k);
          if (fixed[v]) continue;
          double d = 0.0, b = 0.0;
          auto add = [&](double g, std::size_t u) {
            d += g;
            if (fixed[u]) b += g * dv[u];
          };
          if (i + 1 < nx) add(gx[v], v + sx);
          if (i > 0) add(gx[v - sx], v - sx);
          if (j + 1 < ny) add(gy[v], v + sy);
          if (j > 0) add(gy[v - sy], v - sy);
          if (k + 1 < nz) add(gz[v], v + sz);
          if (k > 0) add(gz[v - sz], v - sz);
          diag[v] = d;
          rhs[v] = b;
        }
  }

  // y = A x on one z-plane; x must vanish on prescribed voxels.
  void apply_plane(const std::vector<double>& x, std::vector<double>& y, int k) const {
    const int nx = spec.dims[0], ny = spec.dims[1], nz = spec.dims[2];
    const std::size_t sy = static_cast<std::size_t>(nx), sz = static_cast<std::size_t>(nx) * ny;
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const std::size_t v = spec.index(i, j, k);
        if (fixed[v]) {
          y[v] = 0.0;
          continue;
        }
        double acc = diag[v] * x[v];
        if (i + 1 < nx) acc -= gx[v] * x[v + 1];
        if (i > 0) acc -= gx[v - 1] * x[v - 1];
        if (j + 1 < ny) acc -= gy[v] * x[v + sy];
        if (j > 0) acc -= gy[v - sy] * x[v - sy];
        if (k + 1 < nz) acc -= gz[v] * x[v + sz];
        if (k > 0) acc -= gz[v - sz] * x[v - sz];
        y[v] = acc;
      }
  }

  std::size_t plane_begin(int k) const { return static_cast<std::size_t>(k) * spec.dims[0] * spec.dims[1]; }
  std::size_t plane_end(int k) const { return plane_begin(k + 1); }
};

}  // namespace

void PotentialProblem::validate() const {
  const auto& spec = sigma.spec();
  if (sigma.size() != spec.count() || dirichlet.spec() != spec || dirichlet_values.spec() != spec ||
      dirichlet.size() != spec.count() || dirichlet_values.size() != spec.count())
    throw invalid_argument("grid mismatch");
  for (double s : sigma.values())
    if (!(s > 0.0) || !std::isfinite(s)) throw invalid_argument("sigma must be > 0 everywhere");
  if (count_nonzero(dirichlet) == 0) throw invalid_argument("at least one Dirichlet voxel is required");
  if (!(solver_tol > 0.0)) throw invalid_argument("solver_tol must be > 0");
}

PotentialProblem grounded_electrode_problem(const ScalarVolume& sigma, const Mask& electrode, double v_applied) {
  const auto& spec = sigma.spec();
  if (electrode.spec() != spec) throw invalid_argument("grid mismatch");
  PotentialProblem p{sigma, Mask(spec), ScalarVolume(spec)};
  for (int k = 0; k < spec.dims[2]; ++k)
    for (int j = 0; j < spec.dims[1]; ++j)
      for (int i = 0; i < spec.dims[0]; ++i) {
        const std::size_t v = spec.index(i, j, k);
        if (electrode[v]) {
          p.dirichlet[v] = 1;
          p.dirichlet_values[v] = v_applied;
        } else if (spec.on_boundary(i, j, k)) {
          p.dirichlet[v] = 1;
          p.dirichlet_values[v] = 0.0;
        }
      }
  return p;
}

double face_conductance(const GridSpec& spec, int axis, double sigma_a, double sigma_b, bool fixed_a, bool fixed_b) {
  const double h = spec.spacing[axis];
  const double area = spec.spacing[(axis + 1) % 3] * spec.spacing[(axis + 2) % 3];
  const double geometry = area / h * kMmToM;
  if (fixed_a && fixed_b) return 0.0;
  if (fixed_a) return sigma_b * geometry;
  if (fixed_b) return sigma_a * geometry;
  return 2.0 * sigma_a * sigma_b / (sigma_a + sigma_b) * geometry;
}

PotentialSolution solve_potential(const PotentialProblem& problem) {
  problem.validate();
  const Operator op(problem);
  const auto& spec = op.spec;
  const std::size_t n = spec.count();
  const int nz = spec.dims[2];
  const int threads = resolve_threads(problem.threads);
  const int max_iters = problem.max_iters > 0 ? problem.max_iters : static_cast<int>(10 * n);

  std::vector<double> x(n, 0.0), r(op.rhs), z(n, 0.0), p(n, 0.0), q(n, 0.0);

  auto finish = [&](int iters, double residual) {
    PotentialSolution sol{ScalarVolume(spec), iters, residual};
    for (std::size_t v = 0; v < n; ++v) sol.potential[v] = op.fixed[v] ? problem.dirichlet_values[v] : x[v];
    return sol;
  };

  const double norm_b = std::sqrt(ordered_slab_sum(nz, threads, [&](int k) {
    double s = 0.0;
    for (std::size_t v = op.plane_begin(k); v < op.plane_end(k); ++v) s += op.rhs[v] * op.rhs[v];
    return s;
  }));
  if (norm_b == 0.0) return finish(0, 0.0);

  double rz = ordered_slab_sum(nz, threads, [&](int k) {
    double s = 0.0;
    for (std::size_t v = op.plane_begin(k); v < op.plane_end(k); ++v) {
      z[v] = op.fixed[v] ? 0.0 : r[v] / op.diag[v];
      p[v] = z[v];
      s += r[v] * z[v];
    }
    return s;
  });

  double residual = 1.0;
  for (int it = 1; it <= max_iters; ++it) {
    const double pq = ordered_slab_sum(nz, threads, [&](int k) {
      op.apply_plane(p, q, k);
      double s = 0.0;
      for (std::size_t v = op.plane_begin(k); v < op.plane_end(k); ++v) s += p[v] * q[v];
      return s;
    });
    const double alpha = rz / pq;
    const double rr = ordered_slab_sum(nz, threads, [&](int k) {
      double s = 0.0;
      for (std::size_t v = op.plane_begin(k); v < op.plane_end(k); ++v) {
        x[v] += alpha * p[v];
        r[v] -= alpha * q[v];
        s += r[v] * r[v];
      }
      return s;
    });
    residual = std::sqrt(rr) / norm_b;
    if (residual <= problem.solver_tol) return finish(it, residual);

    const double rz_next = ordered_slab_sum(nz, threads, [&](int k) {
      double s = 0.0;
      for (std::size_t v = op.plane_begin(k); v < op.plane_end(k); ++v) {
        z[v] = op.fixed[v] ? 0.0 : r[v] / op.diag[v];
        s += r[v] * z[v];
      }
      return s;
    });
    const double beta = rz_next / rz;
    rz = rz_next;
#pragma omp parallel for schedule(static) num_threads(threads)
    for (int k = 0; k < nz; ++k)
      for (std::size_t v = op.plane_begin(k); v < op.plane_end(k); ++v) p[v] = z[v] + beta * p[v];
  }
  throw SolverStalled(residual, max_iters);
}

ScalarVolume heat_source(const ScalarVolume& potential, const ScalarVolume& sigma) {
  const auto& spec = potential.spec();
  if (sigma.spec() != spec || sigma.size() != potential.size()) throw invalid_argument("grid mismatch");
  ScalarVolume q(spec);
  const int nx = spec.dims[0], ny = spec.dims[1], nz = spec.dims[2];
  const double hx = spec.spacing.x * kMmToM, hy = spec.spacing.y * kMmToM, hz = spec.spacing.z * kMmToM;
  auto diff = [](int idx, int dim, double h, auto&& at) {
    if (idx == 0) return (at(1) - at(0)) / h;
    if (idx == dim - 1) return (at(dim - 1) - at(dim - 2)) / h;
    return (at(idx + 1) - at(idx - 1)) / (2.0 * h);
  };
#pragma omp parallel for schedule(static) num_threads(resolve_threads())
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const double ex = diff(i, nx, hx, [&](int a) { return potential(a, j, k); });
        const double ey = diff(j, ny, hy, [&](int a) { return potential(i, a, k); });
        const double ez = diff(k, nz, hz, [&](int a) { return potential(i, j, a); });
        q(i, j, k) = sigma(i, j, k) * (ex * ex + ey * ey + ez * ez);
      }
  return q;
}

double net_current(const PotentialProblem& problem, const ScalarVolume& potential, const Mask& set) {
  const auto& spec = problem.sigma.spec();
  if (potential.spec() != spec || set.spec() != spec) throw invalid_argument("grid mismatch");
  double total = 0.0;
  for (int k = 0; k < spec.dims[2]; ++k)
    for (int j = 0; j < spec.dims[1]; ++j)
      for (int i = 0; i < spec.dims[0]; ++i) {
        if (!set(i, j, k)) continue;
        const Index3 at{i, j, k};
        for (int axis = 0; axis < 3; ++axis)
          for (int step : {-1, 1}) {
            Index3 nb = at;
            nb[axis] += step;
            if (!spec.contains(nb[0], nb[1], nb[2]) || set(nb[0], nb[1], nb[2])) continue;
            if (problem.dirichlet(nb[0], nb[1], nb[2])) continue;
            const double g = face_conductance(spec, axis, problem.sigma(i, j, k), problem.sigma(nb[0], nb[1], nb[2]),
                                              problem.dirichlet(i, j, k) != 0, false);
            total += g * (potential(i, j, k) - potential(nb[0], nb[1], nb[2]));
          }
      }
  return total;
}

double total_power(const ScalarVolume& q_r) {
  const double voxel_m3 = q_r.spec().voxel_volume_mm3() * 1e-9;
  double sum = 0.0;
  for (double v : q_r.values()) sum += v;
  return sum * voxel_m3;
}

}  // namespace rfa
