#pragma once

#include "rfa/grid.hpp"

namespace rfa {

/// Variable-coefficient Laplace problem div(sigma grad V) = 0 on a voxel grid.
/// Voxels flagged in `dirichlet` hold `dirichlet_values`; grid faces of free
/// voxels are zero-flux.
struct PotentialProblem {
  ScalarVolume sigma;             // S/m
  Mask dirichlet;                 // 1 = prescribed voxel
  ScalarVolume dirichlet_values;  // V, read only where dirichlet == 1
  double solver_tol = 1e-8;       // relative residual ||b - Ax|| / ||b||
  int max_iters = 0;              // 0 selects 10 * voxel count
  int threads = 0;                // 0 = OpenMP default

  /// Throws on grid mismatch, sigma <= 0 or no Dirichlet voxel.
  void validate() const;
};

struct PotentialSolution {
  ScalarVolume potential;  // V
  int iterations = 0;
  double residual = 0.0;   // final relative residual
};

/// Electrode voxels at v_applied, outer shell grounded at 0 V.
PotentialProblem grounded_electrode_problem(const ScalarVolume& sigma, const Mask& electrode, double v_applied);

/// Conductance (S) of the face between two adjacent voxels along `axis`.
/// Harmonic mean of the two conductivities; when exactly one side is
/// prescribed the free side's conductivity is used, and a face between two
/// prescribed voxels carries no unknown and gets 0.
double face_conductance(const GridSpec& spec, int axis, double sigma_a, double sigma_b, bool fixed_a, bool fixed_b);

/// Jacobi-preconditioned conjugate gradient on the 7-point finite-volume
/// system. Throws SolverStalled when max_iters is exhausted.
PotentialSolution solve_potential(const PotentialProblem& problem);

/// Q_r = sigma |grad V|^2 in W/m^3; central differences in the interior,
/// one-sided on the faces, spacing converted to metres.
ScalarVolume heat_source(const ScalarVolume& potential, const ScalarVolume& sigma);

/// Net current (A) leaving the voxel set through faces to free voxels.
double net_current(const PotentialProblem& problem, const ScalarVolume& potential, const Mask& set);

/// Deposited power: sum of q_r times voxel volume, in W.
double total_power(const ScalarVolume& q_r);

}  // namespace rfa
