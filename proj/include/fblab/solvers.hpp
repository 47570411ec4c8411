// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "fblab/grid_field.hpp"

namespace fblab {

struct SolveParams {
  /// Indicator widths, strictly decreasing, absolute units of v. The
  /// capillary solver multiplies them by tan(theta) so they are measured in
  /// units of distance along the base plane in both problems.
  std::vector<double> delta_schedule;
  /// First trial step of the line search; later steps start from the last
  /// accepted one.
  double initial_step = 1.0;
  /// Step reduction factor during backtracking, in (0, 1).
  double backtrack = 0.5;
  /// Iteration cap per continuation stage and grid level.
  int max_iterations = 3000;
  /// Stop a stage when the L^2 norm of the gradient mapping drops below this.
  double tolerance = 1e-6;
  /// Iterations of the harmonic-extension initialiser per grid level.
  int harmonic_iterations = 200;
  /// Number of coarser grids solved first to warm-start the fine grid.
  int coarse_levels = 2;

  void validate() const;

  /// 0.1 L, 0.05 L, ... while above 4h, followed by those of 4h, 2h, h,
  /// h/2, h/4 that do not exceed 0.1 L.
  static SolveParams defaults(const GridDomain& grid);
};

struct StageRecord {
  int nodes_per_axis;
  double delta;
  int iterations;
  double final_energy;
  double gradient_norm;
  bool converged;
};

struct SolveResult {
  ScalarField field;
  /// Total iterations over all stages and levels.
  int iterations = 0;
  double final_gradient_norm = 0.0;
  /// Objective values of the last continuation stage on the finest grid,
  /// one entry per iteration; nonincreasing.
  std::vector<double> energy_history;
  std::vector<StageRecord> stages;
  /// True if the last stage on the finest grid met the tolerance.
  bool converged = false;
};

/// Minimiser of the smoothed Alt-Caffarelli energy over v >= 0 with the
/// cube-face values of `boundary` as Dirichlet data.
SolveResult solve_ac(const GridDomain& grid, const ScalarField& boundary,
                     const SolveParams& params);

/// Minimiser of the smoothed capillary graph energy, theta in (0, pi/2].
SolveResult solve_capillary(const GridDomain& grid, const ScalarField& boundary, double theta,
                            const SolveParams& params);

/// Discrete harmonic extension of the face values of `boundary`, built by a
/// coarse-to-fine cascade with `iterations` accelerated descent steps on the
/// Dirichlet energy per level.
ScalarField harmonic_extension(const GridDomain& grid, const ScalarField& boundary,
                               int iterations);

/// Zero crossings of f along grid edges joining a positive node to a
/// nonpositive one, linearly interpolated. A zero node yields the crossing
/// at that node.
std::vector<Point> free_boundary(const ScalarField& f);

/// Symmetric Hausdorff distance between the parts of A and B inside
/// `window`; the inner infimum ranges over the whole opposite set. Throws
/// UndefinedError if either restriction is empty.
double hausdorff_distance(std::span<const Point> a, std::span<const Point> b,
                          const RegionMask& window);

/// Median of |Dv| over positive nodes within `band` of the free boundary
/// whose whole difference stencil is positive. Throws UndefinedError if no
/// node qualifies.
double free_boundary_slope(const ScalarField& f, double band);

/// Bilinear prolongation from a grid to its refinement by two.
ScalarField prolongate(const ScalarField& coarse, const GridDomain& fine);

}  // namespace fblab
