// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "fblab/grid_field.hpp"

namespace fblab {

/// Width of the smoothed positivity indicator used inside the solvers.
struct SmoothingParams {
  double indicator_width = 0.0;

  /// Throws ParameterError unless 0 < width <= 0.1 * half_width.
  void validate(const GridDomain& grid) const;
};

/// Smoothed indicator of {v > 0}: 0 for v <= 0, 1 - (1 - v/w)^3 on (0, w),
/// 1 for v >= w. C^2 on (0, inf); the right derivative at 0 is 3/w, which
/// keeps zero nodes at a free boundary stationary under projection.
double indicator_step(double v, double width);
/// Right derivative of indicator_step (3/w at v = 0, 0 for v < 0).
double indicator_step_derivative(double v, double width);

/// J(v) = integral over region of |Dv|^2 + [v > 0] with node-level strict
/// positivity and node-centred gradients.
double ac_energy(const ScalarField& v, const RegionMask& region);

/// Graph capillary energy: integral over region and {u > 0} of
/// sqrt(1 + |Du|^2) - cos(theta). Throws ConstraintError if u < -1e-12 on
/// the region.
double capillary_energy(const ScalarField& u, double theta, const RegionMask& region);

struct SmoothedEnergy {
  double energy;
  /// Discrete L^2 gradient (partial derivative divided by h^n), zero on the
  /// cube faces. At nodes with value 0 a positive component is dropped, so
  /// this is the gradient projected onto the constraint v >= 0.
  ScalarField direction;
};

SmoothedEnergy ac_energy_smoothed(const ScalarField& v, const SmoothingParams& params,
                                  const RegionMask& region);

SmoothedEnergy capillary_energy_smoothed(const ScalarField& u, double theta,
                                         const SmoothingParams& params,
                                         const RegionMask& region);

/// |A^theta(u) - (theta^2/2) * integral over {u > 0} of (|Du|^2/theta^2 + 1)| / theta^3.
/// The two integrands are differenced pointwise before quadrature. Requires
/// max |Du| <= 10 theta on the region (PreconditionError otherwise).
double expansion_gap(const ScalarField& u, double theta, const RegionMask& region);

/// Discrete surrogate of J on raw nodal vectors:
///   h^n [ sum over edges c_e ((v_j - v_i)/h)^2 + sum_i w_i Phi(v_i) ]
/// with c_e the mean of the two endpoint weights. Exact for affine fields.
class AcSurrogate {
 public:
  AcSurrogate(const GridDomain& grid, std::vector<double> weights, double width);

  double energy(std::span<const double> v) const;
  /// Returns the energy and writes the L^2 gradient; cube-face entries are
  /// zeroed when `zero_faces` is set.
  double energy_and_gradient(std::span<const double> v, std::span<double> grad,
                             bool zero_faces = true) const;
  /// energy(to) - energy(from), accumulated from local differences so that
  /// tiny changes keep their relative accuracy.
  double energy_change(std::span<const double> from, std::span<const double> to) const;

  void set_width(double width) { width_ = width; }
  double width() const { return width_; }

 private:
  GridDomain grid_;
  std::vector<double> weights_;
  double width_;
};

/// Discrete surrogate of the capillary graph energy, written as
///   int G(Du) + (1 - cos theta) |{u > 0}|,  G(p) = sqrt(1 + |p|^2) - 1,
/// which agrees with the graph energy because Du = 0 a.e. on {u = 0}. G is
/// taken per cell from the mean squared edge differences along each axis
/// (exact for affine fields); the positivity term uses Phi(u_i).
class CapillarySurrogate {
 public:
  CapillarySurrogate(const GridDomain& grid, std::vector<double> weights, double theta,
                     double width);

  double energy(std::span<const double> u) const;
  double energy_and_gradient(std::span<const double> u, std::span<double> grad,
                             bool zero_faces = true) const;
  double energy_change(std::span<const double> from, std::span<const double> to) const;

  void set_width(double width) { width_ = width; }
  double width() const { return width_; }

 private:
  std::vector<double> cell_slopes(std::span<const double> u) const;

  GridDomain grid_;
  std::vector<double> weights_;
  std::vector<double> cell_weights_;
  double wet_cost_;
  double width_;
};

}  // namespace fblab
