// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "fblab/grid_field.hpp"

namespace fblab {

enum class HalfPlaneKind { kBernoulli, kCapillary };

/// Bernoulli: v = ((y - offset n) . (-n))_+.
/// Capillary: u = tan(theta) ((y - offset n) . (-n))_+, the graph of the
/// half-plane meeting the base plane at angle theta. At theta = pi/2 the
/// half-plane is vertical and has no graph; unit slope is used instead,
/// which leaves the density 1/2 unchanged.
struct HalfPlaneSpec {
  HalfPlaneKind kind = HalfPlaneKind::kBernoulli;
  Point normal{1.0, 0.0};
  double theta = 0.0;
  double offset = 0.0;

  void validate() const;
  double slope() const;
};

ScalarField evaluate(const HalfPlaneSpec& spec, const GridDomain& grid);

/// Harmonic boundary profile tan(theta) (-y1 + bend (y1^2 - y2^2))_+; bend 0
/// is the half-plane.
ScalarField bent_half_plane(const GridDomain& grid, double slope, double bend);

/// Nodes with u > 0 at distance >= 2h from the free boundary.
std::vector<char> curvature_support(const ScalarField& u);

/// |A| of the graph of u, from |A|^2 = tr((g^-1 A)^2) with
/// g = I + Du Du^T and A = D^2 u / sqrt(1 + |Du|^2). Zero off the support.
ScalarField second_fundamental_norm(const ScalarField& u);

/// max |A| / sin(theta) over supported nodes with 0 < u < near_band in the
/// window. Throws UndefinedError if no node qualifies.
double curvature_ratio(const ScalarField& u, double theta, double near_band,
                       const RegionMask& window);

}  // namespace fblab
