// SPDX-License-Identifier: Apache-2.0
#include "fblab/exact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "fblab/errors.hpp"
#include "fblab/solvers.hpp"

namespace fblab {

void HalfPlaneSpec::validate() const {
  const double len = std::hypot(normal[0], normal[1]);
  if (!(std::abs(len - 1.0) <= 1e-12)) {
    throw ParameterError(fmt::format("half-plane normal must be a unit vector, |n| = {}", len));
  }
  if (!std::isfinite(offset)) throw ParameterError("half-plane offset must be finite");
  if (kind == HalfPlaneKind::kCapillary &&
      !(theta > 0.0 && theta <= std::numbers::pi / 2 * (1.0 + 1e-12))) {
    throw ParameterError(fmt::format("capillary half-plane needs theta in (0, pi/2], got {}", theta));
  }
}

double HalfPlaneSpec::slope() const {
  if (kind == HalfPlaneKind::kBernoulli) return 1.0;
  if (std::abs(theta - std::numbers::pi / 2) <= 1e-12) return 1.0;
  return std::tan(theta);
}

ScalarField evaluate(const HalfPlaneSpec& spec, const GridDomain& grid) {
  spec.validate();
  const double a = spec.slope();
  const Point n = spec.normal;
  return sample(
      [&](Point y) {
        const double s = -((y[0] - spec.offset * n[0]) * n[0] + (y[1] - spec.offset * n[1]) * n[1]);
        return s > 0.0 ? a * s : 0.0;
      },
      grid);
}

ScalarField bent_half_plane(const GridDomain& grid, double slope, double bend) {
  if (!(slope > 0.0) || !std::isfinite(bend)) throw ParameterError("invalid bent half-plane");
  return sample(
      [&](Point y) {
        const double s = -y[0] + bend * (y[0] * y[0] - y[1] * y[1]);
        return s > 0.0 ? slope * s : 0.0;
      },
      grid);
}

std::vector<char> curvature_support(const ScalarField& u) {
  const GridDomain& g = u.domain();
  const double margin = 2.0 * g.spacing() * (1.0 - 1e-9);
  const std::vector<Point> fb = free_boundary(u);
  std::vector<char> keep(u.size(), 0);
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!(u[i] > 0.0)) continue;
    const Point p = g.node(i);
    bool far = true;
    for (const Point& q : fb) {
      if (distance(p, q) < margin) {
        far = false;
        break;
      }
    }
    keep[i] = far ? 1 : 0;
  }
  return keep;
}

ScalarField second_fundamental_norm(const ScalarField& u) {
  const GridDomain& g = u.domain();
  const std::vector<char> keep = curvature_support(u);
  const VectorField du = gradient(u);
  const MatrixField d2u = hessian(u);
  std::vector<double> out(u.size(), 0.0);
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!keep[i]) continue;
    const double p = du.values[i][0];
    const double q = g.dim() == 2 ? du.values[i][1] : 0.0;
    const SymMatrix2 H = d2u.values[i];
    const double w2 = 1.0 + p * p + q * q;
    if (g.dim() == 1) {
      out[i] = std::abs(H.xx) / std::pow(w2, 1.5);
      continue;
    }
    // g^-1 = I - Du Du^T / w2, applied to A = H / sqrt(w2).
    const double gi_xx = 1.0 - p * p / w2;
    const double gi_xy = -p * q / w2;
    const double gi_yy = 1.0 - q * q / w2;
    const double s = 1.0 / std::sqrt(w2);
    const double m00 = s * (gi_xx * H.xx + gi_xy * H.xy);
    const double m01 = s * (gi_xx * H.xy + gi_xy * H.yy);
    const double m10 = s * (gi_xy * H.xx + gi_yy * H.xy);
    const double m11 = s * (gi_xy * H.xy + gi_yy * H.yy);
    const double tr = m00 * m00 + 2.0 * m01 * m10 + m11 * m11;
    out[i] = std::sqrt(std::max(tr, 0.0));
  }
  return ScalarField(g, std::move(out));
}

double curvature_ratio(const ScalarField& u, double theta, double near_band,
                       const RegionMask& window) {
  if (!(u.domain() == window.domain())) throw GridMismatchError("window grid mismatch");
  if (!(theta > 0.0 && theta < std::numbers::pi)) throw ParameterError("theta must lie in (0, pi)");
  if (!(near_band > 0.0)) throw ParameterError("near band must be positive");
  const std::vector<char> keep = curvature_support(u);
  const ScalarField a = second_fundamental_norm(u);
  double worst = -1.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!keep[i] || !(u[i] < near_band) || window[i] < 0.5) continue;
    worst = std::max(worst, a[i]);
  }
  if (worst < 0.0) throw UndefinedError("no curvature samples in the band and window");
  return worst / std::sin(theta);
}

}  // namespace fblab
