// SPDX-License-Identifier: Apache-2.0
#include "fblab/functionals.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "fblab/errors.hpp"

namespace fblab {

void SmoothingParams::validate(const GridDomain& grid) const {
  if (!(indicator_width > 0.0) || indicator_width > 0.1 * grid.half_width() * (1.0 + 1e-12)) {
    throw ParameterError(fmt::format("indicator width {} must lie in (0, 0.1 * half_width]",
                                     indicator_width));
  }
}

double indicator_step(double v, double width) {
  if (v <= 0.0) return 0.0;
  if (v >= width) return 1.0;
  const double s = 1.0 - v / width;
  return 1.0 - s * s * s;
}

double indicator_step_derivative(double v, double width) {
  if (v < 0.0 || v >= width) return 0.0;
  const double s = 1.0 - v / width;
  return 3.0 * s * s / width;
}

namespace {

void check_same_grid(const GridDomain& a, const GridDomain& b) {
  if (!(a == b)) throw GridMismatchError("field and region live on different grids");
}

void check_nonnegative(const ScalarField& u, const RegionMask& region) {
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (region[i] > 0.0 && u[i] < -1e-12) {
      const Point p = u.domain().node(i);
      throw ConstraintError(fmt::format(
          "capillary height is negative ({}) at node ({}, {})", u[i], p[0], p[1]));
    }
  }
}

double squared_norm(Point p) { return p[0] * p[0] + p[1] * p[1]; }

// Visits the axis neighbours of every node: fn(i, stride, has_minus, has_plus).
template <typename Fn>
void for_each_axis(const GridDomain& g, Fn&& fn) {
  const int n = g.nodes_per_axis();
  if (g.dim() == 1) {
    for (int i0 = 0; i0 <= n; ++i0) fn(static_cast<std::size_t>(i0), 0, std::size_t{1}, i0 > 0, i0 < n);
    return;
  }
  const std::size_t s0 = static_cast<std::size_t>(n) + 1;
  for (int i0 = 0; i0 <= n; ++i0) {
    for (int i1 = 0; i1 <= n; ++i1) {
      const std::size_t i = static_cast<std::size_t>(i0) * s0 + i1;
      fn(i, 0, s0, i0 > 0, i0 < n);
      fn(i, 1, std::size_t{1}, i1 > 0, i1 < n);
    }
  }
}

void zero_face_entries(const GridDomain& g, std::span<double> grad) {
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (g.on_boundary(i)) grad[i] = 0.0;
  }
}

// indicator_step(b) - indicator_step(a) without cancellation.
double indicator_change(double a, double b, double width) {
  const auto s = [width](double v) { return std::clamp(1.0 - v / width, 0.0, 1.0); };
  const double sa = s(a);
  const double sb = s(b);
  double ds = sa - sb;
  if (a > 0.0 && a < width && b > 0.0 && b < width) ds = (b - a) / width;
  return ds * (sa * sa + sa * sb + sb * sb);
}

}  // namespace

double ac_energy(const ScalarField& v, const RegionMask& region) {
  check_same_grid(v.domain(), region.domain());
  const VectorField dv = gradient(v);
  std::vector<double> integrand(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    integrand[i] = squared_norm(dv.values[i]) + (v[i] > 0.0 ? 1.0 : 0.0);
  }
  return integrate(ScalarField(v.domain(), std::move(integrand)), region);
}

double capillary_energy(const ScalarField& u, double theta, const RegionMask& region) {
  check_same_grid(u.domain(), region.domain());
  check_nonnegative(u, region);
  const double c = std::cos(theta);
  const VectorField du = gradient(u);
  std::vector<double> integrand(u.size(), 0.0);
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i] > 0.0) integrand[i] = std::sqrt(1.0 + squared_norm(du.values[i])) - c;
  }
  return integrate(ScalarField(u.domain(), std::move(integrand)), region);
}

namespace {

// Components that would push a zero node below zero are dropped.
void project_at_contact(std::span<const double> v, std::span<double> grad) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] <= 0.0 && grad[i] > 0.0) grad[i] = 0.0;
  }
}

}  // namespace

SmoothedEnergy ac_energy_smoothed(const ScalarField& v, const SmoothingParams& params,
                                  const RegionMask& region) {
  check_same_grid(v.domain(), region.domain());
  params.validate(v.domain());
  const AcSurrogate surrogate(v.domain(), region.weights(), params.indicator_width);
  std::vector<double> grad(v.size());
  const double e = surrogate.energy_and_gradient(v.values(), grad);
  project_at_contact(v.values(), grad);
  return {e, ScalarField(v.domain(), std::move(grad))};
}

SmoothedEnergy capillary_energy_smoothed(const ScalarField& u, double theta,
                                         const SmoothingParams& params,
                                         const RegionMask& region) {
  check_same_grid(u.domain(), region.domain());
  check_nonnegative(u, region);
  params.validate(u.domain());
  const CapillarySurrogate surrogate(u.domain(), region.weights(), theta,
                                     params.indicator_width);
  std::vector<double> grad(u.size());
  const double e = surrogate.energy_and_gradient(u.values(), grad);
  project_at_contact(u.values(), grad);
  return {e, ScalarField(u.domain(), std::move(grad))};
}

double expansion_gap(const ScalarField& u, double theta, const RegionMask& region) {
  check_same_grid(u.domain(), region.domain());
  check_nonnegative(u, region);
  if (!(theta > 0.0 && theta < M_PI)) throw ParameterError("theta must lie in (0, pi)");
  const VectorField du = gradient(u);
  std::vector<double> remainder(u.size(), 0.0);
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (region[i] <= 0.0 || !(u[i] > 0.0)) continue;
    const double p2 = squared_norm(du.values[i]);
    if (std::sqrt(p2) > 10.0 * theta) {
      throw PreconditionError(fmt::format(
          "slope {} exceeds 10 * theta = {} at node {}", std::sqrt(p2), 10.0 * theta, i));
    }
    // sqrt(1+p^2) - 1 is formed without cancellation.
    const double area_excess = p2 / (std::sqrt(1.0 + p2) + 1.0);
    const double one_minus_cos = 2.0 * std::sin(0.5 * theta) * std::sin(0.5 * theta);
    remainder[i] = area_excess + one_minus_cos - 0.5 * (p2 + theta * theta);
  }
  const double gap = integrate(ScalarField(u.domain(), std::move(remainder)), region);
  return std::abs(gap) / (theta * theta * theta);
}

// ---------------------------------------------------------------------------

AcSurrogate::AcSurrogate(const GridDomain& grid, std::vector<double> weights, double width)
    : grid_(grid), weights_(std::move(weights)), width_(width) {
  if (weights_.size() != grid_.node_count()) {
    throw GridMismatchError("surrogate weights do not match the grid");
  }
}

double AcSurrogate::energy(std::span<const double> v) const {
  const double inv_h2 = 1.0 / (grid_.spacing() * grid_.spacing());
  double sum = 0.0;
  for_each_axis(grid_, [&](std::size_t i, int, std::size_t stride, bool, bool has_plus) {
    if (!has_plus) return;
    const std::size_t j = i + stride;
    const double d = v[j] - v[i];
    sum += 0.5 * (weights_[i] + weights_[j]) * d * d * inv_h2;
  });
  for (std::size_t i = 0; i < v.size(); ++i) sum += weights_[i] * indicator_step(v[i], width_);
  return sum * grid_.cell_volume();
}

double AcSurrogate::energy_and_gradient(std::span<const double> v, std::span<double> grad,
                                        bool zero_faces) const {
  const double inv_h2 = 1.0 / (grid_.spacing() * grid_.spacing());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    sum += weights_[i] * indicator_step(v[i], width_);
    grad[i] = weights_[i] * indicator_step_derivative(v[i], width_);
  }
  for_each_axis(grid_, [&](std::size_t i, int, std::size_t stride, bool, bool has_plus) {
    if (!has_plus) return;
    const std::size_t j = i + stride;
    const double c = 0.5 * (weights_[i] + weights_[j]);
    const double d = v[j] - v[i];
    sum += c * d * d * inv_h2;
    grad[i] -= 2.0 * c * d * inv_h2;
    grad[j] += 2.0 * c * d * inv_h2;
  });
  if (zero_faces) zero_face_entries(grid_, grad);
  return sum * grid_.cell_volume();
}

double AcSurrogate::energy_change(std::span<const double> from,
                                  std::span<const double> to) const {
  const double inv_h2 = 1.0 / (grid_.spacing() * grid_.spacing());
  double sum = 0.0;
  for_each_axis(grid_, [&](std::size_t i, int, std::size_t stride, bool, bool has_plus) {
    if (!has_plus) return;
    const std::size_t j = i + stride;
    const double da = from[j] - from[i];
    const double db = to[j] - to[i];
    const double ddiff = (to[j] - from[j]) - (to[i] - from[i]);
    sum += 0.5 * (weights_[i] + weights_[j]) * ddiff * (da + db) * inv_h2;
  });
  for (std::size_t i = 0; i < to.size(); ++i) {
    if (weights_[i] != 0.0) sum += weights_[i] * indicator_change(from[i], to[i], width_);
  }
  return sum * grid_.cell_volume();
}

// ---------------------------------------------------------------------------

CapillarySurrogate::CapillarySurrogate(const GridDomain& grid, std::vector<double> weights,
                                       double theta, double width)
    : grid_(grid), weights_(std::move(weights)), width_(width) {
  if (weights_.size() != grid_.node_count()) {
    throw GridMismatchError("surrogate weights do not match the grid");
  }
  if (!(theta > 0.0 && theta < M_PI)) throw ParameterError("theta must lie in (0, pi)");
  const double s = std::sin(0.5 * theta);
  wet_cost_ = 2.0 * s * s;
  // Node weights are clipped dual-cell fractions; undo the clipping at the
  // faces before averaging them onto cells.
  const int n = grid_.nodes_per_axis();
  const auto unclipped = [&](std::size_t i) {
    const auto [i0, i1] = grid_.multi_index(i);
    double f = (i0 == 0 || i0 == n) ? 0.5 : 1.0;
    if (grid_.dim() == 2 && (i1 == 0 || i1 == n)) f *= 0.5;
    return std::min(weights_[i] / f, 1.0);
  };
  if (grid_.dim() == 1) {
    cell_weights_.resize(n);
    for (int c = 0; c < n; ++c) cell_weights_[c] = 0.5 * (unclipped(c) + unclipped(c + 1));
  } else {
    cell_weights_.resize(static_cast<std::size_t>(n) * n);
    for (int c0 = 0; c0 < n; ++c0) {
      for (int c1 = 0; c1 < n; ++c1) {
        cell_weights_[static_cast<std::size_t>(c0) * n + c1] =
            0.25 * (unclipped(grid_.index(c0, c1)) + unclipped(grid_.index(c0 + 1, c1)) +
                    unclipped(grid_.index(c0, c1 + 1)) + unclipped(grid_.index(c0 + 1, c1 + 1)));
      }
    }
  }
}

namespace {

// Visits every cell with the flat indices of its corners: fn(cell, a, b, c, d)
// where b = a + e0, c = a + e1, d = a + e0 + e1 (1D: fn(cell, a, b, a, b)).
template <typename Fn>
void for_each_cell(const GridDomain& g, Fn&& fn) {
  const int n = g.nodes_per_axis();
  if (g.dim() == 1) {
    for (int c = 0; c < n; ++c) fn(static_cast<std::size_t>(c), c, c + 1, c, c + 1);
    return;
  }
  for (int c0 = 0; c0 < n; ++c0) {
    for (int c1 = 0; c1 < n; ++c1) {
      fn(static_cast<std::size_t>(c0) * n + c1, g.index(c0, c1), g.index(c0 + 1, c1),
         g.index(c0, c1 + 1), g.index(c0 + 1, c1 + 1));
    }
  }
}

}  // namespace

std::vector<double> CapillarySurrogate::cell_slopes(std::span<const double> u) const {
  const double inv_h2 = 1.0 / (grid_.spacing() * grid_.spacing());
  std::vector<double> q(cell_weights_.size());
  if (grid_.dim() == 1) {
    for_each_cell(grid_, [&](std::size_t c, std::size_t a, std::size_t b, std::size_t,
                             std::size_t) {
      const double d = u[b] - u[a];
      q[c] = d * d * inv_h2;
    });
    return q;
  }
  for_each_cell(grid_, [&](std::size_t c, std::size_t a, std::size_t b, std::size_t cc,
                           std::size_t d) {
    const double e0 = u[b] - u[a];
    const double e1 = u[d] - u[cc];
    const double e2 = u[cc] - u[a];
    const double e3 = u[d] - u[b];
    q[c] = 0.5 * (e0 * e0 + e1 * e1 + e2 * e2 + e3 * e3) * inv_h2;
  });
  return q;
}

double CapillarySurrogate::energy(std::span<const double> u) const {
  const std::vector<double> q = cell_slopes(u);
  double sum = 0.0;
  for (std::size_t c = 0; c < q.size(); ++c) {
    if (cell_weights_[c] != 0.0) sum += cell_weights_[c] * q[c] / (std::sqrt(1.0 + q[c]) + 1.0);
  }
  for (std::size_t i = 0; i < u.size(); ++i) {
    sum += weights_[i] * wet_cost_ * indicator_step(u[i], width_);
  }
  return sum * grid_.cell_volume();
}

double CapillarySurrogate::energy_and_gradient(std::span<const double> u,
                                               std::span<double> grad,
                                               bool zero_faces) const {
  const double inv_h2 = 1.0 / (grid_.spacing() * grid_.spacing());
  const std::vector<double> q = cell_slopes(u);
  double sum = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    sum += weights_[i] * wet_cost_ * indicator_step(u[i], width_);
    grad[i] = weights_[i] * wet_cost_ * indicator_step_derivative(u[i], width_);
  }
  // dG/dq = 1 / (2 sqrt(1 + q)); dq/du is d_e / h^2 per edge (2 d / h^2 in 1D).
  const double edge_factor = grid_.dim() == 1 ? 2.0 : 1.0;
  for_each_cell(grid_, [&](std::size_t c, std::size_t a, std::size_t b, std::size_t cc,
                           std::size_t d) {
    const double w = cell_weights_[c];
    if (w == 0.0) return;
    sum += w * q[c] / (std::sqrt(1.0 + q[c]) + 1.0);
    const double k = w * edge_factor * inv_h2 / (2.0 * std::sqrt(1.0 + q[c]));
    const auto edge = [&](std::size_t lo, std::size_t hi) {
      const double g = k * (u[hi] - u[lo]);
      grad[hi] += g;
      grad[lo] -= g;
    };
    edge(a, b);
    if (grid_.dim() == 2) {
      edge(cc, d);
      edge(a, cc);
      edge(b, d);
    }
  });
  if (zero_faces) zero_face_entries(grid_, grad);
  return sum * grid_.cell_volume();
}

double CapillarySurrogate::energy_change(std::span<const double> from,
                                         std::span<const double> to) const {
  const double inv_h2 = 1.0 / (grid_.spacing() * grid_.spacing());
  const std::vector<double> qa = cell_slopes(from);
  const double half = grid_.dim() == 1 ? 1.0 : 0.5;
  double sum = 0.0;
  for_each_cell(grid_, [&](std::size_t c, std::size_t a, std::size_t b, std::size_t cc,
                           std::size_t d) {
    const double w = cell_weights_[c];
    if (w == 0.0) return;
    const auto term = [&](std::size_t lo, std::size_t hi) {
      const double da = from[hi] - from[lo];
      const double db = to[hi] - to[lo];
      const double dd = (to[hi] - from[hi]) - (to[lo] - from[lo]);
      return dd * (da + db);
    };
    double dq = term(a, b);
    if (grid_.dim() == 2) dq += term(cc, d) + term(a, cc) + term(b, d);
    dq *= half * inv_h2;
    const double sa = std::sqrt(1.0 + qa[c]);
    const double sb = std::sqrt(1.0 + qa[c] + dq);
    sum += w * dq / (sa + sb);
  });
  for (std::size_t i = 0; i < to.size(); ++i) {
    if (weights_[i] != 0.0) {
      sum += weights_[i] * wet_cost_ * indicator_change(from[i], to[i], width_);
    }
  }
  return sum * grid_.cell_volume();
}

}  // namespace fblab
