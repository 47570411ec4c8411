// SPDX-License-Identifier: Apache-2.0
#include "fblab/monotone.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "fblab/errors.hpp"

namespace fblab {

namespace {

constexpr double kPi = std::numbers::pi;

// Four-point Gauss-Legendre rule on [0, 1].
constexpr std::array<double, 4> kGaussNodes{0.0694318442029737, 0.3300094782075719,
                                            0.6699905217924281, 0.9305681557970263};
constexpr std::array<double, 4> kGaussWeights{0.1739274225687269, 0.3260725774312731,
                                              0.3260725774312731, 0.1739274225687269};

struct RayEvent {
  bool lifted;  // root of sqrt(rho^2 + u^2) = radius instead of rho = radius
  double radius;
};

struct RaySample {
  double rho;
  double lifted;  // sqrt(rho^2 + u^2)
  InterpolatedSample field;
};

void add_quadratic_roots(double c0, double c1, double c2, std::vector<double>& out) {
  const auto keep = [&](double t) {
    if (t > 0.0 && t < 1.0) out.push_back(t);
  };
  const double scale = std::max({std::abs(c0), std::abs(c1), std::abs(c2)});
  if (scale == 0.0) return;
  if (std::abs(c2) <= 1e-14 * scale) {
    if (std::abs(c1) > 1e-14 * scale) keep(-c0 / c1);
    return;
  }
  const double disc = c1 * c1 - 4.0 * c2 * c0;
  if (disc < 0.0) return;
  const double q = -0.5 * (c1 + std::copysign(std::sqrt(disc), c1));
  if (q != 0.0) {
    keep(q / c2);
    keep(c0 / q);
  } else {
    keep(0.0);
  }
}

// Integral of fn(sample) rho^(n-1) d rho over the part of [0, rmax] along
// x + rho e where the multilinear interpolant of f is positive. The ray is
// cut at grid lines (where f is quadratic in rho), at zeros of f and at the
// requested events, and each piece gets a Gauss rule.
template <typename Fn>
double ray_integral(const ScalarField& f, Point x, Point e, double rmax,
                    std::span<const RayEvent> events, Fn&& fn) {
  const GridDomain& g = f.domain();
  const double h = g.spacing();
  const double L = g.half_width();
  std::vector<double> cuts{0.0, rmax};
  for (int a = 0; a < g.dim(); ++a) {
    if (std::abs(e[a]) < 1e-15) continue;
    const double lo = std::min(x[a], x[a] + rmax * e[a]);
    const double hi = std::max(x[a], x[a] + rmax * e[a]);
    const int k0 = static_cast<int>(std::ceil((lo + L) / h - 1e-12));
    const int k1 = static_cast<int>(std::floor((hi + L) / h + 1e-12));
    for (int k = k0; k <= k1; ++k) {
      const double rho = (g.coordinate(k) - x[a]) / e[a];
      if (rho > 0.0 && rho < rmax) cuts.push_back(rho);
    }
  }
  for (const RayEvent& ev : events) {
    if (!ev.lifted && ev.radius > 0.0 && ev.radius < rmax) cuts.push_back(ev.radius);
  }
  std::sort(cuts.begin(), cuts.end());

  const auto point = [&](double rho) {
    Point p{x[0] + rho * e[0], x[1] + rho * e[1]};
    p[0] = std::clamp(p[0], -L, L);
    p[1] = std::clamp(p[1], -L, L);
    return p;
  };
  const auto value = [&](double rho) { return f.interpolate(point(rho)); };
  const double power = g.dim() == 1 ? 0.0 : 1.0;

  double total = 0.0;
  std::vector<double> ts;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double a = cuts[s];
    const double b = cuts[s + 1];
    if (b - a <= 1e-14 * rmax) continue;
    const double ua = value(a);
    const double um = value(0.5 * (a + b));
    const double ub = value(b);
    if (ua <= 0.0 && um <= 0.0 && ub <= 0.0) continue;
    // u(t) on [0, 1] is exactly quadratic inside a cell.
    const double c0 = ua;
    const double c1 = -3.0 * ua + 4.0 * um - ub;
    const double c2 = 2.0 * ua - 4.0 * um + 2.0 * ub;
    const auto u_of = [&](double t) { return c0 + t * (c1 + t * c2); };
    ts.assign({0.0, 1.0});
    add_quadratic_roots(c0, c1, c2, ts);
    std::sort(ts.begin(), ts.end());
    // Lifted-distance events, located by bisection on each sub-piece.
    const std::size_t base = ts.size();
    for (const RayEvent& ev : events) {
      if (!ev.lifted) continue;
      const auto gfun = [&](double t) {
        const double rho = a + t * (b - a);
        const double u = std::max(u_of(t), 0.0);
        return rho * rho + u * u - ev.radius * ev.radius;
      };
      for (std::size_t k = 0; k + 1 < base; ++k) {
        const double probes[3] = {ts[k], 0.5 * (ts[k] + ts[k + 1]), ts[k + 1]};
        for (int q = 0; q < 2; ++q) {
          double lo = probes[q];
          double hi = probes[q + 1];
          double glo = gfun(lo);
          const double ghi = gfun(hi);
          if ((glo < 0.0) == (ghi < 0.0)) continue;
          for (int it = 0; it < 60 && hi - lo > 1e-16; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double gm = gfun(mid);
            if ((gm < 0.0) == (glo < 0.0)) {
              lo = mid;
              glo = gm;
            } else {
              hi = mid;
            }
          }
          ts.push_back(0.5 * (lo + hi));
        }
      }
    }
    std::sort(ts.begin(), ts.end());
    for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
      const double t0 = ts[k];
      const double t1 = ts[k + 1];
      if (t1 - t0 <= 1e-15) continue;
      if (!(u_of(0.5 * (t0 + t1)) > 0.0)) continue;
      const double r0 = a + t0 * (b - a);
      const double len = (t1 - t0) * (b - a);
      double piece = 0.0;
      for (int q = 0; q < 4; ++q) {
        const double rho = r0 + kGaussNodes[q] * len;
        RaySample smp{rho, 0.0, f.interpolate_with_gradient(point(rho))};
        const double u = std::max(smp.field.value, 0.0);
        smp.lifted = std::sqrt(rho * rho + u * u);
        piece += kGaussWeights[q] * fn(smp) * std::pow(rho, power);
      }
      total += piece * len;
    }
  }
  return total;
}

int ray_count(const GridDomain& g, double r) {
  return 4 * static_cast<int>(std::ceil(2.0 * kPi * r / g.spacing()));
}

// Sum over the polar rays about x of ray_integral, times the angular step.
template <typename Fn>
double ball_integral(const ScalarField& f, Point x, double r, std::span<const RayEvent> events,
                     Fn&& fn) {
  const GridDomain& g = f.domain();
  if (g.dim() == 1) {
    return ray_integral(f, x, {1.0, 0.0}, r, events, fn) +
           ray_integral(f, x, {-1.0, 0.0}, r, events, fn);
  }
  const int m = ray_count(g, r);
  const double dphi = 2.0 * kPi / m;
  double total = 0.0;
  for (int k = 0; k < m; ++k) {
    const double phi = (k + 0.5) * dphi;
    total += ray_integral(f, x, {std::cos(phi), std::sin(phi)}, r, events, fn);
  }
  return total * dphi;
}

void check_ball(const GridDomain& g, Point x, double r) {
  if (!std::isfinite(r) || !std::isfinite(x[0]) || !std::isfinite(x[1])) {
    throw ParameterError("center and radius must be finite");
  }
  if (r < 8.0 * g.spacing() * (1.0 - 1e-12)) {
    throw ResolutionError(fmt::format("radius {} is below 8h = {}", r, 8.0 * g.spacing()));
  }
  if (!g.contains_ball(x, r)) {
    throw DomainError(fmt::format("ball of radius {} about ({}, {}) leaves the grid", r, x[0], x[1]));
  }
}

double slope_area(const InterpolatedSample& s) {
  return std::sqrt(1.0 + s.gradient[0] * s.gradient[0] + s.gradient[1] * s.gradient[1]);
}

double squared_slope(const InterpolatedSample& s) {
  return s.gradient[0] * s.gradient[0] + s.gradient[1] * s.gradient[1];
}

// Integral of zeta(|y|/r) over B_r in R^n.
double cutoff_ball_integral(const Cutoff& zeta, int n, double r) {
  const double plateau = (1.0 - zeta.eps) * r;
  const double sphere = n == 1 ? 2.0 : 2.0 * kPi;
  double tail = 0.0;
  constexpr int kPieces = 32;
  const double len = (r - plateau) / kPieces;
  for (int p = 0; p < kPieces; ++p) {
    for (int q = 0; q < 4; ++q) {
      const double rho = plateau + (p + kGaussNodes[q]) * len;
      tail += kGaussWeights[q] * zeta.value(rho / r) * std::pow(rho, n - 1) * len;
    }
  }
  return unit_ball_volume(n) * std::pow(plateau, n) + sphere * tail;
}

}  // namespace

// ---------------------------------------------------------------------------

void GraphVarifold::validate() const {
  if (!(theta > 0.0 && theta < kPi)) {
    throw ParameterError(fmt::format("contact angle {} must lie in (0, pi)", theta));
  }
  if (u.min() < -1e-12) throw ConstraintError("graph height must be nonnegative");
}

GraphVarifold complement(const GraphVarifold& v) {
  return {v.u, kPi - v.theta,
          v.wet == WetSide::kPositive ? WetSide::kComplement : WetSide::kPositive};
}

void Cutoff::validate() const {
  if (!(eps > 0.0 && eps < 0.5)) throw ParameterError("cutoff eps must lie in (0, 1/2)");
}

double Cutoff::value(double t) const {
  if (t <= 1.0 - eps) return 1.0;
  if (t >= 1.0) return 0.0;
  const double s = (t - (1.0 - eps)) / eps;
  return 1.0 - s * s * s * (s * (6.0 * s - 15.0) + 10.0);
}

double Cutoff::derivative(double t) const {
  if (t <= 1.0 - eps || t >= 1.0) return 0.0;
  const double s = (t - (1.0 - eps)) / eps;
  return -30.0 * s * s * (s - 1.0) * (s - 1.0) / eps;
}

double unit_ball_volume(int n) {
  switch (n) {
    case 1:
      return 2.0;
    case 2:
      return kPi;
    case 3:
      return 4.0 * kPi / 3.0;
    default:
      throw ParameterError(fmt::format("unit ball volume is provided for n in 1..3, got {}", n));
  }
}

double density_ratio(const GraphVarifold& v, Point x, double r) {
  v.validate();
  const GridDomain& g = v.u.domain();
  check_ball(g, x, r);
  const double c = std::cos(v.theta);
  const bool positive = v.wet == WetSide::kPositive;
  // Interface plus the wet term restricted to {u > 0} in one integrand.
  const double wet_sign = positive ? -c : c;
  const RayEvent events[] = {{true, r}};
  double mass = ball_integral(v.u, x, r, events, [&](const RaySample& s) {
    return (s.lifted < r ? slope_area(s.field) : 0.0) + wet_sign;
  });
  const double ball = unit_ball_volume(g.dim()) * std::pow(r, g.dim());
  if (!positive) mass -= c * ball;
  return mass / ball;
}

double reg_density(const GraphVarifold& v, const Cutoff& zeta, Point x, double r) {
  v.validate();
  zeta.validate();
  const GridDomain& g = v.u.domain();
  check_ball(g, x, r);
  const double c = std::cos(v.theta);
  const bool positive = v.wet == WetSide::kPositive;
  const double wet_sign = positive ? -c : c;
  const double plateau = (1.0 - zeta.eps) * r;
  const RayEvent events[] = {{true, plateau}, {true, r}, {false, plateau}};
  double mass = ball_integral(v.u, x, r, events, [&](const RaySample& s) {
    return zeta.value(s.lifted / r) * slope_area(s.field) + wet_sign * zeta.value(s.rho / r);
  });
  if (!positive) mass -= c * cutoff_ball_integral(zeta, g.dim(), r);
  return mass / (unit_ball_volume(g.dim()) * std::pow(r, g.dim()));
}

double weiss(const ScalarField& v, Point x, double r) {
  const GridDomain& g = v.domain();
  check_ball(g, x, r);
  const int n = g.dim();
  const double bulk = ball_integral(v, x, r, {}, [](const RaySample& s) {
    return squared_slope(s.field) + 1.0;
  });
  const double sphere = sphere_quadrature(
      g, x, r,
      [&](Point p) {
        const double val = v.interpolate(p);
        return val * val;
      },
      n == 2 ? ray_count(g, r) : 0);
  return bulk / std::pow(r, n) - sphere / std::pow(r, n + 1);
}

double reg_weiss(const ScalarField& v, const Cutoff& zeta, Point x, double r) {
  zeta.validate();
  const GridDomain& g = v.domain();
  check_ball(g, x, r);
  const int n = g.dim();
  const double plateau = (1.0 - zeta.eps) * r;
  const RayEvent events[] = {{false, plateau}};
  const double total = ball_integral(v, x, r, events, [&](const RaySample& s) {
    const double t = s.rho / r;
    double val = zeta.value(t) * (squared_slope(s.field) + 1.0);
    const double dz = zeta.derivative(t);
    if (dz != 0.0) val += dz * s.field.value * s.field.value / (r * s.rho);
    return val;
  });
  return total / std::pow(r, n);
}

double convergence_gap(const GraphVarifold& V, Point xv, const ScalarField& v, Point xw,
                       double r) {
  const double n = v.domain().dim();
  const double lhs = density_ratio(V, xv, r) / (V.theta * V.theta);
  const double rhs = weiss(v, xw, r) / (2.0 * unit_ball_volume(static_cast<int>(n)));
  return std::abs(lhs - rhs);
}

// ---------------------------------------------------------------------------

std::string to_string(Quantity q) {
  switch (q) {
    case Quantity::kDensity:
      return "density";
    case Quantity::kWeiss:
      return "weiss";
    case Quantity::kRegDensity:
      return "reg_density";
    case Quantity::kRegWeiss:
      return "reg_weiss";
  }
  return "unknown";
}

namespace {

void check_radii(const std::vector<double>& radii) {
  if (radii.empty()) throw ParameterError("profile needs at least one radius");
  for (std::size_t k = 1; k < radii.size(); ++k) {
    if (!(radii[k] > radii[k - 1])) throw ParameterError("profile radii must increase strictly");
  }
}

}  // namespace

MonotoneProfile profile(Quantity q, const GraphVarifold& v, Point center,
                        const std::vector<double>& radii, const Cutoff& zeta) {
  if (q != Quantity::kDensity && q != Quantity::kRegDensity) {
    throw ParameterError(fmt::format("{} is not a density quantity", to_string(q)));
  }
  check_radii(radii);
  MonotoneProfile p{q, center, radii, {}};
  for (double r : radii) {
    p.values.push_back(q == Quantity::kDensity ? density_ratio(v, center, r)
                                               : reg_density(v, zeta, center, r));
  }
  return p;
}

MonotoneProfile profile(Quantity q, const ScalarField& v, Point center,
                        const std::vector<double>& radii, const Cutoff& zeta) {
  if (q != Quantity::kWeiss && q != Quantity::kRegWeiss) {
    throw ParameterError(fmt::format("{} is not a Weiss quantity", to_string(q)));
  }
  check_radii(radii);
  MonotoneProfile p{q, center, radii, {}};
  for (double r : radii) {
    p.values.push_back(q == Quantity::kWeiss ? weiss(v, center, r)
                                             : reg_weiss(v, zeta, center, r));
  }
  return p;
}

bool density_hypothesis_literal(double theta_value, const HypothesisParams& p) {
  const double c = std::cos(p.theta);
  return theta_value + std::max(-c, 0.0) <= (1.0 + p.eps_hat) * (1.0 - c) / 2.0 + 1e-12;
}

bool density_hypothesis(double theta_value, const HypothesisParams& p) {
  if (p.theta <= kPi / 2) return density_hypothesis_literal(theta_value, p);
  return density_hypothesis_literal(theta_value + std::cos(p.theta),
                                    {kPi - p.theta, p.eps_hat});
}

double default_slack(Quantity q, const GridDomain& grid, double r_min, double theta) {
  const bool weiss_like = q == Quantity::kWeiss || q == Quantity::kRegWeiss;
  const double scale =
      weiss_like ? unit_ball_volume(grid.dim()) / 2.0 : (1.0 - std::cos(theta)) / 2.0;
  return scale * (0.02 + 4.0 * grid.spacing() / r_min);
}

AuditReport audit(const MonotoneProfile& profile, double slack,
                  std::optional<HypothesisParams> hypothesis) {
  if (profile.values.empty()) throw ParameterError("cannot audit an empty profile");
  double worst = 0.0;
  for (std::size_t k = 1; k < profile.values.size(); ++k) {
    worst = std::max(worst, profile.values[k - 1] - profile.values[k]);
  }
  AuditReport report{profile.quantity, profile.center, profile.radii, profile.values,
                     worst <= slack, worst, std::nullopt};
  const bool density_like =
      profile.quantity == Quantity::kDensity || profile.quantity == Quantity::kRegDensity;
  if (hypothesis && density_like) {
    report.hypothesis_check = std::all_of(profile.values.begin(), profile.values.end(),
                                          [&](double t) { return density_hypothesis(t, *hypothesis); });
  }
  return report;
}

double relative_spread(const std::vector<double>& values) {
  if (values.empty()) throw ParameterError("spread of an empty list");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  if (mean == 0.0) return *hi == *lo ? 0.0 : std::numeric_limits<double>::infinity();
  return (*hi - *lo) / std::abs(mean);
}

nlohmann::json to_json(const AuditReport& report) {
  nlohmann::json j;
  j["quantity"] = to_string(report.quantity);
  j["center"] = {report.center[0], report.center[1]};
  j["radii"] = report.radii;
  j["values"] = report.values;
  j["verdict"] = report.verdict;
  j["max_violation"] = report.max_violation;
  j["hypothesis_check"] = report.hypothesis_check ? nlohmann::json(*report.hypothesis_check)
                                                  : nlohmann::json(nullptr);
  return j;
}

}  // namespace fblab
