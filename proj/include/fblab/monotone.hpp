// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fblab/grid_field.hpp"

namespace fblab {

/// Which side of the interface carries the wetted region on the base plane.
enum class WetSide {
  /// Wet region {u > 0}: the liquid lies under the graph.
  kPositive,
  /// Wet region {u = 0}: the complement of the liquid, contact angle pi - theta.
  kComplement,
};

/// V = [graph of u over {u > 0}] - cos(theta) [wet region].
struct GraphVarifold {
  ScalarField u;
  double theta;
  WetSide wet = WetSide::kPositive;

  /// Throws ParameterError for theta outside (0, pi), ConstraintError if u
  /// has a node below -1e-12.
  void validate() const;
};

/// The same interface seen from the complementary region: angle pi - theta
/// and wet region {u = 0}.
GraphVarifold complement(const GraphVarifold& v);

/// Smooth decreasing cutoff: 1 on (-inf, 1 - eps], 0 on [1, inf), quintic
/// smoothstep in between.
struct Cutoff {
  double eps = 0.1;

  void validate() const;
  double value(double t) const;
  double derivative(double t) const;
};

double unit_ball_volume(int n);

/// Signed mass ratio ||V||(B_r(x)) / (omega_n r^n), with ball membership of
/// interface points measured by the lifted distance sqrt(|y - x|^2 + u^2).
double density_ratio(const GraphVarifold& v, Point x, double r);

/// r^-n int_{v>0, B_r} (|Dv|^2 + 1) - r^-n-1 int_{dB_r} v^2.
double weiss(const ScalarField& v, Point x, double r);

double reg_density(const GraphVarifold& v, const Cutoff& zeta, Point x, double r);

/// r^-n int_{v>0} zeta(|y-x|/r)(|Dv|^2 + 1) + r^-n-1 int_{v>0} zeta'(|y-x|/r) v^2/|y-x|.
double reg_weiss(const ScalarField& v, const Cutoff& zeta, Point x, double r);

/// |theta^-2 Theta_V(xv, r) - W_v(xw, r) / (2 omega_n)|.
double convergence_gap(const GraphVarifold& V, Point xv, const ScalarField& v, Point xw,
                       double r);
inline double convergence_gap(const GraphVarifold& V, const ScalarField& v, Point x,
                              double r) {
  return convergence_gap(V, x, v, x, r);
}

enum class Quantity { kDensity, kWeiss, kRegDensity, kRegWeiss };

std::string to_string(Quantity q);

struct MonotoneProfile {
  Quantity quantity;
  Point center;
  std::vector<double> radii;
  std::vector<double> values;
};

/// Profiles of Theta or Theta^zeta (the cutoff is ignored for Theta).
MonotoneProfile profile(Quantity q, const GraphVarifold& v, Point center,
                        const std::vector<double>& radii, const Cutoff& zeta = {});
/// Profiles of W or W^zeta.
MonotoneProfile profile(Quantity q, const ScalarField& v, Point center,
                        const std::vector<double>& radii, const Cutoff& zeta = {});

/// Density hypothesis Theta + (cos theta)_- <= (1 + eps_hat)(1 - cos theta)/2.
struct HypothesisParams {
  double theta;
  double eps_hat;
};

/// The hypothesis taken literally at the given angle.
bool density_hypothesis_literal(double theta_value, const HypothesisParams& p);
/// The hypothesis after reducing obtuse angles to pi - theta through the
/// complement, whose signed density is Theta + cos(theta).
bool density_hypothesis(double theta_value, const HypothesisParams& p);

struct AuditReport {
  Quantity quantity;
  Point center;
  std::vector<double> radii;
  std::vector<double> values;
  /// True if no consecutive drop exceeds the slack.
  bool verdict;
  /// Largest drop between consecutive radii, 0 for nondecreasing profiles.
  double max_violation;
  /// Density hypothesis at every radius (density profiles only).
  std::optional<bool> hypothesis_check;
};

/// scale * (0.02 + 4h / r_min), with scale omega_n/2 for Weiss quantities
/// and (1 - cos theta)/2 for densities.
double default_slack(Quantity q, const GridDomain& grid, double r_min, double theta = 0.0);

AuditReport audit(const MonotoneProfile& profile, double slack,
                  std::optional<HypothesisParams> hypothesis = std::nullopt);

/// Largest relative deviation from the mean, (max - min) / |mean|.
double relative_spread(const std::vector<double>& values);

nlohmann::json to_json(const AuditReport& report);

}  // namespace fblab
