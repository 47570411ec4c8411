// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "fblab/errors.hpp"
#include "fblab/exact.hpp"
#include "fblab/monotone.hpp"

using namespace fblab;
using std::numbers::pi;

namespace {

const GridDomain& grid() {
  static const GridDomain g = make_grid(2, 1.0, 256);
  return g;
}

GraphVarifold half_plane(double theta) {
  return {evaluate({HalfPlaneKind::kCapillary, {1.0, 0.0}, theta, 0.0}, grid()), theta};
}

ScalarField bernoulli() { return evaluate({HalfPlaneKind::kBernoulli, {1.0, 0.0}, 0.0, 0.0}, grid()); }

}  // namespace

TEST(UnitBall, Volumes) {
  EXPECT_DOUBLE_EQ(unit_ball_volume(1), 2.0);
  EXPECT_DOUBLE_EQ(unit_ball_volume(2), pi);
  EXPECT_DOUBLE_EQ(unit_ball_volume(3), 4 * pi / 3);
  EXPECT_THROW(unit_ball_volume(4), ParameterError);
}

TEST(Density, Examples) {
  const GraphVarifold v = half_plane(pi / 3);
  for (double r : {0.2, 0.5, 0.8}) EXPECT_NEAR(density_ratio(v, {0, 0}, r) / 0.25, 1.0, 0.01);
  EXPECT_EQ(density_ratio({ScalarField::zeros(grid()), 0.7}, {0, 0}, 0.5), 0.0);
  const GraphVarifold vertical{evaluate({HalfPlaneKind::kBernoulli, {1.0, 0.0}, 0.0, 0.0}, grid()), pi / 2};
  EXPECT_NEAR(density_ratio(vertical, {0, 0}, 0.5) / 0.5, 1.0, 0.01);
}

TEST(Density, Preconditions) {
  const GraphVarifold v = half_plane(0.3);
  EXPECT_THROW(density_ratio(v, {0, 0}, 0.03), ResolutionError);
  EXPECT_THROW(density_ratio(v, {0, 0.5}, 0.6), DomainError);
  EXPECT_THROW(density_ratio({bernoulli(), 3.5}, {0, 0}, 0.5), ParameterError);
}

TEST(Weiss, Examples) {
  for (double r : {0.2, 0.5, 0.8}) EXPECT_NEAR(weiss(bernoulli(), {0, 0}, r) / (pi / 2), 1.0, 0.015);
  const GridDomain g1 = make_grid(1, 1.0, 256);
  const ScalarField v1 = evaluate({HalfPlaneKind::kBernoulli, {1.0, 0.0}, 0.0, 0.0}, g1);
  EXPECT_NEAR(weiss(v1, {0, 0}, 0.5), 1.0, 0.015);
  EXPECT_EQ(weiss(ScalarField::zeros(grid()), {0, 0}, 0.5), 0.0);
}

TEST(Regularized, ZeroFields) {
  const Cutoff zeta{0.1};
  EXPECT_EQ(reg_density({ScalarField::zeros(grid()), 0.4}, zeta, {0, 0}, 0.5), 0.0);
  EXPECT_EQ(reg_weiss(ScalarField::zeros(grid()), zeta, {0, 0}, 0.5), 0.0);
}

TEST(Regularized, SandwichesOnExactFields) {
  const Cutoff zeta{0.1};
  const double s = 0.9 * 0.9;
  for (Point x : {Point{0, 0}, Point{0, 0.1}, Point{0, -0.15}}) {
    for (double r : {0.2, 0.4, 0.6}) {
      const GraphVarifold v = half_plane(pi / 3);
      const double upper = density_ratio(v, x, r);
      const double reg = reg_density(v, zeta, x, r);
      EXPECT_LE(reg, upper * 1.02);
      EXPECT_GE(reg, s * density_ratio(v, x, 0.9 * r) - 0.02 * upper);
      const double wu = weiss(bernoulli(), x, r);
      const double wr = reg_weiss(bernoulli(), zeta, x, r);
      EXPECT_LE(wr, wu * 1.02);
      EXPECT_GE(wr, s * weiss(bernoulli(), x, 0.9 * r) - 0.02 * wu);
    }
  }
  const double w = reg_weiss(bernoulli(), zeta, {0, 0}, 0.5);
  EXPECT_GE(w, 0.81 * pi / 2 * 0.98);
  EXPECT_LE(w, pi / 2 * 1.02);
}

TEST(Regularized, AveragingIdentity) {
  const Cutoff zeta{0.1};
  const ScalarField v = bent_half_plane(grid(), 1.0, 0.3);
  const double r = 0.5;
  // Midpoint rule in s over the support [(1 - eps) r, r] of zeta'.
  const int m = 64;
  const double a = (1 - zeta.eps) * r, ds = (r - a) / m;
  double avg = 0.0;
  for (int k = 0; k < m; ++k) {
    const double sk = a + (k + 0.5) * ds;
    avg += -zeta.derivative(sk / r) * sk * sk * weiss(v, {0, 0}, sk) * ds;
  }
  avg /= r * r * r;
  EXPECT_NEAR(reg_weiss(v, zeta, {0, 0}, r) / avg, 1.0, 0.02);
}

TEST(Cutoff, Shape) {
  const Cutoff z{0.1};
  EXPECT_EQ(z.value(0.5), 1.0);
  EXPECT_EQ(z.value(1.0), 0.0);
  EXPECT_NEAR(z.value(0.95), 0.5, 1e-12);
  EXPECT_NEAR(z.derivative(0.93), (z.value(0.93 + 1e-7) - z.value(0.93 - 1e-7)) / 2e-7, 1e-5);
  EXPECT_THROW(Cutoff{0.0}.validate(), ParameterError);
}

TEST(Profile, ConstantOnCones) {
  const std::vector<double> radii{0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  const MonotoneProfile d = profile(Quantity::kDensity, half_plane(pi / 3), {0, 0}, radii);
  for (double v : d.values) EXPECT_NEAR(v / 0.25, 1.0, 0.01);
  const MonotoneProfile w = profile(Quantity::kWeiss, bernoulli(), {0, 0}, radii);
  for (double v : w.values) EXPECT_NEAR(v / (pi / 2), 1.0, 0.015);
  EXPECT_THROW(profile(Quantity::kWeiss, bernoulli(), {0, 0}, {0.5, 0.4}), ParameterError);
  for (Quantity q : {Quantity::kRegDensity}) {
    const MonotoneProfile p = profile(q, half_plane(0.4), {0, 0}, radii);
    EXPECT_TRUE(audit(p, default_slack(q, grid(), 0.2, 0.4)).verdict);
  }
  const MonotoneProfile rw = profile(Quantity::kRegWeiss, bernoulli(), {0, 0}, radii);
  EXPECT_TRUE(audit(rw, default_slack(Quantity::kRegWeiss, grid(), 0.2)).verdict);
}

TEST(Audit, Examples) {
  const MonotoneProfile flat{Quantity::kWeiss, {0, 0}, {0.2, 0.3, 0.4}, {1.0, 1.0, 1.0}};
  const AuditReport a = audit(flat, 0.0);
  EXPECT_TRUE(a.verdict);
  EXPECT_EQ(a.max_violation, 0.0);
  EXPECT_FALSE(a.hypothesis_check.has_value());
  const MonotoneProfile drop{Quantity::kWeiss, {0, 0}, {0.2, 0.3}, {1.0, 0.9}};
  const AuditReport b = audit(drop, 0.01);
  EXPECT_FALSE(b.verdict);
  EXPECT_NEAR(b.max_violation, 0.1, 1e-15);
  const MonotoneProfile d = profile(Quantity::kDensity, half_plane(pi / 3), {0, 0}, {0.2, 0.4});
  const AuditReport c = audit(d, 0.01, HypothesisParams{pi / 3, 0.05});
  ASSERT_TRUE(c.hypothesis_check.has_value());
  EXPECT_TRUE(*c.hypothesis_check);
  const auto j = to_json(c);
  for (const char* key : {"quantity", "center", "radii", "values", "verdict", "max_violation", "hypothesis_check"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_TRUE(to_json(a)["hypothesis_check"].is_null());
}

TEST(Audit, DefaultSlack) {
  const GridDomain& g = grid();
  EXPECT_NEAR(default_slack(Quantity::kWeiss, g, 0.2), pi / 2 * (0.02 + 4 * g.spacing() / 0.2), 1e-15);
  EXPECT_NEAR(default_slack(Quantity::kDensity, g, 0.2, 0.4),
              (1 - std::cos(0.4)) / 2 * (0.02 + 4 * g.spacing() / 0.2), 1e-15);
}

TEST(Hypothesis, ComplementCovariance) {
  for (double theta : {0.3, pi / 3, 1.2}) {
    for (double eps_hat : {0.0, 0.05}) {
      const GraphVarifold v = half_plane(theta);
      const GraphVarifold c = complement(v);
      EXPECT_NEAR(c.theta, pi - theta, 1e-15);
      const double t = density_ratio(v, {0, 0}, 0.4);
      const double tc = density_ratio(c, {0, 0}, 0.4);
      EXPECT_NEAR(tc, (1 + std::cos(theta)) / 2, 0.01);
      EXPECT_EQ(density_hypothesis(t, {theta, eps_hat + 0.01}),
                density_hypothesis(tc, {pi - theta, eps_hat + 0.01}));
      EXPECT_EQ(density_hypothesis(t, {theta, 0.01}), density_hypothesis_literal(t, {theta, 0.01}));
    }
  }
}

TEST(ConvergenceGap, Examples) {
  for (double theta : {0.1, 0.05}) {
    const double analytic = std::abs((1 - std::cos(theta)) / (2 * theta * theta) - 0.25);
    EXPECT_NEAR(convergence_gap(half_plane(theta), bernoulli(), {0, 0}, 0.4) / analytic, 1.0, 0.01);
  }
  EXPECT_NEAR(std::abs((1 - std::cos(0.1)) / 0.02 - 0.25), 2.08e-4, 1e-6);
  EXPECT_EQ(convergence_gap({ScalarField::zeros(grid()), 0.1}, ScalarField::zeros(grid()), {0, 0}, 0.4), 0.0);
}

TEST(Spread, Relative) {
  EXPECT_EQ(relative_spread({2.0, 2.0}), 0.0);
  EXPECT_NEAR(relative_spread({1.0, 3.0}), 1.0, 1e-15);
}
