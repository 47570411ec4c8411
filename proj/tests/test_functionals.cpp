// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "fblab/errors.hpp"
#include "fblab/functionals.hpp"

using namespace fblab;
using std::numbers::pi;

namespace {

double ramp(Point y) { return std::max(-y[0], 0.0); }

// A positive, non-harmonic field whose values straddle the indicator width.
ScalarField wavy(const GridDomain& g) {
  return sample(
      [](Point y) {
        return 0.04 + 0.03 * std::sin(3 * y[0] + 1) * std::cos(2 * y[1]) + 0.2 * std::max(-y[0], 0.0);
      },
      g);
}

// Central differences of the energy along random directions, compared with
// the discrete L^2 gradient.
template <class EnergyFn>
void check_directional_derivatives(const ScalarField& v, EnergyFn energy_of) {
  const GridDomain& g = v.domain();
  const ScalarField grad = energy_of(v).direction;
  std::mt19937 rng(20240611);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> p(g.node_count(), 0.0);
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (!g.on_boundary(k)) p[k] = uni(rng);
    }
    const double eps = 1e-6;
    std::vector<double> plus = v.values(), minus = v.values();
    double predicted = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      plus[k] += eps * p[k];
      minus[k] -= eps * p[k];
      predicted += grad[k] * p[k] * g.cell_volume();
    }
    const double fd = (energy_of(ScalarField(g, plus)).energy - energy_of(ScalarField(g, minus)).energy) /
                      (2 * eps);
    EXPECT_LT(std::abs(fd - predicted) / std::abs(fd), 1e-5) << "trial " << trial;
  }
}

}  // namespace

TEST(AcEnergy, Examples) {
  const GridDomain g = make_grid(2, 1.0, 256);
  const RegionMask disk = RegionMask::ball(g, {0, 0}, 1.0);
  EXPECT_EQ(ac_energy(ScalarField::zeros(g), disk), 0.0);
  EXPECT_NEAR(ac_energy(sample(ramp, g), disk) / pi, 1.0, 0.01);
  EXPECT_NEAR(ac_energy(sample([](Point) { return 1.0; }, g), disk) / pi, 1.0, 0.01);
}

TEST(CapillaryEnergy, Examples) {
  const GridDomain g = make_grid(2, 1.0, 256);
  const RegionMask disk = RegionMask::ball(g, {0, 0}, 1.0);
  EXPECT_EQ(capillary_energy(ScalarField::zeros(g), pi / 3, disk), 0.0);
  const double t = std::tan(pi / 3);
  const ScalarField u = sample([t](Point y) { return t * ramp(y); }, g);
  EXPECT_NEAR(capillary_energy(u, pi / 3, disk) / (1.5 * pi / 2), 1.0, 0.01);
  EXPECT_NEAR(capillary_energy(sample(ramp, g), pi / 2, disk) / (std::sqrt(2.0) * pi / 2), 1.0, 0.01);
  const ScalarField neg = sample([](Point) { return -1e-6; }, g);
  EXPECT_THROW(capillary_energy(neg, 0.3, disk), ConstraintError);
}

TEST(Indicator, ShapeAndDerivative) {
  const double w = 0.05;
  EXPECT_EQ(indicator_step(-1.0, w), 0.0);
  EXPECT_EQ(indicator_step(0.0, w), 0.0);
  EXPECT_EQ(indicator_step(w, w), 1.0);
  EXPECT_DOUBLE_EQ(indicator_step_derivative(0.0, w), 3.0 / w);
  for (double v : {0.003, 0.02, 0.045}) {
    const double fd = (indicator_step(v + 1e-7, w) - indicator_step(v - 1e-7, w)) / 2e-7;
    EXPECT_NEAR(indicator_step_derivative(v, w), fd, 1e-5);
  }
}

TEST(AcSmoothed, ZeroAndAffineAboveWidth) {
  const GridDomain g = make_grid(2, 1.0, 64);
  const RegionMask disk = RegionMask::ball(g, {0, 0}, 0.8);
  const SmoothingParams s{0.05};
  const SmoothedEnergy z = ac_energy_smoothed(ScalarField::zeros(g), s, disk);
  EXPECT_EQ(z.energy, 0.0);
  EXPECT_EQ(z.direction.min(), 0.0);
  EXPECT_EQ(z.direction.max(), 0.0);
  const ScalarField v = sample([](Point y) { return 2.0 + y[0]; }, g);
  EXPECT_NEAR(ac_energy_smoothed(v, s, disk).energy, ac_energy(v, disk), 1e-12);
}

TEST(AcSmoothed, GradientMatchesFiniteDifferences) {
  const GridDomain g = make_grid(2, 1.0, 128);
  const RegionMask full = RegionMask::full(g);
  check_directional_derivatives(wavy(g), [&](const ScalarField& f) {
    return ac_energy_smoothed(f, SmoothingParams{0.05}, full);
  });
}

TEST(CapillarySmoothed, GradientMatchesFiniteDifferences) {
  const GridDomain g = make_grid(2, 1.0, 128);
  const RegionMask full = RegionMask::full(g);
  for (double theta : {0.3, 1.2}) {
    check_directional_derivatives(wavy(g), [&](const ScalarField& f) {
      return capillary_energy_smoothed(f, theta, SmoothingParams{0.05}, full);
    });
  }
}

TEST(CapillarySmoothed, MatchesSharpAwayFromBand) {
  const GridDomain g = make_grid(2, 1.0, 256);
  const double theta = 0.4, t = std::tan(theta), w = 0.05;
  const ScalarField u = sample([t](Point y) { return t * ramp(y); }, g);
  EXPECT_EQ(capillary_energy_smoothed(ScalarField::zeros(g), theta, {w}, RegionMask::full(g)).energy, 0.0);
  const RegionMask away = RegionMask::where(
      g, [&](Point y) { return y[0] < -w / t - 0.05 && y[0] * y[0] + y[1] * y[1] < 0.81; });
  const double sharp = capillary_energy(u, theta, away);
  EXPECT_NEAR(capillary_energy_smoothed(u, theta, {w}, away).energy / sharp, 1.0, 0.01);
}

TEST(CapillaryEnergy, RightAngleHasNoWettingTerm) {
  const GridDomain g = make_grid(2, 1.0, 64);
  const RegionMask disk = RegionMask::ball(g, {0, 0}, 0.9);
  const ScalarField u = wavy(g);
  const VectorField du = gradient(u);
  std::vector<double> area(g.node_count());
  for (std::size_t k = 0; k < area.size(); ++k) {
    const Point p = du.values[k];
    area[k] = u[k] > 0 ? std::sqrt(1 + p[0] * p[0] + p[1] * p[1]) : 0.0;
  }
  EXPECT_NEAR(capillary_energy(u, pi / 2, disk), integrate(ScalarField(g, area), disk), 1e-12);
}

TEST(AcSmoothed, ApproachesSharpFromBelow) {
  const GridDomain g = make_grid(2, 1.0, 256);
  const RegionMask full = RegionMask::full(g);
  const ScalarField v = sample(ramp, g);
  const double sharp = ac_energy(v, full);
  double previous = -1.0;
  for (double w : {0.1, 0.05, 0.025}) {
    const double e = ac_energy_smoothed(v, {w}, full).energy;
    EXPECT_GT(e, previous);
    // The positivity set has perimeter 2 inside the cube.
    EXPECT_LT(sharp - e, w * 2.0 + 4 * g.spacing());
    EXPECT_LT(e, sharp + 4 * g.spacing());
    previous = e;
  }
}

TEST(SmoothingParams, WidthLimits) {
  const GridDomain g = make_grid(2, 1.0, 64);
  EXPECT_NO_THROW(SmoothingParams{0.1}.validate(g));
  EXPECT_THROW(SmoothingParams{0.2}.validate(g), ParameterError);
  EXPECT_THROW(SmoothingParams{0.0}.validate(g), ParameterError);
}

TEST(Surrogates, EnergyChangeAgreesWithDifference) {
  const GridDomain g = make_grid(2, 1.0, 32);
  const ScalarField a = wavy(g);
  std::vector<double> b = a.values();
  for (std::size_t k = 0; k < b.size(); k += 7) b[k] = std::max(0.0, b[k] - 0.01);
  const std::vector<double> w(g.node_count(), 1.0);
  const AcSurrogate ac(g, w, 0.05);
  const CapillarySurrogate cap(g, w, 0.3, 0.05);
  EXPECT_NEAR(ac.energy_change(a.values(), b), ac.energy(b) - ac.energy(a.values()), 1e-13);
  EXPECT_NEAR(cap.energy_change(a.values(), b), cap.energy(b) - cap.energy(a.values()), 1e-13);
}

TEST(ExpansionGap, Examples) {
  const double theta = 0.1;
  const auto field = [&](int n) {
    const GridDomain g = make_grid(2, 1.0, n);
    return std::pair{sample([&](Point y) { return theta * ramp(y); }, g), RegionMask::ball(g, {0, 0}, 1.0)};
  };
  const auto [u0, m0] = field(64);
  EXPECT_EQ(expansion_gap(ScalarField::zeros(u0.domain()), theta, m0), 0.0);
  const auto [u1, m1] = field(128);
  const auto [u2, m2] = field(256);
  const double e1 = expansion_gap(u1, theta, m1), e2 = expansion_gap(u2, theta, m2);
  EXPECT_LE(e2, 1.0);
  EXPECT_LT(std::max(e1, e2) / std::min(e1, e2), 2.0);
  const ScalarField steep = sample([](Point y) { return 2.0 * ramp(y); }, u1.domain());
  EXPECT_THROW(expansion_gap(steep, theta, m1), PreconditionError);
}
