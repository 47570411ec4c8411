// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <filesystem>
#include <numbers>

#include <gtest/gtest.h>

#include "fblab/errors.hpp"
#include "fblab/grid_field.hpp"

using namespace fblab;
using std::numbers::pi;

TEST(Grid, SpacingAndNodes) {
  EXPECT_DOUBLE_EQ(make_grid(2, 1.0, 256).spacing(), 0.0078125);
  const GridDomain g = make_grid(1, 1.0, 8);
  ASSERT_EQ(g.node_count(), 9u);
  for (int i = 0; i <= 8; ++i) EXPECT_DOUBLE_EQ(g.node(i)[0], -1.0 + 0.25 * i);
  EXPECT_THROW(make_grid(3, 1.0, 64), ParameterError);
  EXPECT_THROW(make_grid(2, -1.0, 64), ParameterError);
}

TEST(Grid, RowMajorIndexing) {
  const GridDomain g = make_grid(2, 1.0, 8);
  EXPECT_EQ(g.index(1, 2), 11u);
  EXPECT_EQ(g.multi_index(11), (std::array<int, 2>{1, 2}));
  EXPECT_DOUBLE_EQ(g.node(11)[0], -0.75);
  EXPECT_DOUBLE_EQ(g.node(11)[1], -0.5);
}

TEST(Sample, Examples) {
  const GridDomain g2 = make_grid(2, 1.0, 8);
  const ScalarField zero = sample([](Point) { return 0.0; }, g2);
  EXPECT_EQ(zero.max(), 0.0);
  const GridDomain g1 = make_grid(1, 1.0, 8);
  const ScalarField ramp = sample([](Point y) { return std::max(-y[0], 0.0); }, g1);
  EXPECT_DOUBLE_EQ(ramp[2], 0.5);
  const ScalarField sq = sample([](Point y) { return y[0] * y[0] + y[1] * y[1]; }, g2);
  EXPECT_DOUBLE_EQ(sq[g2.index(6, 6)], 0.5);
}

TEST(Gradient, AffineQuadraticConstant) {
  const GridDomain g = make_grid(2, 1.0, 16);
  const VectorField a = gradient(sample([](Point y) { return 3.0 * y[0]; }, g));
  for (const Point& p : a.values) {
    EXPECT_NEAR(p[0], 3.0, 1e-12);
    EXPECT_NEAR(p[1], 0.0, 1e-12);
  }
  const VectorField q = gradient(sample([](Point y) { return y[0] * y[0]; }, g));
  for (std::size_t k = 0; k < g.node_count(); ++k) {
    EXPECT_NEAR(q.values[k][0], 2.0 * g.node(k)[0], 1e-12);
  }
  for (const Point& p : gradient(sample([](Point) { return 4.0; }, g)).values) {
    EXPECT_EQ(p[0], 0.0);
    EXPECT_EQ(p[1], 0.0);
  }
}

TEST(Hessian, Examples) {
  const GridDomain g = make_grid(2, 1.0, 16);
  for (const SymMatrix2& m : hessian(sample([](Point y) { return y[0] * y[0] / 2; }, g)).values) {
    EXPECT_NEAR(m.xx, 1.0, 1e-10);
    EXPECT_NEAR(m.xy, 0.0, 1e-10);
  }
  for (const SymMatrix2& m : hessian(sample([](Point y) { return 2 * y[0] - y[1]; }, g)).values) {
    EXPECT_NEAR(std::abs(m.xx) + std::abs(m.xy) + std::abs(m.yy), 0.0, 1e-10);
  }
  const MatrixField b = hessian(sample([](Point y) { return y[0] * y[1]; }, g));
  for (std::size_t k = 0; k < g.node_count(); ++k) {
    if (!g.on_boundary(k)) EXPECT_NEAR(b.values[k].xy, 1.0, 1e-12);
  }
}

TEST(Integrate, DiskHalfDiskEmpty) {
  const GridDomain g = make_grid(2, 1.0, 512);
  const ScalarField one = sample([](Point) { return 1.0; }, g);
  EXPECT_NEAR(integrate(one, RegionMask::ball(g, {0, 0}, 0.8)) / (pi * 0.64), 1.0, 0.01);
  const RegionMask half =
      RegionMask::where(g, [](Point y) { return y[0] < 0 && y[0] * y[0] + y[1] * y[1] < 0.64; });
  EXPECT_NEAR(integrate(one, half) / (pi * 0.32), 1.0, 0.01);
  EXPECT_EQ(integrate(one, RegionMask::empty(g)), 0.0);
}

TEST(Integrate, BallAreaConvergesAtFirstOrder) {
  std::vector<double> err;
  for (int n : {32, 64, 128, 256}) {
    const GridDomain g = make_grid(2, 1.0, n);
    const double a = integrate(sample([](Point) { return 1.0; }, g), RegionMask::ball(g, {0.013, -0.021}, 0.61));
    err.push_back(std::abs(a - pi * 0.61 * 0.61));
  }
  const double order = std::log2(err.front() / err.back()) / 3.0;
  EXPECT_GE(order, 0.9);
}

TEST(Integrate, AdditiveOverDisjointMasks) {
  const GridDomain g = make_grid(2, 1.0, 128);
  const ScalarField f = sample([](Point y) { return 1.0 + y[0] * y[1]; }, g);
  const auto left = RegionMask::where(g, [](Point y) { return y[0] < 0.1; });
  const auto right = RegionMask::where(g, [](Point y) { return y[0] >= 0.1; });
  const double whole = integrate(f, RegionMask::full(g));
  // Partial-cell weights cover one layer of cells along the cut.
  EXPECT_NEAR(integrate(f, left) + integrate(f, right), whole, 2.0 * 2.0 * g.spacing());
}

TEST(Sphere, Examples) {
  const GridDomain g = make_grid(2, 1.0, 256);
  const ScalarField one = sample([](Point) { return 1.0; }, g);
  EXPECT_NEAR(sphere_integral(one, {0, 0}, 0.5) / pi, 1.0, 0.005);
  const GridDomain g1 = make_grid(1, 1.0, 256);
  EXPECT_DOUBLE_EQ(sphere_integral(sample([](Point) { return 1.0; }, g1), {0, 0}, 0.5), 2.0);
  const ScalarField pos2 = sample([](Point y) { return y[0] > 0 ? y[0] * y[0] : 0.0; }, g);
  EXPECT_NEAR(sphere_integral(pos2, {0, 0}, 1.0) / (pi / 2), 1.0, 0.005);
  EXPECT_THROW(sphere_integral(one, {0.8, 0}, 0.5), DomainError);
}

TEST(FieldFiles, RoundTrip) {
  const GridDomain g = make_grid(2, 1.5, 12);
  const ScalarField f = sample([](Point y) { return std::sin(3 * y[0]) * y[1] + 1.0 / 3.0; }, g);
  const auto path = std::filesystem::temp_directory_path() / "fblab_field_roundtrip.csv";
  write_field(path, f);
  const ScalarField r = read_field(path);
  EXPECT_TRUE(r.domain() == g);
  EXPECT_EQ(r.values(), f.values());
  std::filesystem::remove(path);
  EXPECT_THROW(read_field(path), ParameterError);
}
