// SPDX-License-Identifier: Apache-2.0
#include "fblab/grid_field.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <string>

#include <fmt/format.h>

#include "fblab/errors.hpp"

namespace fblab {

double distance(Point a, Point b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

GridDomain::GridDomain(int dim, double half_width, int nodes_per_axis)
    : dim_(dim), half_width_(half_width), n_(nodes_per_axis) {
  if (dim != 1 && dim != 2) {
    throw ParameterError(fmt::format("grid dimension must be 1 or 2, got {}", dim));
  }
  if (!(half_width > 0.0) || !std::isfinite(half_width)) {
    throw ParameterError(fmt::format("half_width must be positive, got {}", half_width));
  }
  if (nodes_per_axis < 8) {
    throw ParameterError(
        fmt::format("nodes_per_axis must be at least 8, got {}", nodes_per_axis));
  }
  h_ = 2.0 * half_width / nodes_per_axis;
  if (!(h_ > 0.0) || !std::isfinite(h_)) {
    throw ParameterError("grid spacing is not a positive finite number");
  }
  const std::size_t per_axis = static_cast<std::size_t>(n_) + 1;
  count_ = dim == 1 ? per_axis : per_axis * per_axis;
}

std::array<int, 2> GridDomain::multi_index(std::size_t flat) const {
  if (dim_ == 1) return {static_cast<int>(flat), 0};
  const auto per_axis = static_cast<std::size_t>(n_) + 1;
  return {static_cast<int>(flat / per_axis), static_cast<int>(flat % per_axis)};
}

Point GridDomain::node(std::size_t flat) const {
  const auto [i0, i1] = multi_index(flat);
  return {coordinate(i0), dim_ == 1 ? 0.0 : coordinate(i1)};
}

bool GridDomain::on_boundary(std::size_t flat) const {
  const auto [i0, i1] = multi_index(flat);
  if (i0 == 0 || i0 == n_) return true;
  return dim_ == 2 && (i1 == 0 || i1 == n_);
}

bool GridDomain::contains(Point p, double tol) const {
  for (int a = 0; a < dim_; ++a) {
    if (std::abs(p[a]) > half_width_ + tol) return false;
  }
  return true;
}

bool GridDomain::contains_ball(Point x, double r, double tol) const {
  for (int a = 0; a < dim_; ++a) {
    if (std::abs(x[a]) + r > half_width_ + tol) return false;
  }
  return true;
}

GridDomain make_grid(int dim, double half_width, int nodes_per_axis) {
  return GridDomain(dim, half_width, nodes_per_axis);
}

// ---------------------------------------------------------------------------

ScalarField::ScalarField(GridDomain domain, std::vector<double> values)
    : domain_(domain), values_(std::move(values)) {
  if (values_.size() != domain_.node_count()) {
    throw ParameterError(fmt::format("field has {} values but the grid has {} nodes",
                                     values_.size(), domain_.node_count()));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      const Point p = domain_.node(i);
      throw SamplingError(
          fmt::format("non-finite field value at node {} ({}, {})", i, p[0], p[1]));
    }
  }
}

ScalarField ScalarField::zeros(const GridDomain& domain) {
  return ScalarField(domain, std::vector<double>(domain.node_count(), 0.0));
}

double ScalarField::min() const { return *std::min_element(values_.begin(), values_.end()); }
double ScalarField::max() const { return *std::max_element(values_.begin(), values_.end()); }

namespace {

// Cell index and local coordinate in [0, 1] along one axis.
inline void locate(const GridDomain& g, double x, int& cell, double& t) {
  const double s = (x + g.half_width()) / g.spacing();
  cell = std::clamp(static_cast<int>(std::floor(s)), 0, g.nodes_per_axis() - 1);
  t = s - cell;
}

}  // namespace

double ScalarField::interpolate(Point p) const {
  return interpolate_with_gradient(p).value;
}

InterpolatedSample ScalarField::interpolate_with_gradient(Point p) const {
  const GridDomain& g = domain_;
  const double h = g.spacing();
  int i0 = 0;
  double t0 = 0.0;
  locate(g, p[0], i0, t0);
  if (g.dim() == 1) {
    const double f0 = values_[i0];
    const double f1 = values_[i0 + 1];
    return {f0 + t0 * (f1 - f0), {(f1 - f0) / h, 0.0}};
  }
  int i1 = 0;
  double t1 = 0.0;
  locate(g, p[1], i1, t1);
  const double f00 = values_[g.index(i0, i1)];
  const double f01 = values_[g.index(i0, i1 + 1)];
  const double f10 = values_[g.index(i0 + 1, i1)];
  const double f11 = values_[g.index(i0 + 1, i1 + 1)];
  const double a = f00 + t1 * (f01 - f00);
  const double b = f10 + t1 * (f11 - f10);
  const double value = a + t0 * (b - a);
  const double d0 = ((1.0 - t1) * (f10 - f00) + t1 * (f11 - f01)) / h;
  const double d1 = ((1.0 - t0) * (f01 - f00) + t0 * (f11 - f10)) / h;
  return {value, {d0, d1}};
}

// ---------------------------------------------------------------------------

RegionMask::RegionMask(GridDomain domain, std::vector<double> weights)
    : domain_(domain), weights_(std::move(weights)) {
  if (weights_.size() != domain_.node_count()) {
    throw ParameterError("mask weight count does not match the grid");
  }
  for (double w : weights_) {
    if (!(w >= 0.0 && w <= 1.0)) throw ParameterError("mask weights must lie in [0, 1]");
  }
}

RegionMask RegionMask::where(const GridDomain& domain,
                             const std::function<bool(Point)>& inside) {
  constexpr int kSub = 4;
  const double h = domain.spacing();
  const double lim = domain.half_width();
  std::vector<double> offsets(kSub);
  for (int k = 0; k < kSub; ++k) offsets[k] = ((k + 0.5) / kSub - 0.5) * h;

  std::vector<double> weights(domain.node_count(), 0.0);
  const int total = domain.dim() == 1 ? kSub : kSub * kSub;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const Point c = domain.node(i);
    int covered = 0;
    if (domain.dim() == 1) {
      for (double o : offsets) {
        const double x = c[0] + o;
        if (std::abs(x) <= lim && inside({x, 0.0})) ++covered;
      }
    } else {
      for (double o0 : offsets) {
        const double x = c[0] + o0;
        if (std::abs(x) > lim) continue;
        for (double o1 : offsets) {
          const double y = c[1] + o1;
          if (std::abs(y) <= lim && inside({x, y})) ++covered;
        }
      }
    }
    weights[i] = static_cast<double>(covered) / total;
  }
  return RegionMask(domain, std::move(weights));
}

RegionMask RegionMask::full(const GridDomain& domain) {
  return where(domain, [](Point) { return true; });
}

RegionMask RegionMask::empty(const GridDomain& domain) {
  return RegionMask(domain, std::vector<double>(domain.node_count(), 0.0));
}

RegionMask RegionMask::ball(const GridDomain& domain, Point center, double radius) {
  return where(domain, [=](Point p) { return distance(p, center) < radius; });
}

bool RegionMask::contains(Point p) const {
  if (!domain_.contains(p)) return false;
  const GridDomain& g = domain_;
  int i0 = 0;
  double t0 = 0.0;
  locate(g, p[0], i0, t0);
  if (g.dim() == 1) return weights_[i0] + t0 * (weights_[i0 + 1] - weights_[i0]) >= 0.5;
  int i1 = 0;
  double t1 = 0.0;
  locate(g, p[1], i1, t1);
  const double a = weights_[g.index(i0, i1)] +
                   t1 * (weights_[g.index(i0, i1 + 1)] - weights_[g.index(i0, i1)]);
  const double b = weights_[g.index(i0 + 1, i1)] +
                   t1 * (weights_[g.index(i0 + 1, i1 + 1)] - weights_[g.index(i0 + 1, i1)]);
  return a + t0 * (b - a) >= 0.5;
}

// ---------------------------------------------------------------------------

ScalarField sample(const std::function<double(Point)>& fn, const GridDomain& grid) {
  std::vector<double> values(grid.node_count());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const Point p = grid.node(i);
    values[i] = fn(p);
    if (!std::isfinite(values[i])) {
      throw SamplingError(fmt::format("sampled function is not finite at node {} ({}, {})",
                                      i, p[0], p[1]));
    }
  }
  return ScalarField(grid, std::move(values));
}

namespace {

// First derivative along `axis` of the nodal data, stride-addressed.
std::vector<double> axis_derivative(const GridDomain& g, const std::vector<double>& f,
                                    int axis) {
  const int n = g.nodes_per_axis();
  const double h = g.spacing();
  const std::size_t stride = (g.dim() == 2 && axis == 0) ? static_cast<std::size_t>(n) + 1 : 1;
  std::vector<double> d(f.size());
  for (std::size_t flat = 0; flat < f.size(); ++flat) {
    const int i = g.multi_index(flat)[axis];
    if (i == 0) {
      d[flat] = (-3.0 * f[flat] + 4.0 * f[flat + stride] - f[flat + 2 * stride]) / (2.0 * h);
    } else if (i == n) {
      d[flat] = (3.0 * f[flat] - 4.0 * f[flat - stride] + f[flat - 2 * stride]) / (2.0 * h);
    } else {
      d[flat] = (f[flat + stride] - f[flat - stride]) / (2.0 * h);
    }
  }
  return d;
}

std::vector<double> axis_second_derivative(const GridDomain& g, const std::vector<double>& f,
                                           int axis) {
  const int n = g.nodes_per_axis();
  const double h2 = g.spacing() * g.spacing();
  const std::size_t s = (g.dim() == 2 && axis == 0) ? static_cast<std::size_t>(n) + 1 : 1;
  std::vector<double> d(f.size());
  for (std::size_t flat = 0; flat < f.size(); ++flat) {
    const int i = g.multi_index(flat)[axis];
    if (i == 0) {
      d[flat] = (2.0 * f[flat] - 5.0 * f[flat + s] + 4.0 * f[flat + 2 * s] - f[flat + 3 * s]) / h2;
    } else if (i == n) {
      d[flat] = (2.0 * f[flat] - 5.0 * f[flat - s] + 4.0 * f[flat - 2 * s] - f[flat - 3 * s]) / h2;
    } else {
      d[flat] = (f[flat + s] - 2.0 * f[flat] + f[flat - s]) / h2;
    }
  }
  return d;
}

}  // namespace

VectorField gradient(const ScalarField& f) {
  const GridDomain& g = f.domain();
  VectorField out{g, std::vector<Point>(f.size(), Point{0.0, 0.0})};
  for (int a = 0; a < g.dim(); ++a) {
    const auto d = axis_derivative(g, f.values(), a);
    for (std::size_t i = 0; i < d.size(); ++i) out.values[i][a] = d[i];
  }
  return out;
}

MatrixField hessian(const ScalarField& f) {
  const GridDomain& g = f.domain();
  MatrixField out{g, std::vector<SymMatrix2>(f.size())};
  const auto dxx = axis_second_derivative(g, f.values(), 0);
  for (std::size_t i = 0; i < f.size(); ++i) out.values[i].xx = dxx[i];
  if (g.dim() == 1) return out;
  const auto dyy = axis_second_derivative(g, f.values(), 1);
  const auto dx = axis_derivative(g, f.values(), 0);
  const auto dy = axis_derivative(g, f.values(), 1);
  const auto dxy = axis_derivative(g, dy, 0);
  const auto dyx = axis_derivative(g, dx, 1);
  for (std::size_t i = 0; i < f.size(); ++i) {
    out.values[i].yy = dyy[i];
    out.values[i].xy = 0.5 * (dxy[i] + dyx[i]);
  }
  return out;
}

double integrate(const ScalarField& integrand, const RegionMask& mask) {
  if (!(integrand.domain() == mask.domain())) {
    throw GridMismatchError("integrand and mask live on different grids");
  }
  double sum = 0.0;
  const auto& w = mask.weights();
  const auto& v = integrand.values();
  for (std::size_t i = 0; i < v.size(); ++i) sum += v[i] * w[i];
  return sum * integrand.domain().cell_volume();
}

double sphere_quadrature(const GridDomain& grid, Point x, double r,
                         const std::function<double(Point)>& fn, int samples) {
  const double h = grid.spacing();
  if (r < 4.0 * h * (1.0 - 1e-12)) {
    throw ResolutionError(fmt::format("sphere radius {} is below 4h = {}", r, 4.0 * h));
  }
  if (!grid.contains_ball(x, r)) {
    throw DomainError(fmt::format("sphere of radius {} about ({}, {}) leaves the grid", r,
                                  x[0], x[1]));
  }
  if (grid.dim() == 1) return fn({x[0] - r, 0.0}) + fn({x[0] + r, 0.0});
  const int m = samples > 0 ? samples : static_cast<int>(std::ceil(2.0 * std::numbers::pi * r / h));
  const double dphi = 2.0 * std::numbers::pi / m;
  double sum = 0.0;
  for (int k = 0; k < m; ++k) {
    const double phi = (k + 0.5) * dphi;
    Point p{x[0] + r * std::cos(phi), x[1] + r * std::sin(phi)};
    // Keep rounding from pushing tangent points outside the cube.
    p[0] = std::clamp(p[0], -grid.half_width(), grid.half_width());
    p[1] = std::clamp(p[1], -grid.half_width(), grid.half_width());
    sum += fn(p);
  }
  return sum * r * dphi;
}

double sphere_integral(const ScalarField& f, Point x, double r, int samples) {
  return sphere_quadrature(f.domain(), x, r, [&](Point p) { return f.interpolate(p); },
                           samples);
}

void write_field(const std::filesystem::path& path, const ScalarField& f) {
  std::ofstream out(path);
  if (!out) throw ParameterError(fmt::format("cannot write field file {}", path.string()));
  const GridDomain& g = f.domain();
  out << fmt::format("{},{:.17g},{}\n", g.dim(), g.half_width(), g.nodes_per_axis());
  const int rows = g.dim() == 1 ? 1 : g.points_per_axis();
  const int cols = g.points_per_axis();
  for (int r = 0; r < rows; ++r) {
    std::string line;
    for (int c = 0; c < cols; ++c) {
      const std::size_t i = g.dim() == 1 ? static_cast<std::size_t>(c) : g.index(r, c);
      if (c > 0) line += ',';
      line += fmt::format("{:.17g}", f[i]);
    }
    out << line << '\n';
  }
  if (!out) throw ParameterError(fmt::format("failed writing field file {}", path.string()));
}

ScalarField read_field(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError(fmt::format("cannot open field file {}", path.string()));
  std::string line;
  const auto fail = [&](const std::string& why) {
    return ParameterError(fmt::format("field file {}: {}", path.string(), why));
  };
  if (!std::getline(in, line)) throw fail("missing header");
  int dim = 0;
  int n = 0;
  double half_width = 0.0;
  if (std::sscanf(line.c_str(), "%d,%lf,%d", &dim, &half_width, &n) != 3) throw fail("bad header");
  const GridDomain g(dim, half_width, n);
  std::vector<double> values;
  values.reserve(g.node_count());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      const std::size_t next = std::min(line.find(',', pos), line.size());
      const std::string token = line.substr(pos, next - pos);
      char* end = nullptr;
      const double v = std::strtod(token.c_str(), &end);
      if (token.empty() || end != token.c_str() + token.size()) throw fail("bad value '" + token + "'");
      values.push_back(v);
      pos = next + 1;
    }
  }
  if (values.size() != g.node_count()) {
    throw fail(fmt::format("expected {} values, found {}", g.node_count(), values.size()));
  }
  return ScalarField(g, std::move(values));
}

}  // namespace fblab
