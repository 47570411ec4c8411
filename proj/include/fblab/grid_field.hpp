// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

namespace fblab {

/// A point of the base plane. For one-dimensional grids the second
/// coordinate is ignored and kept at zero.
using Point = std::array<double, 2>;

double distance(Point a, Point b);

/// Uniform Cartesian grid over the cube [-L, L]^n with (N+1)^n nodes,
/// n in {1, 2}. Node i along an axis sits at exactly -L + i*h, h = 2L/N.
/// Flat indices are row-major: the first coordinate varies slowest.
class GridDomain {
 public:
  GridDomain(int dim, double half_width, int nodes_per_axis);

  int dim() const { return dim_; }
  double half_width() const { return half_width_; }
  int nodes_per_axis() const { return n_; }
  int points_per_axis() const { return n_ + 1; }
  double spacing() const { return h_; }
  double cell_volume() const { return dim_ == 1 ? h_ : h_ * h_; }
  std::size_t node_count() const { return count_; }

  double coordinate(int i) const { return -half_width_ + i * h_; }
  std::size_t index(int i0, int i1 = 0) const {
    return dim_ == 1 ? static_cast<std::size_t>(i0)
                     : static_cast<std::size_t>(i0) * (n_ + 1) + i1;
  }
  std::array<int, 2> multi_index(std::size_t flat) const;
  Point node(std::size_t flat) const;
  bool on_boundary(std::size_t flat) const;

  /// True if p lies in the closed cube, up to an absolute tolerance.
  bool contains(Point p, double tol = 1e-12) const;
  /// True if the closed ball B_r(x) lies in the closed cube.
  bool contains_ball(Point x, double r, double tol = 1e-12) const;

  friend bool operator==(const GridDomain& a, const GridDomain& b) {
    return a.dim_ == b.dim_ && a.n_ == b.n_ && a.half_width_ == b.half_width_;
  }

 private:
  int dim_;
  double half_width_;
  int n_;
  double h_;
  std::size_t count_;
};

GridDomain make_grid(int dim, double half_width, int nodes_per_axis);

/// Value and gradient of the multilinear interpolant at a point.
struct InterpolatedSample {
  double value;
  Point gradient;
};

class ScalarField {
 public:
  ScalarField(GridDomain domain, std::vector<double> values);
  static ScalarField zeros(const GridDomain& domain);

  const GridDomain& domain() const { return domain_; }
  const std::vector<double>& values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }

  double min() const;
  double max() const;

  /// Multilinear interpolation; the point must lie in the closed cube.
  double interpolate(Point p) const;
  InterpolatedSample interpolate_with_gradient(Point p) const;

 private:
  GridDomain domain_;
  std::vector<double> values_;
};

struct VectorField {
  GridDomain domain;
  std::vector<Point> values;
};

struct SymMatrix2 {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;
};

struct MatrixField {
  GridDomain domain;
  std::vector<SymMatrix2> values;
};

/// Per-node quadrature weights in [0, 1]: each weight is the covered
/// fraction of the node's dual cell (clipped to the cube), estimated on a
/// 4^n sub-sample lattice.
class RegionMask {
 public:
  RegionMask(GridDomain domain, std::vector<double> weights);

  /// Weight of every node is the fraction of its dual-cell sub-samples for
  /// which `inside` holds.
  static RegionMask where(const GridDomain& domain,
                          const std::function<bool(Point)>& inside);
  static RegionMask full(const GridDomain& domain);
  static RegionMask empty(const GridDomain& domain);
  static RegionMask ball(const GridDomain& domain, Point center, double radius);

  const GridDomain& domain() const { return domain_; }
  const std::vector<double>& weights() const { return weights_; }
  double operator[](std::size_t i) const { return weights_[i]; }

  /// Interpolated weight >= 1/2; used to test arbitrary points.
  bool contains(Point p) const;

 private:
  GridDomain domain_;
  std::vector<double> weights_;
};

ScalarField sample(const std::function<double(Point)>& fn, const GridDomain& grid);

/// Central differences inside, one-sided second-order differences at the
/// cube faces. Exact for affine fields.
VectorField gradient(const ScalarField& f);

/// Three-point second differences (four-point one-sided at the faces);
/// mixed partials average d1(d2 f) and d2(d1 f).
MatrixField hessian(const ScalarField& f);

/// Sum of integrand * weight * h^n.
double integrate(const ScalarField& integrand, const RegionMask& mask);

/// Surface integral over the sphere of radius r about x of a pointwise
/// function evaluated at sphere points. For n = 2 this is the equal-angle
/// rule with `samples` nodes at angles 2*pi*(k + 1/2)/samples (0 selects
/// ceil(2*pi*r/h)); for n = 1 it is the two-point sum.
double sphere_quadrature(const GridDomain& grid, Point x, double r,
                         const std::function<double(Point)>& fn, int samples = 0);

/// Sphere integral of the multilinear interpolant of f.
double sphere_integral(const ScalarField& f, Point x, double r, int samples = 0);

/// Field files: a header line `dim,half_width,N`, then one line per value of
/// the first index holding the values along the second axis (a single line
/// in 1D), printed with 17 significant digits.
void write_field(const std::filesystem::path& path, const ScalarField& f);
ScalarField read_field(const std::filesystem::path& path);

}  // namespace fblab
