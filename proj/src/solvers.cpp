// SPDX-License-Identifier: Apache-2.0
#include "fblab/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "fblab/errors.hpp"
#include "fblab/functionals.hpp"

namespace fblab {

void SolveParams::validate() const {
  if (delta_schedule.empty()) throw ParameterError("delta schedule is empty");
  for (std::size_t k = 0; k < delta_schedule.size(); ++k) {
    if (!(delta_schedule[k] > 0.0)) throw ParameterError("delta schedule must be positive");
    if (k > 0 && !(delta_schedule[k] < delta_schedule[k - 1])) {
      throw ParameterError("delta schedule must be strictly decreasing");
    }
  }
  if (!(initial_step > 0.0)) throw ParameterError("initial step must be positive");
  if (!(backtrack > 0.0 && backtrack < 1.0)) throw ParameterError("backtrack must lie in (0, 1)");
  if (max_iterations < 1) throw ParameterError("max_iterations must be at least 1");
  if (!(tolerance > 0.0)) throw ParameterError("tolerance must be positive");
  if (harmonic_iterations < 0) throw ParameterError("harmonic_iterations must be >= 0");
  if (coarse_levels < 0) throw ParameterError("coarse_levels must be >= 0");
}

SolveParams SolveParams::defaults(const GridDomain& grid) {
  SolveParams p;
  const double h = grid.spacing();
  for (double d = 0.1 * grid.half_width(); d > 4.0 * h * (1.0 + 1e-9); d *= 0.5) {
    p.delta_schedule.push_back(d);
  }
  for (double f : {4.0, 2.0, 1.0, 0.5, 0.25}) {
    if (f * h <= 0.1 * grid.half_width() * (1.0 + 1e-12)) p.delta_schedule.push_back(f * h);
  }
  return p;
}

namespace {

GridDomain coarsened(const GridDomain& g) {
  return GridDomain(g.dim(), g.half_width(), g.nodes_per_axis() / 2);
}

bool can_coarsen(const GridDomain& g) {
  return g.nodes_per_axis() % 2 == 0 && g.nodes_per_axis() / 2 >= 16;
}

// Injection of face data onto the coarse grid (coarse node i = fine node 2i).
ScalarField restrict_injection(const ScalarField& fine, const GridDomain& coarse) {
  const GridDomain& fg = fine.domain();
  std::vector<double> out(coarse.node_count());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto [c0, c1] = coarse.multi_index(i);
    out[i] = fine[fg.index(2 * c0, 2 * c1)];
  }
  return ScalarField(coarse, std::move(out));
}

void copy_faces(const ScalarField& from, std::vector<double>& to) {
  const GridDomain& g = from.domain();
  for (std::size_t i = 0; i < to.size(); ++i) {
    if (g.on_boundary(i)) to[i] = from[i];
  }
}

double weighted_dot(std::span<const double> a, std::span<const double> b, double vol) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s * vol;
}

struct StageOutcome {
  int iterations = 0;
  double energy = 0.0;
  double gradient_norm = std::numeric_limits<double>::infinity();
  bool converged = false;
  std::vector<double> history;
};

// Accelerated projected gradient on {x >= 0 off the faces} with Armijo-type
// backtracking and function-value restart. Accepted iterates never increase
// the objective.
template <typename Objective>
StageOutcome minimize(const Objective& obj, const GridDomain& grid,
                                 std::vector<double>& x, const SolveParams& params,
                                 bool project, double& step) {
  const double vol = grid.cell_volume();
  const std::size_t n = x.size();
  std::vector<char> fixed(n, 0);
  for (std::size_t i = 0; i < n; ++i) fixed[i] = grid.on_boundary(i) ? 1 : 0;

  std::vector<double> y = x, x_prev = x, z(n), gy(n), d(n);
  double ex = obj.energy(x);
  double t = 1.0;
  StageOutcome out;
  out.history.reserve(static_cast<std::size_t>(params.max_iterations));

  for (int it = 0; it < params.max_iterations; ++it) {
    obj.energy_and_gradient(y, gy, true);
    double sq = 0.0;
    step = std::min(step / params.backtrack, params.initial_step);
    for (int tries = 0;; ++tries) {
      for (std::size_t i = 0; i < n; ++i) {
        double zi = fixed[i] ? y[i] : y[i] - step * gy[i];
        if (project && zi < 0.0) zi = 0.0;
        z[i] = zi;
        d[i] = zi - y[i];
      }
      sq = weighted_dot(d, d, vol);
      const double change = obj.energy_change(y, z);
      const double model = weighted_dot(gy, d, vol) + sq / (2.0 * step);
      if (change <= model || tries > 80) break;
      step *= params.backtrack;
    }
    const double gm = std::sqrt(sq) / step;
    out.iterations = it + 1;
    out.gradient_norm = gm;
    const double dx = obj.energy_change(x, z);
    if (dx <= 0.0) {
      x_prev.swap(x);
      x = z;
      ex += dx;
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      const double beta = (t - 1.0) / t_next;
      for (std::size_t i = 0; i < n; ++i) {
        double yi = x[i] + beta * (x[i] - x_prev[i]);
        if (project && yi < 0.0 && !fixed[i]) yi = 0.0;
        y[i] = yi;
      }
      t = t_next;
    } else {
      // The extrapolated point overshot: restart the momentum from x.
      y = x;
      t = 1.0;
    }
    out.history.push_back(ex);
    if (gm < params.tolerance) {
      out.converged = true;
      break;
    }
  }
  out.energy = ex;
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

ScalarField prolongate(const ScalarField& coarse, const GridDomain& fine) {
  const GridDomain& cg = coarse.domain();
  if (fine.nodes_per_axis() != 2 * cg.nodes_per_axis() || fine.dim() != cg.dim()) {
    throw GridMismatchError("prolongation needs a grid refined by exactly two");
  }
  std::vector<double> out(fine.node_count());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = coarse.interpolate(fine.node(i));
  return ScalarField(fine, std::move(out));
}

namespace {

// Accelerated descent on the Dirichlet energy with fixed face values.
std::vector<double> harmonic_descent(const GridDomain& g, std::vector<double> v, int iterations) {
  const double h = g.spacing();
  const double step = h * h / (8.0 * g.dim());
  const std::size_t n = v.size();
  const int npa = g.nodes_per_axis();
  const std::size_t s0 = g.dim() == 2 ? static_cast<std::size_t>(npa) + 1 : 1;
  std::vector<double> y = v, prev = v, grad(n, 0.0);
  double t = 1.0;
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      if (g.on_boundary(i)) {
        grad[i] = 0.0;
        continue;
      }
      double lap = y[i - 1] + y[i + 1] - 2.0 * y[i];
      if (g.dim() == 2) lap += y[i - s0] + y[i + s0] - 2.0 * y[i];
      grad[i] = -2.0 * lap / (h * h);
    }
    prev.swap(v);
    for (std::size_t i = 0; i < n; ++i) v[i] = y[i] - step * grad[i];
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double beta = (t - 1.0) / t_next;
    for (std::size_t i = 0; i < n; ++i) y[i] = v[i] + beta * (v[i] - prev[i]);
    t = t_next;
  }
  return v;
}

}  // namespace

ScalarField harmonic_extension(const GridDomain& grid, const ScalarField& boundary,
                               int iterations) {
  if (!(boundary.domain() == grid)) throw GridMismatchError("boundary data grid mismatch");
  std::vector<double> v;
  if (can_coarsen(grid)) {
    const GridDomain cg = coarsened(grid);
    const ScalarField coarse =
        harmonic_extension(cg, restrict_injection(boundary, cg), iterations);
    v = prolongate(coarse, grid).values();
  } else {
    // Start from the mean face value.
    double sum = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < boundary.size(); ++i) {
      if (grid.on_boundary(i)) {
        sum += boundary[i];
        ++count;
      }
    }
    v.assign(grid.node_count(), sum / count);
  }
  copy_faces(boundary, v);
  return ScalarField(grid, harmonic_descent(grid, std::move(v), iterations));
}

namespace {

enum class Problem { kAc, kCapillary };

struct LevelRange {
  double lo;  // inclusive lower bound on delta
  double hi;  // inclusive upper bound
};

void run_stages(Problem problem, const GridDomain& grid, double theta, double delta_scale,
                const SolveParams& params, LevelRange range, std::vector<double>& x,
                SolveResult& result, bool finest) {
  const std::vector<double> weights = RegionMask::full(grid).weights();
  double step = params.initial_step;
  for (double delta_raw : params.delta_schedule) {
    if (delta_raw < range.lo * (1.0 - 1e-9) || delta_raw > range.hi * (1.0 + 1e-9)) continue;
    const double delta = delta_raw * delta_scale;
    StageRecord rec{grid.nodes_per_axis(), delta, 0, 0.0, 0.0, false};
    if (problem == Problem::kAc) {
      const AcSurrogate obj(grid, weights, delta);
      auto out = minimize(obj, grid, x, params, true, step);
      rec.iterations = out.iterations;
      rec.final_energy = out.energy;
      rec.gradient_norm = out.gradient_norm;
      rec.converged = out.converged;
      if (finest) result.energy_history = std::move(out.history);
    } else {
      const CapillarySurrogate obj(grid, weights, theta, delta);
      auto out = minimize(obj, grid, x, params, true, step);
      rec.iterations = out.iterations;
      rec.final_energy = out.energy;
      rec.gradient_norm = out.gradient_norm;
      rec.converged = out.converged;
      if (finest) result.energy_history = std::move(out.history);
    }
    result.iterations += rec.iterations;
    result.stages.push_back(rec);
  }
}

std::vector<double> solve_level(Problem problem, const GridDomain& grid,
                                const ScalarField& boundary, double theta, double delta_scale,
                                const SolveParams& params, int levels_left, bool finest,
                                SolveResult& result) {
  const double h = grid.spacing();
  std::vector<double> x;
  LevelRange range{0.0, std::numeric_limits<double>::infinity()};
  const bool has_coarse = levels_left > 0 && can_coarsen(grid);
  if (has_coarse) {
    const GridDomain cg = coarsened(grid);
    const auto coarse = solve_level(problem, cg, restrict_injection(boundary, cg), theta,
                                    delta_scale, params, levels_left - 1, false, result);
    x = prolongate(ScalarField(cg, coarse), grid).values();
    copy_faces(boundary, x);
    for (double& xi : x) xi = std::max(xi, 0.0);
    range.hi = 4.0 * h;
  } else {
    x = harmonic_extension(grid, boundary, params.harmonic_iterations).values();
    for (double& xi : x) xi = std::max(xi, 0.0);
  }
  if (!finest) range.lo = h;
  run_stages(problem, grid, theta, delta_scale, params, range, x, result, finest);
  return x;
}

SolveResult solve(Problem problem, const GridDomain& grid, const ScalarField& boundary,
                  double theta, double delta_scale, const SolveParams& params) {
  params.validate();
  if (!(boundary.domain() == grid)) throw GridMismatchError("boundary data grid mismatch");
  for (std::size_t i = 0; i < boundary.size(); ++i) {
    if (grid.on_boundary(i) && boundary[i] < 0.0) {
      throw ParameterError(fmt::format("boundary data is negative at node {}", i));
    }
  }
  SolveResult result{ScalarField::zeros(grid), 0, 0.0, {}, {}, false};
  auto x = solve_level(problem, grid, boundary, theta, delta_scale, params,
                       params.coarse_levels, true, result);
  result.field = ScalarField(grid, std::move(x));
  if (!result.stages.empty()) {
    result.final_gradient_norm = result.stages.back().gradient_norm;
    result.converged = result.stages.back().converged;
  }
  return result;
}

}  // namespace

SolveResult solve_ac(const GridDomain& grid, const ScalarField& boundary,
                     const SolveParams& params) {
  return solve(Problem::kAc, grid, boundary, 0.0, 1.0, params);
}

SolveResult solve_capillary(const GridDomain& grid, const ScalarField& boundary, double theta,
                            const SolveParams& params) {
  if (!(theta > 0.0 && theta <= M_PI / 2 * (1.0 + 1e-12))) {
    throw ParameterError(fmt::format("capillary solves need theta in (0, pi/2], got {}", theta));
  }
  return solve(Problem::kCapillary, grid, boundary, theta, std::tan(std::min(theta, 1.5)),
               params);
}

// ---------------------------------------------------------------------------

std::vector<Point> free_boundary(const ScalarField& f) {
  const GridDomain& g = f.domain();
  std::vector<Point> pts;
  auto edge = [&](std::size_t i, std::size_t j) {
    const double fi = f[i];
    const double fj = f[j];
    if (fi > 0.0 && fj <= 0.0) {
      const double s = fi / (fi - fj);
      const Point a = g.node(i);
      const Point b = g.node(j);
      pts.push_back({a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])});
    } else if (fj > 0.0 && fi <= 0.0) {
      const double s = fj / (fj - fi);
      const Point a = g.node(j);
      const Point b = g.node(i);
      pts.push_back({a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])});
    }
  };
  const int n = g.nodes_per_axis();
  if (g.dim() == 1) {
    for (int i = 0; i < n; ++i) edge(i, i + 1);
    return pts;
  }
  for (int i0 = 0; i0 <= n; ++i0) {
    for (int i1 = 0; i1 <= n; ++i1) {
      if (i0 < n) edge(g.index(i0, i1), g.index(i0 + 1, i1));
      if (i1 < n) edge(g.index(i0, i1), g.index(i0, i1 + 1));
    }
  }
  return pts;
}

namespace {

double directed(std::span<const Point> from, std::span<const Point> to,
                const RegionMask& window) {
  double worst = 0.0;
  for (const Point& a : from) {
    if (!window.contains(a)) continue;
    double best = std::numeric_limits<double>::infinity();
    for (const Point& b : to) best = std::min(best, distance(a, b));
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace

double hausdorff_distance(std::span<const Point> a, std::span<const Point> b,
                          const RegionMask& window) {
  const auto inside = [&](std::span<const Point> s) {
    return std::any_of(s.begin(), s.end(), [&](const Point& p) { return window.contains(p); });
  };
  if (!inside(a) || !inside(b)) {
    throw UndefinedError("Hausdorff distance over an empty window restriction");
  }
  return std::max(directed(a, b, window), directed(b, a, window));
}

double free_boundary_slope(const ScalarField& f, double band) {
  const GridDomain& g = f.domain();
  const auto fb = free_boundary(f);
  if (fb.empty()) throw UndefinedError("field has no free boundary");
  const VectorField df = gradient(f);
  const int n = g.nodes_per_axis();
  std::vector<double> slopes;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!(f[i] > 0.0) || g.on_boundary(i)) continue;
    const auto [i0, i1] = g.multi_index(i);
    bool stencil_positive = f[g.index(i0 - 1, i1)] > 0.0 && f[g.index(i0 + 1, i1)] > 0.0;
    if (g.dim() == 2) {
      stencil_positive = stencil_positive && f[g.index(i0, i1 - 1)] > 0.0 &&
                         f[g.index(i0, i1 + 1)] > 0.0;
    }
    (void)n;
    if (!stencil_positive) continue;
    const Point p = g.node(i);
    double best = std::numeric_limits<double>::infinity();
    for (const Point& q : fb) best = std::min(best, distance(p, q));
    if (best <= band * (1.0 + 1e-9)) {
      slopes.push_back(std::hypot(df.values[i][0], df.values[i][1]));
    }
  }
  if (slopes.empty()) throw UndefinedError("no nodes in the free-boundary band");
  std::sort(slopes.begin(), slopes.end());
  const std::size_t m = slopes.size();
  return m % 2 == 1 ? slopes[m / 2] : 0.5 * (slopes[m / 2 - 1] + slopes[m / 2]);
}

}  // namespace fblab
