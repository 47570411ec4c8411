// SPDX-License-Identifier: Apache-2.0
#include "fblab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>
#include <variant>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "fblab/errors.hpp"
#include "fblab/exact.hpp"
#include "fblab/functionals.hpp"
#include "fblab/monotone.hpp"

namespace fblab {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Config parsing

namespace {

struct Value;
using Array = std::vector<Value>;

struct Value {
  std::variant<double, std::string, bool, Array> data;
};

class ValueParser {
 public:
  ValueParser(std::string_view text, int line) : text_(text), line_(line) {}

  Value parse() {
    Value v = value();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected trailing characters");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw ConfigError(fmt::format("line {}: {}", line_, why));
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  Value value() {
    skip_space();
    if (pos_ >= text_.size()) fail("missing value");
    const char c = text_[pos_];
    if (c == '"') return {string()};
    if (c == '[') return {array()};
    if (text_.substr(pos_, 4) == "true") {
      pos_ += 4;
      return {true};
    }
    if (text_.substr(pos_, 5) == "false") {
      pos_ += 5;
      return {false};
    }
    return {number()};
  }

  std::string string() {
    ++pos_;
    std::string out;
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) ++pos_;
      out += text_[pos_++];
    }
    if (pos_ >= text_.size()) fail("unterminated string");
    ++pos_;
    return out;
  }

  Array array() {
    ++pos_;
    Array out;
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == ']') {
      ++pos_;
      return out;
    }
    while (true) {
      out.push_back(value());
      skip_space();
      if (pos_ >= text_.size()) fail("unterminated array");
      if (text_[pos_] == ',') {
        ++pos_;
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == ']') {
          ++pos_;
          return out;
        }
        continue;
      }
      if (text_[pos_] == ']') {
        ++pos_;
        return out;
      }
      fail("expected ',' or ']' in array");
    }
  }

  double number() {
    std::size_t end = pos_;
    while (end < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[end])) ||
                                  text_[end] == '.' || text_[end] == '-' || text_[end] == '+' ||
                                  text_[end] == '_')) {
      ++end;
    }
    std::string token(text_.substr(pos_, end - pos_));
    token.erase(std::remove(token.begin(), token.end(), '_'), token.end());
    if (token.empty()) fail("expected a value");
    std::istringstream is(token);
    is.imbue(std::locale::classic());
    double v = 0.0;
    is >> v;
    if (!is || is.peek() != std::char_traits<char>::eof() || !std::isfinite(v)) {
      fail(fmt::format("invalid number '{}'", token));
    }
    pos_ = end;
    return v;
  }

  std::string_view text_;
  int line_;
  std::size_t pos_ = 0;
};

// Removes a '#' comment that is not inside a string.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

int bracket_depth(const std::string& s) {
  int depth = 0;
  bool quoted = false;
  for (char c : s) {
    if (c == '"') quoted = !quoted;
    if (quoted) continue;
    if (c == '[') ++depth;
    if (c == ']') --depth;
  }
  return depth;
}

std::map<std::string, Value> parse_pairs(std::string_view text) {
  std::map<std::string, Value> out;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    const int start = line_no;
    // Arrays may continue over several lines.
    while (bracket_depth(line) > 0 && std::getline(in, raw)) {
      ++line_no;
      line += ' ' + trim(strip_comment(raw));
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("line {}: expected key = value", start));
    const std::string key = trim(line.substr(0, eq));
    if (key.empty() || !std::all_of(key.begin(), key.end(), [](char c) {
          return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
        })) {
      throw ConfigError(fmt::format("line {}: invalid key '{}'", start, key));
    }
    if (out.count(key)) throw ConfigError(fmt::format("line {}: duplicate key '{}'", start, key));
    out[key] = ValueParser(line.substr(eq + 1), start).parse();
  }
  return out;
}

class Fields {
 public:
  explicit Fields(std::map<std::string, Value> pairs) : pairs_(std::move(pairs)) {}

  const Value& get(const std::string& key) {
    const auto it = pairs_.find(key);
    if (it == pairs_.end()) throw ConfigError(fmt::format("missing key '{}'", key));
    used_.insert(key);
    return it->second;
  }

  double number(const std::string& key) {
    const Value& v = get(key);
    if (const double* d = std::get_if<double>(&v.data)) return *d;
    throw ConfigError(fmt::format("key '{}' must be a number", key));
  }

  int integer(const std::string& key) {
    const double d = number(key);
    if (d != std::floor(d) || std::abs(d) > 1e9) {
      throw ConfigError(fmt::format("key '{}' must be an integer", key));
    }
    return static_cast<int>(d);
  }

  std::string string(const std::string& key) {
    const Value& v = get(key);
    if (const std::string* s = std::get_if<std::string>(&v.data)) return *s;
    throw ConfigError(fmt::format("key '{}' must be a string", key));
  }

  static std::vector<double> numbers_of(const Value& v, const std::string& key) {
    const Array* a = std::get_if<Array>(&v.data);
    if (!a) throw ConfigError(fmt::format("key '{}' must be an array of numbers", key));
    std::vector<double> out;
    for (const Value& e : *a) {
      const double* d = std::get_if<double>(&e.data);
      if (!d) throw ConfigError(fmt::format("key '{}' must contain only numbers", key));
      out.push_back(*d);
    }
    return out;
  }

  std::vector<double> numbers(const std::string& key) { return numbers_of(get(key), key); }

  std::vector<std::vector<double>> rows(const std::string& key) {
    const Array* a = std::get_if<Array>(&get(key).data);
    if (!a) throw ConfigError(fmt::format("key '{}' must be an array of arrays", key));
    std::vector<std::vector<double>> out;
    for (const Value& e : *a) out.push_back(numbers_of(e, key));
    return out;
  }

  void reject_unknown() const {
    for (const auto& [key, value] : pairs_) {
      if (!used_.count(key)) throw ConfigError(fmt::format("unknown key '{}'", key));
    }
  }

 private:
  std::map<std::string, Value> pairs_;
  std::set<std::string> used_;
};

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"exact-validate", "monotonicity-audit",
                                              "theta-sweep", "curvature-sweep"};
  return names;
}

}  // namespace

GridDomain ExperimentConfig::grid() const { return GridDomain(dim, half_width, nodes_per_axis); }

SolveParams ExperimentConfig::solve_params() const {
  SolveParams p = delta_schedule ? SolveParams{} : SolveParams::defaults(grid());
  if (delta_schedule) p.delta_schedule = *delta_schedule;
  p.initial_step = initial_step;
  p.backtrack = backtrack;
  p.max_iterations = max_iterations;
  p.tolerance = tolerance;
  p.harmonic_iterations = harmonic_iterations;
  p.coarse_levels = coarse_levels;
  return p;
}

ExperimentConfig parse_config(std::string_view text) {
  Fields f(parse_pairs(text));
  ExperimentConfig c;
  c.experiment = f.string("experiment");
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), c.experiment) == names.end()) {
    throw ConfigError(fmt::format("unknown experiment '{}'", c.experiment));
  }
  c.dim = f.integer("dim");
  if (c.dim != 1 && c.dim != 2) throw ConfigError("dim must be 1 or 2");
  c.half_width = f.number("half_width");
  if (!(c.half_width > 0.0)) throw ConfigError("half_width must be positive");
  c.nodes_per_axis = f.integer("nodes_per_axis");
  if (c.nodes_per_axis < 8) throw ConfigError("nodes_per_axis must be at least 8");
  c.theta_list = f.numbers("theta_list");
  if (c.theta_list.empty()) throw ConfigError("theta_list is empty");
  c.radii_list = f.numbers("radii_list");
  if (c.radii_list.empty()) throw ConfigError("radii_list is empty");
  for (std::size_t k = 1; k < c.radii_list.size(); ++k) {
    if (!(c.radii_list[k] > c.radii_list[k - 1])) {
      throw ConfigError("radii_list must be strictly increasing");
    }
  }
  for (const auto& row : f.rows("centers")) {
    if (static_cast<int>(row.size()) != c.dim) {
      throw ConfigError(fmt::format("each center needs {} coordinate(s)", c.dim));
    }
    c.centers.push_back({row[0], c.dim == 2 ? row[1] : 0.0});
  }
  if (c.centers.empty()) throw ConfigError("centers is empty");
  c.cutoff_eps = f.number("cutoff_eps");
  c.epsilon_hat = f.number("epsilon_hat");
  if (!(c.epsilon_hat >= 0.0)) throw ConfigError("epsilon_hat must be nonnegative");
  c.boundary_data = f.string("boundary_data");
  if (c.boundary_data != "half-plane" && c.boundary_data != "bent") {
    throw ConfigError("boundary_data must be \"half-plane\" or \"bent\"");
  }
  c.bend = f.number("bend");
  c.near_band = f.number("near_band");
  c.window_radius = f.number("window_radius");
  c.field_path = f.string("field_path");
  const Value& ds = f.get("delta_schedule");
  if (const std::string* s = std::get_if<std::string>(&ds.data)) {
    if (*s != "auto") throw ConfigError("delta_schedule must be \"auto\" or an array");
  } else {
    c.delta_schedule = Fields::numbers_of(ds, "delta_schedule");
  }
  c.initial_step = f.number("initial_step");
  c.backtrack = f.number("backtrack");
  c.max_iterations = f.integer("max_iterations");
  c.tolerance = f.number("tolerance");
  c.harmonic_iterations = f.integer("harmonic_iterations");
  c.coarse_levels = f.integer("coarse_levels");
  f.reject_unknown();
  try {
    c.solve_params().validate();
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config file {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void validate_preconditions(const ExperimentConfig& c) {
  const GridDomain g = c.grid();
  const double h = g.spacing();
  const auto fail = [](const std::string& why) { throw PreconditionError(why); };
  const bool solves = c.experiment != "exact-validate";
  for (double t : c.theta_list) {
    if (!(t > 0.0 && t <= std::numbers::pi / 2 * (1.0 + 1e-12))) {
      fail(fmt::format("theta {} outside (0, pi/2]", t));
    }
  }
  if (c.experiment == "theta-sweep" || c.experiment == "curvature-sweep") {
    for (double t : c.theta_list) {
      if (t >= std::numbers::pi / 2 * (1.0 - 1e-12)) {
        fail("sweeps need theta < pi/2 (the rescaling divides by theta and tan theta)");
      }
    }
  }
  for (double r : c.radii_list) {
    if (r < 8.0 * h * (1.0 - 1e-12)) fail(fmt::format("radius {} is below 8h = {}", r, 8.0 * h));
    for (const Point& x : c.centers) {
      // Solved-pair centres may move by a few cells onto the free boundary.
      const double margin = c.experiment == "theta-sweep" ? 4.0 * h : 0.0;
      if (!g.contains_ball(x, r + margin)) {
        fail(fmt::format("ball of radius {} about ({}, {}) leaves the grid", r, x[0], x[1]));
      }
    }
  }
  if (!(c.cutoff_eps > 0.0 && c.cutoff_eps < 0.5)) fail("cutoff_eps must lie in (0, 1/2)");
  if (!(c.near_band > 0.0)) fail("near_band must be positive");
  if (!(c.window_radius > 0.0) || !g.contains_ball({0.0, 0.0}, c.window_radius)) {
    fail("window_radius must be positive and inside the grid");
  }
  if (c.boundary_data == "bent" && !std::isfinite(c.bend)) fail("bend must be finite");
  if (solves && c.delta_schedule) {
    for (double d : *c.delta_schedule) {
      if (d > 0.1 * c.half_width * (1.0 + 1e-12)) {
        fail(fmt::format("indicator width {} exceeds 0.1 * half_width", d));
      }
    }
  }
  if (c.experiment == "monotonicity-audit" && !c.field_path.empty()) {
    if (!fs::is_directory(c.field_path)) fail("field_path must name a directory of field files");
  }
}

// ---------------------------------------------------------------------------
// Output helpers

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.10g}", v);
}

class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::vector<std::string>& header, RunSummary& summary)
      : out_(path, std::ios::binary) {
    if (!out_) throw Error(fmt::format("cannot write {}", path.string()));
    summary.files.push_back(path);
    row(header);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (k > 0) out_ << ',';
      out_ << cells[k];
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

void write_json(const fs::path& path, const json& j, RunSummary& summary) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out << j.dump(2) << '\n';
  summary.files.push_back(path);
}

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

// Minimal line chart with optional log axes.
void write_svg(const fs::path& path, const std::string& title, const std::string& xlabel,
               const std::string& ylabel, const std::vector<Series>& series, bool log_x,
               bool log_y, RunSummary& summary) {
  constexpr double kW = 640, kH = 420, kLeft = 80, kRight = 20, kTop = 40, kBottom = 60;
  const auto tx = [&](double v) { return log_x ? std::log10(v) : v; };
  const auto ty = [&](double v) { return log_y ? std::log10(v) : v; };
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const Series& s : series) {
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (!std::isfinite(tx(s.x[k])) || !std::isfinite(ty(s.y[k]))) continue;
      x0 = std::min(x0, tx(s.x[k]));
      x1 = std::max(x1, tx(s.x[k]));
      y0 = std::min(y0, ty(s.y[k]));
      y1 = std::max(y1, ty(s.y[k]));
    }
  }
  if (!std::isfinite(x0)) {
    x0 = 0;
    x1 = 1;
    y0 = 0;
    y1 = 1;
  }
  if (x1 - x0 < 1e-12) {
    x0 -= 0.5;
    x1 += 0.5;
  }
  if (y1 - y0 < 1e-12) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  const auto px = [&](double v) { return kLeft + (tx(v) - x0) / (x1 - x0) * (kW - kLeft - kRight); };
  const auto py = [&](double v) { return kH - kBottom - (ty(v) - y0) / (y1 - y0) * (kH - kTop - kBottom); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out << fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
      "viewBox=\"0 0 {} {}\">\n",
      kW, kH, kW, kH);
  out << fmt::format("<!-- fblab {} -->\n", kVersion);
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << fmt::format(
      "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n"
      "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{3}\" stroke=\"black\"/>\n",
      kLeft, kH - kBottom, kW - kRight, kTop);
  out << fmt::format("<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
                     kW / 2, title);
  out << fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
                     (kLeft + kW - kRight) / 2, kH - 15, xlabel);
  out << fmt::format(
      "<text x=\"18\" y=\"{0}\" text-anchor=\"middle\" font-size=\"13\" "
      "transform=\"rotate(-90 18 {0})\">{1}</text>\n",
      (kTop + kH - kBottom) / 2, ylabel);
  const auto tick_label = [](double v, bool log) {
    return log ? fmt::format("{:.3g}", std::pow(10.0, v)) : fmt::format("{:.3g}", v);
  };
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0;
    const double yv = y0 + (y1 - y0) * k / 4.0;
    const double X = kLeft + (kW - kLeft - kRight) * k / 4.0;
    const double Y = kH - kBottom - (kH - kTop - kBottom) * k / 4.0;
    out << fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"11\">{}</text>\n",
                       X, kH - kBottom + 16, tick_label(xv, log_x));
    out << fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-size=\"11\">{}</text>\n",
                       kLeft - 6, Y + 4, tick_label(yv, log_y));
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    std::string pts;
    for (std::size_t k = 0; k < series[s].x.size(); ++k) {
      if (!std::isfinite(tx(series[s].x[k])) || !std::isfinite(ty(series[s].y[k]))) continue;
      pts += fmt::format("{:.2f},{:.2f} ", px(series[s].x[k]), py(series[s].y[k]));
    }
    const char* color = colors[s % 4];
    out << fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>\n",
                       color, pts);
    out << fmt::format(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"{}\">{}</text>\n", kW - kRight - 150,
        kTop + 16 * (s + 1), color, series[s].name);
  }
  out << "</svg>\n";
  summary.files.push_back(path);
}

// Runs fn(k) for k in [0, n) on FBLAB_THREADS workers (default 1).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  std::size_t threads = 1;
  if (const char* env = std::getenv("FBLAB_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) threads = static_cast<std::size_t>(v);
  }
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < n; k = next++) {
          try {
            fn(k);
          } catch (...) {
            errors[k] = std::current_exception();
          }
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

ScalarField boundary_for(const ExperimentConfig& c, const GridDomain& g, double slope) {
  return bent_half_plane(g, slope, c.boundary_data == "bent" ? c.bend : 0.0);
}

Point nearest(const std::vector<Point>& set, Point x) {
  if (set.empty()) throw UndefinedError("field has no free boundary");
  return *std::min_element(set.begin(), set.end(), [&](const Point& a, const Point& b) {
    return distance(a, x) < distance(b, x);
  });
}

std::vector<std::string> grid_cells(const GridDomain& g, double tolerance) {
  return {std::to_string(g.nodes_per_axis()), num(g.spacing()), num(tolerance)};
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

json run_info(const ExperimentConfig& c) {
  const GridDomain g = c.grid();
  json j;
  j["experiment"] = c.experiment;
  j["version"] = std::string(kVersion);
  j["dim"] = c.dim;
  j["half_width"] = c.half_width;
  j["nodes_per_axis"] = c.nodes_per_axis;
  j["spacing"] = g.spacing();
  j["tolerance"] = c.tolerance;
  j["theta_list"] = c.theta_list;
  j["radii_list"] = c.radii_list;
  json centers = json::array();
  for (const Point& p : c.centers) centers.push_back({p[0], p[1]});
  j["centers"] = centers;
  j["cutoff_eps"] = c.cutoff_eps;
  j["epsilon_hat"] = c.epsilon_hat;
  j["boundary_data"] = c.boundary_data;
  j["bend"] = c.bend;
  j["near_band"] = c.near_band;
  j["window_radius"] = c.window_radius;
  j["field_path"] = c.field_path;
  j["delta_schedule"] = c.solve_params().delta_schedule;
  j["initial_step"] = c.initial_step;
  j["backtrack"] = c.backtrack;
  j["max_iterations"] = c.max_iterations;
  j["harmonic_iterations"] = c.harmonic_iterations;
  j["coarse_levels"] = c.coarse_levels;
  return j;
}

// ---------------------------------------------------------------------------
// Experiments

void exact_validate(const ExperimentConfig& c, const fs::path& out, RunSummary& summary) {
  const GridDomain g = c.grid();
  const std::vector<std::string> head{"N", "h", "tolerance"};
  // Exact half-planes have their free boundary on {y1 = 0}; centres are
  // projected there.
  std::vector<Point> centers;
  for (const Point& x : c.centers) centers.push_back({0.0, x[1]});

  CsvWriter density(out / "exact_density.csv",
                    concat(head, {"theta", "center_x", "center_y", "r", "Theta", "target", "rel_error"}),
                    summary);
  for (double theta : c.theta_list) {
    const GraphVarifold V{evaluate({HalfPlaneKind::kCapillary, {1.0, 0.0}, theta, 0.0}, g), theta};
    const double target = (1.0 - std::cos(theta)) / 2.0;
    for (const Point& x : centers) {
      for (double r : c.radii_list) {
        const double t = density_ratio(V, x, r);
        density.row(concat(grid_cells(g, c.tolerance),
                           {num(theta), num(x[0]), num(x[1]), num(r), num(t), num(target),
                            num(std::abs(t / target - 1.0))}));
      }
    }
  }

  CsvWriter weiss_csv(out / "exact_weiss.csv",
                      concat(head, {"dim", "center_x", "center_y", "r", "W", "target", "rel_error"}),
                      summary);
  const ScalarField v = evaluate({HalfPlaneKind::kBernoulli, {1.0, 0.0}, 0.0, 0.0}, g);
  const double w_target = unit_ball_volume(g.dim()) / 2.0;
  for (const Point& x : centers) {
    for (double r : c.radii_list) {
      const double w = weiss(v, x, r);
      weiss_csv.row(concat(grid_cells(g, c.tolerance),
                           {std::to_string(g.dim()), num(x[0]), num(x[1]), num(r), num(w),
                            num(w_target), num(std::abs(w / w_target - 1.0))}));
    }
  }

  CsvWriter gap(out / "exact_gap.csv",
                concat(head, {"theta", "center_x", "center_y", "r", "gap", "analytic_gap", "rel_error"}),
                summary);
  for (double theta : c.theta_list) {
    const double slope = HalfPlaneSpec{HalfPlaneKind::kCapillary, {1.0, 0.0}, theta, 0.0}.slope();
    if (slope != std::tan(theta)) continue;
    const GraphVarifold V{evaluate({HalfPlaneKind::kCapillary, {1.0, 0.0}, theta, 0.0}, g), theta};
    const double analytic = std::abs((1.0 - std::cos(theta)) / (2.0 * theta * theta) - 0.25);
    for (const Point& x : centers) {
      for (double r : c.radii_list) {
        const double value = convergence_gap(V, v, x, r);
        gap.row(concat(grid_cells(g, c.tolerance),
                       {num(theta), num(x[0]), num(x[1]), num(r), num(value), num(analytic),
                        num(std::abs(value / analytic - 1.0))}));
      }
    }
  }
}

struct Solved {
  SolveResult result;
  int warnings = 0;
};

void monotonicity_audit(const ExperimentConfig& c, const fs::path& out, RunSummary& summary,
                        std::ostream& log) {
  const GridDomain g = c.grid();
  const SolveParams params = c.solve_params();
  const std::size_t nt = c.theta_list.size();
  // Task 0 is the Alt-Caffarelli field, task k + 1 the capillary field at theta_k.
  std::vector<ScalarField> fields(nt + 1, ScalarField::zeros(g));
  std::vector<int> converged(nt + 1, 1);
  const auto field_file = [](std::size_t k) {
    return k == 0 ? std::string("field_ac.csv") : fmt::format("field_capillary_{}.csv", k - 1);
  };
  if (!c.field_path.empty()) {
    for (std::size_t k = 0; k <= nt; ++k) {
      fields[k] = read_field(fs::path(c.field_path) / field_file(k));
      if (!(fields[k].domain() == g)) throw PreconditionError("loaded field grid differs from config");
    }
  } else {
    parallel_for(nt + 1, [&](std::size_t k) {
      SolveResult r = k == 0 ? solve_ac(g, boundary_for(c, g, 1.0), params)
                             : solve_capillary(g, boundary_for(c, g, std::tan(c.theta_list[k - 1])),
                                               c.theta_list[k - 1], params);
      fields[k] = r.field;
      converged[k] = r.converged ? 1 : 0;
    });
    for (std::size_t k = 0; k <= nt; ++k) {
      write_field(out / field_file(k), fields[k]);
      summary.files.push_back(out / field_file(k));
      if (!converged[k]) {
        ++summary.warnings;
        log << "warning: solve " << field_file(k) << " did not converge\n";
      }
    }
  }

  const Cutoff zeta{c.cutoff_eps};
  const double r_min = c.radii_list.front();
  CsvWriter csv(out / "profiles.csv",
                {"N", "h", "tolerance", "source", "theta", "quantity", "center_x", "center_y", "r",
                 "value", "converged"},
                summary);
  json reports = json::array();
  const auto emit = [&](const std::string& source, double theta, const MonotoneProfile& p,
                        double slack, std::optional<HypothesisParams> hyp, bool conv) {
    for (std::size_t k = 0; k < p.radii.size(); ++k) {
      csv.row(concat(grid_cells(g, c.tolerance),
                     {source, num(theta), to_string(p.quantity), num(p.center[0]), num(p.center[1]),
                      num(p.radii[k]), num(p.values[k]), conv ? "1" : "0"}));
    }
    json j = to_json(audit(p, slack, hyp));
    j["source"] = source;
    j["theta"] = theta;
    j["slack"] = slack;
    j["converged"] = conv;
    reports.push_back(j);
  };
  for (const Point& x : c.centers) {
    for (Quantity q : {Quantity::kWeiss, Quantity::kRegWeiss}) {
      emit("ac", 0.0, profile(q, fields[0], x, c.radii_list, zeta), default_slack(q, g, r_min),
           std::nullopt, converged[0] != 0);
    }
    for (std::size_t k = 0; k < nt; ++k) {
      const double theta = c.theta_list[k];
      const GraphVarifold V{fields[k + 1], theta};
      for (Quantity q : {Quantity::kDensity, Quantity::kRegDensity}) {
        emit("capillary", theta, profile(q, V, x, c.radii_list, zeta),
             default_slack(q, g, r_min, theta), HypothesisParams{theta, c.epsilon_hat},
             converged[k + 1] != 0);
      }
    }
  }
  json doc;
  doc["N"] = g.nodes_per_axis();
  doc["h"] = g.spacing();
  doc["tolerance"] = c.tolerance;
  doc["reports"] = reports;
  write_json(out / "audit.json", doc, summary);
}

void theta_sweep(const ExperimentConfig& c, const fs::path& out, RunSummary& summary,
                 std::ostream& log) {
  const GridDomain g = c.grid();
  const SolveParams params = c.solve_params();
  const std::size_t nt = c.theta_list.size();
  // Tasks 2k and 2k+1: capillary solve at theta_k and the matched AC solve
  // with boundary data theta^-1 times the capillary data.
  std::vector<std::optional<SolveResult>> results(2 * nt);
  parallel_for(2 * nt, [&](std::size_t task) {
    const double theta = c.theta_list[task / 2];
    const double slope = std::tan(theta);
    results[task] = task % 2 == 0 ? solve_capillary(g, boundary_for(c, g, slope), theta, params)
                                  : solve_ac(g, boundary_for(c, g, slope / theta), params);
  });
  const ScalarField v_exact = evaluate({HalfPlaneKind::kBernoulli, {1.0, 0.0}, 0.0, 0.0}, g);
  const RegionMask window = RegionMask::ball(g, {0.0, 0.0}, c.window_radius);
  const double omega = unit_ball_volume(g.dim());

  CsvWriter csv(out / "theta_sweep.csv",
                {"N", "h", "tolerance", "theta", "center_x", "center_y", "r", "gap_exact",
                 "gap_solved", "weiss_scale", "rel_gap_solved", "hausdorff", "converged_capillary",
                 "converged_ac"},
                summary);
  Series exact_series{"exact half-planes", {}, {}};
  Series solved_series{"solved pairs", {}, {}};
  json rows = json::array();
  for (std::size_t k = 0; k < nt; ++k) {
    const double theta = c.theta_list[k];
    const SolveResult& cap = *results[2 * k];
    const SolveResult& ac = *results[2 * k + 1];
    if (!cap.converged || !ac.converged) {
      ++summary.warnings;
      log << fmt::format("warning: theta {} solve did not converge\n", theta);
    }
    const GraphVarifold V_exact{evaluate({HalfPlaneKind::kCapillary, {1.0, 0.0}, theta, 0.0}, g),
                                theta};
    const GraphVarifold V{cap.field, theta};
    const std::vector<Point> fb_cap = free_boundary(cap.field);
    const std::vector<Point> fb_ac = free_boundary(ac.field);
    double hd = std::numeric_limits<double>::quiet_NaN();
    try {
      hd = hausdorff_distance(fb_cap, fb_ac, window);
    } catch (const UndefinedError&) {
    }
    for (const Point& x0 : c.centers) {
      const Point xe{0.0, x0[1]};
      const Point xc = fb_cap.empty() ? x0 : nearest(fb_cap, x0);
      const Point xa = fb_ac.empty() ? x0 : nearest(fb_ac, x0);
      for (std::size_t ri = 0; ri < c.radii_list.size(); ++ri) {
        const double r = c.radii_list[ri];
        const double ge = convergence_gap(V_exact, v_exact, xe, r);
        const double gs = convergence_gap(V, xc, ac.field, xa, r);
        const double scale = weiss(ac.field, xa, r) / (2.0 * omega);
        csv.row(concat(grid_cells(g, c.tolerance),
                       {num(theta), num(xc[0]), num(xc[1]), num(r), num(ge), num(gs), num(scale),
                        num(gs / scale), num(hd), cap.converged ? "1" : "0",
                        ac.converged ? "1" : "0"}));
        if (&x0 == &c.centers.front() && ri == 0) {
          exact_series.x.push_back(theta);
          exact_series.y.push_back(ge);
          solved_series.x.push_back(theta);
          solved_series.y.push_back(gs);
        }
      }
    }
  }
  // Exponent of the exact gap between consecutive angles.
  json exponents = json::array();
  for (std::size_t k = 1; k < exact_series.x.size(); ++k) {
    exponents.push_back(std::log(exact_series.y[k - 1] / exact_series.y[k]) /
                        std::log(exact_series.x[k - 1] / exact_series.x[k]));
  }
  json doc;
  doc["N"] = g.nodes_per_axis();
  doc["h"] = g.spacing();
  doc["tolerance"] = c.tolerance;
  doc["r"] = c.radii_list.front();
  doc["theta"] = exact_series.x;
  doc["gap_exact"] = exact_series.y;
  doc["gap_solved"] = solved_series.y;
  doc["exact_gap_exponents"] = exponents;
  write_json(out / "theta_sweep_summary.json", doc, summary);
  write_svg(out / "theta_sweep.svg", "convergence gap vs theta", "theta", "gap",
            {exact_series, solved_series}, true, true, summary);
}

void curvature_sweep(const ExperimentConfig& c, const fs::path& out, RunSummary& summary,
                     std::ostream& log) {
  const GridDomain g = c.grid();
  const SolveParams params = c.solve_params();
  const std::size_t nt = c.theta_list.size();
  std::vector<std::optional<SolveResult>> results(nt);
  parallel_for(nt, [&](std::size_t k) {
    const double theta = c.theta_list[k];
    results[k] = solve_capillary(g, boundary_for(c, g, std::tan(theta)), theta, params);
  });
  const RegionMask window = RegionMask::ball(g, {0.0, 0.0}, c.window_radius);
  CsvWriter csv(out / "curvature_sweep.csv",
                {"N", "h", "tolerance", "theta", "boundary_data", "bend", "near_band",
                 "window_radius", "ratio_solved", "ratio_exact", "converged"},
                summary);
  Series solved{"solved", {}, {}};
  Series exact{"exact half-plane", {}, {}};
  for (std::size_t k = 0; k < nt; ++k) {
    const double theta = c.theta_list[k];
    const SolveResult& res = *results[k];
    if (!res.converged) {
      ++summary.warnings;
      log << fmt::format("warning: theta {} solve did not converge\n", theta);
    }
    const auto ratio = [&](const ScalarField& u) {
      try {
        return curvature_ratio(u, theta, c.near_band, window);
      } catch (const UndefinedError&) {
        return std::numeric_limits<double>::quiet_NaN();
      }
    };
    const double rs = ratio(res.field);
    const double re =
        ratio(evaluate({HalfPlaneKind::kCapillary, {1.0, 0.0}, theta, 0.0}, g));
    csv.row(concat(grid_cells(g, c.tolerance),
                   {num(theta), c.boundary_data, num(c.boundary_data == "bent" ? c.bend : 0.0),
                    num(c.near_band), num(c.window_radius), num(rs), num(re),
                    res.converged ? "1" : "0"}));
    solved.x.push_back(theta);
    solved.y.push_back(rs);
    exact.x.push_back(theta);
    exact.y.push_back(re);
  }
  const auto [lo, hi] = std::minmax_element(solved.y.begin(), solved.y.end());
  json doc;
  doc["N"] = g.nodes_per_axis();
  doc["h"] = g.spacing();
  doc["tolerance"] = c.tolerance;
  doc["theta"] = solved.x;
  doc["ratio_solved"] = solved.y;
  doc["ratio_exact"] = exact.y;
  doc["max_ratio"] = *hi;
  doc["max_over_min"] = *lo > 0.0 ? json(*hi / *lo) : json(nullptr);
  write_json(out / "curvature_sweep_summary.json", doc, summary);
  write_svg(out / "curvature_sweep.svg", "curvature ratio |A|/sin(theta)", "theta", "ratio",
            {solved, exact}, false, false, summary);
}

}  // namespace

RunSummary run_experiment(const ExperimentConfig& config, const fs::path& out_dir,
                          std::ostream& log) {
  validate_preconditions(config);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (!fs::is_directory(out_dir)) {
    throw Error(fmt::format("cannot create output directory {}", out_dir.string()));
  }
  RunSummary summary;
  if (config.experiment == "exact-validate") {
    exact_validate(config, out_dir, summary);
  } else if (config.experiment == "monotonicity-audit") {
    monotonicity_audit(config, out_dir, summary, log);
  } else if (config.experiment == "theta-sweep") {
    theta_sweep(config, out_dir, summary, log);
  } else {
    curvature_sweep(config, out_dir, summary, log);
  }
  json info = run_info(config);
  info["warnings"] = summary.warnings;
  write_json(out_dir / "run_info.json", info, summary);
  return summary;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Numerical lab for one-phase Bernoulli and small-angle capillary problems"};
  app.set_version_flag("--version", std::string(kVersion));
  std::string experiment;
  std::string config_path;
  std::string out_dir;
  app.add_option("experiment", experiment, "exact-validate | monotonicity-audit | theta-sweep | curvature-sweep")
      ->required()
      ->check(CLI::IsMember(experiment_names()));
  app.add_option("--config", config_path, "experiment config file")->required();
  app.add_option("--out", out_dir, "output directory")->required();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  try {
    const ExperimentConfig config = load_config(config_path);
    if (config.experiment != experiment) {
      throw ConfigError(fmt::format("config is for '{}' but '{}' was requested",
                                    config.experiment, experiment));
    }
    const RunSummary summary = run_experiment(config, out_dir, std::cerr);
    std::cout << fmt::format("{}: wrote {} files to {} ({} warnings)\n", experiment,
                             summary.files.size(), out_dir, summary.warnings);
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const PreconditionError& e) {
    std::cerr << "precondition error: " << e.what() << '\n';
    return kExitPrecondition;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace fblab
