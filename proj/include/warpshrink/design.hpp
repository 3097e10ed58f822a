#pragma once

// Known design densities g on [0,1], their CDFs G and inverses, and
// inverse-CDF sampling of design points.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace warpshrink {

enum class DesignKind { uniform, sine, hole2, custom };

inline std::string to_string(DesignKind kind) {
  switch (kind) {
    case DesignKind::uniform: return "uniform";
    case DesignKind::sine: return "sine";
    case DesignKind::hole2: return "hole2";
    case DesignKind::custom: return "custom";
  }
  return "?";
}

/// A strictly positive density on [0,1] with G stored on a 2^-12 grid and read
/// back through a monotone cubic Hermite interpolant. G^-1 inverts that same
/// interpolant, so G(G^-1(u)) = u up to rounding.
class DesignModel {
 public:
  static constexpr int kTableLevel = 12;

  static DesignModel uniform() {
    DesignModel m(DesignKind::uniform);
    m.lower_bound_ = 1.0;
    m.build_cdf_table();
    return m;
  }

  /// g(x) = 1 + a sin(2 pi x), 0 <= a < 1.
  static DesignModel sine(double amplitude = 0.5) {
    if (!(amplitude >= 0.0 && amplitude < 1.0)) {
      throw std::invalid_argument("sine design amplitude must lie in [0,1)");
    }
    DesignModel m(DesignKind::sine);
    m.amplitude_ = amplitude;
    m.lower_bound_ = 1.0 - amplitude;
    m.build_cdf_table();
    return m;
  }

  /// g(x) = c (m0 + 1 - exp(-((x - 1/2)/w)^2)) with m0, c fixed by
  /// min g = floor and unit mass.
  static DesignModel hole2(double floor = 0.1, double width = 0.15) {
    if (!(floor > 0.0 && floor < 1.0)) throw std::invalid_argument("hole2 floor must lie in (0,1)");
    if (!(width > 0.0)) throw std::invalid_argument("hole2 width must be positive");
    DesignModel m(DesignKind::hole2);
    m.hole_floor_ = floor;
    m.hole_width_ = width;
    const double dip_mass = width * std::sqrt(std::numbers::pi) * std::erf(0.5 / width);
    // c m0 = floor and c (m0 + 1 - dip_mass) = 1.
    m.hole_offset_ = floor * (1.0 - dip_mass) / (1.0 - floor);
    m.hole_scale_ = floor / m.hole_offset_;
    m.lower_bound_ = floor;
    m.build_cdf_table();
    return m;
  }

  /// Piecewise-linear density through (x_i, g_i), renormalized to unit mass.
  /// Knots must start at 0, end at 1 and increase strictly.
  static DesignModel from_table(std::vector<double> xs, std::vector<double> gs) {
    if (xs.size() != gs.size() || xs.size() < 2) {
      throw std::invalid_argument("density table needs at least two (x, g) rows");
    }
    if (std::abs(xs.front()) > 1e-12 || std::abs(xs.back() - 1.0) > 1e-12) {
      throw std::invalid_argument("density table must span [0,1]");
    }
    xs.front() = 0.0;
    xs.back() = 1.0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
      if (!(xs[i + 1] > xs[i])) throw std::invalid_argument("density table x values must increase");
    }
    double mass = 0.0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) mass += 0.5 * (gs[i] + gs[i + 1]) * (xs[i + 1] - xs[i]);
    if (!(mass > 0.0)) throw std::invalid_argument("density table has no mass");
    for (double& g : gs) g /= mass;
    const double lowest = *std::min_element(gs.begin(), gs.end());
    if (!(lowest > 0.0)) {
      throw std::invalid_argument("density must be bounded below by a positive constant");
    }
    DesignModel m(DesignKind::custom);
    m.knots_x_ = std::move(xs);
    m.knots_g_ = std::move(gs);
    m.lower_bound_ = lowest;
    m.build_cdf_table();
    return m;
  }

  /// Two whitespace-separated columns (x, g(x)); '#' starts a comment.
  static DesignModel load_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open density table '" + path + "'");
    std::vector<double> xs;
    std::vector<double> gs;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream fields(line);
      double x = 0.0;
      double g = 0.0;
      if (!(fields >> x)) continue;
      if (!(fields >> g)) {
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected two columns");
      }
      xs.push_back(x);
      gs.push_back(g);
    }
    return from_table(std::move(xs), std::move(gs));
  }

  DesignKind kind() const { return kind_; }
  double lower_bound() const { return lower_bound_; }
  double amplitude() const { return amplitude_; }
  double hole_floor() const { return hole_floor_; }
  double hole_width() const { return hole_width_; }

  double density(double x) const {
    check_unit(x, "density");
    return density_unchecked(x);
  }

  double cdf(double x) const {
    check_unit(x, "cdf");
    if (kind_ == DesignKind::uniform) return x;
    const double pos = std::ldexp(x, kTableLevel);
    auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= grid_cdf_.size()) return 1.0;
    return hermite(i, pos - static_cast<double>(i));
  }

  double inverse_cdf(double u) const {
    check_unit(u, "inverse_cdf");
    if (kind_ == DesignKind::uniform) return u;
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    auto upper = std::upper_bound(grid_cdf_.begin(), grid_cdf_.end(), u);
    std::size_t i = static_cast<std::size_t>(upper - grid_cdf_.begin());
    i = std::clamp<std::size_t>(i, 1, grid_cdf_.size() - 1) - 1;
    // Safeguarded Newton on the monotone Hermite segment.
    double lo = 0.0;
    double hi = 1.0;
    const double span = grid_cdf_[i + 1] - grid_cdf_[i];
    double t = span > 0.0 ? std::clamp((u - grid_cdf_[i]) / span, 0.0, 1.0) : 0.5;
    for (int iter = 0; iter < 100; ++iter) {
      const double f = hermite(i, t) - u;
      if (f == 0.0) break;
      if (f > 0.0) hi = t; else lo = t;
      const double slope = hermite_slope(i, t);
      double next = slope > 0.0 ? t - f / slope : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - t) < 1e-16) {
        t = next;
        break;
      }
      t = next;
    }
    return std::ldexp(static_cast<double>(i) + t, -kTableLevel);
  }

  /// u = G(x); lets the model be passed wherever a warp callable is expected.
  double operator()(double x) const { return cdf(x); }

 private:
  explicit DesignModel(DesignKind kind) : kind_(kind) {}

  static void check_unit(double x, const char* what) {
    if (!(x >= 0.0 && x <= 1.0)) {
      throw std::domain_error(std::string(what) + " argument outside [0,1]");
    }
  }

  double density_unchecked(double x) const {
    switch (kind_) {
      case DesignKind::uniform: return 1.0;
      case DesignKind::sine: return 1.0 + amplitude_ * std::sin(2.0 * std::numbers::pi * x);
      case DesignKind::hole2: {
        const double z = (x - 0.5) / hole_width_;
        return hole_scale_ * (hole_offset_ + 1.0 - std::exp(-z * z));
      }
      case DesignKind::custom: {
        auto upper = std::upper_bound(knots_x_.begin(), knots_x_.end(), x);
        std::size_t i = static_cast<std::size_t>(upper - knots_x_.begin());
        i = std::clamp<std::size_t>(i, 1, knots_x_.size() - 1) - 1;
        const double frac = (x - knots_x_[i]) / (knots_x_[i + 1] - knots_x_[i]);
        return knots_g_[i] + frac * (knots_g_[i + 1] - knots_g_[i]);
      }
    }
    return 0.0;
  }

  /// Exact antiderivative of the density from 0.
  double exact_cdf(double x) const {
    switch (kind_) {
      case DesignKind::uniform: return x;
      case DesignKind::sine:
        return x + amplitude_ / (2.0 * std::numbers::pi) * (1.0 - std::cos(2.0 * std::numbers::pi * x));
      case DesignKind::hole2: {
        const double w = hole_width_;
        const double half_dip = 0.5 * w * std::sqrt(std::numbers::pi);
        return hole_scale_ * ((hole_offset_ + 1.0) * x -
                              half_dip * (std::erf((x - 0.5) / w) + std::erf(0.5 / w)));
      }
      case DesignKind::custom: {
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < knots_x_.size(); ++i) {
          const double a = knots_x_[i];
          if (x <= a) break;
          const double b = std::min(x, knots_x_[i + 1]);
          const double gb = knots_g_[i] + (b - a) / (knots_x_[i + 1] - a) * (knots_g_[i + 1] - knots_g_[i]);
          acc += 0.5 * (knots_g_[i] + gb) * (b - a);
        }
        return acc;
      }
    }
    return 0.0;
  }

  void build_cdf_table() {
    const std::size_t cells = std::size_t{1} << kTableLevel;
    grid_cdf_.resize(cells + 1);
    grid_slope_.resize(cells + 1);
    const double step = 1.0 / static_cast<double>(cells);
    for (std::size_t i = 0; i <= cells; ++i) {
      const double x = static_cast<double>(i) * step;
      grid_cdf_[i] = exact_cdf(x);
      grid_slope_[i] = density_unchecked(x);
    }
    // Custom tables integrate to 1 only up to rounding; pin the endpoints.
    const double total = grid_cdf_.back();
    for (double& v : grid_cdf_) v /= total;
    for (double& s : grid_slope_) s /= total;
    grid_cdf_.front() = 0.0;
    grid_cdf_.back() = 1.0;
    // Fritsch-Carlson limiter keeps each Hermite segment monotone.
    for (std::size_t i = 0; i < cells; ++i) {
      const double secant = (grid_cdf_[i + 1] - grid_cdf_[i]) / step;
      if (secant <= 0.0) {
        grid_slope_[i] = grid_slope_[i + 1] = 0.0;
        continue;
      }
      const double a = grid_slope_[i] / secant;
      const double b = grid_slope_[i + 1] / secant;
      const double r = a * a + b * b;
      if (r > 9.0) {
        const double tau = 3.0 / std::sqrt(r);
        grid_slope_[i] = tau * a * secant;
        grid_slope_[i + 1] = tau * b * secant;
      }
    }
  }

  double hermite(std::size_t i, double t) const {
    const double step = std::ldexp(1.0, -kTableLevel);
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    const double h10 = t3 - 2.0 * t2 + t;
    const double h01 = -2.0 * t3 + 3.0 * t2;
    const double h11 = t3 - t2;
    return h00 * grid_cdf_[i] + h10 * step * grid_slope_[i] + h01 * grid_cdf_[i + 1] +
           h11 * step * grid_slope_[i + 1];
  }

  /// d/dt of the Hermite segment.
  double hermite_slope(std::size_t i, double t) const {
    const double step = std::ldexp(1.0, -kTableLevel);
    const double t2 = t * t;
    return (6.0 * t2 - 6.0 * t) * (grid_cdf_[i] - grid_cdf_[i + 1]) +
           (3.0 * t2 - 4.0 * t + 1.0) * step * grid_slope_[i] + (3.0 * t2 - 2.0 * t) * step * grid_slope_[i + 1];
  }

  DesignKind kind_;
  double lower_bound_ = 1.0;
  double amplitude_ = 0.0;
  double hole_floor_ = 0.0;
  double hole_width_ = 0.0;
  double hole_offset_ = 0.0;
  double hole_scale_ = 1.0;
  std::vector<double> knots_x_;
  std::vector<double> knots_g_;
  std::vector<double> grid_cdf_;
  std::vector<double> grid_slope_;
};

/// n i.i.d. design points G^-1(U_i) drawn from `rng`.
template <class Engine>
std::vector<double> sample_design(const DesignModel& model, Engine& rng, std::size_t n) {
  if (n == 0) throw std::invalid_argument("sample_design needs n >= 1");
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<double> xs(n);
  for (double& x : xs) x = model.inverse_cdf(uniform(rng));
  return xs;
}

inline std::vector<double> sample_design(const DesignModel& model, std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  return sample_design(model, rng, n);
}

}  // namespace warpshrink
