#pragma once

// Donoho-Johnstone test functions and noise calibration.

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace warpshrink {

enum class SignalKind { blocks, bumps, heavisine, doppler };

inline std::string to_string(SignalKind kind) {
  switch (kind) {
    case SignalKind::blocks: return "blocks";
    case SignalKind::bumps: return "bumps";
    case SignalKind::heavisine: return "heavisine";
    case SignalKind::doppler: return "doppler";
  }
  return "?";
}

inline SignalKind signal_by_name(const std::string& name) {
  if (name == "blocks") return SignalKind::blocks;
  if (name == "bumps") return SignalKind::bumps;
  if (name == "heavisine") return SignalKind::heavisine;
  if (name == "doppler") return SignalKind::doppler;
  throw std::invalid_argument("unknown signal '" + name + "'");
}

namespace detail {
inline constexpr std::array<double, 11> kKnots = {0.10, 0.13, 0.15, 0.23, 0.25, 0.40,
                                                  0.44, 0.65, 0.76, 0.78, 0.81};
inline constexpr std::array<double, 11> kBlockHeights = {4.0, -5.0, 3.0, -4.0, 5.0, -4.2,
                                                         2.1, 4.3, -3.1, 2.1, -4.2};
inline constexpr std::array<double, 11> kBumpHeights = {4.0, 5.0, 3.0, 4.0, 5.0, 4.2,
                                                        2.1, 4.3, 3.1, 5.1, 4.2};
inline constexpr std::array<double, 11> kBumpWidths = {0.005, 0.005, 0.006, 0.01, 0.01, 0.03,
                                                       0.01, 0.01, 0.005, 0.008, 0.005};

inline double sgn(double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); }
}  // namespace detail

/// Unscaled standard definition.
inline double raw_signal(SignalKind kind, double x) {
  using namespace detail;
  switch (kind) {
    case SignalKind::blocks: {
      double acc = 0.0;
      for (std::size_t i = 0; i < kKnots.size(); ++i) acc += kBlockHeights[i] * (1.0 + sgn(x - kKnots[i])) / 2.0;
      return acc;
    }
    case SignalKind::bumps: {
      double acc = 0.0;
      for (std::size_t i = 0; i < kKnots.size(); ++i) {
        acc += kBumpHeights[i] * std::pow(1.0 + std::abs((x - kKnots[i]) / kBumpWidths[i]), -4.0);
      }
      return acc;
    }
    case SignalKind::heavisine:
      return 4.0 * std::sin(4.0 * std::numbers::pi * x) - sgn(x - 0.3) - sgn(0.72 - x);
    case SignalKind::doppler:
      return std::sqrt(x * (1.0 - x)) * std::sin(2.0 * std::numbers::pi * 1.05 / (x + 0.05));
  }
  return 0.0;
}

inline constexpr std::size_t kCalibrationGrid = std::size_t{1} << 14;

/// Mean and sd of the raw signal over the grid i / 2^14, i < 2^14.
struct GridMoments {
  double mean = 0.0;
  double sd = 0.0;
};

template <class F>
GridMoments grid_moments(F&& f) {
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < kCalibrationGrid; ++i) {
    const double v = f(static_cast<double>(i) / static_cast<double>(kCalibrationGrid));
    sum += v;
    sum_sq += v * v;
  }
  const double n = static_cast<double>(kCalibrationGrid);
  const double mean = sum / n;
  return {mean, std::sqrt(std::max(0.0, sum_sq / n - mean * mean))};
}

/// A test function times `scale`. `normalized` picks the scale giving unit
/// grid sd.
struct TestSignal {
  SignalKind kind = SignalKind::blocks;
  double scale = 1.0;

  static TestSignal normalized(SignalKind kind, double amplitude = 1.0) {
    const GridMoments m = grid_moments([kind](double x) { return raw_signal(kind, x); });
    return {kind, amplitude / m.sd};
  }

  double operator()(double x) const { return scale * raw_signal(kind, x); }
};

inline double signal_eval(const TestSignal& sig, double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("signal_eval argument outside [0,1]");
  return sig(x);
}

/// sigma = sd_grid(f) / rsnr.
inline double calibrate_sigma(const TestSignal& sig, double rsnr) {
  if (!(rsnr > 0.0)) throw std::invalid_argument("rsnr must be positive");
  const GridMoments m = grid_moments(sig);
  if (!(m.sd > 0.0)) throw std::invalid_argument("cannot calibrate noise for a constant signal");
  return m.sd / rsnr;
}

}  // namespace warpshrink
