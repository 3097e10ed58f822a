#pragma once

// Monte-Carlo harness: simulated random-design samples, the three estimator
// pipelines, RMSE aggregation over seeded runs and empirical rate studies.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "warpshrink/coefficients.hpp"
#include "warpshrink/design.hpp"
#include "warpshrink/shrinkage.hpp"
#include "warpshrink/signals.hpp"
#include "warpshrink/wavelet.hpp"

namespace warpshrink {

struct DesignSpec {
  DesignKind kind = DesignKind::uniform;
  double sine_amplitude = 0.5;
  double hole_floor = 0.1;
  double hole_width = 0.15;
  std::string density_file;

  bool operator==(const DesignSpec&) const = default;

  DesignModel build() const {
    switch (kind) {
      case DesignKind::uniform: return DesignModel::uniform();
      case DesignKind::sine: return DesignModel::sine(sine_amplitude);
      case DesignKind::hole2: return DesignModel::hole2(hole_floor, hole_width);
      case DesignKind::custom: return DesignModel::load_table(density_file);
    }
    return DesignModel::uniform();
  }
};

struct ExperimentConfig {
  std::string name = "experiment";
  SignalKind signal = SignalKind::blocks;
  double amplitude = 1.0;  ///< grid sd of the signal
  DesignSpec design;
  RuleSpec rule = LargeVarianceHyper{};
  std::size_t n = 1024;
  double rsnr = 4.0;
  std::size_t runs = 100;
  std::uint64_t seed = 1;
  std::string wavelet = "symmlet8";
  int table_level = 12;
  std::optional<double> sigma_override;
  std::vector<std::size_t> n_list = {256, 1024, 4096};

  bool operator==(const ExperimentConfig&) const = default;

  void validate() const {
    if (runs < 1) throw std::invalid_argument("runs must be at least 1");
    if (!(rsnr > 0.0)) throw std::invalid_argument("rsnr must be positive");
    if (n < 4) throw std::invalid_argument("n must be at least 4");
    if (!(amplitude >= 0.0)) throw std::invalid_argument("amplitude must be nonnegative");
    if (sigma_override && !(*sigma_override >= 0.0)) throw std::invalid_argument("sigma must be nonnegative");
    std::visit([](const auto& h) { h.validate(); }, rule);
  }
};

/// Tables are immutable and shared across experiments with the same family
/// and resolution.
inline std::shared_ptr<const DyadicTable> shared_table(const std::string& wavelet, int level) {
  static std::mutex mutex;
  static std::map<std::pair<std::string, int>, std::shared_ptr<const DyadicTable>> cache;
  const WaveletFamily family = wavelet_by_name(wavelet);
  std::lock_guard lock(mutex);
  auto& slot = cache[{family.name, level}];
  if (!slot) slot = std::make_shared<const DyadicTable>(build_table(family, level));
  return slot;
}

/// Everything a run needs that does not depend on the run seed.
struct PreparedExperiment {
  ExperimentConfig config;
  DesignModel design;
  std::shared_ptr<const DyadicTable> table;
  TestSignal signal;
  double sigma;

  explicit PreparedExperiment(ExperimentConfig cfg)
      : config(validated(std::move(cfg))),
        design(config.design.build()),
        table(shared_table(config.wavelet, config.table_level)),
        signal(config.amplitude > 0.0 ? TestSignal::normalized(config.signal, config.amplitude)
                                      : TestSignal{config.signal, 0.0}),
        sigma(config.sigma_override ? *config.sigma_override : calibrate_sigma(signal, config.rsnr)) {}

 private:
  static ExperimentConfig validated(ExperimentConfig cfg) {
    cfg.validate();
    return cfg;
  }
};

/// X_i = G^-1(U_i), Y_i = f(X_i) + sigma Z_i, all drawn from one engine
/// seeded with `seed` (design first, then noise).
template <class F>
Sample simulate_sample(const DesignModel& design, const F& f, double sigma, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Sample sample;
  sample.sigma = sigma;
  sample.x = sample_design(design, rng, n);
  std::normal_distribution<double> noise(0.0, 1.0);
  sample.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) sample.y[i] = f(sample.x[i]) + sigma * noise(rng);
  return sample;
}

struct Estimate {
  CoefficientSet empirical;
  ShrinkageResult shrunk;
  std::vector<double> fitted;  ///< estimator at the design points
};

template <class Warp>
Estimate estimate(const Sample& sample, const Warp& warp, const DyadicTable& table, const RuleSpec& rule) {
  const int J = rule_cutoff(rule, sample.size());
  Estimate out{empirical_coeffs(sample, warp, table, J), {}, {}};
  out.shrunk = apply_rule(out.empirical, rule);
  out.fitted = reconstruct(out.shrunk.coefficients, warp, table, sample.x);
  return out;
}

/// sqrt((1/n) sum (fitted_i - truth_i)^2).
inline double rmse(std::span<const double> fitted, std::span<const double> truth) {
  double acc = 0.0;
  for (std::size_t i = 0; i < fitted.size(); ++i) {
    const double d = fitted[i] - truth[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(fitted.size()));
}

struct RunOutput {
  double rmse = 0.0;
  Sample sample;
  Estimate estimate;
};

inline RunOutput run_detailed(const PreparedExperiment& prep, std::uint64_t run_seed) {
  const auto& cfg = prep.config;
  RunOutput out;
  out.sample = simulate_sample(prep.design, prep.signal, prep.sigma, cfg.n, run_seed);
  out.estimate = estimate(out.sample, prep.design, *prep.table, cfg.rule);
  std::vector<double> truth(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) truth[i] = prep.signal(out.sample.x[i]);
  out.rmse = rmse(out.estimate.fitted, truth);
  return out;
}

inline double run_once(const PreparedExperiment& prep, std::uint64_t run_seed) {
  return run_detailed(prep, run_seed).rmse;
}

inline double run_once(const ExperimentConfig& cfg, std::uint64_t run_seed) {
  return run_once(PreparedExperiment(cfg), run_seed);
}

/// (x, truth, estimate) on the 1024-point grid x_i = i / 1023.
struct TracePoint {
  double x;
  double truth;
  double estimate;
};

inline std::vector<TracePoint> reconstruction_trace(const PreparedExperiment& prep, const Estimate& est,
                                                    std::size_t points = 1024) {
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) grid[i] = static_cast<double>(i) / static_cast<double>(points - 1);
  const std::vector<double> fitted = reconstruct(est.shrunk.coefficients, prep.design, *prep.table, grid);
  std::vector<TracePoint> trace(points);
  for (std::size_t i = 0; i < points; ++i) trace[i] = {grid[i], prep.signal(grid[i]), fitted[i]};
  return trace;
}

/// Worker count from WARPSHRINK_WORKERS, else the hardware concurrency.
inline unsigned default_workers() {
  if (const char* env = std::getenv("WARPSHRINK_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls body(i) for i in [0, count) on up to `workers` threads.
template <class Body>
void parallel_for(std::size_t count, unsigned workers, Body&& body) {
  workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

struct ReportRow {
  std::string signal;
  std::string design;
  std::string rule;
  double rsnr = 0.0;
  std::size_t n = 0;
  std::size_t runs = 0;
  double mean_rmse = 0.0;
  double sd_rmse = 0.0;
  std::vector<double> per_run;
};

using ReportTable = std::vector<ReportRow>;

/// Runs use seeds seed+1 .. seed+runs; each result lands in its own slot so
/// the aggregate does not depend on scheduling.
inline ReportRow run_experiment(const ExperimentConfig& cfg, unsigned workers = default_workers()) {
  const PreparedExperiment prep(cfg);
  ReportRow row;
  row.signal = to_string(cfg.signal);
  row.design = to_string(cfg.design.kind);
  row.rule = rule_label(cfg.rule);
  row.rsnr = cfg.rsnr;
  row.n = cfg.n;
  row.runs = cfg.runs;
  row.per_run.assign(cfg.runs, 0.0);
  parallel_for(cfg.runs, workers, [&](std::size_t r) { row.per_run[r] = run_once(prep, cfg.seed + 1 + r); });
  double sum = 0.0;
  for (double v : row.per_run) sum += v;
  row.mean_rmse = sum / static_cast<double>(cfg.runs);
  double ss = 0.0;
  for (double v : row.per_run) ss += (v - row.mean_rmse) * (v - row.mean_rmse);
  row.sd_rmse = cfg.runs > 1 ? std::sqrt(ss / static_cast<double>(cfg.runs - 1)) : 0.0;
  return row;
}

struct RateResult {
  std::vector<std::size_t> n_values;
  std::vector<double> mean_mse;
  double slope = 0.0;  ///< d log(MSE) / d log(n / ln n); NaN when undefined
  bool slope_defined = false;
  int inversions = 0;  ///< consecutive pairs where the MSE went up
};

/// Least-squares slope of log mean MSE against log(n / ln n) over `n_list`,
/// `cfg.runs` runs per sample size.
inline RateResult rate_study(const ExperimentConfig& cfg, const std::vector<std::size_t>& n_list,
                             unsigned workers = default_workers()) {
  if (n_list.size() < 3) throw std::invalid_argument("rate_study needs at least three sample sizes");
  for (std::size_t i = 1; i < n_list.size(); ++i) {
    if (n_list[i] <= n_list[i - 1]) throw std::invalid_argument("rate_study sample sizes must increase");
  }
  RateResult out;
  out.n_values = n_list;
  for (std::size_t n : n_list) {
    ExperimentConfig c = cfg;
    c.n = n;
    const PreparedExperiment prep(c);
    std::vector<double> mse(c.runs);
    parallel_for(c.runs, workers, [&](std::size_t r) {
      const double e = run_once(prep, c.seed + 1 + r);
      mse[r] = e * e;
    });
    double sum = 0.0;
    for (double v : mse) sum += v;
    out.mean_mse.push_back(sum / static_cast<double>(c.runs));
  }
  for (std::size_t i = 1; i < out.mean_mse.size(); ++i) {
    if (out.mean_mse[i] > out.mean_mse[i - 1]) ++out.inversions;
  }
  out.slope_defined = std::all_of(out.mean_mse.begin(), out.mean_mse.end(),
                                  [](double m) { return std::isfinite(m) && m > 1e-24; });
  if (!out.slope_defined) {
    out.slope = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double k = static_cast<double>(n_list.size());
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    const double nd = static_cast<double>(n_list[i]);
    const double x = std::log(nd / std::log(nd));
    const double y = std::log(out.mean_mse[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  out.slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  return out;
}

}  // namespace warpshrink
