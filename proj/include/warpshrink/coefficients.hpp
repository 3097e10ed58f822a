#pragma once

// Empirical warped coefficients, their stochastic noise levels, level cutoffs
// and reconstruction of the estimator from a coefficient set.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "warpshrink/wavelet.hpp"

namespace warpshrink {

/// Observations Y_i = f(X_i) + eps_i with known noise sd.
struct Sample {
  std::vector<double> x;
  std::vector<double> y;
  double sigma = 1.0;

  std::size_t size() const { return x.size(); }

  void validate() const {
    if (x.empty()) throw std::invalid_argument("sample is empty");
    if (x.size() != y.size()) throw std::invalid_argument("sample x and y lengths differ");
    if (!(sigma >= 0.0)) throw std::invalid_argument("sample sigma must be nonnegative");
  }
};

/// u -> u; the unwarped basis.
struct IdentityWarp {
  double operator()(double x) const { return x; }
};

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      carry_ += (sum_ - t) + v;
    } else {
      carry_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

/// Per-atom beta_hat and gamma^2 for levels -1..J, stored flat with the
/// scaling atom first and level j at offsets [2^j, 2^{j+1}).
class CoefficientSet {
 public:
  CoefficientSet() = default;
  CoefficientSet(int max_level, std::size_t n, double sigma)
      : max_level_(max_level),
        n_(n),
        sigma_(sigma),
        beta_(atom_count(max_level), 0.0),
        gamma_sq_(atom_count(max_level), 0.0),
        energy_(atom_count(max_level), 0.0) {
    if (max_level < 0 || max_level > 28) throw std::invalid_argument("coefficient level out of range");
    if (n == 0) throw std::invalid_argument("coefficient set needs n >= 1");
  }

  int max_level() const { return max_level_; }
  std::size_t sample_size() const { return n_; }
  double sigma() const { return sigma_; }
  std::size_t size() const { return beta_.size(); }

  double beta(int j, int k) const { return beta_.at(flat_index(j, k)); }
  double gamma_sq(int j, int k) const { return gamma_sq_.at(flat_index(j, k)); }

  std::span<double> beta_hat() { return beta_; }
  std::span<const double> beta_hat() const { return beta_; }
  std::span<double> gamma_sq() { return gamma_sq_; }
  std::span<const double> gamma_sq() const { return gamma_sq_; }
  /// (1/n) sum_i psi_jk^2(G(X_i)); zero iff no design point hits the atom.
  std::span<double> design_energy() { return energy_; }
  std::span<const double> design_energy() const { return energy_; }

  /// Same values with the noise level recomputed for a different sigma.
  CoefficientSet with_sigma(double sigma) const {
    CoefficientSet out = *this;
    out.sigma_ = sigma;
    const double scale = sigma * sigma / static_cast<double>(n_);
    for (std::size_t i = 0; i < out.size(); ++i) out.gamma_sq_[i] = scale * energy_[i];
    return out;
  }

 private:
  int max_level_ = 0;
  std::size_t n_ = 0;
  double sigma_ = 0.0;
  std::vector<double> beta_;
  std::vector<double> gamma_sq_;
  std::vector<double> energy_;
};

/// beta_hat_jk = (1/n) sum psi_jk(G(X_i)) Y_i and
/// gamma_jk^2 = (sigma^2/n^2) sum psi_jk^2(G(X_i)), by direct summation.
template <class Warp>
CoefficientSet empirical_coeffs(const Sample& sample, const Warp& warp, const DyadicTable& table, int J) {
  sample.validate();
  if (J < 0) throw std::invalid_argument("empirical_coeffs needs J >= 0");
  const std::size_t n = sample.size();
  CoefficientSet out(J, n, sample.sigma);
  std::vector<CompensatedSum> beta_acc(out.size());
  std::vector<CompensatedSum> energy_acc(out.size());
  std::vector<AtomValue> scratch;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = warp(sample.x[i]);
    const double y = sample.y[i];
    for (int j = -1; j <= J; ++j) {
      scratch.clear();
      level_values(table, j, u, scratch);
      for (const auto& v : scratch) {
        const std::size_t idx = flat_index(j, v.k);
        beta_acc[idx].add(v.value * y);
        energy_acc[idx].add(v.value * v.value);
      }
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  const double noise_scale = sample.sigma * sample.sigma * inv_n;
  auto beta = out.beta_hat();
  auto gamma = out.gamma_sq();
  auto energy = out.design_energy();
  for (std::size_t idx = 0; idx < out.size(); ++idx) {
    beta[idx] = beta_acc[idx].value() * inv_n;
    energy[idx] = energy_acc[idx].value() * inv_n;
    gamma[idx] = noise_scale * energy[idx];
  }
  return out;
}

/// f~(x) = sum_{j,k} beta_jk psi_jk(G(x)) at each point of `xs`.
template <class Warp>
std::vector<double> reconstruct(const CoefficientSet& coeffs, const Warp& warp, const DyadicTable& table,
                                std::span<const double> xs) {
  std::vector<double> out(xs.size(), 0.0);
  std::vector<AtomValue> scratch;
  const auto beta = coeffs.beta_hat();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double u = warp(xs[i]);
    double acc = 0.0;
    for (int j = -1; j <= coeffs.max_level(); ++j) {
      scratch.clear();
      level_values(table, j, u, scratch);
      for (const auto& v : scratch) acc += beta[flat_index(j, v.k)] * v.value;
    }
    out[i] = acc;
  }
  return out;
}

struct SmallCutoff {
  int level = 0;
  bool at_boundary = false;  ///< alpha == 1, outside the open range the rate bound assumes
};

/// J_alpha with 2^J = (3/(2n))^{-1/alpha}, floored, at least 0.
inline SmallCutoff cutoff_small(std::size_t n, double alpha) {
  if (n < 2) throw std::invalid_argument("cutoff_small needs n >= 2");
  if (!(alpha >= 1.0)) throw std::invalid_argument("cutoff_small needs alpha >= 1");
  const double level = std::log2(2.0 * static_cast<double>(n) / 3.0) / alpha;
  SmallCutoff out;
  out.level = std::max(0, static_cast<int>(std::floor(level + 1e-12)));
  out.at_boundary = alpha == 1.0;
  return out;
}

/// J_n with 2^J = n / ln n, floored.
inline int cutoff_large(std::size_t n) {
  if (n < 3) throw std::invalid_argument("cutoff_large needs n >= 3");
  const double nd = static_cast<double>(n);
  return std::max(0, static_cast<int>(std::floor(std::log2(nd / std::log(nd)) + 1e-12)));
}

/// Fraction of atoms on which |gamma^2 / sigma^2 - 1/n| <= delta.
inline double omega_event_fraction(const CoefficientSet& coeffs, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("omega_event_fraction needs delta > 0");
  const auto energy = coeffs.design_energy();
  const double n = static_cast<double>(coeffs.sample_size());
  std::size_t inside = 0;
  for (double e : energy) {
    // gamma^2 / sigma^2 = energy / n
    if (std::abs(e / n - 1.0 / n) <= delta) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(energy.size());
}

/// Flat CSV dump: j,k,beta_hat,gamma_sq.
inline void write_coefficients_csv(const CoefficientSet& coeffs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "j,k,beta_hat,gamma_sq\n";
  char buf[96];
  for (std::size_t idx = 0; idx < coeffs.size(); ++idx) {
    const AtomIndex a = atom_at(idx);
    std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g\n", a.j, a.k, coeffs.beta_hat()[idx],
                  coeffs.gamma_sq()[idx]);
    out << buf;
  }
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace warpshrink
