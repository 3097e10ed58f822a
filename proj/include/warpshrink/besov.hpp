#pragma once

// Besov and weak-Besov functionals of wavelet coefficient arrays.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "warpshrink/coefficients.hpp"

namespace warpshrink {

/// levels[0] is the scaling row (j = -1); levels[j + 1] holds 2^j entries.
struct CoefficientArray {
  std::vector<std::vector<double>> levels;

  static CoefficientArray zeros(int max_level) {
    CoefficientArray arr;
    for (int j = -1; j <= max_level; ++j) arr.levels.emplace_back(AtomIndex::count_at(j), 0.0);
    return arr;
  }

  static CoefficientArray from(const CoefficientSet& set) {
    CoefficientArray arr = zeros(set.max_level());
    const auto beta = set.beta_hat();
    for (std::size_t idx = 0; idx < set.size(); ++idx) {
      const AtomIndex a = atom_at(idx);
      arr.at(a.j)[static_cast<std::size_t>(a.k)] = beta[idx];
    }
    return arr;
  }

  int max_level() const { return static_cast<int>(levels.size()) - 2; }
  std::vector<double>& at(int j) { return levels.at(static_cast<std::size_t>(j + 1)); }
  const std::vector<double>& at(int j) const { return levels.at(static_cast<std::size_t>(j + 1)); }

  void validate() const {
    for (std::size_t i = 0; i < levels.size(); ++i) {
      const int j = static_cast<int>(i) - 1;
      if (levels[i].size() != static_cast<std::size_t>(AtomIndex::count_at(j))) {
        throw std::invalid_argument("coefficient array level has the wrong length");
      }
    }
  }

  std::vector<double> magnitudes() const {
    std::vector<double> out;
    for (const auto& row : levels) {
      for (double b : row) out.push_back(std::abs(b));
    }
    return out;
  }
};

struct BesovIndex {
  double s = 1.0;
  double p = 2.0;
  double q = std::numeric_limits<double>::infinity();

  void validate() const {
    if (!(p >= 1.0) || !(q >= 1.0)) throw std::invalid_argument("Besov p and q must be at least 1");
    if (!(s > std::max(0.0, 1.0 / p - 0.5))) throw std::invalid_argument("Besov smoothness s is not admissible");
  }
};

namespace detail {
inline double lp_norm(const std::vector<double>& row, double p) {
  if (std::isinf(p)) {
    double m = 0.0;
    for (double b : row) m = std::max(m, std::abs(b));
    return m;
  }
  double acc = 0.0;
  for (double b : row) acc += std::pow(std::abs(b), p);
  return std::pow(acc, 1.0 / p);
}
}  // namespace detail

/// Sequence-space Besov norm: the l_q norm over levels j >= -1 of
/// 2^{j(s + 1/2 - 1/p)} ||beta_j.||_p.
inline double besov_norm(const CoefficientArray& arr, const BesovIndex& idx) {
  idx.validate();
  arr.validate();
  if (arr.levels.empty()) return 0.0;
  const double exponent = idx.s + 0.5 - 1.0 / idx.p;
  double sup = 0.0;
  double acc = 0.0;
  for (int j = -1; j <= arr.max_level(); ++j) {
    const double term = std::exp2(j * exponent) * detail::lp_norm(arr.at(j), idx.p);
    if (std::isinf(idx.q)) {
      sup = std::max(sup, term);
    } else {
      acc += std::pow(term, idx.q);
    }
  }
  return std::isinf(idx.q) ? sup : std::pow(acc, 1.0 / idx.q);
}

/// sup_{J >= -1} 2^{2Js} sum_{j >= J} sum_k beta_jk^2.
inline double besov_s2inf_seminorm(const CoefficientArray& arr, double s) {
  if (!(s > 0.0)) throw std::invalid_argument("besov_s2inf_seminorm needs s > 0");
  arr.validate();
  double tail = 0.0;
  double sup = 0.0;
  for (int J = arr.max_level(); J >= -1; --J) {
    for (double b : arr.at(J)) tail += b * b;
    sup = std::max(sup, std::exp2(2.0 * J * s) * tail);
  }
  return sup;
}

/// [sup_lambda lambda^{r-2} sum beta^2 1{|beta| <= lambda}]^{1/2}. Between
/// consecutive magnitudes the sum is flat and lambda^{r-2} decreasing, so the
/// supremum sits at one of the magnitudes.
inline double weak_besov_norm(const CoefficientArray& arr, double r) {
  if (!(r > 0.0 && r < 2.0)) throw std::invalid_argument("weak_besov_norm needs 0 < r < 2");
  arr.validate();
  std::vector<double> mags = arr.magnitudes();
  std::sort(mags.begin(), mags.end());
  double partial = 0.0;
  double sup = 0.0;
  for (std::size_t i = 0; i < mags.size(); ++i) {
    partial += mags[i] * mags[i];
    if (mags[i] == 0.0) continue;
    if (i + 1 < mags.size() && mags[i + 1] == mags[i]) continue;
    sup = std::max(sup, std::pow(mags[i], r - 2.0) * partial);
  }
  return std::sqrt(sup);
}

struct Prop1Result {
  bool holds = true;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;  ///< lhs / rhs, 0 when both vanish
};

/// Checks sup_lambda lambda^r #{|beta| > lambda} <= 2^{2-r} ||f||_{W_r}^2 / (1 - 2^{-r}).
/// The count is right-continuous and decreasing, so the supremum is the limit
/// from below at each magnitude a: a^r #{|beta| >= a}.
inline Prop1Result prop1_check(const CoefficientArray& arr, double r) {
  if (!(r > 0.0 && r < 2.0)) throw std::invalid_argument("prop1_check needs 0 < r < 2");
  std::vector<double> mags = arr.magnitudes();
  std::sort(mags.begin(), mags.end());
  Prop1Result out;
  const std::size_t total = mags.size();
  for (std::size_t i = 0; i < total; ++i) {
    if (mags[i] == 0.0) continue;
    if (i > 0 && mags[i - 1] == mags[i]) continue;
    out.lhs = std::max(out.lhs, std::pow(mags[i], r) * static_cast<double>(total - i));
  }
  const double weak = weak_besov_norm(arr, r);
  out.rhs = std::exp2(2.0 - r) * weak * weak / (1.0 - std::exp2(-r));
  out.holds = out.lhs <= out.rhs;
  out.ratio = out.rhs > 0.0 ? out.lhs / out.rhs : 0.0;
  return out;
}

}  // namespace warpshrink
