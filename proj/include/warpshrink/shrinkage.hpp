#pragma once

// Coefficientwise estimation rules: posterior median under a point mass plus
// Gaussian prior (two hyperparameter regimes), universal hard thresholding,
// the induced Bayes threshold and an audit of the shrinkage weights.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "warpshrink/coefficients.hpp"

namespace warpshrink {

/// tau_j^2 = c1 2^{-j alpha}, pi_j = min(1, c2 2^{-j beta}).
struct SmallVarianceHyper {
  double c1 = 1.0;
  double c2 = 2.0;
  double alpha = 0.5;
  double beta = 1.0;

  bool operator==(const SmallVarianceHyper&) const = default;

  void validate() const {
    if (!(c1 > 0.0) || !(c2 > 0.0)) throw std::invalid_argument("c1 and c2 must be positive");
    if (!(alpha >= 0.0) || !(beta >= 0.0)) throw std::invalid_argument("alpha and beta must be nonnegative");
  }
};

/// How the level-free prior variance is computed.
enum class TauMode {
  theory,     ///< tau^2 = tau_scale / sqrt(n ln n)
  noise_sd,   ///< tau = tau_scale sigma^2 / (n ln n)
  noise_var,  ///< tau^2 = tau_scale sigma^2 / (n ln n)
};

/// Level-free prior: tau(n)^2 per TauMode, prior odds w(n) = w_scale n^{-q/2}.
struct LargeVarianceHyper {
  double q = 1.0;
  double w_scale = 20.0;
  double tau_scale = 20.0;
  TauMode tau_mode = TauMode::theory;

  bool operator==(const LargeVarianceHyper&) const = default;

  void validate() const {
    if (!(q >= 0.0)) throw std::invalid_argument("q must be nonnegative");
    if (!(w_scale > 0.0) || !(tau_scale > 0.0)) throw std::invalid_argument("w_scale and tau_scale must be positive");
  }
};

enum class HardScale {
  nominal,     ///< sigma sqrt(2 ln n / n)
  stochastic,  ///< sqrt(2 ln n) gamma_jk
  literal,     ///< sigma sqrt(2 ln n)
};

struct HardThreshold {
  HardScale scale = HardScale::nominal;
  double multiplier = 1.0;

  bool operator==(const HardThreshold&) const = default;

  void validate() const {
    if (!(multiplier >= 0.0)) throw std::invalid_argument("hard threshold multiplier must be nonnegative");
  }
};

using RuleSpec = std::variant<LargeVarianceHyper, SmallVarianceHyper, HardThreshold>;

/// Short estimator label: E1 large-variance Bayes, E2 small-variance Bayes,
/// E3 universal hard threshold.
inline std::string rule_label(const RuleSpec& rule) {
  switch (rule.index()) {
    case 0: return "E1";
    case 1: return "E2";
    default: return "E3";
  }
}

inline std::string to_string(TauMode m) {
  switch (m) {
    case TauMode::theory: return "theory";
    case TauMode::noise_sd: return "noise-sd";
    case TauMode::noise_var: return "noise-var";
  }
  return "?";
}

inline std::string to_string(HardScale s) {
  switch (s) {
    case HardScale::nominal: return "nominal";
    case HardScale::stochastic: return "stochastic";
    case HardScale::literal: return "literal";
  }
  return "?";
}

/// sqrt(2) erf^-1(p) = Phi^-1((1 + p)/2), with 1 - p passed separately so
/// values of p close to one keep their precision.
inline double half_normal_quantile(double p, double one_minus_p) {
  if (p <= 0.0) return 0.0;
  if (one_minus_p <= 0.0) return std::numeric_limits<double>::infinity();
  if (p < 0.5) return std::numbers::sqrt2 * boost::math::erf_inv(p);
  return std::numbers::sqrt2 * boost::math::erfc_inv(one_minus_p);
}

/// Posterior median of beta given beta_hat ~ N(beta, gamma^2) and
/// beta ~ pi N(0, tau^2) + (1 - pi) delta_0.
inline double posterior_median(double beta_hat, double gamma_sq, double tau_sq, double pi) {
  if (!(gamma_sq > 0.0)) throw std::invalid_argument("posterior_median needs gamma_sq > 0");
  if (!(tau_sq > 0.0)) throw std::invalid_argument("posterior_median needs tau_sq > 0");
  if (!(pi >= 0.0 && pi <= 1.0)) throw std::invalid_argument("posterior_median needs pi in [0,1]");
  if (pi == 0.0 || beta_hat == 0.0) return 0.0;

  const double total = tau_sq + gamma_sq;
  const double abs_b = std::abs(beta_hat);
  double one_minus_eta_capped = 1.0;  // 1 - min(eta, 1)
  double eta_capped = 0.0;
  if (pi < 1.0) {
    const double log_eta = std::log1p(-pi) - std::log(pi) + 0.5 * std::log(total / gamma_sq) -
                           tau_sq * beta_hat * beta_hat / (2.0 * gamma_sq * total);
    if (log_eta >= 0.0) return 0.0;
    eta_capped = std::exp(log_eta);
    one_minus_eta_capped = -std::expm1(log_eta);
  }
  const double quantile = half_normal_quantile(eta_capped, one_minus_eta_capped);
  const double zeta = tau_sq / total * abs_b - std::sqrt(tau_sq * gamma_sq / total) * quantile;
  if (!(zeta > 0.0)) return 0.0;
  return std::copysign(zeta, beta_hat);
}

struct PriorParams {
  double tau_sq;
  double pi;
};

/// Level j >= -1; the scaling row uses the j = 0 values.
inline PriorParams hyper_small(int j, const SmallVarianceHyper& h) {
  if (j < -1) throw std::invalid_argument("hyper_small needs j >= -1");
  h.validate();
  const double level = static_cast<double>(std::max(j, 0));
  return {h.c1 * std::exp2(-level * h.alpha), std::min(1.0, h.c2 * std::exp2(-level * h.beta))};
}

/// `sigma` only enters the noise-sd and noise-var modes.
inline PriorParams hyper_large(std::size_t n, const LargeVarianceHyper& h, double sigma = 1.0) {
  if (n < 3) throw std::invalid_argument("hyper_large needs n >= 3");
  h.validate();
  const double nd = static_cast<double>(n);
  const double n_log_n = nd * std::log(nd);
  double tau_sq = 0.0;
  switch (h.tau_mode) {
    case TauMode::theory: tau_sq = h.tau_scale / std::sqrt(n_log_n); break;
    case TauMode::noise_sd: {
      const double tau = h.tau_scale * sigma * sigma / n_log_n;
      tau_sq = tau * tau;
      break;
    }
    case TauMode::noise_var: tau_sq = h.tau_scale * sigma * sigma / n_log_n; break;
  }
  const double w = h.w_scale * std::pow(nd, -h.q / 2.0);
  return {tau_sq, std::isinf(w) ? 1.0 : w / (1.0 + w)};
}

/// Keeps beta_hat iff |beta_hat| > lambda.
inline double hard_threshold_at(double beta_hat, double lambda) {
  return std::abs(beta_hat) > lambda ? beta_hat : 0.0;
}

/// Universal threshold on the coefficient scale, lambda = sigma sqrt(2 ln n / n).
inline double universal_threshold(double sigma, std::size_t n) {
  if (n < 2) throw std::invalid_argument("universal threshold needs n >= 2");
  if (!(sigma > 0.0)) throw std::invalid_argument("universal threshold needs sigma > 0");
  const double nd = static_cast<double>(n);
  return sigma * std::sqrt(2.0 * std::log(nd) / nd);
}

inline double hard_threshold(double beta_hat, double sigma, std::size_t n) {
  return hard_threshold_at(beta_hat, universal_threshold(sigma, n));
}

/// Largest lambda >= 0 with posterior_median(lambda) == 0; the next double up
/// already gives a positive median.
inline double locate_threshold(double tau_sq, double pi, double gamma_sq) {
  if (!(pi > 0.0 && pi < 1.0)) throw std::invalid_argument("locate_threshold needs 0 < pi < 1");
  auto zero_at = [&](double b) { return posterior_median(b, gamma_sq, tau_sq, pi) == 0.0; };
  double lo = 0.0;
  double hi = std::sqrt(gamma_sq);
  while (zero_at(hi)) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) throw std::runtime_error("locate_threshold failed to bracket");
  }
  for (;;) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    if (zero_at(mid)) lo = mid; else hi = mid;
  }
  return lo;
}

/// Level cutoff each rule expects. Small-variance rules use J_alpha when
/// alpha >= 1; for alpha < 1 J_alpha exceeds what n points can resolve and
/// the cutoff is floor(log2 n) - 1, the finest level of an n-point transform.
inline int rule_cutoff(const RuleSpec& rule, std::size_t n) {
  if (const auto* small = std::get_if<SmallVarianceHyper>(&rule)) {
    if (small->alpha >= 1.0) return cutoff_small(n, small->alpha).level;
    if (n < 4) throw std::invalid_argument("small-variance rule needs n >= 4");
    return static_cast<int>(std::floor(std::log2(static_cast<double>(n)) + 1e-12)) - 1;
  }
  return cutoff_large(n);
}

struct ShrinkageResult {
  CoefficientSet coefficients;
  /// Flat indices of atoms no design point reached; their output is zero.
  std::vector<std::size_t> empty_atoms;
};

/// Applies `rule` to every detail coefficient; the scaling atom passes through.
inline ShrinkageResult apply_rule(const CoefficientSet& coeffs, const RuleSpec& rule) {
  const std::size_t n = coeffs.sample_size();
  const int expected = rule_cutoff(rule, n);
  if (coeffs.max_level() != expected) {
    throw std::invalid_argument("coefficient cutoff " + std::to_string(coeffs.max_level()) + " does not match " +
                                rule_label(rule) + " cutoff " + std::to_string(expected));
  }
  std::visit([](const auto& h) { h.validate(); }, rule);

  ShrinkageResult result{coeffs, {}};
  auto out = result.coefficients.beta_hat();
  const auto beta = coeffs.beta_hat();
  const auto gamma_sq = coeffs.gamma_sq();
  const auto energy = coeffs.design_energy();
  const double sigma = coeffs.sigma();
  const double nd = static_cast<double>(n);

  PriorParams large{};
  if (const auto* h = std::get_if<LargeVarianceHyper>(&rule)) large = hyper_large(n, *h, sigma);

  for (std::size_t idx = 1; idx < coeffs.size(); ++idx) {
    if (energy[idx] == 0.0) {
      out[idx] = 0.0;
      result.empty_atoms.push_back(idx);
      continue;
    }
    const AtomIndex atom = atom_at(idx);
    if (const auto* hard = std::get_if<HardThreshold>(&rule)) {
      double lambda = 0.0;
      switch (hard->scale) {
        case HardScale::nominal: lambda = sigma * std::sqrt(2.0 * std::log(nd) / nd); break;
        case HardScale::stochastic: lambda = std::sqrt(2.0 * std::log(nd) * gamma_sq[idx]); break;
        case HardScale::literal: lambda = sigma * std::sqrt(2.0 * std::log(nd)); break;
      }
      out[idx] = hard_threshold_at(beta[idx], hard->multiplier * lambda);
      continue;
    }
    // Noise-free limit gamma -> 0 of the posterior median is beta_hat itself.
    if (gamma_sq[idx] == 0.0) {
      out[idx] = beta[idx];
      continue;
    }
    const PriorParams prior = std::holds_alternative<SmallVarianceHyper>(rule)
                                  ? hyper_small(atom.j, std::get<SmallVarianceHyper>(rule))
                                  : large;
    out[idx] = posterior_median(beta[idx], gamma_sq[idx], prior.tau_sq, prior.pi);
  }
  return result;
}

struct WeightAuditReport {
  double t_n = 0.0;
  int level_cutoff = 0;                 ///< J_n
  std::size_t weights_outside_unit = 0;
  double max_weight_excess = 0.0;       ///< largest distance of a weight from [0,1]
  double c_min = 0.0;                   ///< smallest c with w <= c t_n whenever |beta_hat| <= m t_n
  double k_min = 0.0;                   ///< smallest K with 1 - w <= K (t_n / |beta_hat| + t_n)
  std::size_t above_cutoff_nonzero = 0; ///< atoms with j >= J_n and w != 0
  std::size_t atoms_checked = 0;
};

/// Weights w_jk = shrunk / original (0 where the original is 0) over the
/// detail atoms, checked against the shrinkage-rule conditions with constant m.
inline WeightAuditReport weight_audit(const CoefficientSet& original, const CoefficientSet& shrunk, std::size_t n,
                                 double m = 1.0) {
  if (original.size() != shrunk.size()) throw std::invalid_argument("weight_audit needs aligned sets");
  if (n < 3) throw std::invalid_argument("weight_audit needs n >= 3");
  WeightAuditReport report;
  const double nd = static_cast<double>(n);
  report.t_n = std::sqrt(std::log(nd) / nd);
  report.level_cutoff = cutoff_large(n);
  const auto before = original.beta_hat();
  const auto after = shrunk.beta_hat();
  for (std::size_t idx = 1; idx < original.size(); ++idx) {
    const AtomIndex atom = atom_at(idx);
    const double b = before[idx];
    const double w = b == 0.0 ? 0.0 : after[idx] / b;
    ++report.atoms_checked;
    const double excess = std::max(w - 1.0, -w);
    if (excess > 0.0) {
      ++report.weights_outside_unit;
      report.max_weight_excess = std::max(report.max_weight_excess, excess);
    }
    if (atom.j >= report.level_cutoff && w != 0.0) ++report.above_cutoff_nonzero;
    if (atom.j > report.level_cutoff) continue;
    const double abs_b = std::abs(b);
    if (abs_b <= m * report.t_n) report.c_min = std::max(report.c_min, w / report.t_n);
    if (abs_b > 0.0) {
      const double bound = report.t_n / abs_b + report.t_n;
      report.k_min = std::max(report.k_min, (1.0 - w) / bound);
    }
  }
  return report;
}

}  // namespace warpshrink
