#pragma once

// Compactly supported orthonormal wavelets, cascade-built dyadic tables and
// evaluation of periodized atoms on [0,1].

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace warpshrink {

/// Orthonormal two-scale filter. `continuous` is false for families whose
/// father wavelet has jumps (Haar); their tables are read by sample-and-hold.
struct WaveletFamily {
  std::string name;
  std::vector<double> lowpass;
  int vanishing_moments = 1;
  bool continuous = true;

  int support_len() const { return static_cast<int>(lowpass.size()); }

  /// Highpass taps g_k = (-1)^k h_{N-1-k}; psi shares phi's support [0, N-1].
  std::vector<double> highpass() const {
    const std::size_t taps = lowpass.size();
    std::vector<double> g(taps);
    for (std::size_t k = 0; k < taps; ++k) {
      const double sign = (k % 2 == 0) ? 1.0 : -1.0;
      g[k] = sign * lowpass[taps - 1 - k];
    }
    return g;
  }

  void validate(double tol = 1e-12) const {
    if (lowpass.size() < 2 || lowpass.size() % 2 != 0) {
      throw std::invalid_argument("wavelet filter '" + name + "' needs an even number of taps");
    }
    double sum = 0.0;
    for (double h : lowpass) sum += h;
    if (std::abs(sum - std::numbers::sqrt2) > tol) {
      throw std::invalid_argument("wavelet filter '" + name + "' does not sum to sqrt(2)");
    }
    const std::size_t taps = lowpass.size();
    for (std::size_t shift = 0; 2 * shift < taps; ++shift) {
      double dot = 0.0;
      for (std::size_t k = 0; k + 2 * shift < taps; ++k) dot += lowpass[k] * lowpass[k + 2 * shift];
      const double expected = (shift == 0) ? 1.0 : 0.0;
      if (std::abs(dot - expected) > tol) {
        throw std::invalid_argument("wavelet filter '" + name + "' is not orthonormal");
      }
    }
  }
};

inline WaveletFamily haar() {
  return {"haar", {std::numbers::sqrt2 / 2.0, std::numbers::sqrt2 / 2.0}, 1, false};
}

/// Least-asymmetric Daubechies filter with eight vanishing moments (sym8),
/// reconstruction lowpass taps of the standard filter bank.
inline WaveletFamily symmlet8() {
  return {"symmlet8",
          {0.0018899503327594609, -0.0003029205147213668, -0.01495225833704823,
           0.003808752013890615, 0.049137179673607506, -0.027219029917056003,
           -0.05194583810770904, 0.3644418948353314, 0.7771857517005235,
           0.4813596512583722, -0.061273359067658524, -0.1432942383508097,
           0.007607487324917605, 0.03169508781149298, -0.0005421323317911481,
           -0.0033824159510061256},
          8,
          true};
}

inline WaveletFamily wavelet_by_name(const std::string& name) {
  if (name == "haar") return haar();
  if (name == "symmlet8" || name == "sym8") return symmlet8();
  throw std::invalid_argument("unknown wavelet '" + name + "'");
}

/// Level j = -1 is the scaling atom phi_{0,0}; for j >= 0 the translate k
/// runs over [0, 2^j).
struct AtomIndex {
  int j = 0;
  int k = 0;

  static int count_at(int j) { return j < 0 ? 1 : (1 << j); }
  bool valid() const { return j >= -1 && j < 30 && k >= 0 && k < count_at(j); }
};

/// phi and psi sampled at spacing 2^-L over their common support.
struct DyadicTable {
  std::string family;
  int resolution_level = 0;
  double support_lo = 0.0;
  double support_hi = 0.0;
  bool continuous = true;
  std::vector<double> phi_samples;
  std::vector<double> psi_samples;
  int cascade_iterations = 0;

  double spacing() const { return std::ldexp(1.0, -resolution_level); }
  double width() const { return support_hi - support_lo; }

  double phi(double t) const { return lookup(phi_samples, t); }
  double psi(double t) const { return lookup(psi_samples, t); }

 private:
  double lookup(const std::vector<double>& samples, double t) const {
    if (!(t >= support_lo) || t >= support_hi) return 0.0;
    const double pos = std::ldexp(t - support_lo, resolution_level);
    auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= samples.size()) return samples.back();
    if (!continuous) return samples[i];
    const double frac = pos - static_cast<double>(i);
    return samples[i] + frac * (samples[i + 1] - samples[i]);
  }
};

/// Cascade iteration phi <- sqrt(2) sum_k h_k phi(2x - k) on the fixed grid of
/// spacing 2^-L, started from the box function, run to a fixed point.
inline DyadicTable build_table(const WaveletFamily& family, int L = 12) {
  family.validate();
  if (L < 6) throw std::invalid_argument("table resolution level must be at least 6");
  if (L > 20) throw std::invalid_argument("table resolution level above 20 is not supported");

  const int taps = family.support_len();
  const std::int64_t unit = std::int64_t{1} << L;
  const std::int64_t size = (taps - 1) * unit + 1;
  const auto& h = family.lowpass;

  std::vector<double> phi(static_cast<std::size_t>(size), 0.0);
  std::fill(phi.begin(), phi.begin() + unit, 1.0);
  std::vector<double> next(phi.size());

  const double tol = std::min(std::ldexp(1.0, -L), 1e-10);
  const int max_iterations = 2000;
  int iterations = 0;
  for (;; ++iterations) {
    if (iterations == max_iterations) {
      throw std::runtime_error("cascade for '" + family.name + "' did not converge");
    }
    double diff = 0.0;
    for (std::int64_t i = 0; i < size; ++i) {
      double acc = 0.0;
      for (int k = 0; k < taps; ++k) {
        const std::int64_t src = 2 * i - k * unit;
        if (src < 0) break;
        if (src < size) acc += h[k] * phi[static_cast<std::size_t>(src)];
      }
      acc *= std::numbers::sqrt2;
      diff = std::max(diff, std::abs(acc - phi[static_cast<std::size_t>(i)]));
      next[static_cast<std::size_t>(i)] = acc;
    }
    phi.swap(next);
    if (diff < tol) break;
  }

  const std::vector<double> g = family.highpass();
  std::vector<double> psi(phi.size(), 0.0);
  for (std::int64_t i = 0; i < size; ++i) {
    double acc = 0.0;
    for (int k = 0; k < taps; ++k) {
      const std::int64_t src = 2 * i - k * unit;
      if (src < 0) break;
      if (src < size) acc += g[k] * phi[static_cast<std::size_t>(src)];
    }
    psi[static_cast<std::size_t>(i)] = std::numbers::sqrt2 * acc;
  }

  DyadicTable table;
  table.family = family.name;
  table.resolution_level = L;
  table.support_lo = 0.0;
  table.support_hi = static_cast<double>(taps - 1);
  table.continuous = family.continuous;
  table.phi_samples = std::move(phi);
  table.psi_samples = std::move(psi);
  table.cascade_iterations = iterations + 1;
  return table;
}

/// Trapezoid integral of a table column.
inline double table_integral(const DyadicTable& table, const std::vector<double>& samples) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < samples.size(); ++i) acc += samples[i] + samples[i + 1];
  return 0.5 * acc * table.spacing();
}

struct AtomValue {
  int k;
  double value;
};

/// Appends the nonzero periodized atoms of level j at u in [0,1] to `out`,
/// one entry per translate k.
inline void level_values(const DyadicTable& table, int j, double u, std::vector<AtomValue>& out) {
  const bool scaling = j < 0;
  const int count = AtomIndex::count_at(j);
  const double dilation = scaling ? 1.0 : std::ldexp(1.0, j);
  const double amplitude = scaling ? 1.0 : std::sqrt(dilation);
  const double t0 = dilation * u;
  const auto m_lo = static_cast<std::int64_t>(std::floor(t0 - table.support_hi)) + 1;
  const auto m_hi = static_cast<std::int64_t>(std::floor(t0 - table.support_lo));
  const std::size_t first = out.size();
  const bool unique_k = count >= table.width();
  for (std::int64_t m = m_lo; m <= m_hi; ++m) {
    const double t = t0 - static_cast<double>(m);
    const double v = amplitude * (scaling ? table.phi(t) : table.psi(t));
    if (v == 0.0) continue;
    const int k = static_cast<int>(((m % count) + count) % count);
    if (unique_k) {
      out.push_back({k, v});
      continue;
    }
    auto it = std::find_if(out.begin() + static_cast<std::ptrdiff_t>(first), out.end(),
                           [k](const AtomValue& a) { return a.k == k; });
    if (it == out.end()) {
      out.push_back({k, v});
    } else {
      it->value += v;
    }
  }
}

/// Periodized atom sum_l 2^{j/2} psi(2^j (x + l) - k), phi for j = -1.
inline double eval_periodized(const DyadicTable& table, AtomIndex atom, double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("atom evaluation point outside [0,1]");
  if (!atom.valid()) throw std::invalid_argument("invalid atom index");
  std::vector<AtomValue> values;
  level_values(table, atom.j, x, values);
  double acc = 0.0;
  for (const auto& v : values) {
    if (v.k == atom.k) acc += v.value;
  }
  return acc;
}

/// Flat position of (j,k) in a coefficient vector holding levels -1..J:
/// 0 for the scaling atom, 2^j + k otherwise.
inline std::size_t flat_index(int j, int k) {
  return j < 0 ? 0 : (std::size_t{1} << j) + static_cast<std::size_t>(k);
}

inline std::size_t atom_count(int max_level) { return std::size_t{1} << (max_level + 1); }

inline AtomIndex atom_at(std::size_t index) {
  if (index == 0) return {-1, 0};
  int j = 0;
  while ((std::size_t{2} << j) <= index) ++j;
  return {j, static_cast<int>(index - (std::size_t{1} << j))};
}

/// Max |<psi_a, psi_b> - delta_ab| over all atoms with level <= J, midpoint
/// quadrature on `quad_points` cells.
inline double gram_deviation(const DyadicTable& table, int J, std::size_t quad_points) {
  if (J < 0) throw std::invalid_argument("gram_deviation needs J >= 0");
  if (quad_points < (std::size_t{1} << (J + 6))) {
    throw std::invalid_argument("gram_deviation needs at least 2^(J+6) quadrature points");
  }
  const std::size_t atoms = atom_count(J);
  std::vector<double> gram(atoms * atoms, 0.0);
  std::vector<std::pair<std::size_t, double>> active;
  std::vector<AtomValue> scratch;
  const double weight = 1.0 / static_cast<double>(quad_points);
  for (std::size_t q = 0; q < quad_points; ++q) {
    const double x = (static_cast<double>(q) + 0.5) * weight;
    active.clear();
    for (int j = -1; j <= J; ++j) {
      scratch.clear();
      level_values(table, j, x, scratch);
      for (const auto& v : scratch) active.emplace_back(flat_index(j, v.k), v.value);
    }
    for (const auto& [a, va] : active) {
      for (const auto& [b, vb] : active) gram[a * atoms + b] += va * vb * weight;
    }
  }
  double worst = 0.0;
  for (std::size_t a = 0; a < atoms; ++a) {
    for (std::size_t b = 0; b < atoms; ++b) {
      const double expected = (a == b) ? 1.0 : 0.0;
      worst = std::max(worst, std::abs(gram[a * atoms + b] - expected));
    }
  }
  return worst;
}

}  // namespace warpshrink
