// Denoise one noisy HeaviSine sample drawn from a non-uniform design with
// each of the three estimators, and print the RMSE of each.

#include <cstdio>

#include "warpshrink/simulation.hpp"

int main() {
  using namespace warpshrink;

  const DesignModel design = DesignModel::sine();
  const DyadicTable table = build_table(symmlet8(), 12);
  const TestSignal f = TestSignal::normalized(SignalKind::heavisine, 1.0);
  const double sigma = calibrate_sigma(f, 4.0);
  const std::size_t n = 1024;

  const Sample sample = simulate_sample(design, f, sigma, n, 2024);
  std::vector<double> truth(n);
  for (std::size_t i = 0; i < n; ++i) truth[i] = f(sample.x[i]);

  const RuleSpec rules[] = {LargeVarianceHyper{}, SmallVarianceHyper{}, HardThreshold{}};
  std::printf("n=%zu sigma=%.4f design=%s\n", n, sigma, to_string(design.kind()).c_str());
  for (const auto& rule : rules) {
    const Estimate est = estimate(sample, design, table, rule);
    std::size_t kept = 0;
    for (double b : est.shrunk.coefficients.beta_hat()) kept += b != 0.0;
    std::printf("%s  J=%d  kept %4zu of %4zu coefficients  rmse=%.4f\n", rule_label(rule).c_str(),
                est.empirical.max_level(), kept, est.empirical.size(), rmse(est.fitted, truth));
  }
  return 0;
}
