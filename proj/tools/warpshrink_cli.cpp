// warpshrink command-line front end: run, table, audit, rate.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "warpshrink/besov.hpp"
#include "warpshrink/config.hpp"
#include "warpshrink/report.hpp"
#include "warpshrink/simulation.hpp"

namespace fs = std::filesystem;
using namespace warpshrink;

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> runs;
};

std::vector<ExperimentConfig> load_configs(const std::string& path, const Overrides& ov) {
  auto configs = parse_config(read_text(path));
  for (auto& c : configs) {
    if (ov.seed) c.seed = *ov.seed;
    if (ov.runs) c.runs = *ov.runs;
    c.validate();
  }
  return configs;
}

std::string sanitize(std::string name) {
  for (char& ch : name) {
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_' && ch != '.') ch = '_';
  }
  return name;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, const Overrides& ov, bool trace) {
  const auto configs = load_configs(config_path, ov);
  RunManifest manifest;
  manifest.config_path = config_path;
  manifest.output_dir = out_dir;
  manifest.canonical_config = serialize_config(configs);
  if (ov.seed) manifest.overrides.push_back("seed=" + std::to_string(*ov.seed));
  if (ov.runs) manifest.overrides.push_back("runs=" + std::to_string(*ov.runs));
  manifest.overrides.push_back(trace ? "trace=1" : "trace=0");
  const std::string hash = manifest.hash();

  const unsigned workers = default_workers();
  ReportTable table;
  std::vector<std::pair<std::string, std::string>> files;
  for (const auto& cfg : configs) {
    ReportRow row = run_experiment(cfg, workers);
    std::fprintf(stderr, "%-48s mean_rmse=%.6f sd=%.6f\n", cfg.name.c_str(), row.mean_rmse, row.sd_rmse);
    table.push_back(std::move(row));
    if (trace) {
      const PreparedExperiment prep(cfg);
      const RunOutput run = run_detailed(prep, cfg.seed + 1);
      files.emplace_back("trace_" + sanitize(cfg.name) + ".csv",
                         format_trace(reconstruction_trace(prep, run.estimate), hash));
    }
  }
  files.emplace_back("results.csv", format_csv(table, hash));
  files.emplace_back("manifest.txt", "hash " + hash + "\nversion " + manifest.version + "\nconfig " +
                                         config_path + "\n" + [&] {
                                           std::string o;
                                           for (const auto& s : manifest.overrides) o += "override " + s + "\n";
                                           return o;
                                         }() + "\n" + manifest.canonical_config);

  // Everything is computed before the first byte is written; files are
  // staged as temporaries and renamed only once all of them exist.
  fs::create_directories(out_dir);
  std::vector<fs::path> staged;
  try {
    for (const auto& [name, contents] : files) {
      fs::path tmp = fs::path(out_dir) / (name + ".tmp");
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      staged.push_back(tmp);
      if (!(out << contents) || !out.flush()) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& p : staged) fs::remove(p, ec);
    throw;
  }
  for (std::size_t i = 0; i < files.size(); ++i) fs::rename(staged[i], fs::path(out_dir) / files[i].first);
  std::printf("%s", format_summary(table).c_str());
  std::printf("wrote %zu files to %s (manifest %s)\n", files.size(), out_dir.c_str(), hash.c_str());
  return 0;
}

int cmd_table(const std::string& dir, const std::string& out_path) {
  if (!fs::is_directory(dir)) throw std::runtime_error("'" + dir + "' is not a directory");
  std::vector<fs::path> inputs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") inputs.push_back(entry.path());
  }
  std::sort(inputs.begin(), inputs.end());
  ReportTable merged;
  for (const auto& p : inputs) {
    std::ifstream in(p);
    std::string first;
    if (!std::getline(in, first) || first != kReportHeader) continue;
    auto rows = read_csv(p);
    merged.insert(merged.end(), rows.begin(), rows.end());
  }
  if (merged.empty()) throw std::runtime_error("no results tables found in '" + dir + "'");
  const std::string summary = format_summary(merged);
  if (!out_path.empty()) write_file_atomic(out_path, summary);
  std::printf("%s", summary.c_str());
  return 0;
}

int cmd_audit(const std::string& config_path, const Overrides& ov) {
  const auto configs = load_configs(config_path, ov);
  for (const auto& cfg : configs) {
    const PreparedExperiment prep(cfg);
    const RunOutput run = run_detailed(prep, cfg.seed + 1);
    const auto& est = run.estimate;
    const WeightAuditReport rep = weight_audit(est.empirical, est.shrunk.coefficients, cfg.n);
    const double delta = 1.0 / (2.0 * static_cast<double>(cfg.n));
    const double omega = omega_event_fraction(est.empirical, delta);
    const auto arr = CoefficientArray::from(est.shrunk.coefficients);
    const auto p1 = prop1_check(arr, 1.0);
    std::printf("[%s] rule=%s J=%d n=%zu sigma=%.6f rmse=%.6f\n", cfg.name.c_str(), rule_label(cfg.rule).c_str(),
                est.empirical.max_level(), cfg.n, prep.sigma, run.rmse);
    std::printf("  omega fraction (delta=1/(2n))   %.6f\n", omega);
    std::printf("  t_n = sqrt(ln n / n)            %.6f  (J_n=%d)\n", rep.t_n, rep.level_cutoff);
    std::printf("  weights outside [0,1]           %zu (max excess %.3g)\n", rep.weights_outside_unit,
                rep.max_weight_excess);
    std::printf("  smallest c  (w <= c t_n)        %.6g\n", rep.c_min);
    std::printf("  smallest K  (1-w <= K(...))     %.6g\n", rep.k_min);
    std::printf("  nonzero weights at j >= J_n     %zu of %zu atoms\n", rep.above_cutoff_nonzero, rep.atoms_checked);
    std::printf("  empty atoms                     %zu\n", est.shrunk.empty_atoms.size());
    std::printf("  weak-Besov exceedance bound r=1 %s (ratio %.4f)\n", p1.holds ? "holds" : "VIOLATED", p1.ratio);
  }
  return 0;
}

int cmd_rate(const std::string& config_path, const Overrides& ov, const std::vector<std::size_t>& n_list) {
  const auto configs = load_configs(config_path, ov);
  const unsigned workers = default_workers();
  for (const auto& cfg : configs) {
    const auto& sizes = n_list.empty() ? cfg.n_list : n_list;
    const RateResult res = rate_study(cfg, sizes, workers);
    std::printf("[%s] rule=%s runs=%zu\n", cfg.name.c_str(), rule_label(cfg.rule).c_str(), cfg.runs);
    for (std::size_t i = 0; i < res.n_values.size(); ++i) {
      std::printf("  n=%-7zu mean_mse=%.8f\n", res.n_values[i], res.mean_mse[i]);
    }
    if (res.slope_defined) {
      std::printf("  slope d log MSE / d log(n/ln n) = %.4f  inversions=%d\n", res.slope, res.inversions);
    } else {
      std::printf("  slope undefined (MSE vanishes)  inversions=%d\n", res.inversions);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian warped-wavelet regression estimators and simulation harness"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string out_file;
  std::string table_dir;
  bool trace = false;
  std::uint64_t seed = 0;
  std::size_t runs = 0;
  std::vector<std::size_t> n_list;

  auto* run = app.add_subcommand("run", "run every experiment in a config and write results.csv");
  run->add_option("config", config_path, "experiment config file")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--out", out_dir, "output directory")->required();
  auto* run_seed = run->add_option("--seed", seed, "override the base seed");
  auto* run_runs = run->add_option("--runs", runs, "override the number of runs")->check(CLI::PositiveNumber);
  run->add_flag("--trace", trace, "also write a reconstruction trace per experiment");

  auto* table = app.add_subcommand("table", "merge results CSVs in a directory into a summary table");
  table->add_option("dir", table_dir, "directory holding results CSVs")->required();
  table->add_option("-o,--out", out_file, "also write the summary to this file");

  auto* audit = app.add_subcommand("audit", "shrinkage-weight and noise-level diagnostics on one realization");
  audit->add_option("config", config_path, "experiment config file")->required()->check(CLI::ExistingFile);
  auto* audit_seed = audit->add_option("--seed", seed, "override the base seed");

  auto* rate = app.add_subcommand("rate", "empirical MSE decay over increasing sample sizes");
  rate->add_option("config", config_path, "experiment config file")->required()->check(CLI::ExistingFile);
  auto* rate_seed = rate->add_option("--seed", seed, "override the base seed");
  auto* rate_runs = rate->add_option("--runs", runs, "runs per sample size")->check(CLI::PositiveNumber);
  rate->add_option("--n-list", n_list, "sample sizes (overrides n_list in the config)")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  Overrides ov;
  if (*run_seed || *audit_seed || *rate_seed) ov.seed = seed;
  if (*run_runs || *rate_runs) ov.runs = runs;

  try {
    if (*run) return cmd_run(config_path, out_dir, ov, trace);
    if (*table) return cmd_table(table_dir, out_file);
    if (*audit) return cmd_audit(config_path, ov);
    if (*rate) return cmd_rate(config_path, ov, n_list);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "%s: invalid config\n%s\n", config_path.c_str(), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
