#pragma once

// Result serialization: RMSE tables, reconstruction traces, the merged
// summary layout and run provenance.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "warpshrink/config.hpp"
#include "warpshrink/simulation.hpp"

namespace warpshrink {

inline constexpr const char* kToolVersion = "warpshrink 1.0.0";
inline constexpr const char* kReportHeader = "signal,design,rule,rsnr,n,runs,mean_rmse,sd_rmse";

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// Inputs that determine a run's outputs. Paths are recorded but only the
/// canonical config text, overrides and version feed the hash, so the same
/// experiment hashes the same from any directory.
struct RunManifest {
  std::string config_path;
  std::string output_dir;
  std::vector<std::string> overrides;
  std::string version = kToolVersion;
  std::string canonical_config;

  std::string hash() const {
    std::string blob = version + '\n' + canonical_config;
    for (const auto& o : overrides) blob += '\n' + o;
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(blob)));
    return buf;
  }
};

inline void sort_rows(ReportTable& table) {
  std::stable_sort(table.begin(), table.end(), [](const ReportRow& a, const ReportRow& b) {
    return std::tie(a.signal, a.design, a.rule, a.rsnr) < std::tie(b.signal, b.design, b.rule, b.rsnr);
  });
}

inline std::string format_csv(ReportTable table, const std::string& provenance = {}) {
  if (table.empty()) throw std::invalid_argument("refusing to write an empty report table");
  sort_rows(table);
  std::string out = std::string(kReportHeader) + '\n';
  char buf[256];
  for (const auto& r : table) {
    std::snprintf(buf, sizeof buf, "%s,%s,%s,%.6f,%zu,%zu,%.6f,%.6f\n", r.signal.c_str(), r.design.c_str(),
                  r.rule.c_str(), r.rsnr, r.n, r.runs, r.mean_rmse, r.sd_rmse);
    out += buf;
  }
  if (!provenance.empty()) out += "# manifest " + provenance + '\n';
  return out;
}

/// Writes `contents` to a sibling temporary and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

/// Header plus one row per entry, sorted by (signal, design, rule, rsnr).
inline void emit_csv(const ReportTable& table, const std::filesystem::path& path,
                     const std::string& provenance = {}) {
  write_file_atomic(path, format_csv(table, provenance));
}

/// Reads a file written by emit_csv; '#' lines are skipped.
inline ReportTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != kReportHeader) {
    throw std::runtime_error("'" + path.string() + "' is not a results table");
  }
  ReportTable table;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 8) throw std::runtime_error("malformed row in '" + path.string() + "': " + line);
    ReportRow r;
    r.signal = f[0];
    r.design = f[1];
    r.rule = f[2];
    r.rsnr = std::stod(f[3]);
    r.n = std::stoul(f[4]);
    r.runs = std::stoul(f[5]);
    r.mean_rmse = std::stod(f[6]);
    r.sd_rmse = std::stod(f[7]);
    table.push_back(std::move(r));
  }
  return table;
}

inline std::string format_trace(const std::vector<TracePoint>& trace, const std::string& provenance = {}) {
  if (trace.empty()) throw std::invalid_argument("empty trace");
  std::string out = "x,truth,estimate\n";
  char buf[128];
  for (const auto& p : trace) {
    std::snprintf(buf, sizeof buf, "%.9f,%.9f,%.9f\n", p.x, p.truth, p.estimate);
    out += buf;
  }
  if (!provenance.empty()) out += "# manifest " + provenance + '\n';
  return out;
}

inline void emit_trace(const std::vector<TracePoint>& trace, const std::filesystem::path& path,
                       const std::string& provenance = {}) {
  write_file_atomic(path, format_trace(trace, provenance));
}

/// One line per (signal, design, n); columns are rules grouped by rsnr.
inline std::string format_summary(ReportTable table) {
  if (table.empty()) return "(no results)\n";
  sort_rows(table);
  std::set<double> rsnrs;
  std::set<std::string> rules;
  std::map<std::tuple<std::string, std::string, std::size_t>, std::map<std::pair<double, std::string>, double>> cells;
  for (const auto& r : table) {
    rsnrs.insert(r.rsnr);
    rules.insert(r.rule);
    cells[{r.signal, r.design, r.n}][{r.rsnr, r.rule}] = r.mean_rmse;
  }
  std::ostringstream out;
  char buf[64];
  out << "signal     design    n     ";
  for (double s : rsnrs) {
    for (const auto& rule : rules) {
      std::snprintf(buf, sizeof buf, " %4s@%-5g", rule.c_str(), s);
      out << buf;
    }
  }
  out << '\n';
  for (const auto& [key, row] : cells) {
    std::snprintf(buf, sizeof buf, "%-10s %-9s %-5zu ", std::get<0>(key).c_str(), std::get<1>(key).c_str(),
                  std::get<2>(key));
    out << buf;
    for (double s : rsnrs) {
      for (const auto& rule : rules) {
        auto it = row.find({s, rule});
        if (it == row.end()) {
          out << "  ---------";
        } else {
          std::snprintf(buf, sizeof buf, "  %9.6f", it->second);
          out << buf;
        }
      }
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace warpshrink
