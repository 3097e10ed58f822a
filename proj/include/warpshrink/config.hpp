#pragma once

// Line-oriented experiment configuration.
//
//   # comment
//   [section-name]
//   signal = blocks, bumps        (lists expand to one experiment per combination)
//   design = sine
//   rule   = large, small, hard
//   rsnr   = 4, 7
//   n = 1024
//
// List-valued keys: signal, design, rule, rsnr. Every other key takes one value.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "warpshrink/simulation.hpp"

namespace warpshrink {

struct ConfigIssue {
  int line = 0;
  std::string message;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues)
      : std::runtime_error(render(issues)), issues_(std::move(issues)) {}

  const std::vector<ConfigIssue>& issues() const { return issues_; }

 private:
  static std::string render(const std::vector<ConfigIssue>& issues) {
    std::string out;
    for (const auto& i : issues) {
      if (!out.empty()) out += '\n';
      out += "line " + std::to_string(i.line) + ": " + i.message;
    }
    return out;
  }
  std::vector<ConfigIssue> issues_;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = value.find(',', start);
    out.push_back(trim(std::string_view(value).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Entry {
  std::string value;
  int line = 0;
};

struct Section {
  std::string name;
  int line = 0;
  std::map<std::string, Entry> entries;
};

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "signal", "design", "rule", "n", "rsnr", "runs", "seed", "wavelet", "table_level", "amplitude",
      "sigma", "n_list", "c1", "c2", "alpha", "beta", "q", "w_scale", "tau_scale", "tau_mode",
      "hard_scale", "hard_multiplier", "sine_amplitude", "hole_floor", "hole_width", "density_file"};
  return keys;
}

/// Converts one section into configs, appending problems to `issues`.
class SectionReader {
 public:
  SectionReader(const Section& section, std::vector<ConfigIssue>& issues) : s_(section), issues_(issues) {}

  std::vector<ExperimentConfig> read() {
    for (const auto& [key, entry] : s_.entries) {
      if (!known_keys().count(key)) fail(entry.line, "unknown key '" + key + "'");
    }
    for (const char* key : {"signal", "design", "rule"}) {
      if (!s_.entries.count(key)) fail(s_.line, "section [" + s_.name + "] is missing required key '" + key + "'");
    }

    ExperimentConfig base;
    base.name = s_.name;
    read_count("n", base.n, 4);
    read_count("runs", base.runs, 1);
    read_seed(base.seed);
    read_real("amplitude", base.amplitude, 0.0, false);
    if (has("sigma")) {
      double sigma = 0.0;
      read_real("sigma", sigma, 0.0, false);
      base.sigma_override = sigma;
    }
    if (has("wavelet")) {
      try {
        base.wavelet = wavelet_by_name(get("wavelet").value).name;
      } catch (const std::invalid_argument& e) {
        fail(get("wavelet").line, e.what());
      }
    }
    if (has("table_level")) {
      std::size_t level = 0;
      read_count("table_level", level, 6);
      if (level > 20) fail(get("table_level").line, "table_level must be at most 20");
      base.table_level = static_cast<int>(level);
    }
    if (has("n_list")) {
      base.n_list.clear();
      const auto& e = get("n_list");
      for (const auto& item : split_list(e.value)) {
        std::size_t v = 0;
        if (!parse_unsigned(item, v) || v < 4) {
          fail(e.line, "n_list entries must be integers >= 4, got '" + item + "'");
        } else {
          base.n_list.push_back(v);
        }
      }
    }
    read_real("sine_amplitude", base.design.sine_amplitude, 0.0, false);
    if (base.design.sine_amplitude >= 1.0) fail(get_line("sine_amplitude"), "sine_amplitude must be below 1");
    read_real("hole_floor", base.design.hole_floor, 0.0, true);
    if (base.design.hole_floor >= 1.0) fail(get_line("hole_floor"), "hole_floor must be below 1");
    read_real("hole_width", base.design.hole_width, 0.0, true);
    if (has("density_file")) base.design.density_file = get("density_file").value;

    LargeVarianceHyper large;
    read_real("q", large.q, 0.0, false);
    read_real("w_scale", large.w_scale, 0.0, true);
    read_real("tau_scale", large.tau_scale, 0.0, true);
    if (has("tau_mode")) {
      const auto& e = get("tau_mode");
      if (e.value == "theory") large.tau_mode = TauMode::theory;
      else if (e.value == "noise-sd") large.tau_mode = TauMode::noise_sd;
      else if (e.value == "noise-var") large.tau_mode = TauMode::noise_var;
      else fail(e.line, "tau_mode must be theory, noise-sd or noise-var");
    }
    SmallVarianceHyper small;
    read_real("c1", small.c1, 0.0, true);
    read_real("c2", small.c2, 0.0, true);
    read_real("alpha", small.alpha, 0.0, false);
    read_real("beta", small.beta, 0.0, false);
    HardThreshold hard;
    if (has("hard_scale")) {
      const auto& e = get("hard_scale");
      if (e.value == "nominal") hard.scale = HardScale::nominal;
      else if (e.value == "stochastic") hard.scale = HardScale::stochastic;
      else if (e.value == "literal") hard.scale = HardScale::literal;
      else fail(e.line, "hard_scale must be nominal, stochastic or literal");
    }
    read_real("hard_multiplier", hard.multiplier, 0.0, false);

    std::vector<SignalKind> signals;
    for (const auto& item : list("signal")) {
      try {
        signals.push_back(signal_by_name(item));
      } catch (const std::invalid_argument& e) {
        fail(get_line("signal"), e.what());
      }
    }
    std::vector<DesignKind> designs;
    for (const auto& item : list("design")) {
      if (item == "uniform") designs.push_back(DesignKind::uniform);
      else if (item == "sine") designs.push_back(DesignKind::sine);
      else if (item == "hole2") designs.push_back(DesignKind::hole2);
      else if (item == "custom") designs.push_back(DesignKind::custom);
      else fail(get_line("design"), "unknown design '" + item + "'");
    }
    if (std::find(designs.begin(), designs.end(), DesignKind::custom) != designs.end() &&
        base.design.density_file.empty()) {
      fail(get_line("design"), "design 'custom' needs density_file");
    }
    std::vector<RuleSpec> rules;
    for (const auto& item : list("rule")) {
      if (item == "large" || item == "E1") rules.emplace_back(large);
      else if (item == "small" || item == "E2") rules.emplace_back(small);
      else if (item == "hard" || item == "E3") rules.emplace_back(hard);
      else fail(get_line("rule"), "unknown rule '" + item + "' (expected large, small or hard)");
    }
    std::vector<double> rsnrs;
    if (has("rsnr")) {
      for (const auto& item : list("rsnr")) {
        double v = 0.0;
        if (!parse_real(item, v)) fail(get_line("rsnr"), "rsnr must be a number, got '" + item + "'");
        else if (!(v > 0.0)) fail(get_line("rsnr"), "rsnr must be positive, got '" + item + "'");
        else rsnrs.push_back(v);
      }
    } else {
      rsnrs.push_back(base.rsnr);
    }

    std::vector<ExperimentConfig> out;
    const bool expanded = signals.size() * designs.size() * rules.size() * rsnrs.size() > 1;
    for (SignalKind sig : signals) {
      for (DesignKind design : designs) {
        for (const RuleSpec& rule : rules) {
          for (double rsnr : rsnrs) {
            ExperimentConfig c = base;
            c.signal = sig;
            c.design.kind = design;
            c.rule = rule;
            c.rsnr = rsnr;
            if (expanded) {
              c.name = s_.name + ":" + to_string(sig) + ":" + to_string(design) + ":" + rule_label(rule) + ":" +
                       format_real(rsnr);
            }
            out.push_back(std::move(c));
          }
        }
      }
    }
    return out;
  }

 private:
  bool has(const std::string& key) const { return s_.entries.count(key) != 0; }
  const Entry& get(const std::string& key) const { return s_.entries.at(key); }
  int get_line(const std::string& key) const { return has(key) ? get(key).line : s_.line; }
  void fail(int line, std::string msg) { issues_.push_back({line, std::move(msg)}); }

  std::vector<std::string> list(const std::string& key) {
    if (!has(key)) return {};
    auto items = split_list(get(key).value);
    for (const auto& item : items) {
      if (item.empty()) fail(get(key).line, "empty entry in '" + key + "'");
    }
    std::erase(items, std::string{});
    return items;
  }

  static bool parse_real(const std::string& text, double& out) {
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc{} && ptr == end && std::isfinite(out);
  }

  static bool parse_unsigned(const std::string& text, std::size_t& out) {
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc{} && ptr == end;
  }

  void read_real(const std::string& key, double& out, double lower, bool strict) {
    if (!has(key)) return;
    const auto& e = get(key);
    double v = 0.0;
    if (!parse_real(e.value, v)) {
      fail(e.line, "'" + key + "' must be a number, got '" + e.value + "'");
    } else if (strict ? !(v > lower) : !(v >= lower)) {
      fail(e.line, "'" + key + "' out of range: must be " + (strict ? "> " : ">= ") + format_real(lower));
    } else {
      out = v;
    }
  }

  void read_count(const std::string& key, std::size_t& out, std::size_t minimum) {
    if (!has(key)) return;
    const auto& e = get(key);
    std::size_t v = 0;
    if (!parse_unsigned(e.value, v)) {
      fail(e.line, "'" + key + "' must be a nonnegative integer, got '" + e.value + "'");
    } else if (v < minimum) {
      fail(e.line, "'" + key + "' out of range: must be >= " + std::to_string(minimum));
    } else {
      out = v;
    }
  }

  void read_seed(std::uint64_t& out) {
    if (!has("seed")) return;
    const auto& e = get("seed");
    std::uint64_t v = 0;
    const char* end = e.value.data() + e.value.size();
    auto [ptr, ec] = std::from_chars(e.value.data(), end, v);
    if (ec != std::errc{} || ptr != end) fail(e.line, "'seed' must be a nonnegative integer");
    else out = v;
  }

  const Section& s_;
  std::vector<ConfigIssue>& issues_;
};

}  // namespace detail

/// Parses every section; throws ConfigError listing all problems found.
inline std::vector<ExperimentConfig> parse_config(std::string_view text) {
  std::vector<ConfigIssue> issues;
  std::vector<detail::Section> sections;
  std::set<std::string> names;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    std::string_view raw = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    std::string line = detail::trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        issues.push_back({line_no, "malformed section header"});
        continue;
      }
      std::string name = detail::trim(std::string_view(line).substr(1, line.size() - 2));
      if (!names.insert(name).second) issues.push_back({line_no, "duplicate section [" + name + "]"});
      sections.push_back({name, line_no, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      issues.push_back({line_no, "expected 'key = value'"});
      continue;
    }
    if (sections.empty()) {
      issues.push_back({line_no, "key outside of any [section]"});
      continue;
    }
    std::string key = detail::trim(std::string_view(line).substr(0, eq));
    std::string value = detail::trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) {
      issues.push_back({line_no, "missing key before '='"});
      continue;
    }
    if (value.empty()) {
      issues.push_back({line_no, "missing value for '" + key + "'"});
      continue;
    }
    auto& entries = sections.back().entries;
    if (entries.count(key)) {
      issues.push_back({line_no, "duplicate key '" + key + "'"});
      continue;
    }
    entries.emplace(key, detail::Entry{value, line_no});
  }
  if (sections.empty() && issues.empty()) issues.push_back({line_no, "no [section] found"});

  std::vector<ExperimentConfig> configs;
  for (const auto& section : sections) {
    auto expanded = detail::SectionReader(section, issues).read();
    configs.insert(configs.end(), expanded.begin(), expanded.end());
  }
  if (!issues.empty()) {
    std::stable_sort(issues.begin(), issues.end(),
                     [](const ConfigIssue& a, const ConfigIssue& b) { return a.line < b.line; });
    throw ConfigError(std::move(issues));
  }
  return configs;
}

/// One fully explicit section per config; parse_config reads it back unchanged.
inline std::string serialize_config(const std::vector<ExperimentConfig>& configs) {
  using detail::format_real;
  std::ostringstream out;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const auto& c = configs[i];
    if (i) out << '\n';
    out << '[' << c.name << "]\n";
    out << "signal = " << to_string(c.signal) << '\n';
    out << "design = " << to_string(c.design.kind) << '\n';
    out << "n = " << c.n << '\n';
    out << "rsnr = " << format_real(c.rsnr) << '\n';
    out << "runs = " << c.runs << '\n';
    out << "seed = " << c.seed << '\n';
    out << "wavelet = " << c.wavelet << '\n';
    out << "table_level = " << c.table_level << '\n';
    out << "amplitude = " << format_real(c.amplitude) << '\n';
    if (c.sigma_override) out << "sigma = " << format_real(*c.sigma_override) << '\n';
    out << "n_list = ";
    for (std::size_t k = 0; k < c.n_list.size(); ++k) out << (k ? ", " : "") << c.n_list[k];
    out << '\n';
    out << "sine_amplitude = " << format_real(c.design.sine_amplitude) << '\n';
    out << "hole_floor = " << format_real(c.design.hole_floor) << '\n';
    out << "hole_width = " << format_real(c.design.hole_width) << '\n';
    if (!c.design.density_file.empty()) out << "density_file = " << c.design.density_file << '\n';
    std::visit(
        [&out](const auto& h) {
          using T = std::decay_t<decltype(h)>;
          if constexpr (std::is_same_v<T, LargeVarianceHyper>) {
            out << "rule = large\n";
            out << "q = " << format_real(h.q) << '\n';
            out << "w_scale = " << format_real(h.w_scale) << '\n';
            out << "tau_scale = " << format_real(h.tau_scale) << '\n';
            out << "tau_mode = " << to_string(h.tau_mode) << '\n';
          } else if constexpr (std::is_same_v<T, SmallVarianceHyper>) {
            out << "rule = small\n";
            out << "c1 = " << format_real(h.c1) << '\n';
            out << "c2 = " << format_real(h.c2) << '\n';
            out << "alpha = " << format_real(h.alpha) << '\n';
            out << "beta = " << format_real(h.beta) << '\n';
          } else {
            out << "rule = hard\n";
            out << "hard_scale = " << to_string(h.scale) << '\n';
            out << "hard_multiplier = " << format_real(h.multiplier) << '\n';
          }
        },
        c.rule);
  }
  return out.str();
}

}  // namespace warpshrink
