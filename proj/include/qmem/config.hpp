// config.hpp
// Experiment configuration: a flat key = value text format with optional
// [section] headers. Keys before the first section apply to every
// experiment; keys inside [<experiment>] apply to that experiment only and
// override global ones.
//
//   # comment
//   seed = 7
//   [grw-mc]
//   lambda = 1
//   times = 0.5, 1, 2

#pragma once

#include "qmem/csv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qmem {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind { GrwMc, Lindblad, Blp, Divisibility, BoundCampaign, ExportFamily };

inline constexpr ExperimentKind kAllExperiments[] = {ExperimentKind::GrwMc,        ExperimentKind::Lindblad,
                                                     ExperimentKind::Blp,          ExperimentKind::Divisibility,
                                                     ExperimentKind::BoundCampaign, ExperimentKind::ExportFamily};

inline std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::GrwMc: return "grw-mc";
    case ExperimentKind::Lindblad: return "lindblad";
    case ExperimentKind::Blp: return "blp";
    case ExperimentKind::Divisibility: return "divisibility";
    case ExperimentKind::BoundCampaign: return "bound-campaign";
    case ExperimentKind::ExportFamily: return "export-family";
  }
  return "?";
}

inline std::optional<ExperimentKind> parse_experiment_kind(std::string_view name) {
  for (auto k : kAllExperiments) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

// Keys each experiment accepts. `seed` is accepted everywhere.
inline std::vector<std::string_view> allowed_keys(ExperimentKind k) {
  static const std::vector<std::string_view> model_keys{
      "model", "gamma", "omega", "t_final", "steps", "dim", "channels", "max_rate", "coupling", "family_file"};
  switch (k) {
    case ExperimentKind::GrwMc:
      return {"seed",       "lambda",      "r_c",   "x_min",        "x_max", "n_points",         "separation",
              "packet_width", "times", "trajectories", "hamiltonian", "mass", "save_trajectories"};
    case ExperimentKind::Lindblad:
      return {"seed",  "model", "rate",  "lambda",   "r_c",        "x_min",       "x_max",  "n_points",
              "separation", "packet_width", "dim", "channels", "max_rate", "times", "generator"};
    case ExperimentKind::Blp: {
      auto keys = model_keys;
      keys.insert(keys.end(), {"seed", "pairs", "quadrature"});
      return keys;
    }
    case ExperimentKind::Divisibility:
    case ExperimentKind::ExportFamily: {
      auto keys = model_keys;
      keys.push_back("seed");
      return keys;
    }
    case ExperimentKind::BoundCampaign:
      return {"seed", "instances", "dim_s", "dim_e", "t_max"};
  }
  return {};
}

class ExperimentConfig {
 public:
  struct Entry {
    std::string key;
    std::string value;
    std::size_t line = 0;  // 0 when set programmatically

    bool operator==(const Entry& o) const { return key == o.key && value == o.value; }
  };

  ExperimentConfig() = default;
  explicit ExperimentConfig(ExperimentKind kind) : kind_(kind) {}

  ExperimentKind kind() const { return kind_; }
  const std::vector<Entry>& entries() const { return entries_; }

  void set(std::string key, std::string value, std::size_t line = 0) {
    for (auto& e : entries_) {
      if (e.key == key) {
        e.value = std::move(value);
        e.line = line;
        return;
      }
    }
    entries_.push_back({std::move(key), std::move(value), line});
  }

  const Entry* find(std::string_view key) const {
    for (const auto& e : entries_) {
      if (e.key == key) return &e;
    }
    return nullptr;
  }

  bool has(std::string_view key) const { return find(key) != nullptr; }

  std::string text(std::string_view key, std::string fallback) const {
    const Entry* e = find(key);
    return e ? e->value : fallback;
  }

  template <typename Pred>
  double number(std::string_view key, std::optional<double> fallback, Pred valid, std::string_view requirement) const {
    const Entry* e = find(key);
    if (!e) {
      if (!fallback) throw ConfigError("config error: missing required field '" + std::string(key) + "'");
      return *fallback;
    }
    double v = 0.0;
    try {
      v = csv::parse_double(e->value);
    } catch (const std::invalid_argument&) {
      throw error(*e, "is not a number");
    }
    if (!std::isfinite(v) || !valid(v)) throw error(*e, "must be " + std::string(requirement));
    return v;
  }

  double positive(std::string_view key, std::optional<double> fallback) const {
    return number(key, fallback, [](double v) { return v > 0.0; }, "> 0");
  }

  double real(std::string_view key, std::optional<double> fallback) const {
    return number(key, fallback, [](double) { return true; }, "finite");
  }

  std::uint64_t count(std::string_view key, std::optional<std::uint64_t> fallback, std::uint64_t min = 0) const {
    const Entry* e = find(key);
    if (!e) {
      if (!fallback) throw ConfigError("config error: missing required field '" + std::string(key) + "'");
      return *fallback;
    }
    std::uint64_t v = 0;
    try {
      std::size_t used = 0;
      if (e->value.empty() || e->value.front() == '-') throw std::invalid_argument("negative");
      v = std::stoull(e->value, &used);
      if (used != e->value.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw error(*e, "must be a non-negative integer");
    }
    if (v < min) throw error(*e, "must be >= " + std::to_string(min));
    return v;
  }

  // Comma-separated list of numbers.
  std::vector<double> list(std::string_view key, std::vector<double> fallback) const {
    const Entry* e = find(key);
    if (!e) return fallback;
    std::vector<double> out;
    for (const auto& cell : csv::split(e->value)) {
      try {
        out.push_back(csv::parse_double(cell));
      } catch (const std::invalid_argument&) {
        throw error(*e, "must be a comma-separated list of numbers");
      }
      if (!std::isfinite(out.back())) throw error(*e, "must contain finite numbers");
    }
    if (out.empty()) throw error(*e, "must not be empty");
    return out;
  }

  std::vector<double> sorted_times(std::string_view key, std::vector<double> fallback) const {
    auto t = list(key, std::move(fallback));
    const Entry* e = find(key);
    if (t.front() < 0.0 || !std::is_sorted(t.begin(), t.end())) {
      if (e) throw error(*e, "must be sorted and >= 0");
      throw ConfigError("config error: field '" + std::string(key) + "' must be sorted and >= 0");
    }
    return t;
  }

  std::string choice(std::string_view key, std::string fallback, const std::vector<std::string>& options) const {
    const Entry* e = find(key);
    if (!e) return fallback;
    if (std::find(options.begin(), options.end(), e->value) == options.end()) {
      std::string opts;
      for (const auto& o : options) opts += (opts.empty() ? "" : ", ") + o;
      throw error(*e, "must be one of: " + opts);
    }
    return e->value;
  }

  ConfigError error(const Entry& e, const std::string& msg) const {
    std::string where = e.line ? "line " + std::to_string(e.line) + ": " : "";
    return ConfigError("config error: " + where + "field '" + e.key + "' " + msg + " (got '" + e.value + "')");
  }

  // Rejects keys the experiment does not understand.
  void check_keys() const {
    const auto allowed = allowed_keys(kind_);
    for (const auto& e : entries_) {
      if (std::find(allowed.begin(), allowed.end(), e.key) == allowed.end()) {
        throw error(e, "is not a recognised " + std::string(to_string(kind_)) + " setting");
      }
    }
  }

  std::string serialize() const {
    std::ostringstream os;
    os << '[' << to_string(kind_) << "]\n";
    for (const auto& e : entries_) os << e.key << " = " << e.value << '\n';
    return os.str();
  }

  bool operator==(const ExperimentConfig& o) const { return kind_ == o.kind_ && entries_ == o.entries_; }

 private:
  ExperimentKind kind_ = ExperimentKind::GrwMc;
  std::vector<Entry> entries_;
};

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Reads the global keys plus the [kind] section; other sections are skipped
// (but must still be well formed).
inline ExperimentConfig parse_config(std::string_view text, ExperimentKind kind) {
  ExperimentConfig global(kind);
  ExperimentConfig section(kind);
  std::optional<std::string> current;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line = trim(line.substr(0, hash));
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("config error: line " + std::to_string(line_no) + ": malformed section header");
      const std::string name = trim(std::string_view(line).substr(1, line.size() - 2));
      if (!parse_experiment_kind(name)) {
        throw ConfigError("config error: line " + std::to_string(line_no) + ": unknown experiment section '" + name + "'");
      }
      current = name;
    } else {
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("config error: line " + std::to_string(line_no) + ": expected 'key = value'");
      }
      std::string key = trim(std::string_view(line).substr(0, eq));
      std::string value = trim(std::string_view(line).substr(eq + 1));
      if (key.empty()) throw ConfigError("config error: line " + std::to_string(line_no) + ": empty key");
      if (!current) {
        // global keys must be known to some experiment; ones this experiment
        // does not use are ignored
        bool known = false;
        for (auto k : kAllExperiments) {
          const auto keys = allowed_keys(k);
          known = known || std::find(keys.begin(), keys.end(), key) != keys.end();
        }
        if (!known) throw ConfigError("config error: line " + std::to_string(line_no) + ": unknown field '" + key + "'");
        const auto mine = allowed_keys(kind);
        if (std::find(mine.begin(), mine.end(), key) != mine.end()) global.set(std::move(key), std::move(value), line_no);
      } else if (*current == to_string(kind)) {
        section.set(std::move(key), std::move(value), line_no);
      }
    }
    if (end == text.size()) break;
  }
  for (const auto& e : section.entries()) global.set(e.key, e.value, e.line);
  global.check_keys();
  return global;
}

inline ExperimentConfig load_config(const std::string& path, ExperimentKind kind) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config error: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), kind);
}

}  // namespace qmem
