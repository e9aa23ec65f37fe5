#include "swlab/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace swlab {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: cannot parse number '" + v + "' for key " + key);
  }
}

int parse_int(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: cannot parse integer '" + v + "' for key " +
                      key);
  }
}

const std::set<std::string> kKnownKeys = {
    "potential.coeffs", "potential.samples_file", "lambda", "alpha",
    "N",                "buffer",                 "tol",    "leak_max",
    "t_max",            "n_list",                 "k_grid", "epsilon",
    "scheme"};

FourierPotential parse_coeff_list(const std::string& v) {
  // comma-separated frequency:re:im triples, m > 0 only
  std::map<int, cplx> pos;
  for (const std::string& item : split(v, ',')) {
    if (item.empty()) continue;
    const std::vector<std::string> parts = split(item, ':');
    if (parts.size() != 3) {
      throw ConfigError(
          "config: potential.coeffs entries must be freq:re:im triples, got '" +
          item + "'");
    }
    const int m = parse_int(parts[0], "potential.coeffs");
    pos[m] = cplx(parse_double(parts[1], "potential.coeffs"),
                  parse_double(parts[2], "potential.coeffs"));
  }
  return FourierPotential::from_positive_coeffs(pos);
}

FourierPotential load_samples_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open samples file " + path);
  std::vector<double> samples;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    samples.push_back(parse_double(line, "samples_file"));
  }
  if (samples.size() < 3) {
    throw ConfigError("config: samples file needs at least 3 values");
  }
  const int bw = static_cast<int>((samples.size() - 1) / 2);
  return coefficients_from_samples(samples, std::min(bw, 32));
}

}  // namespace

ExperimentKind kind_from_name(const std::string& name) {
  const std::string base = name.substr(0, name.find('.'));
  if (base == "deviation_scan") return ExperimentKind::deviation_scan;
  if (base == "decay_fit") return ExperimentKind::decay_fit;
  if (base == "acceleration_persistence") {
    return ExperimentKind::acceleration_persistence;
  }
  if (base == "bound_state_probe") return ExperimentKind::bound_state_probe;
  throw ConfigError("config: experiment name '" + name +
                    "' does not resolve to a registered experiment "
                    "(deviation_scan, decay_fit, acceleration_persistence, "
                    "bound_state_probe)");
}

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::deviation_scan: return "deviation_scan";
    case ExperimentKind::decay_fit: return "decay_fit";
    case ExperimentKind::acceleration_persistence:
      return "acceleration_persistence";
    case ExperimentKind::bound_state_probe: return "bound_state_probe";
  }
  return "?";
}

std::vector<ExperimentConfig> parse_config_text(const std::string& text,
                                                const std::string& base_dir) {
  std::vector<ExperimentConfig> out;
  ExperimentConfig* cur = nullptr;
  double cur_lambda = 1.0;
  FourierPotential cur_pot;

  auto finalize = [&]() {
    if (!cur) return;
    cur->spec.potential = cur_pot.scaled(cur_lambda);
    cur->spec.lambda = cur_lambda;
    cur->spec.cfg.validate(cur->spec.potential.bandwidth());
    if (cur->spec.n_list.empty()) {
      throw ConfigError("config: experiment '" + cur->spec.name +
                        "' needs a non-empty n_list");
    }
    for (int n : cur->spec.n_list) {
      if (!cur->spec.auto_truncation &&
          std::abs(n) > cur->spec.cfg.half_width - cur->spec.cfg.buffer) {
        throw ConfigError("config: n_list entry " + std::to_string(n) +
                          " outside safe truncation N - B");
      }
    }
  };

  std::stringstream ss(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(ss, raw)) {
    ++lineno;
    std::string line = raw;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("config: malformed section header at line " +
                          std::to_string(lineno));
      }
      finalize();
      out.emplace_back();
      cur = &out.back();
      cur->spec.name = trim(line.substr(1, line.size() - 2));
      cur->kind = kind_from_name(cur->spec.name);
      cur_lambda = 1.0;
      cur_pot = FourierPotential();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos || !cur) {
      throw ConfigError("config: expected 'key = value' at line " +
                        std::to_string(lineno));
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!kKnownKeys.count(key)) {
      throw ConfigError("config: unknown key '" + key + "' at line " +
                        std::to_string(lineno));
    }
    ExperimentSpec& spec = cur->spec;
    if (key == "potential.coeffs") {
      cur_pot = parse_coeff_list(value);
    } else if (key == "potential.samples_file") {
      std::filesystem::path p(value);
      if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
      cur_pot = load_samples_file(p.string());
    } else if (key == "lambda") {
      cur_lambda = parse_double(value, key);
      if (cur_lambda < 0) throw ConfigError("config: lambda must be >= 0");
    } else if (key == "alpha") {
      spec.alpha = parse_double(value, key);
    } else if (key == "N") {
      spec.cfg.half_width = parse_int(value, key);
      spec.auto_truncation = false;
    } else if (key == "buffer") {
      spec.cfg.buffer = parse_int(value, key);
    } else if (key == "tol") {
      spec.cfg.tol = parse_double(value, key);
    } else if (key == "leak_max") {
      spec.cfg.leak_max = parse_double(value, key);
    } else if (key == "t_max") {
      spec.t_max = parse_double(value, key);
    } else if (key == "n_list") {
      spec.n_list.clear();
      for (const std::string& item : split(value, ',')) {
        if (!item.empty()) spec.n_list.push_back(parse_int(item, key));
      }
    } else if (key == "k_grid") {
      spec.k_grid = parse_int(value, key);
      if (spec.k_grid < 1) throw ConfigError("config: k_grid must be >= 1");
    } else if (key == "epsilon") {
      spec.epsilon = parse_double(value, key);
    } else if (key == "scheme") {
      spec.cfg.scheme = scheme_from_string(value);
    }
  }
  finalize();
  if (out.empty()) {
    throw ConfigError("config: no experiment sections found");
  }
  return out;
}

std::vector<ExperimentConfig> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(
      ss.str(), std::filesystem::path(path).parent_path().string());
}

}  // namespace swlab
