#include "bandprufer/config.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace bandprufer {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.push_back("");
  if (out.empty()) out.push_back(trim(s));
  return out;
}

double parse_num(const std::string& tok, int line, const std::string& key) {
  const std::string t = trim(tok);
  if (t.empty()) throw ConfigError(line, key, "empty numeric field");
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size())
    throw ConfigError(line, key, "not a number: '" + t + "'");
  return v;
}

long parse_integer(const std::string& tok, int line, const std::string& key) {
  const double v = parse_num(tok, line, key);
  const long n = static_cast<long>(v);
  if (static_cast<double>(n) != v)
    throw ConfigError(line, key, "expected an integer, got '" + trim(tok) + "'");
  return n;
}

std::vector<double> parse_list(const std::string& tok, int line, const std::string& key) {
  std::vector<double> out;
  for (const std::string& item : split(tok, ','))
    out.push_back(parse_num(item, line, key));
  return out;
}

void require_readable(const std::string& path, int line, const std::string& key) {
  std::ifstream f(path);
  if (!f) throw ConfigError(line, key, "cannot open file '" + path + "'");
}

void apply_potential(RunConfig& cfg, const std::string& value, int line) {
  std::vector<std::string> fields = split(value, ';');
  PotentialSpec p;
  const std::string& kind = fields[0];
  if (kind == "free") {
    if (fields.size() != 1) throw ConfigError(line, "potential", "'free' takes no fields");
    p.kind = PotentialSpec::Kind::free;
  } else if (kind == "cells") {
    if (fields.size() != 2) throw ConfigError(line, "potential", "expected 'cells; v1, v2, ...'");
    p.kind = PotentialSpec::Kind::cells;
    p.cells = parse_list(fields[1], line, "potential");
    if (p.cells.empty()) throw ConfigError(line, "potential", "empty cell list");
  } else if (kind == "cos") {
    if (fields.size() < 2 || fields.size() > 4)
      throw ConfigError(line, "potential", "expected 'cos; amplitude[; frequency[; cells]]'");
    p.kind = PotentialSpec::Kind::cosine;
    p.amplitude = parse_num(fields[1], line, "potential");
    if (fields.size() >= 3) p.frequency = static_cast<int>(parse_integer(fields[2], line, "potential"));
    if (fields.size() >= 4) p.resolution = static_cast<int>(parse_integer(fields[3], line, "potential"));
    if (p.frequency < 1) throw ConfigError(line, "potential", "frequency must be >= 1");
    if (p.resolution < 2) throw ConfigError(line, "potential", "cells must be >= 2");
  } else if (kind == "file") {
    if (fields.size() != 2) throw ConfigError(line, "potential", "expected 'file; path'");
    p.kind = PotentialSpec::Kind::file;
    p.path = fields[1];
    require_readable(p.path, line, "potential");
  } else {
    throw ConfigError(line, "potential", "unknown potential kind '" + kind + "'");
  }
  cfg.potential = std::move(p);
}

void apply_jacobi(RunConfig& cfg, const std::string& value, int line) {
  std::vector<std::string> fields = split(value, ';');
  if (fields.size() != 3)
    throw ConfigError(line, "jacobi", "expected 'q; a1, ..., aq; b1, ..., bq'");
  JacobiSpec j;
  j.q = static_cast<int>(parse_integer(fields[0], line, "jacobi"));
  if (j.q < 1) throw ConfigError(line, "jacobi", "period must be >= 1");
  j.a = parse_list(fields[1], line, "jacobi");
  j.b = parse_list(fields[2], line, "jacobi");
  if (static_cast<int>(j.a.size()) != j.q || static_cast<int>(j.b.size()) != j.q)
    throw ConfigError(line, "jacobi", "coefficient lists must each have q entries");
  for (double av : j.a)
    if (!(av > 0.0)) throw ConfigError(line, "jacobi", "off-diagonal entries must be positive");
  cfg.jacobi = std::move(j);
}

void apply_perturbation(RunConfig& cfg, const std::string& value, int line) {
  std::vector<std::string> fields = split(value, ';');
  PerturbationSpec p;
  const std::string& kind = fields[0];
  if (kind == "none") {
    if (fields.size() != 1) throw ConfigError(line, "perturbation", "'none' takes no fields");
    p.kind = PerturbationSpec::Kind::none;
  } else if (kind == "inverse" || kind == "inverse_square") {
    if (fields.size() != 2)
      throw ConfigError(line, "perturbation", "expected '" + kind + "; amplitude'");
    p.kind = kind == "inverse" ? PerturbationSpec::Kind::inverse
                               : PerturbationSpec::Kind::inverse_square;
    p.amplitude = parse_num(fields[1], line, "perturbation");
  } else if (kind == "log_inverse") {
    if (fields.size() > 2)
      throw ConfigError(line, "perturbation", "expected 'log_inverse[; amplitude]'");
    p.kind = PerturbationSpec::Kind::log_inverse;
    p.amplitude = fields.size() == 2 ? parse_num(fields[1], line, "perturbation") : 1.0;
  } else if (kind == "wvn") {
    if (fields.size() != 3)
      throw ConfigError(line, "perturbation", "expected 'wvn; energy; amplitude'");
    p.kind = PerturbationSpec::Kind::wvn;
    p.target_energy = parse_num(fields[1], line, "perturbation");
    p.amplitude = parse_num(fields[2], line, "perturbation");
    if (!(p.amplitude >= 0.0))
      throw ConfigError(line, "perturbation", "amplitude must be >= 0");
  } else if (kind == "file") {
    if (fields.size() < 2 || fields.size() > 3)
      throw ConfigError(line, "perturbation", "expected 'file; path[; dx]'");
    p.kind = PerturbationSpec::Kind::file;
    p.path = fields[1];
    require_readable(p.path, line, "perturbation");
    if (fields.size() == 3) {
      p.dx = parse_num(fields[2], line, "perturbation");
      if (!(p.dx > 0.0)) throw ConfigError(line, "perturbation", "dx must be positive");
    }
  } else {
    throw ConfigError(line, "perturbation", "unknown perturbation kind '" + kind + "'");
  }
  cfg.perturbation = std::move(p);
}

void apply_energy_grid(RunConfig& cfg, const std::string& value, int line) {
  std::vector<std::string> parts = split(value, ':');
  if (parts.size() != 3) throw ConfigError(line, "energy_grid", "expected 'lo:hi:count'");
  EnergyGrid g;
  g.lo = parse_num(parts[0], line, "energy_grid");
  g.hi = parse_num(parts[1], line, "energy_grid");
  g.count = static_cast<int>(parse_integer(parts[2], line, "energy_grid"));
  if (g.count < 2) throw ConfigError(line, "energy_grid", "count must be >= 2");
  if (!(g.hi > g.lo)) throw ConfigError(line, "energy_grid", "upper bound must exceed lower");
  cfg.energy_grid = g;
}

void validate(RunConfig& cfg, bool saw_mode) {
  if (!saw_mode) throw ConfigError(0, "mode", "required key is missing");
  if (cfg.potential.has_value() == cfg.jacobi.has_value())
    throw ConfigError(0, "potential", "exactly one of 'potential' and 'jacobi' is required");

  const bool discrete = cfg.is_discrete();
  switch (cfg.mode) {
    case RunMode::bands:
      if (!discrete && !cfg.e_max)
        throw ConfigError(0, "e_max", "continuum band scans need an energy window top");
      break;
    case RunMode::gamma:
      if (!cfg.energy_grid && cfg.energies.empty())
        throw ConfigError(0, "energy_grid", "gamma runs need 'energy_grid' or 'energies'");
      break;
    case RunMode::prufer:
      if (!cfg.energy) throw ConfigError(0, "energy", "prufer runs need 'energy'");
      break;
    case RunMode::wvn:
      if (!cfg.energy) throw ConfigError(0, "energy", "wvn runs need 'energy'");
      if (!cfg.amplitude) throw ConfigError(0, "amplitude", "wvn runs need 'amplitude'");
      if (!(*cfg.amplitude >= 0.0)) throw ConfigError(0, "amplitude", "must be >= 0");
      break;
    case RunMode::detect:
      if (!discrete && !cfg.e_max)
        throw ConfigError(0, "e_max", "continuum detection needs an energy window top");
      if (cfg.perturbation.kind == PerturbationSpec::Kind::none)
        throw ConfigError(0, "perturbation", "detection needs a perturbation");
      break;
    case RunMode::verify:
      if (!discrete && !cfg.e_max)
        throw ConfigError(0, "e_max", "continuum verification needs an energy window top");
      if (cfg.perturbation.kind == PerturbationSpec::Kind::none && cfg.energies.empty())
        throw ConfigError(0, "perturbation",
                          "verification needs a perturbation or an explicit energy list");
      break;
  }
  if (cfg.x_max && !(*cfg.x_max >= 10.0))
    throw ConfigError(0, "x_max", "must be >= 10");
  if (cfg.n_max && *cfg.n_max < 10) throw ConfigError(0, "n_max", "must be >= 10");
  if (cfg.grid_size && *cfg.grid_size < 2) throw ConfigError(0, "grid_size", "must be >= 2");
  if (cfg.margin && !(*cfg.margin >= 0.0)) throw ConfigError(0, "margin", "must be >= 0");
  if (cfg.bound_slack && !(*cfg.bound_slack > 0.0))
    throw ConfigError(0, "bound_slack", "must be positive");
  if (cfg.a_budget && !(*cfg.a_budget >= 0.0)) throw ConfigError(0, "a_budget", "must be >= 0");

  if (cfg.output.empty()) {
    switch (cfg.mode) {
      case RunMode::bands: cfg.output = "bands"; break;
      case RunMode::gamma: cfg.output = "gamma"; break;
      case RunMode::prufer: cfg.output = "prufer"; break;
      case RunMode::wvn: cfg.output = "wvn"; break;
      case RunMode::detect: cfg.output = "detect"; break;
      case RunMode::verify: cfg.output = "verify"; break;
    }
  }
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  bool saw_mode = false;
  std::map<std::string, int> seen;

  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string stripped = trim(raw);
    if (stripped.empty()) continue;

    const size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError(line, "", "expected 'key = value'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) throw ConfigError(line, "", "empty key");
    if (value.empty()) throw ConfigError(line, key, "empty value");
    auto ins = seen.emplace(key, line);
    if (!ins.second)
      throw ConfigError(line, key,
                        "duplicate key (first seen on line " + std::to_string(ins.first->second) + ")");

    if (key == "mode") {
      if (value == "bands") cfg.mode = RunMode::bands;
      else if (value == "gamma") cfg.mode = RunMode::gamma;
      else if (value == "prufer") cfg.mode = RunMode::prufer;
      else if (value == "wvn") cfg.mode = RunMode::wvn;
      else if (value == "detect") cfg.mode = RunMode::detect;
      else if (value == "verify") cfg.mode = RunMode::verify;
      else throw ConfigError(line, key, "unknown mode '" + value + "'");
      saw_mode = true;
    } else if (key == "potential") {
      apply_potential(cfg, value, line);
    } else if (key == "jacobi") {
      apply_jacobi(cfg, value, line);
    } else if (key == "perturbation") {
      apply_perturbation(cfg, value, line);
    } else if (key == "e_max") {
      cfg.e_max = parse_num(value, line, key);
    } else if (key == "energy_grid") {
      apply_energy_grid(cfg, value, line);
    } else if (key == "energies") {
      cfg.energies = parse_list(value, line, key);
      if (cfg.energies.empty()) throw ConfigError(line, key, "empty energy list");
    } else if (key == "energy") {
      cfg.energy = parse_num(value, line, key);
    } else if (key == "amplitude") {
      cfg.amplitude = parse_num(value, line, key);
    } else if (key == "a_budget") {
      cfg.a_budget = parse_num(value, line, key);
    } else if (key == "x_max") {
      cfg.x_max = parse_num(value, line, key);
    } else if (key == "n_max") {
      cfg.n_max = parse_integer(value, line, key);
    } else if (key == "theta0") {
      cfg.theta0 = parse_num(value, line, key);
    } else if (key == "grid_size") {
      cfg.grid_size = static_cast<int>(parse_integer(value, line, key));
    } else if (key == "margin") {
      cfg.margin = parse_num(value, line, key);
    } else if (key == "bound_slack") {
      cfg.bound_slack = parse_num(value, line, key);
    } else if (key == "output") {
      cfg.output = value;
    } else {
      throw ConfigError(line, key, "unknown key");
    }
  }

  validate(cfg, saw_mode);
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError(0, "", "cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_config(buf.str());
}

}  // namespace bandprufer
