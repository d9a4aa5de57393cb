#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bandprufer/errors.hpp"

namespace bandprufer {

enum class RunMode { bands, gamma, prufer, wvn, detect, verify };

// Operator selection: continuum background (piecewise-constant cells) or a
// Jacobi period. Exactly one is set.
struct PotentialSpec {
  enum class Kind { free, cells, cosine, file };
  Kind kind = Kind::free;
  std::vector<double> cells;      // kind == cells
  double amplitude = 0.0;         // kind == cosine: amp * cos(2*pi*freq*x)
  int frequency = 1;
  int resolution = 1024;          // midpoint sampling cells for kind == cosine
  std::string path;               // kind == file: one cell value per line
};

struct JacobiSpec {
  int q = 0;
  std::vector<double> a;
  std::vector<double> b;
};

struct PerturbationSpec {
  enum class Kind { none, inverse, inverse_square, log_inverse, wvn, file };
  Kind kind = Kind::none;
  double amplitude = 0.0;
  double target_energy = 0.0;     // kind == wvn
  std::string path;               // kind == file
  double dx = 0.0;                // kind == file (continuum; 0 means 1.0)
};

struct EnergyGrid {
  double lo = 0.0;
  double hi = 0.0;
  int count = 0;
};

// Parsed, validated run description. Field presence beyond the mode's needs is
// rejected at validation time only when contradictory (e.g. both potential and
// jacobi); harmless extras like x_max in a discrete run are ignored.
struct RunConfig {
  RunMode mode = RunMode::bands;

  std::optional<PotentialSpec> potential;
  std::optional<JacobiSpec> jacobi;

  std::optional<double> e_max;            // bands window top (continuum)
  std::optional<EnergyGrid> energy_grid;  // gamma scan
  std::vector<double> energies;           // explicit energy list (gamma, verify)
  std::optional<double> energy;           // single energy (prufer, wvn)

  PerturbationSpec perturbation;
  std::optional<double> amplitude;        // wvn construction amplitude
  std::optional<double> a_budget;         // verify: override measured sup x|V|

  std::optional<double> x_max;
  std::optional<long> n_max;
  std::optional<double> theta0;

  std::optional<int> grid_size;           // detect energy grid per band
  std::optional<double> margin;           // detect / classification margin
  std::optional<double> bound_slack;      // verify comparison multiplier

  std::string output;                     // basename for CSV/JSON artifacts

  bool is_discrete() const { return jacobi.has_value(); }
};

// Line-oriented `key = value` text: `#` starts a comment, blank lines are
// skipped, list-valued keys separate fields with `;` and items with `,`.
// Unknown keys and malformed values raise ConfigError carrying the line
// number; cross-field validation errors carry the offending key instead.
RunConfig parse_config(const std::string& text);

RunConfig parse_config_file(const std::string& path);

}  // namespace bandprufer
