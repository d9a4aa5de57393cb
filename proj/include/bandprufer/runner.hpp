#pragma once

#include <string>
#include <vector>

#include "bandprufer/config.hpp"

namespace bandprufer {

struct RunOutput {
  int exit_code = 0;                      // 0 ok, 4 bound-check failure (verify)
  std::vector<std::string> files_written; // absolute or out_dir-relative paths
  std::string summary_json;               // same text as the emitted JSON file
};

// Executes one parsed run: computes the mode's results, writes `<output>.csv`
// and `<output>.json` under out_dir, and returns the summary. Numerical
// failures propagate as NumericError (the CLI maps them to exit code 3).
// `seed` only gets echoed into the summary metadata: every mode is
// deterministic, the knob exists for interface uniformity.
RunOutput execute_run(const RunConfig& cfg, const std::string& out_dir, int threads,
                      int seed = 0);

// Deterministic CSV helpers: 17 significant digits, LF endings, header always.
std::string csv_render(const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& rows);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace bandprufer
