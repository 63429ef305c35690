#pragma once

#include <string>

#include "flowcast/csv_io.hpp"
#include "flowcast/harness.hpp"
#include "flowcast/synthetic.hpp"

namespace flowcast {

// Where the dataset for a run comes from: a CSV on disk or the built-in
// generator.
struct DatasetSpec {
  bool synthetic = false;
  std::string path;
  CsvLayout layout = CsvLayout::wide;
  Duration sample_interval = 300;
  Indicator indicator = Indicator::flow_count;
  SyntheticSpec synth;

  Dataset load(LoadStats* stats = nullptr) const;
};

struct OutputOptions {
  std::string dir = "out";
  bool write_scores = true;
  bool write_weights = true;
  bool write_fpds = false;
  bool write_checkpoints = true;
};

// A run definition: INI-style sections [dataset], [run], [fpd], [detector],
// [lstm], [output]. Unknown keys are rejected; [run] seed is mandatory.
struct CliConfig {
  DatasetSpec dataset;
  RunConfig run;
  OutputOptions output;
};

CliConfig parse_config_file(const std::string& path);
CliConfig parse_config_text(const std::string& text, const std::string& origin);

// Serialize back to the same INI format (config snapshot written into every
// run directory).
std::string config_to_text(const CliConfig& cfg);

// "1h", "3h", "6h", "12h", "1d", "1w", "30d", or a raw number of seconds.
Duration parse_window_duration(const std::string& text);
std::string window_duration_to_string(Duration seconds);

}  // namespace flowcast
