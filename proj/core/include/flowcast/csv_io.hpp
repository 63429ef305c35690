#pragma once

#include <map>
#include <string>

#include "flowcast/series.hpp"

namespace flowcast {

enum class CsvLayout { wide, long_form };

// Per-run ingestion bookkeeping: how many cells were repaired per sensor.
struct LoadStats {
  std::size_t rows_parsed = 0;
  std::size_t grid_steps = 0;
  std::map<SensorId, std::size_t> repaired;
};

// Load a CSV dataset onto a uniform grid.
//
// Wide layout:  header `timestamp,<sensor1>,<sensor2>,...`, one row per
// timestamp, empty cell = missing. Long layout: header
// `timestamp,sensor,value`, one row per reading. Timestamps are integer epoch
// seconds or ISO-8601 (`YYYY-MM-DD HH:MM:SS`, `T` separator and trailing `Z`
// accepted) and must lie on the sample_interval grid.
//
// Missing interior cells are filled by linear interpolation between the
// nearest valid neighbours; leading/trailing gaps take the nearest valid
// value. Whole missing rows are treated as missing cells for every sensor.
Dataset load_csv(const std::string& path, CsvLayout layout, Duration sample_interval,
                 LoadStats* stats = nullptr);

// Canonical wide CSV: epoch-second timestamps, values printed with enough
// digits to round-trip exactly.
void write_csv(const Dataset& dataset, const std::string& path);

// ISO-8601 or integer epoch seconds; throws Error on anything else.
Timestamp parse_timestamp(const std::string& text);

}  // namespace flowcast
