#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "flowcast/series.hpp"
#include "flowcast/synthetic.hpp"

namespace testsupport {

// Unique scratch directory, recursively removed on destruction.
class TempDir {
public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }

private:
  std::filesystem::path path_;
};

// Multi-sensor diurnal dataset with a planted correlation structure: the
// target "s000" and the next `n_allies` sensors share one daily anomaly
// schedule, while the remaining sensors get staggered independent schedules.
// Under outlier-score correlation the allies should rank first.
flowcast::SyntheticSpec planted_spec(int n_sensors, int n_allies, int n_steps,
                                     std::uint64_t seed, double noise_sigma = 2.0);
flowcast::Dataset planted_dataset(int n_sensors, int n_allies, int n_steps,
                                  std::uint64_t seed, double noise_sigma = 2.0);

// Wide CSV with ISO-8601 timestamps (the common archive export format).
void write_iso_csv(const flowcast::Dataset& ds, const std::string& path);

}  // namespace testsupport
