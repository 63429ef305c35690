#pragma once

#include <span>
#include <string>
#include <vector>

#include "flowcast/format.hpp"
#include "flowcast/harness.hpp"

namespace flowcast {

// Flat row of the machine-readable report table: one row per (run, target)
// plus a MEAN row per run. Timing columns are measurements and are the only
// columns expected to differ between repeated identical runs.
struct ReportRow {
  std::string run_id;
  std::string target;  // sensor name or "MEAN"
  std::string status;  // "ok" or "failed"
  double rmse = 0.0;
  double train_time_s = 0.0;
  double instance_pred_time_ms = 0.0;
  double eval_time_s = 0.0;
  std::size_t windows = 0;
  std::size_t skipped = 0;
  std::string error;
};

std::vector<ReportRow> report_rows(std::span<const EvalReport> reports);
void write_report_csv(const std::string& path, std::span<const ReportRow> rows);
std::vector<ReportRow> read_report_csv(const std::string& path);

// Per-window trace: `run_id,target,window_start,rmse,n_instances,skipped`.
void write_trace_csv(const std::string& path, std::span<const EvalReport> reports);

// Weight maps: `run_id,target,neighbor,r,weight,selected,degenerate`.
void write_weights_csv(const std::string& path, std::span<const EvalReport> reports);

// Outlier scores: `sensor,window_start,score`.
void write_scores_csv(const std::string& path,
                      const std::map<SensorId, OutlierScoreSeries>& scores);

// Debug dump of distributions, long form: `sensor,window_start,bin,prob`.
void write_fpds_csv(const std::string& path, std::span<const Fpd> fpds);

// Line-delimited structured log: config echo, per-target metrics, events,
// timings. Not covered by the determinism contract (carries wall-clock data).
void write_run_jsonl(const std::string& path, const EvalReport& report);

}  // namespace flowcast
