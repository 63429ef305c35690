#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "flowcast/autoencoder.hpp"
#include "flowcast/correlation.hpp"
#include "flowcast/fpd.hpp"
#include "flowcast/lstm.hpp"
#include "flowcast/series.hpp"

namespace flowcast {

enum class RunMode { offline, online };

// Online update policy per time window:
//   adaptive:           extend outlier scores, recompute correlation weights,
//                       rebuild fusion, incrementally train.
//   static_incremental: incrementally train with the frozen weight map.
//   no_update:          frozen model, evaluation only.
enum class UpdateMode { adaptive, static_incremental, no_update };

enum class CorrHistory { expanding, sliding };

std::string to_string(RunMode mode);
std::string to_string(UpdateMode mode);
RunMode parse_run_mode(const std::string& text);
UpdateMode parse_update_mode(const std::string& text);

struct RunConfig {
  RunMode mode = RunMode::offline;
  LossKind loss_kind = LossKind::emd;
  double theta = 0.05;
  UpdateMode update_mode = UpdateMode::adaptive;
  Duration window_T = 86400;           // online update window length
  std::vector<SensorId> targets;       // empty = first five sensors
  std::uint64_t seed = 0;
  double train_fraction = 0.8;         // offline split; online base is fixed 0.5

  FpdConfig fpd;
  DetectorConfig detector;  // seed field is ignored; seeds are derived per sensor
  LstmConfig lstm;          // seed field is ignored; seeds are derived per target
  WeightRule weight_rule = WeightRule::absolute;
  CorrHistory corr_history = CorrHistory::expanding;
  int corr_sliding_windows = 168;

  std::string run_id() const;
  std::vector<SensorId> resolve_targets(const Dataset& dataset) const;
  void validate(const Dataset& dataset) const;
};

// Instrumentation events, in execution order. The prequential contract is
// checked against this log: within a window, every eval happens before any
// mutation fed by that window's data.
enum class EventKind {
  eval,
  scores_extended,
  weights_recomputed,
  normalizer_updated,
  model_updated,
};

std::string to_string(EventKind kind);

struct RunEvent {
  int window_index = -1;  // -1 = base phase
  EventKind kind = EventKind::eval;
  SensorId target;  // empty name for run-wide events (score extension)
  Timestamp window_start = 0;
};

struct WindowTrace {
  SensorId target;
  Timestamp window_start = 0;
  double rmse = 0.0;
  std::size_t n_instances = 0;
  bool skipped = false;
};

struct TargetReport {
  SensorId target;
  double rmse = 0.0;
  double train_time_s = 0.0;
  double instance_pred_time_ms = 0.0;
  double eval_time_s = 0.0;
  std::size_t n_eval_instances = 0;
  std::size_t windows_total = 0;
  std::size_t windows_skipped = 0;
  std::vector<WindowTrace> trace;  // one row per window (offline: one row)
};

struct EvalReport {
  std::string run_id;
  RunMode mode = RunMode::offline;
  UpdateMode update_mode = UpdateMode::adaptive;
  bool failed = false;
  std::string error;

  std::vector<TargetReport> targets;
  // Means over targets (the 1/N aggregation).
  double rmse = 0.0;
  double train_time_s = 0.0;
  double instance_pred_time_ms = 0.0;
  double eval_time_s = 0.0;

  double scoring_time_s = 0.0;  // shared outlier-scoring phase, informational
  std::vector<RunEvent> events;
  std::map<SensorId, CorrelationWeightMap> final_weights;
  std::map<SensorId, OutlierScoreSeries> scores;
  // Serialized forecaster checkpoint per target (text format of
  // Forecaster::save); ready to be written to disk by callers.
  std::map<SensorId, std::string> checkpoints;
};

double rmse(std::span<const double> predictions, std::span<const double> truths);

// Offline protocol: temporal train/test split at train_fraction; outlier
// scores and correlation weights come from the training span only; RMSE is
// measured on the held-out tail.
EvalReport run_offline(const Dataset& dataset, const RunConfig& cfg);

// Online prequential protocol: base model on the first half, then
// test-then-train over successive windows of length window_T until the data
// is exhausted. Every window is evaluated before any update it feeds.
EvalReport run_online(const Dataset& dataset, const RunConfig& cfg);

// Runs every config; a failed run becomes a failed row and the rest proceed.
std::vector<EvalReport> bench(const Dataset& dataset, std::span<const RunConfig> cfgs);

// Worker count for per-target / per-cell parallel sections. Reads the
// FLOWCAST_THREADS environment variable; defaults to 1.
int worker_count();

// Deterministic index-space parallel map: results are joined in index order
// regardless of scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace flowcast
