#include "flowcast/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include "flowcast/format.hpp"
#include "flowcast/rng.hpp"

namespace flowcast {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Fusion windows carry one hour of history; predictions look one step ahead.
constexpr int kHorizon = 1;
constexpr std::size_t kFirstY =
    static_cast<std::size_t>(kWindowSteps) + kHorizon - 1;

DetectorConfig detector_config_for(const RunConfig& cfg, std::size_t sensor_index) {
  DetectorConfig d = cfg.detector;
  d.loss = cfg.loss_kind;
  d.seed = mix_seed(cfg.seed, seed_role::detector, sensor_index);
  return d;
}

LstmConfig lstm_config_for(const RunConfig& cfg, std::size_t target_index) {
  LstmConfig l = cfg.lstm;
  l.seed = mix_seed(cfg.seed, seed_role::forecaster, target_index);
  return l;
}

// Shared scoring state: one online detector per sensor, fed whole aggregation
// windows in temporal order. Detectors stay alive so online runs can extend
// the score streams later without replaying anything.
struct ScoringState {
  std::vector<SensorId> ids;           // dataset order
  std::vector<std::vector<Fpd>> fpds;  // full-span stream per sensor
  std::vector<std::unique_ptr<OnlineDetector>> detectors;
  std::map<SensorId, OutlierScoreSeries> scores;
  std::size_t steps_per_window = 0;
  std::size_t consumed_windows = 0;
  double wall_s = 0.0;
};

ScoringState score_prefix(const Dataset& dataset, const RunConfig& cfg,
                          std::size_t upto_step) {
  const auto t0 = Clock::now();
  ScoringState st;
  st.steps_per_window =
      static_cast<std::size_t>(cfg.fpd.window / dataset.sample_interval());
  const std::size_t target_windows = upto_step / st.steps_per_window;
  const std::size_t n_sensors = dataset.n_sensors();
  st.ids.resize(n_sensors);
  st.fpds.resize(n_sensors);
  st.detectors.resize(n_sensors);
  std::vector<OutlierScoreSeries> series(n_sensors);
  parallel_for(n_sensors, [&](std::size_t i) {
    const SensorSeries& s = dataset.series[i];
    st.ids[i] = s.id;
    st.fpds[i] = fpd_stream(s, cfg.fpd);
    auto detector = std::make_unique<OnlineDetector>(cfg.fpd.bins(),
                                                     detector_config_for(cfg, i));
    OutlierScoreSeries out;
    out.sensor = s.id;
    const std::size_t limit = std::min(target_windows, st.fpds[i].size());
    for (std::size_t w = 0; w < limit; ++w) {
      detector->process_into(st.fpds[i][w], out);
    }
    series[i] = std::move(out);
    st.detectors[i] = std::move(detector);
  });
  const std::size_t available = st.fpds.empty() ? 0 : st.fpds.front().size();
  st.consumed_windows = std::min(target_windows, available);
  for (std::size_t i = 0; i < n_sensors; ++i) {
    st.scores.emplace(st.ids[i], std::move(series[i]));
  }
  st.wall_s = seconds_since(t0);
  return st;
}

// Feed every detector the aggregation windows completed since the last call.
// Returns true if anything was consumed.
bool extend_scores(ScoringState& st, std::size_t complete_windows) {
  const std::size_t available = st.fpds.empty() ? 0 : st.fpds.front().size();
  complete_windows = std::min(complete_windows, available);
  if (complete_windows <= st.consumed_windows) return false;
  const std::size_t from = st.consumed_windows;
  parallel_for(st.detectors.size(), [&](std::size_t i) {
    OutlierScoreSeries& out = st.scores.at(st.ids[i]);
    for (std::size_t w = from; w < complete_windows; ++w) {
      st.detectors[i]->process_into(st.fpds[i][w], out);
    }
  });
  st.consumed_windows = complete_windows;
  return true;
}

CorrelationWeightMap weights_for(const std::map<SensorId, OutlierScoreSeries>& scores,
                                 const RunConfig& cfg, const SensorId& target) {
  if (cfg.corr_history == CorrHistory::expanding) {
    return compute_weights(scores, target, cfg.theta, cfg.weight_rule);
  }
  const std::size_t keep = static_cast<std::size_t>(cfg.corr_sliding_windows);
  std::map<SensorId, OutlierScoreSeries> view;
  for (const auto& [id, s] : scores) {
    OutlierScoreSeries cut;
    cut.sensor = s.sensor;
    const std::size_t from = s.size() > keep ? s.size() - keep : 0;
    cut.window_starts.assign(
        s.window_starts.begin() + static_cast<std::ptrdiff_t>(from),
        s.window_starts.end());
    cut.scores.assign(s.scores.begin() + static_cast<std::ptrdiff_t>(from),
                      s.scores.end());
    view.emplace(id, std::move(cut));
  }
  return compute_weights(view, target, cfg.theta, cfg.weight_rule);
}

// Contiguous slice of samples whose y step index lies in [lo_step, hi_step).
// build_samples guarantees samples[i].y_index == kFirstY + i.
std::span<const FusedSample> sample_range(const std::vector<FusedSample>& samples,
                                          std::size_t lo_step, std::size_t hi_step) {
  const std::size_t lo = lo_step > kFirstY ? lo_step - kFirstY : 0;
  std::size_t hi = hi_step > kFirstY ? hi_step - kFirstY : 0;
  hi = std::min(hi, samples.size());
  if (lo >= hi) return {};
  return {samples.data() + lo, hi - lo};
}

struct TargetState {
  SensorId id;
  std::size_t ds_index = 0;
  CorrelationWeightMap weights;
  std::vector<FusedSample> samples;
  std::unique_ptr<Forecaster> model;
  TargetReport report;
  double pred_ms_sum = 0.0;
  std::size_t pred_n = 0;
};

// Base model: correlation weights from the scored history, fusion over the
// full grid, fit on samples whose y falls before train_cut.
void build_base(TargetState& ts, const Dataset& dataset, const RunConfig& cfg,
                const std::map<SensorId, OutlierScoreSeries>& scores,
                std::size_t train_cut) {
  ts.weights = weights_for(scores, cfg, ts.id);
  ts.samples = build_samples(dataset, ts.weights, kHorizon);
  const auto train = sample_range(ts.samples, 0, train_cut);
  if (train.empty()) {
    throw Error("training span yields no samples for '" + ts.id.name + "'");
  }
  ts.model = std::make_unique<Forecaster>(ts.weights.k + 1,
                                          lstm_config_for(cfg, ts.ds_index));
  const FitResult fit = ts.model->fit(train);
  ts.report.train_time_s += fit.train_time_s;
}

struct EvalSlice {
  double rmse_value = 0.0;
  std::size_t n = 0;
  double wall_s = 0.0;
};

EvalSlice eval_range(TargetState& ts, std::size_t lo_step, std::size_t hi_step) {
  const auto t0 = Clock::now();
  const auto range = sample_range(ts.samples, lo_step, hi_step);
  EvalSlice out;
  out.n = range.size();
  if (!range.empty()) {
    std::vector<double> preds;
    std::vector<double> truths;
    preds.reserve(range.size());
    truths.reserve(range.size());
    for (const FusedSample& s : range) {
      const Forecaster::Prediction p = ts.model->predict(s.x);
      ts.pred_ms_sum += p.latency_ms;
      ++ts.pred_n;
      preds.push_back(p.value);
      truths.push_back(s.y);
    }
    out.rmse_value = rmse(preds, truths);
  }
  out.wall_s = seconds_since(t0);
  return out;
}

std::vector<TargetState> make_states(const Dataset& dataset,
                                     const std::vector<SensorId>& targets) {
  std::vector<TargetState> states(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    states[i].id = targets[i];
    states[i].ds_index = dataset.index_of(targets[i]);
    states[i].report.target = targets[i];
  }
  return states;
}

void finalize_means(EvalReport& rep) {
  if (rep.targets.empty()) return;
  double r = 0.0;
  double t = 0.0;
  double p = 0.0;
  double e = 0.0;
  for (const TargetReport& tr : rep.targets) {
    r += tr.rmse;
    t += tr.train_time_s;
    p += tr.instance_pred_time_ms;
    e += tr.eval_time_s;
  }
  const double n = static_cast<double>(rep.targets.size());
  rep.rmse = r / n;
  rep.train_time_s = t / n;
  rep.instance_pred_time_ms = p / n;
  rep.eval_time_s = e / n;
}

}  // namespace

std::string to_string(RunMode mode) {
  return mode == RunMode::offline ? "offline" : "online";
}

std::string to_string(UpdateMode mode) {
  switch (mode) {
    case UpdateMode::adaptive: return "adaptive";
    case UpdateMode::static_incremental: return "static_incremental";
    case UpdateMode::no_update: return "no_update";
  }
  throw Error("invalid update mode");
}

RunMode parse_run_mode(const std::string& text) {
  if (text == "offline") return RunMode::offline;
  if (text == "online") return RunMode::online;
  throw ConfigError("unknown mode '" + text + "' (expected offline or online)");
}

UpdateMode parse_update_mode(const std::string& text) {
  if (text == "adaptive") return UpdateMode::adaptive;
  if (text == "static_incremental") return UpdateMode::static_incremental;
  if (text == "no_update") return UpdateMode::no_update;
  throw ConfigError("unknown update mode '" + text +
                    "' (expected adaptive, static_incremental or no_update)");
}

std::string to_string(EventKind kind) {
  switch (kind) {
    case EventKind::eval: return "eval";
    case EventKind::scores_extended: return "scores_extended";
    case EventKind::weights_recomputed: return "weights_recomputed";
    case EventKind::normalizer_updated: return "normalizer_updated";
    case EventKind::model_updated: return "model_updated";
  }
  throw Error("invalid event kind");
}

std::string RunConfig::run_id() const {
  std::ostringstream os;
  os << to_string(mode) << '-' << to_string(loss_kind) << "-th"
     << format_double(theta);
  if (mode == RunMode::offline) {
    os << "-f" << format_double(train_fraction);
  } else {
    os << '-' << to_string(update_mode) << "-T" << window_T;
  }
  os << "-seed" << seed;
  return os.str();
}

std::vector<SensorId> RunConfig::resolve_targets(const Dataset& dataset) const {
  if (!targets.empty()) return targets;
  const std::size_t n = std::min<std::size_t>(5, dataset.n_sensors());
  std::vector<SensorId> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(dataset.series[i].id);
  return out;
}

void RunConfig::validate(const Dataset& dataset) const {
  dataset.validate();
  fpd.validate();
  if (theta < 0.0 || theta > 1.0) throw ConfigError("theta must lie in [0, 1]");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train_fraction must lie strictly between 0 and 1");
  }
  if (fpd.bin_interval % dataset.sample_interval() != 0) {
    throw ConfigError("bin interval must be a whole number of samples");
  }
  if (mode == RunMode::online) {
    if (window_T <= 0) throw ConfigError("update window must be positive");
    if (window_T % fpd.window != 0) {
      throw ConfigError(
          "update window must be a whole number of aggregation windows");
    }
  }
  if (!(detector.lr > 0.0)) throw ConfigError("detector learning rate must be positive");
  if (!(detector.w_min > 0.0 && detector.w_min <= 1.0)) {
    throw ConfigError("w_min must lie in (0, 1]");
  }
  if (!(detector.decay > 0.0 && detector.decay < 1.0)) {
    throw ConfigError("decay must lie in (0, 1)");
  }
  if (detector.hidden_dim < 0 || detector.bottleneck_dim < 0) {
    throw ConfigError("detector layer sizes cannot be negative");
  }
  if (lstm.hidden_dim < 1) throw ConfigError("lstm hidden_dim must be at least 1");
  if (lstm.batch < 1) throw ConfigError("lstm batch must be at least 1");
  if (!(lstm.lr > 0.0)) throw ConfigError("lstm learning rate must be positive");
  if (lstm.max_epochs < 1) throw ConfigError("lstm max_epochs must be at least 1");
  if (lstm.patience < 1) throw ConfigError("lstm patience must be at least 1");
  if (!(lstm.val_fraction >= 0.0 && lstm.val_fraction < 1.0)) {
    throw ConfigError("lstm val_fraction must lie in [0, 1)");
  }
  if (corr_history == CorrHistory::sliding && corr_sliding_windows < 2) {
    throw ConfigError("corr_sliding_windows must be at least 2");
  }
  for (const SensorId& t : targets) {
    if (!dataset.has(t)) throw ConfigError("unknown target sensor '" + t.name + "'");
  }
}

double rmse(std::span<const double> predictions, std::span<const double> truths) {
  if (predictions.size() != truths.size()) {
    throw Error("prediction/truth length mismatch");
  }
  if (predictions.empty()) throw Error("cannot compute rmse of no instances");
  double acc = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - truths[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(predictions.size()));
}

EvalReport run_offline(const Dataset& dataset, const RunConfig& cfg) {
  cfg.validate(dataset);
  EvalReport rep;
  rep.run_id = cfg.run_id();
  rep.mode = RunMode::offline;
  rep.update_mode = cfg.update_mode;
  const std::vector<SensorId> targets = cfg.resolve_targets(dataset);
  const std::size_t n = dataset.n_steps();
  const std::size_t cut = split_index(n, cfg.train_fraction);

  ScoringState scoring = score_prefix(dataset, cfg, cut);
  rep.scoring_time_s = scoring.wall_s;
  if (dataset.n_sensors() > 1 && scoring.consumed_windows < 2) {
    throw Error("training span yields fewer than 2 score windows");
  }
  rep.events.push_back(
      {-1, EventKind::scores_extended, SensorId{}, dataset.start()});

  std::vector<TargetState> states = make_states(dataset, targets);
  std::vector<EvalSlice> evals(states.size());
  parallel_for(states.size(), [&](std::size_t i) {
    build_base(states[i], dataset, cfg, scoring.scores, cut);
    evals[i] = eval_range(states[i], cut, n);
    if (evals[i].n == 0) {
      throw Error("test span yields no samples for '" + states[i].id.name + "'");
    }
  });

  const Timestamp test_start = dataset.time_at(cut);
  for (const TargetState& ts : states) {
    rep.events.push_back(
        {-1, EventKind::weights_recomputed, ts.id, dataset.start()});
    rep.events.push_back({-1, EventKind::model_updated, ts.id, dataset.start()});
  }
  for (const TargetState& ts : states) {
    rep.events.push_back({0, EventKind::eval, ts.id, test_start});
  }
  for (std::size_t i = 0; i < states.size(); ++i) {
    TargetState& ts = states[i];
    ts.report.rmse = evals[i].rmse_value;
    ts.report.n_eval_instances = evals[i].n;
    ts.report.eval_time_s = evals[i].wall_s;
    ts.report.instance_pred_time_ms =
        ts.pred_n > 0 ? ts.pred_ms_sum / static_cast<double>(ts.pred_n) : 0.0;
    ts.report.windows_total = 1;
    ts.report.trace.push_back(
        {ts.id, test_start, evals[i].rmse_value, evals[i].n, false});
    std::ostringstream ckpt;
    ts.model->save(ckpt);
    rep.checkpoints.emplace(ts.id, ckpt.str());
    rep.final_weights.emplace(ts.id, std::move(ts.weights));
    rep.targets.push_back(std::move(ts.report));
  }
  rep.scores = std::move(scoring.scores);
  finalize_means(rep);
  return rep;
}

EvalReport run_online(const Dataset& dataset, const RunConfig& cfg) {
  cfg.validate(dataset);
  EvalReport rep;
  rep.run_id = cfg.run_id();
  rep.mode = RunMode::online;
  rep.update_mode = cfg.update_mode;
  const std::vector<SensorId> targets = cfg.resolve_targets(dataset);
  const std::size_t n = dataset.n_steps();
  const std::size_t base_cut = split_index(n, 0.5);
  const std::size_t steps_per_T =
      static_cast<std::size_t>(cfg.window_T / dataset.sample_interval());
  if (base_cut >= n) throw Error("no evaluation data after the base span");

  ScoringState scoring = score_prefix(dataset, cfg, base_cut);
  rep.scoring_time_s = scoring.wall_s;
  if (dataset.n_sensors() > 1 && scoring.consumed_windows < 2) {
    throw Error("base span yields fewer than 2 score windows");
  }
  rep.events.push_back(
      {-1, EventKind::scores_extended, SensorId{}, dataset.start()});

  std::vector<TargetState> states = make_states(dataset, targets);
  parallel_for(states.size(), [&](std::size_t i) {
    build_base(states[i], dataset, cfg, scoring.scores, base_cut);
  });
  for (const TargetState& ts : states) {
    rep.events.push_back(
        {-1, EventKind::weights_recomputed, ts.id, dataset.start()});
    rep.events.push_back({-1, EventKind::model_updated, ts.id, dataset.start()});
  }

  const std::size_t n_windows = (n - base_cut + steps_per_T - 1) / steps_per_T;
  for (std::size_t w = 0; w < n_windows; ++w) {
    const int wi = static_cast<int>(w);
    const std::size_t win_begin = base_cut + w * steps_per_T;
    const std::size_t win_end = std::min(win_begin + steps_per_T, n);
    const Timestamp win_time = dataset.time_at(win_begin);
    const bool window_has_samples = std::max(win_begin, kFirstY) < win_end;

    // Evaluation first: every target sees the window before any state mutates.
    std::vector<EvalSlice> evals(states.size());
    parallel_for(states.size(), [&](std::size_t i) {
      evals[i] = eval_range(states[i], win_begin, win_end);
    });
    for (std::size_t i = 0; i < states.size(); ++i) {
      TargetState& ts = states[i];
      const bool skipped = evals[i].n == 0;
      ts.report.trace.push_back(
          {ts.id, win_time, evals[i].rmse_value, evals[i].n, skipped});
      ts.report.windows_total += 1;
      if (skipped) ts.report.windows_skipped += 1;
      ts.report.n_eval_instances += evals[i].n;
      ts.report.eval_time_s += evals[i].wall_s;
      rep.events.push_back({wi, EventKind::eval, ts.id, win_time});
    }

    if (cfg.update_mode == UpdateMode::no_update) continue;

    if (cfg.update_mode == UpdateMode::static_incremental) {
      if (!window_has_samples) continue;
      parallel_for(states.size(), [&](std::size_t i) {
        TargetState& ts = states[i];
        const auto t0 = Clock::now();
        const auto win = sample_range(ts.samples, win_begin, win_end);
        ts.model->expand_normalizer(win);
        ts.model->update(win, 1, cfg.lstm.lr);
        ts.report.train_time_s += seconds_since(t0);
      });
      for (const TargetState& ts : states) {
        rep.events.push_back({wi, EventKind::normalizer_updated, ts.id, win_time});
        rep.events.push_back({wi, EventKind::model_updated, ts.id, win_time});
      }
      continue;
    }

    // Adaptive: consume completed aggregation windows, re-rank neighbours,
    // re-bind fusion columns, refresh scaling from everything seen, train.
    const std::size_t complete = win_end / scoring.steps_per_window;
    if (extend_scores(scoring, complete)) {
      rep.events.push_back({wi, EventKind::scores_extended, SensorId{}, win_time});
    }
    parallel_for(states.size(), [&](std::size_t i) {
      TargetState& ts = states[i];
      const auto t0 = Clock::now();
      ts.weights = weights_for(scoring.scores, cfg, ts.id);
      ts.samples = build_samples(dataset, ts.weights, kHorizon);
      ts.model->refit_normalizer(sample_range(ts.samples, 0, win_end));
      if (window_has_samples) {
        ts.model->update(sample_range(ts.samples, win_begin, win_end), 1,
                         cfg.lstm.lr);
      }
      ts.report.train_time_s += seconds_since(t0);
    });
    for (const TargetState& ts : states) {
      rep.events.push_back({wi, EventKind::weights_recomputed, ts.id, win_time});
      rep.events.push_back({wi, EventKind::normalizer_updated, ts.id, win_time});
      if (window_has_samples) {
        rep.events.push_back({wi, EventKind::model_updated, ts.id, win_time});
      }
    }
  }

  for (TargetState& ts : states) {
    double acc = 0.0;
    std::size_t counted = 0;
    for (const WindowTrace& tr : ts.report.trace) {
      if (!tr.skipped) {
        acc += tr.rmse;
        ++counted;
      }
    }
    if (counted == 0) {
      throw Error("no evaluable windows for target '" + ts.id.name + "'");
    }
    ts.report.rmse = acc / static_cast<double>(counted);
    ts.report.instance_pred_time_ms =
        ts.pred_n > 0 ? ts.pred_ms_sum / static_cast<double>(ts.pred_n) : 0.0;
    std::ostringstream ckpt;
    ts.model->save(ckpt);
    rep.checkpoints.emplace(ts.id, ckpt.str());
    rep.final_weights.emplace(ts.id, std::move(ts.weights));
    rep.targets.push_back(std::move(ts.report));
  }
  rep.scores = std::move(scoring.scores);
  finalize_means(rep);
  return rep;
}

std::vector<EvalReport> bench(const Dataset& dataset, std::span<const RunConfig> cfgs) {
  std::vector<EvalReport> out;
  out.reserve(cfgs.size());
  for (const RunConfig& cfg : cfgs) {
    try {
      out.push_back(cfg.mode == RunMode::offline ? run_offline(dataset, cfg)
                                                 : run_online(dataset, cfg));
    } catch (const std::exception& e) {
      EvalReport rep;
      rep.run_id = cfg.run_id();
      rep.mode = cfg.mode;
      rep.update_mode = cfg.update_mode;
      rep.failed = true;
      rep.error = e.what();
      out.push_back(std::move(rep));
    }
  }
  return out;
}

int worker_count() {
  const char* env = std::getenv("FLOWCAST_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 1) return 1;
  return static_cast<int>(std::min(v, 64L));
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(worker_count()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace flowcast
