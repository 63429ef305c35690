// Acceptance gate: ten behavioural criteria the engine must meet, each
// printed as one [PASS]/[FAIL] line. The binary exits non-zero if any
// criterion fails. Criteria are checked against independent oracles and
// synthetic datasets with planted structure; nothing here reaches the
// network or depends on wall-clock state (timing columns are masked where
// byte-stability is asserted).

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "flowcast/autoencoder.hpp"
#include "flowcast/correlation.hpp"
#include "flowcast/fpd.hpp"
#include "flowcast/harness.hpp"
#include "flowcast/lstm.hpp"
#include "flowcast/report_io.hpp"
#include "flowcast/rng.hpp"
#include "flowcast/series.hpp"
#include "flowcast/synthetic.hpp"
#include "support/datasets.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace flowcast;

namespace {

class Timer {
public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double secs() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
        .count();
  }

private:
  std::chrono::steady_clock::time_point start_;
};

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof buf, pattern, args);
  va_end(args);
  return buf;
}

Eigen::VectorXd random_simplex(std::mt19937_64& rng, int bins) {
  Eigen::VectorXd v(bins);
  for (int i = 0; i < bins; ++i) v[i] = uniform01(rng) + 1e-12;
  return v / v.sum();
}

// Score every sensor of a dataset with its own derived detector seed.
std::map<SensorId, OutlierScoreSeries> score_all(const Dataset& ds,
                                                 std::uint64_t seed,
                                                 LossKind loss = LossKind::emd) {
  std::map<SensorId, OutlierScoreSeries> out;
  FpdConfig fc;
  for (std::size_t i = 0; i < ds.series.size(); ++i) {
    const auto fpds = fpd_stream(ds.series[i], fc);
    DetectorConfig dc;
    dc.loss = loss;
    dc.seed = mix_seed(seed, seed_role::detector, i);
    out[ds.series[i].id] = process_stream(ds.series[i].id, fpds, dc);
  }
  return out;
}

double coefficient_of_variation(const std::vector<double>& xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size());
  return std::sqrt(var) / mean;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Blank the three wall-clock columns (train_time_s, instance_pred_time_ms,
// eval_time_s) of a report CSV; everything else must be byte-stable.
std::string mask_timing(const std::string& text) {
  std::stringstream out;
  std::stringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!first) out << '\n';
    first = false;
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        fields.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    fields.push_back(cur);
    if (fields.size() == 10 && fields[0] != "run_id") {
      fields[4] = fields[5] = fields[6] = "-";
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out << ',';
      out << fields[i];
    }
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// 1. Distribution-distance loss agrees with an independent transport oracle.

bool criterion_1(std::string& detail) {
  Timer t;
  std::mt19937_64 rng(0xACC0001u);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::VectorXd a = random_simplex(rng, 12);
    const Eigen::VectorXd b = random_simplex(rng, 12);
    const double lib = reconstruction_loss(LossKind::emd, a, b);
    const std::vector<double> av(a.data(), a.data() + a.size());
    const std::vector<double> bv(b.data(), b.data() + b.size());
    const double oracle = testsupport::transport_emd(av, bv);
    worst = std::max(worst, std::abs(lib - oracle));
  }
  const double secs = t.secs();
  detail = fmt("max |loss - oracle| = %.2e over 1000 random 12-bin pairs, %.2fs",
               worst, secs);
  return worst <= 1e-9 && secs < 5.0;
}

// ---------------------------------------------------------------------------
// 2. Analytic gradients match central finite differences.

Eigen::VectorXd sigmoid_vec(const Eigen::VectorXd& v) {
  return (1.0 + (-v.array()).exp()).inverse().matrix();
}

// Worst relative gradient error over `want` accepted random reconstructor
// configurations. Configurations whose linearization point sits inside a
// kink neighbourhood of the piecewise-linear loss (output clamp about to
// flip, or a cumulative difference about to change sign) are skipped, since
// finite differences are undefined across a kink.
double recon_grad_worst(LossKind kind, int want, int* accepted_out) {
  double worst = 0.0;
  int accepted = 0;
  std::uint64_t seed = (kind == LossKind::rmse) ? 51000 : 52000;
  for (int attempts = 0; accepted < want && attempts < 400; ++attempts, ++seed) {
    std::mt19937_64 rng(seed);
    const int bins = 4 + static_cast<int>(uniform01(rng) * 13);    // 4..16
    const int hidden = 2 + static_cast<int>(uniform01(rng) * 7);   // 2..8
    const int bottleneck =
        1 + static_cast<int>(uniform01(rng) * std::min(hidden, 4));
    AeParams params = AeParams::init(bins, hidden, bottleneck, seed * 77 + 1);
    const Eigen::VectorXd d = random_simplex(rng, bins);

    // Reconstruct the pre-clamp output activations for the kink guard.
    const Eigen::VectorXd h1 = sigmoid_vec(params.w_enc1 * d + params.b_enc1);
    const Eigen::VectorXd h2 = sigmoid_vec(params.w_enc2 * h1 + params.b_enc2);
    const Eigen::VectorXd h3 = sigmoid_vec(params.w_dec1 * h2 + params.b_dec1);
    const Eigen::VectorXd z = params.w_dec2 * h3 + params.b_dec2;
    if (z.cwiseAbs().minCoeff() < 1e-4) continue;       // clamp kink
    if (z.cwiseMax(0.0).sum() < 1e-3) continue;         // all-clamped branch
    const Eigen::VectorXd d_hat = ae_forward(params, d);
    if (kind == LossKind::emd) {
      double cum = 0.0, min_abs = 1e300;
      for (int i = 0; i + 1 < bins; ++i) {
        cum += d[i] - d_hat[i];
        min_abs = std::min(min_abs, std::abs(cum));
      }
      if (min_abs < 1e-4) continue;                     // |cumsum| kink
    } else if (reconstruction_loss(kind, d, d_hat) < 1e-8) {
      continue;                                         // sqrt kink at zero
    }

    AeParams grad = params;
    ae_loss_and_grad(params, d, kind, grad);
    const Eigen::VectorXd ga = grad.to_flat();
    const auto f = [&](const Eigen::VectorXd& flat) {
      AeParams p = params;
      p.from_flat(flat);
      return reconstruction_loss(kind, d, ae_forward(p, d));
    };
    const Eigen::VectorXd gn = testsupport::numerical_gradient(f, params.to_flat(), 1e-6);
    const double rel = (ga - gn).cwiseAbs().maxCoeff() /
                       std::max(gn.cwiseAbs().maxCoeff(), 1e-8);
    worst = std::max(worst, rel);
    ++accepted;
  }
  *accepted_out = accepted;
  return worst;
}

double forecaster_grad_worst(int want) {
  double worst = 0.0;
  for (int c = 0; c < want; ++c) {
    std::mt19937_64 rng(53000 + c);
    const int input_dim = 1 + c % 4;
    const int hidden = 2 + (c * 7) % 5;
    const int n_batch = 2 + c % 3;
    LstmParams params = LstmParams::init(input_dim, hidden, 9000 + c);
    std::vector<Eigen::MatrixXd> xs;
    Eigen::VectorXd ys(n_batch);
    for (int b = 0; b < n_batch; ++b) {
      Eigen::MatrixXd x(kWindowSteps, input_dim);
      for (int i = 0; i < x.size(); ++i) x.data()[i] = uniform01(rng);
      xs.push_back(x);
      ys[b] = uniform01(rng);
    }
    LstmParams grad = params;
    lstm_loss_and_grad(params, xs, ys, &grad);
    const Eigen::VectorXd ga = grad.to_flat();
    const auto f = [&](const Eigen::VectorXd& flat) {
      LstmParams p = params;
      p.from_flat(flat);
      return lstm_loss_and_grad(p, xs, ys, nullptr);
    };
    const Eigen::VectorXd gn = testsupport::numerical_gradient(f, params.to_flat(), 1e-6);
    const double rel = (ga - gn).cwiseAbs().maxCoeff() /
                       std::max(gn.cwiseAbs().maxCoeff(), 1e-8);
    worst = std::max(worst, rel);
  }
  return worst;
}

bool criterion_2(std::string& detail) {
  Timer t;
  int n_rmse = 0, n_emd = 0;
  const double w_rmse = recon_grad_worst(LossKind::rmse, 20, &n_rmse);
  const double w_emd = recon_grad_worst(LossKind::emd, 20, &n_emd);
  const double w_lstm = forecaster_grad_worst(20);
  const double secs = t.secs();
  detail = fmt(
      "max rel err: recon-rmse %.2e (%d cfgs), recon-emd %.2e (%d cfgs), "
      "forecaster %.2e (20 cfgs), %.1fs",
      w_rmse, n_rmse, w_emd, n_emd, w_lstm, secs);
  return n_rmse >= 20 && n_emd >= 20 && w_rmse < 1e-4 && w_emd < 1e-4 &&
         w_lstm < 1e-4 && secs < 30.0;
}

// ---------------------------------------------------------------------------
// 3. Neighbour-count worked example at N = 207.

bool criterion_3(std::string& detail) {
  std::map<SensorId, OutlierScoreSeries> scores;
  for (int i = 0; i < 207; ++i) {
    const SensorId id = synthetic_sensor_id(i);
    OutlierScoreSeries s;
    s.sensor = id;
    std::mt19937_64 rng(mix_seed(303, 9, static_cast<std::uint64_t>(i)));
    for (int w = 0; w < 60; ++w) {
      s.window_starts.push_back(static_cast<Timestamp>(w) * 3600);
      s.scores.push_back(uniform01(rng));
    }
    scores[id] = s;
  }
  const SensorId target = synthetic_sensor_id(0);
  const auto at_005 = compute_weights(scores, target, 0.05);
  const auto at_0 = compute_weights(scores, target, 0.0);
  const auto at_1 = compute_weights(scores, target, 1.0);
  detail = fmt("k(207, 0.05) = %d, k(207, 0) = %d, k(207, 1) = %d", at_005.k,
               at_0.k, at_1.k);
  return at_005.k == 10 && at_005.selected().size() == 10 && at_0.k == 0 &&
         at_0.selected().empty() && at_1.k == 206 &&
         at_1.selected().size() == 206;
}

// ---------------------------------------------------------------------------
// 4. Planted correlation structure is recovered from outlier scores.

bool criterion_4(std::string& detail) {
  Timer t;
  int wins = 0;
  for (int s = 0; s < 10; ++s) {
    const std::uint64_t seed = 4100 + static_cast<std::uint64_t>(s);
    // 21 sensors: target, 5 sharing its anomaly schedule, 15 independent.
    const Dataset ds = testsupport::planted_dataset(21, 5, 10 * 288, seed);
    const auto scores = score_all(ds, seed);
    // theta = 0.25 over N = 21 selects exactly floor(5.25) = 5 neighbours.
    const auto wm = compute_weights(scores, synthetic_sensor_id(0), 0.25);
    int hits = 0;
    for (const NeighborWeight* nw : wm.selected()) {
      for (int a = 1; a <= 5; ++a) {
        if (nw->neighbor == synthetic_sensor_id(a)) ++hits;
      }
    }
    if (hits >= 4) ++wins;
  }
  const double secs = t.secs();
  detail = fmt("top-5 held >= 4 planted allies in %d/10 seeded runs, %.1fs",
               wins, secs);
  return wins >= 9 && secs < 120.0;
}

// ---------------------------------------------------------------------------
// 5. Forecast error is U-shaped in the neighbour fraction.

bool criterion_5(std::string& detail) {
  // Five days at a 50% split keeps the training span scarce relative to the
  // fused input width, which is the regime where surplus neighbours cost
  // accuracy instead of adding information.
  const Dataset ds = testsupport::planted_dataset(21, 5, 5 * 288, 5150, 2.0);
  RunConfig rc;
  rc.mode = RunMode::offline;
  rc.loss_kind = LossKind::emd;
  rc.targets = {synthetic_sensor_id(0)};
  rc.seed = 515;
  rc.train_fraction = 0.5;
  rc.lstm.hidden_dim = 16;
  rc.lstm.batch = 32;
  rc.lstm.lr = 0.05;
  rc.lstm.max_epochs = 12;
  rc.lstm.patience = 4;
  const double thetas[] = {0.0, 0.1, 0.25, 0.5, 1.0};
  double rmses[5] = {};
  for (int i = 0; i < 5; ++i) {
    rc.theta = thetas[i];
    rmses[i] = run_offline(ds, rc).rmse;
  }
  const double best_mid = std::min({rmses[1], rmses[2], rmses[3]});
  detail = fmt(
      "rmse @ theta 0/0.1/0.25/0.5/1 = %.3f/%.3f/%.3f/%.3f/%.3f (best mid %.3f)",
      rmses[0], rmses[1], rmses[2], rmses[3], rmses[4], best_mid);
  return best_mid < rmses[0] && best_mid < rmses[4];
}

// ---------------------------------------------------------------------------
// 6. The distribution-distance loss separates anomalies more sharply than
//    the pointwise loss: higher coefficient of variation of the score stream.

bool criterion_6(std::string& detail) {
  SyntheticSpec sp;
  sp.n_sensors = 1;
  sp.n_steps = 30 * 288;
  sp.seed = 606;
  sp.base_pattern = BasePattern::flat;
  sp.noise_sigma = 4.0;
  sp.start_time = 1330560000;
  // A spike over the last quarter of every 10th hour: exactly 10% of the
  // hourly aggregation windows contain anomalous readings, and the anomaly
  // displaces probability mass towards the far end of the window (the case
  // where a distance-aware loss should react strongest).
  const int total_hours = 30 * 24;
  for (int h = 0; h < total_hours; h += 10) {
    AnomalySpec a;
    a.sensor_ids = {synthetic_sensor_id(0)};
    a.kind = AnomalyKind::spike;
    a.magnitude = 3.0;
    a.start = sp.start_time + static_cast<Timestamp>(h) * 3600 + 2700;
    a.end = a.start + 900;
    sp.anomalies.push_back(a);
  }
  const Dataset ds = generate_synthetic(sp);
  const auto fpds = fpd_stream(ds.series[0], FpdConfig{});
  DetectorConfig dc;
  dc.seed = 6066;
  dc.loss = LossKind::emd;
  const auto emd_scores = process_stream(ds.series[0].id, fpds, dc);
  dc.loss = LossKind::rmse;
  const auto rmse_scores = process_stream(ds.series[0].id, fpds, dc);
  const double cv_emd = coefficient_of_variation(emd_scores.scores);
  const double cv_rmse = coefficient_of_variation(rmse_scores.scores);
  detail = fmt("score CV: emd %.3f vs rmse %.3f over %zu windows (10%% anomalous)",
               cv_emd, cv_rmse, emd_scores.size());
  return cv_emd > cv_rmse;
}

// ---------------------------------------------------------------------------
// 7. Prequential purity: in every window, evaluation precedes any mutation.

bool criterion_7(std::string& detail) {
  // 15 days of 5 sensors; online base takes the first half, then 30 windows
  // of 6 hours cover the second half exactly.
  const Dataset ds = testsupport::planted_dataset(5, 2, 4320, 707);
  RunConfig rc;
  rc.mode = RunMode::online;
  rc.window_T = 21600;
  rc.theta = 0.25;
  rc.seed = 7077;
  rc.lstm.hidden_dim = 8;
  rc.lstm.batch = 32;
  rc.lstm.lr = 0.05;
  rc.lstm.max_epochs = 3;
  rc.lstm.patience = 2;

  const UpdateMode modes[] = {UpdateMode::adaptive, UpdateMode::static_incremental,
                              UpdateMode::no_update};
  const std::size_t n_targets = rc.resolve_targets(ds).size();
  std::string failure;
  for (UpdateMode mode : modes) {
    rc.update_mode = mode;
    const EvalReport rep = run_online(ds, rc);
    const std::string tag = to_string(mode);
    if (rep.failed) {
      failure = tag + " run failed: " + rep.error;
      break;
    }
    int max_window = -1;
    int prev = -1;
    bool ordered = true;
    for (const RunEvent& e : rep.events) {
      if (e.window_index < prev) ordered = false;  // strict execution order
      prev = std::max(prev, e.window_index);
      max_window = std::max(max_window, e.window_index);
    }
    if (!ordered) {
      failure = tag + ": events regressed across windows";
      break;
    }
    if (max_window != 29) {
      failure = fmt("%s: expected 30 windows, saw %d", tag.c_str(), max_window + 1);
      break;
    }
    for (int w = 0; w <= max_window && failure.empty(); ++w) {
      std::size_t last_eval = 0, first_mutation = rep.events.size();
      std::size_t n_eval = 0;
      std::map<EventKind, int> mutations;
      for (std::size_t i = 0; i < rep.events.size(); ++i) {
        const RunEvent& e = rep.events[i];
        if (e.window_index != w) continue;
        if (e.kind == EventKind::eval) {
          last_eval = i;
          ++n_eval;
        } else {
          first_mutation = std::min(first_mutation, i);
          ++mutations[e.kind];
        }
      }
      if (n_eval != n_targets) {
        failure = fmt("%s window %d: %zu evals for %zu targets", tag.c_str(), w,
                      n_eval, n_targets);
      } else if (first_mutation < rep.events.size() && last_eval > first_mutation) {
        failure = fmt("%s window %d: mutation before eval", tag.c_str(), w);
      } else if (mode == UpdateMode::no_update && !mutations.empty()) {
        failure = fmt("%s window %d: frozen mode mutated state", tag.c_str(), w);
      } else if (mode == UpdateMode::adaptive &&
                 (mutations[EventKind::scores_extended] < 1 ||
                  mutations[EventKind::weights_recomputed] < 1 ||
                  mutations[EventKind::normalizer_updated] < 1 ||
                  mutations[EventKind::model_updated] < 1)) {
        failure = fmt("%s window %d: missing update stage", tag.c_str(), w);
      } else if (mode == UpdateMode::static_incremental &&
                 (mutations[EventKind::scores_extended] != 0 ||
                  mutations[EventKind::weights_recomputed] != 0 ||
                  mutations[EventKind::model_updated] < 1)) {
        failure = fmt("%s window %d: unexpected update stage", tag.c_str(), w);
      }
    }
    if (!failure.empty()) break;
  }
  detail = failure.empty()
               ? "30 windows x 3 update modes: every eval precedes every mutation"
               : failure;
  return failure.empty();
}

// ---------------------------------------------------------------------------
// 8. Under a regime shift, the adaptive mode beats the frozen ones.

Dataset drift_dataset(std::uint64_t seed) {
  SyntheticSpec sp;
  sp.n_sensors = 10;
  sp.n_steps = 12 * 288;
  sp.seed = seed;
  sp.noise_sigma = 2.0;
  sp.start_time = 1330560000;
  const Timestamp span = static_cast<Timestamp>(sp.n_steps) * sp.sample_interval;
  const Timestamp shift_t =
      sp.start_time + static_cast<Timestamp>(0.6 * static_cast<double>(span));

  std::vector<SensorId> group_a, group_b, everyone;
  for (int i = 1; i <= 3; ++i) group_a.push_back(synthetic_sensor_id(i));
  for (int i = 4; i <= 6; ++i) group_b.push_back(synthetic_sensor_id(i));
  for (int i = 0; i < sp.n_sensors; ++i) everyone.push_back(synthetic_sensor_id(i));

  const auto daily = [&](const std::vector<SensorId>& ids, int day, int hour,
                         Timestamp lead) {
    AnomalySpec a;
    a.sensor_ids = ids;
    a.kind = AnomalyKind::spike;
    a.magnitude = 2.5;
    a.start = sp.start_time + static_cast<Timestamp>(day) * 86400 +
              static_cast<Timestamp>(hour) * 3600 + 1800 - lead;
    a.end = a.start + 7200;
    sp.anomalies.push_back(a);
  };
  const int solo_hours[] = {3, 20, 23};
  for (int day = 0; day < 12; ++day) {
    daily(group_a, day, 8, 600);   // regime-1 schedule, leading
    daily(group_b, day, 13, 600);  // regime-2 schedule, leading
    // The target follows regime 1 before the 60% mark and regime 2 after.
    const Timestamp morning = sp.start_time + static_cast<Timestamp>(day) * 86400 +
                              8 * 3600 + 1800;
    daily({synthetic_sensor_id(0)}, day, morning >= shift_t ? 13 : 8, 0);
    for (int j = 7; j <= 9; ++j) {
      daily({synthetic_sensor_id(j)}, day, solo_hours[j - 7], 0);
    }
  }
  // Level shift across the whole network from the 60% mark.
  AnomalySpec level;
  level.sensor_ids = everyone;
  level.kind = AnomalyKind::shift;
  level.magnitude = 1.4;
  level.start = shift_t;
  level.end = sp.start_time + span;
  sp.anomalies.push_back(level);
  return generate_synthetic(sp);
}

bool criterion_8(std::string& detail) {
  RunConfig rc;
  rc.mode = RunMode::online;
  rc.window_T = 86400;
  rc.theta = 0.3;  // floor(0.3 * 10) = 3 neighbours
  rc.targets = {synthetic_sensor_id(0)};
  rc.train_fraction = 0.8;
  rc.corr_history = CorrHistory::sliding;
  rc.corr_sliding_windows = 48;
  rc.lstm.hidden_dim = 12;
  rc.lstm.batch = 32;
  rc.lstm.lr = 0.05;
  rc.lstm.max_epochs = 6;
  rc.lstm.patience = 2;

  int wins = 0;
  std::string rows;
  for (int s = 0; s < 5; ++s) {
    const std::uint64_t seed = 8300 + static_cast<std::uint64_t>(s);
    const Dataset ds = drift_dataset(seed);
    rc.seed = seed;
    double rmse_of[3] = {};
    const UpdateMode modes[] = {UpdateMode::adaptive,
                                UpdateMode::static_incremental,
                                UpdateMode::no_update};
    for (int m = 0; m < 3; ++m) {
      rc.update_mode = modes[m];
      const EvalReport rep = run_online(ds, rc);
      if (rep.failed) {
        detail = "seed " + std::to_string(seed) + " failed: " + rep.error;
        return false;
      }
      rmse_of[m] = rep.rmse;
    }
    const bool win = rmse_of[0] < rmse_of[2] && rmse_of[0] <= rmse_of[1];
    wins += win ? 1 : 0;
    rows += fmt("%s%.2f/%.2f/%.2f", s ? " " : "", rmse_of[0], rmse_of[1],
                rmse_of[2]);
  }
  detail = fmt("adaptive/static/frozen rmse per seed: %s -> %d/5 ordered",
               rows.c_str(), wins);
  return wins >= 4;
}

// ---------------------------------------------------------------------------
// 9. Byte-stable reruns, serial and threaded.

bool criterion_9(std::string& detail) {
  const Dataset ds = testsupport::planted_dataset(8, 3, 6 * 288, 909);
  RunConfig base;
  base.mode = RunMode::offline;
  base.train_fraction = 0.8;
  base.lstm.hidden_dim = 8;
  base.lstm.batch = 32;
  base.lstm.lr = 0.05;
  base.lstm.max_epochs = 3;
  base.lstm.patience = 2;
  std::vector<RunConfig> cells(3, base);
  cells[0].theta = 0.2;
  cells[0].seed = 909;
  cells[1].theta = 0.4;
  cells[1].seed = 909;
  cells[2].theta = 0.2;
  cells[2].seed = 910;

  testsupport::TempDir tmp;
  const auto emit = [&](const std::string& stem) {
    const std::vector<EvalReport> reports = bench(ds, cells);
    const auto rows = report_rows(reports);
    write_report_csv(tmp.file(stem + "-report.csv"), rows);
    write_trace_csv(tmp.file(stem + "-trace.csv"), reports);
    write_weights_csv(tmp.file(stem + "-weights.csv"), reports);
  };
  setenv("FLOWCAST_THREADS", "1", 1);
  emit("serial-a");
  emit("serial-b");
  setenv("FLOWCAST_THREADS", "3", 1);
  emit("threaded");
  unsetenv("FLOWCAST_THREADS");

  const std::string report_a = mask_timing(read_file(tmp.file("serial-a-report.csv")));
  const std::string report_b = mask_timing(read_file(tmp.file("serial-b-report.csv")));
  const std::string report_t = mask_timing(read_file(tmp.file("threaded-report.csv")));
  const bool report_ok = !report_a.empty() && report_a == report_b && report_a == report_t;
  const bool trace_ok =
      read_file(tmp.file("serial-a-trace.csv")) == read_file(tmp.file("serial-b-trace.csv")) &&
      read_file(tmp.file("serial-a-trace.csv")) == read_file(tmp.file("threaded-trace.csv"));
  const bool weights_ok =
      read_file(tmp.file("serial-a-weights.csv")) == read_file(tmp.file("serial-b-weights.csv")) &&
      read_file(tmp.file("serial-a-weights.csv")) == read_file(tmp.file("threaded-weights.csv"));
  detail = fmt(
      "3-cell sweep x {serial, serial, 3 threads}: report%s, trace%s, weights%s "
      "byte-identical (wall-clock columns masked)",
      report_ok ? "" : " NOT", trace_ok ? "" : " NOT", weights_ok ? "" : " NOT");
  return report_ok && trace_ok && weights_ok;
}

// ---------------------------------------------------------------------------
// 10. End-to-end run on a wide-archive CSV beats the target-only baseline.

Dataset archive_dataset() {
  SyntheticSpec sp;
  sp.n_sensors = 207;
  sp.n_steps = 7 * 288;
  sp.seed = 1012;
  sp.base_pattern = BasePattern::flat;
  sp.base_level = 65.0;  // speed-like magnitudes
  sp.noise_sigma = 3.0;
  sp.start_time = 1330560000;
  sp.indicator = Indicator::speed;

  // Nine station groups of 23 sensors. Each group suffers one daily two-hour
  // congestion drop; members past the fifth lead the rest by ten minutes, so
  // a group's leaders are informative neighbours for its first five members.
  const int group_hours[] = {7, 9, 11, 13, 15, 17, 19, 21, 5};
  for (int g = 0; g < 9; ++g) {
    std::vector<SensorId> followers, leaders;
    for (int j = 0; j < 23; ++j) {
      const int idx = g * 23 + j;
      (j < 5 ? followers : leaders).push_back(synthetic_sensor_id(idx));
    }
    for (int day = 0; day < 7; ++day) {
      const Timestamp base = sp.start_time + static_cast<Timestamp>(day) * 86400 +
                             static_cast<Timestamp>(group_hours[g]) * 3600 + 1800;
      AnomalySpec follow;
      follow.sensor_ids = followers;
      follow.kind = AnomalyKind::drop;
      follow.magnitude = 0.35;
      follow.start = base;
      follow.end = base + 7200;
      sp.anomalies.push_back(follow);
      AnomalySpec ahead = follow;
      ahead.sensor_ids = leaders;
      ahead.start -= 600;
      ahead.end -= 600;
      sp.anomalies.push_back(ahead);
    }
  }
  Dataset ds = generate_synthetic(sp);
  for (int i = 0; i < sp.n_sensors; ++i) {
    ds.series[i].id = SensorId{std::to_string(717000 + i)};  // archive-style ids
  }
  return ds;
}

double mean_rmse_from(const fs::path& out_dir, std::string& err) {
  for (const auto& entry : fs::recursive_directory_iterator(out_dir)) {
    if (entry.path().filename() != "report.csv") continue;
    for (const ReportRow& row : read_report_csv(entry.path().string())) {
      if (row.target != "MEAN") continue;
      if (row.status != "ok") {
        err = "MEAN row status " + row.status + ": " + row.error;
        return -1.0;
      }
      return row.rmse;
    }
  }
  err = "no report.csv with a MEAN row under " + out_dir.string();
  return -1.0;
}

bool criterion_10(std::string& detail) {
  Timer t;
  const char* bin = std::getenv("FLOWCAST_BIN");
  if (!bin) {
    detail = "FLOWCAST_BIN not set";
    return false;
  }
  testsupport::TempDir tmp;
  const std::string csv = tmp.file("archive.csv");
  testsupport::write_iso_csv(archive_dataset(), csv);

  const auto run_at = [&](double theta, const std::string& stem,
                          double* out_rmse) {
    std::ofstream cfg(tmp.file(stem + ".ini"));
    cfg << "[dataset]\nsource = csv\npath = " << csv
        << "\nlayout = wide\nindicator = speed\n\n[run]\nmode = offline\nseed = 1012\n"
        << "theta = " << theta
        << "\nloss = emd\ntrain_fraction = 0.8\n\n[lstm]\nhidden_dim = 32\n"
        << "batch = 32\nlr = 0.05\nmax_epochs = 10\npatience = 3\n\n[output]\ndir = "
        << tmp.file(stem + "-out") << "\nwrite_fpds = false\n";
    cfg.close();
    const std::string cmd = std::string(bin) + " run -c " + tmp.file(stem + ".ini") +
                            " >> " + tmp.file("cli.log") + " 2>&1";
    const int rc = std::system(cmd.c_str());
    if (!WIFEXITED(rc) || WEXITSTATUS(rc) != 0) {
      return fmt("CLI exited %d for theta=%g", WIFEXITED(rc) ? WEXITSTATUS(rc) : -1,
                 theta);
    }
    std::string err;
    *out_rmse = mean_rmse_from(tmp.file(stem + "-out"), err);
    return *out_rmse < 0 ? err : std::string();
  };

  double fused = -1.0, baseline = -1.0;
  std::string err = run_at(0.05, "fused", &fused);
  if (err.empty()) err = run_at(0.0, "baseline", &baseline);
  const double secs = t.secs();
  if (!err.empty()) {
    detail = err;
    return false;
  }
  detail = fmt(
      "207-sensor weekly archive, 5 targets: rmse %.3f (theta=0.05) vs %.3f "
      "(theta=0), %.0fs",
      fused, baseline, secs);
  return fused <= baseline && secs < 1800.0;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    bool (*fn)(std::string&);
  };
  const Criterion criteria[] = {
      {1, "distribution distance matches transport oracle", criterion_1},
      {2, "analytic gradients match finite differences", criterion_2},
      {3, "neighbour count worked example (N=207)", criterion_3},
      {4, "planted correlation recovery from outlier scores", criterion_4},
      {5, "forecast error U-shaped in neighbour fraction", criterion_5},
      {6, "distribution loss separates anomalies more sharply", criterion_6},
      {7, "every evaluation precedes every update", criterion_7},
      {8, "adaptive mode wins under regime shift", criterion_8},
      {9, "byte-stable reruns, serial and threaded", criterion_9},
      {10, "end-to-end archive run beats target-only baseline", criterion_10},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    std::string detail;
    bool ok = false;
    try {
      ok = c.fn(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    failed += ok ? 0 : 1;
    std::printf("[%s] %2d %-52s %s\n", ok ? "PASS" : "FAIL", c.id, c.name,
                detail.c_str());
    std::fflush(stdout);
  }
  if (failed) std::printf("%d of 10 criteria FAILED\n", failed);
  else std::printf("all 10 criteria passed\n");
  return failed ? 1 : 0;
}
