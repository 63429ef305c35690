#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "flowcast/correlation.hpp"
#include "flowcast/series.hpp"

namespace flowcast {

// One hour of 5-minute steps feeds each prediction.
inline constexpr int kWindowSteps = 12;

// Input window fused from target and weighted neighbours. Column 0 carries
// the target's raw values; columns 1..k carry the selected neighbours' values
// scaled by their correlation weight, in ranking order. y is the target's
// value `horizon` steps after the window.
struct FusedSample {
  Eigen::MatrixXd x;  // kWindowSteps x (1 + k)
  double y = 0.0;
  Timestamp y_time = 0;
  std::size_t y_index = 0;  // step index of y in the source dataset
};

// One sample per valid window position, stride 1: y_index runs from
// kWindowSteps + horizon - 1 to n_steps - 1.
std::vector<FusedSample> build_samples(const Dataset& dataset,
                                       const CorrelationWeightMap& weights,
                                       int horizon = 1);

// Per-column min-max scaling, fit on training data only. The prediction
// target shares column 0's range (it is the same physical quantity as the
// target sensor's raw column).
struct Normalizer {
  Eigen::VectorXd col_min, col_max;
  bool fitted = false;

  void fit(std::span<const FusedSample> samples);
  // Expand ranges in place with additional data (online refresh).
  void expand(std::span<const FusedSample> samples);

  Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const;
  double transform_target(double y) const;
  double inverse_target(double y_norm) const;
};

struct LstmParams {
  int input_dim = 0;
  int hidden_dim = 0;

  // Gate order throughout: input, forget, cell candidate, output.
  Eigen::MatrixXd w_i, w_f, w_g, w_o;  // hidden x input
  Eigen::MatrixXd u_i, u_f, u_g, u_o;  // hidden x hidden
  Eigen::VectorXd b_i, b_f, b_g, b_o;
  Eigen::RowVectorXd w_out;  // 1 x hidden
  double b_out = 0.0;

  // Weights uniform(-0.5, 0.5)/sqrt(fan_in); biases zero except the forget
  // gate's, which starts at 1.
  static LstmParams init(int input_dim, int hidden_dim, std::uint64_t seed);

  std::size_t n_params() const;
  Eigen::VectorXd to_flat() const;
  void from_flat(const Eigen::VectorXd& flat);
};

// Mean-squared-error loss over a batch of normalized samples, plus, when
// `grad` is given, dL/dparams via backpropagation through time across the
// window. xs hold normalized inputs (kWindowSteps x input_dim each).
double lstm_loss_and_grad(const LstmParams& params,
                          const std::vector<Eigen::MatrixXd>& xs,
                          const Eigen::VectorXd& ys, LstmParams* grad);

// Forward pass for one normalized window; returns the normalized prediction.
double lstm_forward(const LstmParams& params, const Eigen::MatrixXd& x);

struct LstmConfig {
  int hidden_dim = 64;
  int batch = 32;
  double lr = 1e-3;
  int max_epochs = 50;
  int patience = 5;          // early stop after this many non-improving epochs
  double val_fraction = 0.1;  // temporal tail of the training set
  std::uint64_t seed = 0;
};

struct FitResult {
  double train_time_s = 0.0;
  int epochs = 0;
  double best_val_mse = 0.0;
};

// LSTM regressor over fused windows, one instance per target sensor.
// Mini-batch SGD with BPTT; early stopping on a temporal validation tail
// restores the best parameters. Incremental updates continue from the
// current parameters on new samples only and never replay old data.
class Forecaster {
public:
  Forecaster(int input_dim, const LstmConfig& cfg);

  FitResult fit(std::span<const FusedSample> samples);

  // Sequential mini-batches in sample order, no shuffling: two consecutive
  // updates are exactly one update on the concatenation when the batch covers
  // each call.
  void update(std::span<const FusedSample> samples, int epochs, double lr);

  void expand_normalizer(std::span<const FusedSample> samples);
  // Refit from scratch (used when fusion columns are re-bound online and the
  // old per-column ranges no longer apply).
  void refit_normalizer(std::span<const FusedSample> samples);

  struct Prediction {
    double value = 0.0;
    double latency_ms = 0.0;
  };
  Prediction predict(const Eigen::MatrixXd& x) const;

  const LstmParams& params() const { return params_; }
  const Normalizer& normalizer() const { return normalizer_; }
  const LstmConfig& config() const { return cfg_; }
  int input_dim() const { return params_.input_dim; }

  // Checkpoint: dimensions + seed header, flat parameters and normalizer
  // state in hexfloat. A loaded checkpoint reproduces predictions bit-for-bit
  // on the same platform.
  void save(std::ostream& out) const;
  static Forecaster load(std::istream& in);

private:
  LstmConfig cfg_;
  LstmParams params_;
  Normalizer normalizer_;

  double run_epoch(std::span<const FusedSample> samples,
                   std::span<const std::size_t> order, double lr);
  double mse_on(std::span<const FusedSample> samples) const;
};

}  // namespace flowcast
