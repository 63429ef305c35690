#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "flowcast/fpd.hpp"
#include "flowcast/series.hpp"

namespace flowcast {

enum class LossKind { rmse, emd };

std::string to_string(LossKind kind);
LossKind parse_loss_kind(const std::string& text);

// Fully-connected autoencoder over B-bin distributions with the layer chain
// B -> hidden -> bottleneck -> hidden -> B. Hidden layers are sigmoid; the
// output layer is linear followed by a projection back onto the probability
// simplex (negatives clamp to zero, then the vector is renormalized; an
// all-zero pre-activation maps to uniform).
struct AeParams {
  int input_dim = 0;
  int hidden_dim = 0;
  int bottleneck_dim = 0;

  Eigen::MatrixXd w_enc1, w_enc2, w_dec1, w_dec2;
  Eigen::VectorXd b_enc1, b_enc2, b_dec1, b_dec2;

  static int default_hidden(int input_dim) { return (input_dim + 1) / 2; }
  static int default_bottleneck(int input_dim) { return (input_dim + 3) / 4; }

  // Weights drawn uniform(-0.5, 0.5)/sqrt(fan_in); biases zero except the
  // output layer's, which starts at 0.5 so that every bin's pre-activation is
  // positive and the zero-clamp leaves no permanently dead output.
  static AeParams init(int input_dim, int hidden_dim, int bottleneck_dim,
                       std::uint64_t seed);

  std::size_t n_params() const;
  Eigen::VectorXd to_flat() const;
  void from_flat(const Eigen::VectorXd& flat);
};

// Reconstruction of a distribution; output lies on the simplex.
Eigen::VectorXd ae_forward(const AeParams& params, const Eigen::VectorXd& d);

// rmse: sqrt(mean squared elementwise error).
// emd:  1-D Wasserstein-1 on the ordered bins, i.e. the L1 distance between
//       the two cumulative distributions at unit bin spacing.
double reconstruction_loss(LossKind kind, const Eigen::VectorXd& d,
                           const Eigen::VectorXd& d_hat);

// Loss plus gradient w.r.t. every parameter (filled into `grad`, which is
// reused as plain storage). The EMD branch uses the subgradient of the
// cumulative-difference L1 form with sign(0) = 0.
double ae_loss_and_grad(const AeParams& params, const Eigen::VectorXd& d,
                        LossKind kind, AeParams& grad);

// Exponentially decayed running moments of the score stream. Drives the
// probability weighting: instances that look anomalous under the historical
// score distribution contribute less to training.
struct WeightEstimator {
  double decay = 0.99;
  double mean = 0.0;
  double var = 0.0;
  long long count = 0;

  void observe(double score);
  double std_dev() const;
};

// Training weight in [w_min, 1] for the given score, computed from the
// estimator's state *before* the score is folded in, then folds it in.
// weight = 1 - Phi(z) with z = (score - mean) / max(std, 1e-8); monotone
// non-increasing in the score. With no history the weight is 1.
double anomaly_weight(WeightEstimator& est, double score, double w_min = 0.05);

struct StepResult {
  double loss = 0.0;   // unweighted loss before the update; the outlier score
  bool skipped = false;  // update dropped because the gradient was non-finite
};

// One SGD step on weight * loss. The returned loss is the pre-update,
// unweighted reconstruction loss.
StepResult ae_train_step(AeParams& params, const Eigen::VectorXd& d, LossKind kind,
                         double weight, double lr);

// Raw reconstruction-loss scores, one per consumed window. Never filtered or
// thresholded.
struct OutlierScoreSeries {
  SensorId sensor;
  std::vector<Timestamp> window_starts;
  std::vector<double> scores;

  std::size_t size() const { return scores.size(); }
};

struct DetectorConfig {
  LossKind loss = LossKind::emd;
  double lr = 0.05;
  double w_min = 0.05;
  double decay = 0.99;
  int hidden_dim = 0;      // 0 = default ceil(B/2)
  int bottleneck_dim = 0;  // 0 = default ceil(B/4)
  std::uint64_t seed = 0;
};

// Per-sensor online detector. Score-then-train: each distribution is scored
// with the current parameters before it contributes a training step, so the
// model never sees an instance before scoring it. Not safe for concurrent
// mutation; one instance per sensor.
class OnlineDetector {
public:
  OnlineDetector(int input_dim, const DetectorConfig& cfg);

  double process(const Fpd& fpd);
  void process_into(const Fpd& fpd, OutlierScoreSeries& out);

  const AeParams& params() const { return params_; }
  const DetectorConfig& config() const { return cfg_; }
  long long skipped_steps() const { return skipped_; }

private:
  DetectorConfig cfg_;
  AeParams params_;
  WeightEstimator estimator_;
  long long skipped_ = 0;
};

OutlierScoreSeries process_stream(const SensorId& sensor, std::span<const Fpd> fpds,
                                  const DetectorConfig& cfg);

// Text serialization: dimension/loss/seed header plus the flat parameter
// vector in hexfloat (exact round-trip).
void save_ae_model(std::ostream& out, const AeParams& params, LossKind kind,
                   std::uint64_t seed);
AeParams load_ae_model(std::istream& in, LossKind* kind = nullptr,
                       std::uint64_t* seed = nullptr);

}  // namespace flowcast
