#include "flowcast/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "flowcast/format.hpp"
#include "flowcast/rng.hpp"

namespace flowcast {
namespace {

Eigen::VectorXd sigmoid(const Eigen::VectorXd& x) {
  return (1.0 / (1.0 + (-x.array()).exp())).matrix();
}

struct ForwardTrace {
  Eigen::VectorXd h1, h2, h3, z, d_hat;
  double clamped_sum = 0.0;
};

ForwardTrace forward_trace(const AeParams& p, const Eigen::VectorXd& d) {
  ForwardTrace t;
  t.h1 = sigmoid(p.w_enc1 * d + p.b_enc1);
  t.h2 = sigmoid(p.w_enc2 * t.h1 + p.b_enc2);
  t.h3 = sigmoid(p.w_dec1 * t.h2 + p.b_dec1);
  t.z = p.w_dec2 * t.h3 + p.b_dec2;
  Eigen::VectorXd clamped = t.z.cwiseMax(0.0);
  t.clamped_sum = clamped.sum();
  if (t.clamped_sum > 0.0) {
    t.d_hat = clamped / t.clamped_sum;
  } else {
    t.d_hat = Eigen::VectorXd::Constant(t.z.size(), 1.0 / static_cast<double>(t.z.size()));
  }
  return t;
}

void check_dims(const Eigen::VectorXd& d, int input_dim) {
  if (d.size() != input_dim) {
    std::ostringstream os;
    os << "distribution has " << d.size() << " bins, model expects " << input_dim;
    throw Error(os.str());
  }
}

double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

bool grad_finite(const AeParams& g) {
  return g.w_enc1.allFinite() && g.w_enc2.allFinite() && g.w_dec1.allFinite() &&
         g.w_dec2.allFinite() && g.b_enc1.allFinite() && g.b_enc2.allFinite() &&
         g.b_dec1.allFinite() && g.b_dec2.allFinite();
}

void apply_step(AeParams& p, const AeParams& g, double scale) {
  p.w_enc1 -= scale * g.w_enc1;
  p.b_enc1 -= scale * g.b_enc1;
  p.w_enc2 -= scale * g.w_enc2;
  p.b_enc2 -= scale * g.b_enc2;
  p.w_dec1 -= scale * g.w_dec1;
  p.b_dec1 -= scale * g.b_dec1;
  p.w_dec2 -= scale * g.w_dec2;
  p.b_dec2 -= scale * g.b_dec2;
}

void fill_uniform(Eigen::MatrixXd& m, std::mt19937_64& rng, int fan_in) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = uniform_in(rng, -0.5, 0.5) * scale;
    }
  }
}

}  // namespace

std::string to_string(LossKind kind) {
  return kind == LossKind::rmse ? "rmse" : "emd";
}

LossKind parse_loss_kind(const std::string& text) {
  if (text == "rmse") return LossKind::rmse;
  if (text == "emd") return LossKind::emd;
  throw ConfigError("unknown loss '" + text + "' (expected rmse or emd)");
}

AeParams AeParams::init(int input_dim, int hidden_dim, int bottleneck_dim,
                        std::uint64_t seed) {
  if (input_dim < 1 || hidden_dim < 1 || bottleneck_dim < 1) {
    throw Error("autoencoder layer sizes must be positive");
  }
  AeParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.bottleneck_dim = bottleneck_dim;
  p.w_enc1.resize(hidden_dim, input_dim);
  p.w_enc2.resize(bottleneck_dim, hidden_dim);
  p.w_dec1.resize(hidden_dim, bottleneck_dim);
  p.w_dec2.resize(input_dim, hidden_dim);
  p.b_enc1 = Eigen::VectorXd::Zero(hidden_dim);
  p.b_enc2 = Eigen::VectorXd::Zero(bottleneck_dim);
  p.b_dec1 = Eigen::VectorXd::Zero(hidden_dim);
  // The output layer clamps negatives to zero and no gradient flows through a
  // clamped bin, so a bin whose pre-activation starts negative would stay dead
  // forever. A positive bias keeps every bin live at initialization (the
  // weight term is bounded by ~0.3 in magnitude).
  p.b_dec2 = Eigen::VectorXd::Constant(input_dim, 0.5);
  std::mt19937_64 rng(seed);
  fill_uniform(p.w_enc1, rng, input_dim);
  fill_uniform(p.w_enc2, rng, hidden_dim);
  fill_uniform(p.w_dec1, rng, bottleneck_dim);
  fill_uniform(p.w_dec2, rng, hidden_dim);
  return p;
}

std::size_t AeParams::n_params() const {
  return static_cast<std::size_t>(w_enc1.size() + w_enc2.size() + w_dec1.size() +
                                  w_dec2.size() + b_enc1.size() + b_enc2.size() +
                                  b_dec1.size() + b_dec2.size());
}

Eigen::VectorXd AeParams::to_flat() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(n_params()));
  Eigen::Index at = 0;
  const auto put_m = [&](const Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) flat(at++) = m(r, c);
    }
  };
  const auto put_v = [&](const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) flat(at++) = v(i);
  };
  put_m(w_enc1);
  put_v(b_enc1);
  put_m(w_enc2);
  put_v(b_enc2);
  put_m(w_dec1);
  put_v(b_dec1);
  put_m(w_dec2);
  put_v(b_dec2);
  return flat;
}

void AeParams::from_flat(const Eigen::VectorXd& flat) {
  if (flat.size() != static_cast<Eigen::Index>(n_params())) {
    throw Error("flat parameter vector has the wrong length");
  }
  Eigen::Index at = 0;
  const auto get_m = [&](Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = flat(at++);
    }
  };
  const auto get_v = [&](Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = flat(at++);
  };
  get_m(w_enc1);
  get_v(b_enc1);
  get_m(w_enc2);
  get_v(b_enc2);
  get_m(w_dec1);
  get_v(b_dec1);
  get_m(w_dec2);
  get_v(b_dec2);
}

Eigen::VectorXd ae_forward(const AeParams& params, const Eigen::VectorXd& d) {
  check_dims(d, params.input_dim);
  return forward_trace(params, d).d_hat;
}

double reconstruction_loss(LossKind kind, const Eigen::VectorXd& d,
                           const Eigen::VectorXd& d_hat) {
  if (d.size() != d_hat.size()) throw Error("distribution size mismatch");
  const Eigen::Index n = d.size();
  if (n == 0) throw Error("empty distribution");
  if (kind == LossKind::rmse) {
    return std::sqrt((d_hat - d).squaredNorm() / static_cast<double>(n));
  }
  // Wasserstein-1 between the cumulative distributions; the final cumulative
  // term is identically zero by mass conservation and is left out so its
  // floating-point noise cannot leak into the sum (or the subgradient).
  double c = 0.0;
  double total = 0.0;
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    c += d(i) - d_hat(i);
    total += std::abs(c);
  }
  return total;
}

double ae_loss_and_grad(const AeParams& params, const Eigen::VectorXd& d,
                        LossKind kind, AeParams& grad) {
  check_dims(d, params.input_dim);
  const ForwardTrace t = forward_trace(params, d);
  const Eigen::Index n = d.size();
  const double loss = reconstruction_loss(kind, d, t.d_hat);

  Eigen::VectorXd g(n);  // dLoss / d d_hat
  if (kind == LossKind::rmse) {
    if (loss < 1e-12) {
      g.setZero();
    } else {
      g = (t.d_hat - d) / (static_cast<double>(n) * loss);
    }
  } else {
    // d|C_i|/d d_hat_j = -sign(C_i) for j <= i; accumulate via suffix sums.
    Eigen::VectorXd sign_c = Eigen::VectorXd::Zero(n);
    double c = 0.0;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      c += d(i) - t.d_hat(i);
      sign_c(i) = sign_of(c);
    }
    double suffix = 0.0;
    g.setZero();
    for (Eigen::Index j = n - 1; j >= 0; --j) {
      if (j + 1 < n) suffix += sign_c(j);
      g(j) = -suffix;
    }
  }

  // Back through the simplex projection: quotient rule on the clamped sum,
  // zero subgradient on clamped entries and on the all-zero branch.
  Eigen::VectorXd dz = Eigen::VectorXd::Zero(n);
  if (t.clamped_sum > 0.0) {
    const double g_dot_dhat = g.dot(t.d_hat);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (t.z(j) > 0.0) dz(j) = (g(j) - g_dot_dhat) / t.clamped_sum;
    }
  }

  grad.input_dim = params.input_dim;
  grad.hidden_dim = params.hidden_dim;
  grad.bottleneck_dim = params.bottleneck_dim;
  grad.b_dec2 = dz;
  grad.w_dec2 = dz * t.h3.transpose();
  const Eigen::VectorXd dh3 = params.w_dec2.transpose() * dz;
  const Eigen::VectorXd dp3 =
      (dh3.array() * t.h3.array() * (1.0 - t.h3.array())).matrix();
  grad.b_dec1 = dp3;
  grad.w_dec1 = dp3 * t.h2.transpose();
  const Eigen::VectorXd dh2 = params.w_dec1.transpose() * dp3;
  const Eigen::VectorXd dp2 =
      (dh2.array() * t.h2.array() * (1.0 - t.h2.array())).matrix();
  grad.b_enc2 = dp2;
  grad.w_enc2 = dp2 * t.h1.transpose();
  const Eigen::VectorXd dh1 = params.w_enc2.transpose() * dp2;
  const Eigen::VectorXd dp1 =
      (dh1.array() * t.h1.array() * (1.0 - t.h1.array())).matrix();
  grad.b_enc1 = dp1;
  grad.w_enc1 = dp1 * d.transpose();
  return loss;
}

void WeightEstimator::observe(double score) {
  if (count == 0) {
    mean = score;
    var = 0.0;
  } else {
    const double d = score - mean;
    mean += (1.0 - decay) * d;
    var = decay * (var + (1.0 - decay) * d * d);
  }
  ++count;
}

double WeightEstimator::std_dev() const { return std::sqrt(std::max(var, 0.0)); }

double anomaly_weight(WeightEstimator& est, double score, double w_min) {
  double weight = 1.0;
  if (est.count > 0) {
    const double sd = std::max(est.std_dev(), 1e-8);
    const double z = (score - est.mean) / sd;
    const double phi = 0.5 * std::erfc(-z / std::numbers::sqrt2);
    weight = std::clamp(1.0 - phi, w_min, 1.0);
  }
  est.observe(score);
  return weight;
}

StepResult ae_train_step(AeParams& params, const Eigen::VectorXd& d, LossKind kind,
                         double weight, double lr) {
  AeParams grad;
  const double loss = ae_loss_and_grad(params, d, kind, grad);
  if (!std::isfinite(loss) || !grad_finite(grad)) return {loss, true};
  apply_step(params, grad, lr * weight);
  return {loss, false};
}

OnlineDetector::OnlineDetector(int input_dim, const DetectorConfig& cfg) : cfg_(cfg) {
  const int hidden =
      cfg.hidden_dim > 0 ? cfg.hidden_dim : AeParams::default_hidden(input_dim);
  const int bottleneck = cfg.bottleneck_dim > 0
                             ? cfg.bottleneck_dim
                             : AeParams::default_bottleneck(input_dim);
  params_ = AeParams::init(input_dim, hidden, bottleneck, cfg.seed);
  estimator_.decay = cfg.decay;
}

double OnlineDetector::process(const Fpd& fpd) {
  Eigen::VectorXd d =
      Eigen::Map<const Eigen::VectorXd>(fpd.probs.data(),
                                        static_cast<Eigen::Index>(fpd.probs.size()));
  check_dims(d, params_.input_dim);
  AeParams grad;
  const double score = ae_loss_and_grad(params_, d, cfg_.loss, grad);
  const double weight = anomaly_weight(estimator_, score, cfg_.w_min);
  if (std::isfinite(score) && grad_finite(grad)) {
    apply_step(params_, grad, cfg_.lr * weight);
  } else {
    ++skipped_;
  }
  return score;
}

void OnlineDetector::process_into(const Fpd& fpd, OutlierScoreSeries& out) {
  if (out.sensor.name.empty()) out.sensor = fpd.sensor;
  const double score = process(fpd);
  out.window_starts.push_back(fpd.window_start);
  out.scores.push_back(score);
}

OutlierScoreSeries process_stream(const SensorId& sensor, std::span<const Fpd> fpds,
                                  const DetectorConfig& cfg) {
  OutlierScoreSeries out;
  out.sensor = sensor;
  if (fpds.empty()) return out;
  OnlineDetector detector(static_cast<int>(fpds.front().probs.size()), cfg);
  for (const Fpd& fpd : fpds) {
    if (!(fpd.sensor == sensor)) {
      throw Error("score stream for '" + sensor.name + "' fed a window from '" +
                  fpd.sensor.name + "'");
    }
    detector.process_into(fpd, out);
  }
  return out;
}

void save_ae_model(std::ostream& out, const AeParams& params, LossKind kind,
                   std::uint64_t seed) {
  out << "flowcast-ae 1\n";
  out << "dims " << params.input_dim << ' ' << params.hidden_dim << ' '
      << params.bottleneck_dim << '\n';
  out << "loss " << to_string(kind) << '\n';
  out << "seed " << seed << '\n';
  const Eigen::VectorXd flat = params.to_flat();
  out << "params " << flat.size() << '\n';
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    out << format_double(flat(i)) << '\n';
  }
  if (!out) throw Error("failed to write autoencoder model");
}

AeParams load_ae_model(std::istream& in, LossKind* kind, std::uint64_t* seed) {
  std::string tag;
  int version = 0;
  in >> tag >> version;
  if (!in || tag != "flowcast-ae" || version != 1) {
    throw Error("not a flowcast autoencoder model");
  }
  std::string key;
  int input_dim = 0;
  int hidden_dim = 0;
  int bottleneck_dim = 0;
  in >> key >> input_dim >> hidden_dim >> bottleneck_dim;
  if (!in || key != "dims") throw Error("malformed autoencoder model (dims)");
  std::string loss_text;
  in >> key >> loss_text;
  if (!in || key != "loss") throw Error("malformed autoencoder model (loss)");
  std::uint64_t stored_seed = 0;
  in >> key >> stored_seed;
  if (!in || key != "seed") throw Error("malformed autoencoder model (seed)");
  Eigen::Index count = 0;
  in >> key >> count;
  if (!in || key != "params") throw Error("malformed autoencoder model (params)");

  AeParams p = AeParams::init(input_dim, hidden_dim, bottleneck_dim, 0);
  if (count != static_cast<Eigen::Index>(p.n_params())) {
    throw Error("autoencoder model parameter count mismatch");
  }
  Eigen::VectorXd flat(count);
  for (Eigen::Index i = 0; i < count; ++i) {
    std::string token;
    in >> token;
    if (!in) throw Error("autoencoder model truncated");
    char* end = nullptr;
    flat(i) = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0') {
      throw Error("bad number in autoencoder model: '" + token + "'");
    }
  }
  p.from_flat(flat);
  if (kind != nullptr) *kind = parse_loss_kind(loss_text);
  if (seed != nullptr) *seed = stored_seed;
  return p;
}

}  // namespace flowcast
