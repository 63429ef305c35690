#include "flowcast/lstm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "flowcast/format.hpp"
#include "flowcast/rng.hpp"

namespace flowcast {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Eigen::MatrixXd msigmoid(const Eigen::MatrixXd& x) {
  return (1.0 / (1.0 + (-x.array()).exp())).matrix();
}

void fill_uniform(Eigen::MatrixXd& m, std::mt19937_64& rng, int fan_in) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = uniform_in(rng, -0.5, 0.5) * scale;
    }
  }
}

void apply_step(LstmParams& p, const LstmParams& g, double scale) {
  p.w_i -= scale * g.w_i;
  p.w_f -= scale * g.w_f;
  p.w_g -= scale * g.w_g;
  p.w_o -= scale * g.w_o;
  p.u_i -= scale * g.u_i;
  p.u_f -= scale * g.u_f;
  p.u_g -= scale * g.u_g;
  p.u_o -= scale * g.u_o;
  p.b_i -= scale * g.b_i;
  p.b_f -= scale * g.b_f;
  p.b_g -= scale * g.b_g;
  p.b_o -= scale * g.b_o;
  p.w_out -= scale * g.w_out;
  p.b_out -= scale * g.b_out;
}

bool params_finite(const LstmParams& p) {
  return p.w_i.allFinite() && p.w_f.allFinite() && p.w_g.allFinite() &&
         p.w_o.allFinite() && p.u_i.allFinite() && p.u_f.allFinite() &&
         p.u_g.allFinite() && p.u_o.allFinite() && p.b_i.allFinite() &&
         p.b_f.allFinite() && p.b_g.allFinite() && p.b_o.allFinite() &&
         p.w_out.allFinite() && std::isfinite(p.b_out);
}

double read_double_token(std::istream& in, const char* context) {
  std::string token;
  in >> token;
  if (!in) throw Error(std::string("checkpoint truncated (") + context + ")");
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0') {
    throw Error("bad number in checkpoint: '" + token + "'");
  }
  return v;
}

}  // namespace

std::vector<FusedSample> build_samples(const Dataset& dataset,
                                       const CorrelationWeightMap& weights,
                                       int horizon) {
  if (horizon < 1) throw Error("prediction horizon must be at least 1 step");
  const SensorSeries& target = dataset.at(weights.target);
  const auto selected = weights.selected();
  std::vector<const SensorSeries*> neighbor_series;
  std::vector<double> neighbor_weights;
  neighbor_series.reserve(selected.size());
  neighbor_weights.reserve(selected.size());
  for (const NeighborWeight* nw : selected) {
    neighbor_series.push_back(&dataset.at(nw->neighbor));
    neighbor_weights.push_back(nw->weight);
  }

  const std::size_t n = dataset.n_steps();
  const std::size_t first_y =
      static_cast<std::size_t>(kWindowSteps) + static_cast<std::size_t>(horizon) - 1;
  std::vector<FusedSample> out;
  if (n <= first_y) return out;
  out.reserve(n - first_y);
  for (std::size_t y_index = first_y; y_index < n; ++y_index) {
    FusedSample s;
    s.x.resize(kWindowSteps, 1 + static_cast<Eigen::Index>(neighbor_series.size()));
    const std::size_t window_begin =
        y_index + 1 - static_cast<std::size_t>(horizon) - kWindowSteps;
    for (int t = 0; t < kWindowSteps; ++t) {
      const std::size_t step = window_begin + static_cast<std::size_t>(t);
      s.x(t, 0) = target.values[step];
      for (std::size_t j = 0; j < neighbor_series.size(); ++j) {
        s.x(t, 1 + static_cast<Eigen::Index>(j)) =
            neighbor_weights[j] * neighbor_series[j]->values[step];
      }
    }
    s.y = target.values[y_index];
    s.y_time = dataset.time_at(y_index);
    s.y_index = y_index;
    out.push_back(std::move(s));
  }
  return out;
}

void Normalizer::fit(std::span<const FusedSample> samples) {
  if (samples.empty()) throw Error("cannot fit a normalizer on no samples");
  const Eigen::Index cols = samples.front().x.cols();
  col_min = Eigen::VectorXd::Constant(cols, std::numeric_limits<double>::infinity());
  col_max = Eigen::VectorXd::Constant(cols, -std::numeric_limits<double>::infinity());
  fitted = true;
  expand(samples);
}

void Normalizer::expand(std::span<const FusedSample> samples) {
  if (!fitted) throw Error("normalizer is not fitted");
  for (const auto& s : samples) {
    if (s.x.cols() != col_min.size()) {
      throw Error("sample column count does not match the normalizer");
    }
    for (Eigen::Index c = 0; c < s.x.cols(); ++c) {
      col_min(c) = std::min(col_min(c), s.x.col(c).minCoeff());
      col_max(c) = std::max(col_max(c), s.x.col(c).maxCoeff());
    }
    col_min(0) = std::min(col_min(0), s.y);
    col_max(0) = std::max(col_max(0), s.y);
  }
}

Eigen::MatrixXd Normalizer::transform(const Eigen::MatrixXd& x) const {
  if (!fitted) throw Error("normalizer is not fitted");
  if (x.cols() != col_min.size()) {
    throw Error("sample column count does not match the normalizer");
  }
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double range = col_max(c) - col_min(c);
    if (range <= 0.0) {
      out.col(c).setZero();
    } else {
      out.col(c) = (x.col(c).array() - col_min(c)) / range;
    }
  }
  return out;
}

double Normalizer::transform_target(double y) const {
  if (!fitted) throw Error("normalizer is not fitted");
  const double range = col_max(0) - col_min(0);
  if (range <= 0.0) return 0.0;
  return (y - col_min(0)) / range;
}

double Normalizer::inverse_target(double y_norm) const {
  if (!fitted) throw Error("normalizer is not fitted");
  const double range = col_max(0) - col_min(0);
  if (range <= 0.0) return col_min(0);
  return y_norm * range + col_min(0);
}

LstmParams LstmParams::init(int input_dim, int hidden_dim, std::uint64_t seed) {
  if (input_dim < 1 || hidden_dim < 1) {
    throw Error("LSTM layer sizes must be positive");
  }
  LstmParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.w_i.resize(hidden_dim, input_dim);
  p.w_f.resize(hidden_dim, input_dim);
  p.w_g.resize(hidden_dim, input_dim);
  p.w_o.resize(hidden_dim, input_dim);
  p.u_i.resize(hidden_dim, hidden_dim);
  p.u_f.resize(hidden_dim, hidden_dim);
  p.u_g.resize(hidden_dim, hidden_dim);
  p.u_o.resize(hidden_dim, hidden_dim);
  p.b_i = Eigen::VectorXd::Zero(hidden_dim);
  p.b_f = Eigen::VectorXd::Ones(hidden_dim);  // keep early memory open
  p.b_g = Eigen::VectorXd::Zero(hidden_dim);
  p.b_o = Eigen::VectorXd::Zero(hidden_dim);
  p.w_out.resize(hidden_dim);
  p.b_out = 0.0;

  std::mt19937_64 rng(seed);
  fill_uniform(p.w_i, rng, input_dim);
  fill_uniform(p.w_f, rng, input_dim);
  fill_uniform(p.w_g, rng, input_dim);
  fill_uniform(p.w_o, rng, input_dim);
  fill_uniform(p.u_i, rng, hidden_dim);
  fill_uniform(p.u_f, rng, hidden_dim);
  fill_uniform(p.u_g, rng, hidden_dim);
  fill_uniform(p.u_o, rng, hidden_dim);
  Eigen::MatrixXd w_out_m(1, hidden_dim);
  fill_uniform(w_out_m, rng, hidden_dim);
  p.w_out = w_out_m.row(0);
  return p;
}

std::size_t LstmParams::n_params() const {
  const std::size_t h = static_cast<std::size_t>(hidden_dim);
  const std::size_t d = static_cast<std::size_t>(input_dim);
  return 4 * h * d + 4 * h * h + 4 * h + h + 1;
}

Eigen::VectorXd LstmParams::to_flat() const {
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
  put_m(w_i);
  put_m(w_f);
  put_m(w_g);
  put_m(w_o);
  put_m(u_i);
  put_m(u_f);
  put_m(u_g);
  put_m(u_o);
  put_v(b_i);
  put_v(b_f);
  put_v(b_g);
  put_v(b_o);
  for (Eigen::Index i = 0; i < w_out.size(); ++i) flat(at++) = w_out(i);
  flat(at++) = b_out;
  return flat;
}

void LstmParams::from_flat(const Eigen::VectorXd& flat) {
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
  get_m(w_i);
  get_m(w_f);
  get_m(w_g);
  get_m(w_o);
  get_m(u_i);
  get_m(u_f);
  get_m(u_g);
  get_m(u_o);
  get_v(b_i);
  get_v(b_f);
  get_v(b_g);
  get_v(b_o);
  for (Eigen::Index i = 0; i < w_out.size(); ++i) w_out(i) = flat(at++);
  b_out = flat(at++);
}

double lstm_loss_and_grad(const LstmParams& params,
                          const std::vector<Eigen::MatrixXd>& xs,
                          const Eigen::VectorXd& ys, LstmParams* grad) {
  const Eigen::Index m = static_cast<Eigen::Index>(xs.size());
  if (m == 0) throw Error("empty batch");
  if (ys.size() != m) throw Error("batch size mismatch between inputs and targets");
  const int T = kWindowSteps;
  const int D = params.input_dim;
  const int H = params.hidden_dim;
  for (const auto& x : xs) {
    if (x.rows() != T || x.cols() != D) {
      throw Error("sample window has the wrong shape");
    }
  }

  // Batch as columns: one D x m input slab per time step.
  std::vector<Eigen::MatrixXd> X(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    X[static_cast<std::size_t>(t)].resize(D, m);
    for (Eigen::Index s = 0; s < m; ++s) {
      X[static_cast<std::size_t>(t)].col(s) =
          xs[static_cast<std::size_t>(s)].row(t).transpose();
    }
  }

  std::vector<Eigen::MatrixXd> I(T), F(T), G(T), O(T), C(T), TanhC(T), Hprev(T);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(H, m);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(H, m);
  for (int t = 0; t < T; ++t) {
    const auto ti = static_cast<std::size_t>(t);
    Hprev[ti] = h;
    const Eigen::MatrixXd a_i =
        (params.w_i * X[ti] + params.u_i * h).colwise() + params.b_i;
    const Eigen::MatrixXd a_f =
        (params.w_f * X[ti] + params.u_f * h).colwise() + params.b_f;
    const Eigen::MatrixXd a_g =
        (params.w_g * X[ti] + params.u_g * h).colwise() + params.b_g;
    const Eigen::MatrixXd a_o =
        (params.w_o * X[ti] + params.u_o * h).colwise() + params.b_o;
    I[ti] = msigmoid(a_i);
    F[ti] = msigmoid(a_f);
    G[ti] = a_g.array().tanh().matrix();
    O[ti] = msigmoid(a_o);
    c = (F[ti].array() * c.array() + I[ti].array() * G[ti].array()).matrix();
    C[ti] = c;
    TanhC[ti] = c.array().tanh().matrix();
    h = (O[ti].array() * TanhC[ti].array()).matrix();
  }

  const Eigen::RowVectorXd y_hat =
      ((params.w_out * h).array() + params.b_out).matrix();
  const Eigen::RowVectorXd err = y_hat - ys.transpose();
  const double loss = err.squaredNorm() / static_cast<double>(m);
  if (grad == nullptr) return loss;

  LstmParams& g = *grad;
  g.input_dim = D;
  g.hidden_dim = H;
  g.w_i = Eigen::MatrixXd::Zero(H, D);
  g.w_f = Eigen::MatrixXd::Zero(H, D);
  g.w_g = Eigen::MatrixXd::Zero(H, D);
  g.w_o = Eigen::MatrixXd::Zero(H, D);
  g.u_i = Eigen::MatrixXd::Zero(H, H);
  g.u_f = Eigen::MatrixXd::Zero(H, H);
  g.u_g = Eigen::MatrixXd::Zero(H, H);
  g.u_o = Eigen::MatrixXd::Zero(H, H);
  g.b_i = Eigen::VectorXd::Zero(H);
  g.b_f = Eigen::VectorXd::Zero(H);
  g.b_g = Eigen::VectorXd::Zero(H);
  g.b_o = Eigen::VectorXd::Zero(H);
  g.w_out = Eigen::RowVectorXd::Zero(H);
  g.b_out = 0.0;

  const Eigen::RowVectorXd dy = (2.0 / static_cast<double>(m)) * err;
  g.w_out = dy * h.transpose();
  g.b_out = dy.sum();
  Eigen::MatrixXd dh = params.w_out.transpose() * dy;
  Eigen::MatrixXd dc = Eigen::MatrixXd::Zero(H, m);
  const Eigen::MatrixXd zero_state = Eigen::MatrixXd::Zero(H, m);
  for (int t = T - 1; t >= 0; --t) {
    const auto ti = static_cast<std::size_t>(t);
    const Eigen::MatrixXd da_o =
        (dh.array() * TanhC[ti].array() * O[ti].array() * (1.0 - O[ti].array()))
            .matrix();
    dc.array() += dh.array() * O[ti].array() * (1.0 - TanhC[ti].array().square());
    const Eigen::MatrixXd& c_prev = t == 0 ? zero_state : C[ti - 1];
    const Eigen::MatrixXd da_f =
        (dc.array() * c_prev.array() * F[ti].array() * (1.0 - F[ti].array()))
            .matrix();
    const Eigen::MatrixXd da_i =
        (dc.array() * G[ti].array() * I[ti].array() * (1.0 - I[ti].array()))
            .matrix();
    const Eigen::MatrixXd da_g =
        (dc.array() * I[ti].array() * (1.0 - G[ti].array().square())).matrix();

    g.w_i += da_i * X[ti].transpose();
    g.w_f += da_f * X[ti].transpose();
    g.w_g += da_g * X[ti].transpose();
    g.w_o += da_o * X[ti].transpose();
    g.u_i += da_i * Hprev[ti].transpose();
    g.u_f += da_f * Hprev[ti].transpose();
    g.u_g += da_g * Hprev[ti].transpose();
    g.u_o += da_o * Hprev[ti].transpose();
    g.b_i += da_i.rowwise().sum();
    g.b_f += da_f.rowwise().sum();
    g.b_g += da_g.rowwise().sum();
    g.b_o += da_o.rowwise().sum();

    dh = params.u_i.transpose() * da_i + params.u_f.transpose() * da_f +
         params.u_g.transpose() * da_g + params.u_o.transpose() * da_o;
    dc = (dc.array() * F[ti].array()).matrix();
  }
  return loss;
}

double lstm_forward(const LstmParams& params, const Eigen::MatrixXd& x) {
  if (x.rows() != kWindowSteps || x.cols() != params.input_dim) {
    throw Error("sample window has the wrong shape");
  }
  Eigen::VectorXd h = Eigen::VectorXd::Zero(params.hidden_dim);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(params.hidden_dim);
  for (int t = 0; t < kWindowSteps; ++t) {
    const Eigen::VectorXd x_t = x.row(t).transpose();
    const Eigen::ArrayXd a_i = (params.w_i * x_t + params.u_i * h + params.b_i).array();
    const Eigen::ArrayXd a_f = (params.w_f * x_t + params.u_f * h + params.b_f).array();
    const Eigen::ArrayXd a_g = (params.w_g * x_t + params.u_g * h + params.b_g).array();
    const Eigen::ArrayXd a_o = (params.w_o * x_t + params.u_o * h + params.b_o).array();
    const Eigen::ArrayXd i_t = 1.0 / (1.0 + (-a_i).exp());
    const Eigen::ArrayXd f_t = 1.0 / (1.0 + (-a_f).exp());
    const Eigen::ArrayXd g_t = a_g.tanh();
    const Eigen::ArrayXd o_t = 1.0 / (1.0 + (-a_o).exp());
    c = (f_t * c.array() + i_t * g_t).matrix();
    h = (o_t * c.array().tanh()).matrix();
  }
  return params.w_out.dot(h) + params.b_out;
}

namespace {

const LstmConfig& validated(const LstmConfig& cfg, int input_dim) {
  if (input_dim < 1) throw ConfigError("forecaster input dimension must be positive");
  if (cfg.hidden_dim < 1) throw ConfigError("hidden_dim must be at least 1");
  if (cfg.batch < 1) throw ConfigError("batch size must be at least 1");
  if (cfg.max_epochs < 1) throw ConfigError("max_epochs must be at least 1");
  if (cfg.patience < 1) throw ConfigError("patience must be at least 1");
  if (cfg.val_fraction < 0.0 || cfg.val_fraction >= 1.0) {
    throw ConfigError("val_fraction must lie in [0, 1)");
  }
  if (!(cfg.lr > 0.0)) throw ConfigError("learning rate must be positive");
  return cfg;
}

}  // namespace

Forecaster::Forecaster(int input_dim, const LstmConfig& cfg)
    : cfg_(validated(cfg, input_dim)),
      params_(LstmParams::init(input_dim, cfg.hidden_dim, cfg.seed)) {}

double Forecaster::run_epoch(std::span<const FusedSample> samples,
                             std::span<const std::size_t> order, double lr) {
  double loss_sum = 0.0;
  std::size_t counted = 0;
  const std::size_t batch = static_cast<std::size_t>(cfg_.batch);
  std::vector<Eigen::MatrixXd> xs;
  LstmParams grad;
  for (std::size_t begin = 0; begin < order.size(); begin += batch) {
    const std::size_t end = std::min(begin + batch, order.size());
    xs.clear();
    Eigen::VectorXd ys(static_cast<Eigen::Index>(end - begin));
    for (std::size_t i = begin; i < end; ++i) {
      const FusedSample& s = samples[order[i]];
      xs.push_back(normalizer_.transform(s.x));
      ys(static_cast<Eigen::Index>(i - begin)) = normalizer_.transform_target(s.y);
    }
    const double batch_loss = lstm_loss_and_grad(params_, xs, ys, &grad);
    loss_sum += batch_loss * static_cast<double>(end - begin);
    counted += end - begin;
    apply_step(params_, grad, lr);
    if (!params_finite(params_)) {
      throw Error("LSTM training diverged to non-finite parameters");
    }
  }
  return counted == 0 ? 0.0 : loss_sum / static_cast<double>(counted);
}

double Forecaster::mse_on(std::span<const FusedSample> samples) const {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& s : samples) {
    const double y_hat = lstm_forward(params_, normalizer_.transform(s.x));
    const double err = y_hat - normalizer_.transform_target(s.y);
    acc += err * err;
  }
  return acc / static_cast<double>(samples.size());
}

FitResult Forecaster::fit(std::span<const FusedSample> samples) {
  const auto t0 = Clock::now();
  if (samples.empty()) throw Error("cannot fit a forecaster on no samples");
  normalizer_.fit(samples);

  const std::size_t n = samples.size();
  std::size_t n_train = split_index(n, 1.0 - cfg_.val_fraction);
  if (n_train == 0) n_train = n;  // degenerate split: train on everything
  const std::span<const FusedSample> train = samples.first(n_train);
  const std::span<const FusedSample> val = samples.subspan(n_train);

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  double best_val = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_flat = params_.to_flat();
  int bad_epochs = 0;
  FitResult result;
  for (int epoch = 0; epoch < cfg_.max_epochs; ++epoch) {
    std::mt19937_64 shuffle_rng(
        mix_seed(cfg_.seed, seed_role::shuffle, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    run_epoch(train, order, cfg_.lr);
    result.epochs = epoch + 1;
    if (val.empty()) continue;
    const double val_mse = mse_on(val);
    if (val_mse < best_val) {
      best_val = val_mse;
      best_flat = params_.to_flat();
      bad_epochs = 0;
    } else {
      ++bad_epochs;
      if (bad_epochs >= cfg_.patience) break;
    }
  }
  if (!val.empty()) {
    params_.from_flat(best_flat);
    result.best_val_mse = best_val;
  } else {
    result.best_val_mse = mse_on(train);
  }
  result.train_time_s = seconds_since(t0);
  return result;
}

void Forecaster::update(std::span<const FusedSample> samples, int epochs, double lr) {
  if (samples.empty() || epochs < 1) return;
  if (!normalizer_.fitted) throw Error("cannot update before the first fit");
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (int e = 0; e < epochs; ++e) run_epoch(samples, order, lr);
}

void Forecaster::expand_normalizer(std::span<const FusedSample> samples) {
  normalizer_.expand(samples);
}

void Forecaster::refit_normalizer(std::span<const FusedSample> samples) {
  normalizer_.fit(samples);
}

Forecaster::Prediction Forecaster::predict(const Eigen::MatrixXd& x) const {
  const auto t0 = Clock::now();
  const double y_norm = lstm_forward(params_, normalizer_.transform(x));
  Prediction p;
  p.value = normalizer_.inverse_target(y_norm);
  p.latency_ms = seconds_since(t0) * 1e3;
  return p;
}

void Forecaster::save(std::ostream& out) const {
  out << "flowcast-lstm 1\n";
  out << "dims " << params_.input_dim << ' ' << params_.hidden_dim << '\n';
  out << "config " << cfg_.batch << ' ' << format_double(cfg_.lr) << ' '
      << cfg_.max_epochs << ' ' << cfg_.patience << ' '
      << format_double(cfg_.val_fraction) << ' ' << cfg_.seed << '\n';
  const Eigen::VectorXd flat = params_.to_flat();
  out << "params " << flat.size() << '\n';
  for (Eigen::Index i = 0; i < flat.size(); ++i) out << format_double(flat(i)) << '\n';
  out << "normalizer " << (normalizer_.fitted ? 1 : 0) << ' '
      << (normalizer_.fitted ? normalizer_.col_min.size() : 0) << '\n';
  if (normalizer_.fitted) {
    for (Eigen::Index i = 0; i < normalizer_.col_min.size(); ++i) {
      out << format_double(normalizer_.col_min(i)) << '\n';
    }
    for (Eigen::Index i = 0; i < normalizer_.col_max.size(); ++i) {
      out << format_double(normalizer_.col_max(i)) << '\n';
    }
  }
  if (!out) throw Error("failed to write forecaster checkpoint");
}

Forecaster Forecaster::load(std::istream& in) {
  std::string tag;
  int version = 0;
  in >> tag >> version;
  if (!in || tag != "flowcast-lstm" || version != 1) {
    throw Error("not a flowcast forecaster checkpoint");
  }
  std::string key;
  int input_dim = 0;
  int hidden_dim = 0;
  in >> key >> input_dim >> hidden_dim;
  if (!in || key != "dims") throw Error("malformed checkpoint (dims)");
  LstmConfig cfg;
  cfg.hidden_dim = hidden_dim;
  in >> key >> cfg.batch;
  if (!in || key != "config") throw Error("malformed checkpoint (config)");
  cfg.lr = read_double_token(in, "config");
  in >> cfg.max_epochs >> cfg.patience;
  cfg.val_fraction = read_double_token(in, "config");
  in >> cfg.seed;
  if (!in) throw Error("malformed checkpoint (config)");

  Forecaster f(input_dim, cfg);
  Eigen::Index count = 0;
  in >> key >> count;
  if (!in || key != "params") throw Error("malformed checkpoint (params)");
  if (count != static_cast<Eigen::Index>(f.params_.n_params())) {
    throw Error("checkpoint parameter count mismatch");
  }
  Eigen::VectorXd flat(count);
  for (Eigen::Index i = 0; i < count; ++i) flat(i) = read_double_token(in, "params");
  f.params_.from_flat(flat);

  int fitted = 0;
  Eigen::Index cols = 0;
  in >> key >> fitted >> cols;
  if (!in || key != "normalizer") throw Error("malformed checkpoint (normalizer)");
  f.normalizer_.fitted = fitted != 0;
  if (f.normalizer_.fitted) {
    f.normalizer_.col_min.resize(cols);
    f.normalizer_.col_max.resize(cols);
    for (Eigen::Index i = 0; i < cols; ++i) {
      f.normalizer_.col_min(i) = read_double_token(in, "normalizer");
    }
    for (Eigen::Index i = 0; i < cols; ++i) {
      f.normalizer_.col_max(i) = read_double_token(in, "normalizer");
    }
  }
  return f;
}

}  // namespace flowcast
