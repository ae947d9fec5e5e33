#pragma once

// Deep Q-learning agent: a small fully connected Q-network with hand-written
// backpropagation, Adam, uniform experience replay, a periodically synced
// target network, and masked epsilon-greedy exploration.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "uavaoi/binary_io.hpp"
#include "uavaoi/env.hpp"
#include "uavaoi/seeding.hpp"

namespace uavaoi {

struct DimensionError : Error {
  using Error::Error;
};

struct DivergenceError : Error {
  using Error::Error;
};

struct CheckpointError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Network
// ---------------------------------------------------------------------------

template <typename Scalar>
struct DenseLayer {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Matrix weight;  // out x in
  Vector bias;    // out
};

/// Per-parameter gradients (or optimizer moments) shaped like a network.
template <typename Scalar>
using LayerParams = std::vector<DenseLayer<Scalar>>;

/// Fully connected network: ReLU on hidden layers, linear output.
template <typename Scalar>
class QNetwork {
 public:
  using Matrix = typename DenseLayer<Scalar>::Matrix;
  using Vector = typename DenseLayer<Scalar>::Vector;

  QNetwork() = default;

  /// Zero-initialized network with the given layer sizes (input first).
  explicit QNetwork(std::vector<int> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.size() < 2) throw DimensionError("network needs at least input and output layers");
    for (int s : sizes_) {
      if (s < 1) throw DimensionError("layer sizes must be positive");
    }
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      layers_.push_back({Matrix::Zero(sizes_[l + 1], sizes_[l]), Vector::Zero(sizes_[l + 1])});
    }
  }

  /// Weights drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases zero.
  static QNetwork random(std::vector<int> sizes, Rng& rng) {
    QNetwork net(std::move(sizes));
    for (auto& layer : net.layers_) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weight.cols()));
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
          layer.weight(r, c) = static_cast<Scalar>((2.0 * uniform01(rng) - 1.0) * bound);
        }
      }
    }
    return net;
  }

  const std::vector<int>& layer_sizes() const { return sizes_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  std::vector<DenseLayer<Scalar>>& layers() { return layers_; }
  const std::vector<DenseLayer<Scalar>>& layers() const { return layers_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
  }

  /// Q-values for one observation.
  std::vector<Scalar> q_values(std::span<const Scalar> obs) const {
    if (static_cast<int>(obs.size()) != input_size()) {
      throw DimensionError("q_values: observation has " + std::to_string(obs.size()) +
                           " entries, network expects " + std::to_string(input_size()));
    }
    Vector a = Eigen::Map<const Vector>(obs.data(), static_cast<Eigen::Index>(obs.size()));
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Vector z = layers_[l].weight * a + layers_[l].bias;
      if (l + 1 < layers_.size()) z = z.cwiseMax(Scalar(0));
      a = std::move(z);
    }
    return {a.data(), a.data() + a.size()};
  }

  /// Batched forward pass; `inputs` is input_size x batch. Keeps activations
  /// in `trace` when a backward pass follows. Buffers in `trace` are reused
  /// across calls of the same shape.
  Matrix forward(const Matrix& inputs, std::vector<Matrix>* trace = nullptr) const {
    if (inputs.rows() != input_size()) throw DimensionError("forward: input rows mismatch");
    thread_local std::vector<Matrix> scratch;
    std::vector<Matrix>& acts = trace ? *trace : scratch;
    acts.resize(layers_.size() + 1);
    acts[0] = inputs;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Matrix& z = acts[l + 1];
      z.noalias() = layers_[l].weight * acts[l];
      if (l + 1 < layers_.size()) {
        z = (z.colwise() + layers_[l].bias).cwiseMax(Scalar(0));
      } else {
        z.colwise() += layers_[l].bias;
      }
    }
    return acts.back();
  }

  /// Gradients of sum(d_output .* output) given the trace of a forward pass.
  LayerParams<Scalar> backward(const std::vector<Matrix>& trace, const Matrix& d_output) const {
    LayerParams<Scalar> grads;
    backward(trace, d_output, grads);
    return grads;
  }

  /// Same, writing into `grads` and reusing its storage.
  void backward(const std::vector<Matrix>& trace, const Matrix& d_output, LayerParams<Scalar>& grads) const {
    thread_local std::vector<Matrix> deltas;
    grads.resize(layers_.size());
    deltas.resize(layers_.size());
    deltas.back() = d_output;
    for (std::size_t l = layers_.size(); l-- > 0;) {
      const Matrix& input = trace[l];
      const Matrix& delta = deltas[l];
      grads[l].weight.noalias() = delta * input.transpose();
      grads[l].bias.noalias() = delta.rowwise().sum();
      if (l > 0) {
        Matrix& upstream = deltas[l - 1];
        upstream.noalias() = layers_[l].weight.transpose() * delta;
        // trace[l] is the post-ReLU activation of layer l-1; zero where inactive.
        upstream = (input.array() > Scalar(0)).select(upstream, Scalar(0));
      }
    }
  }

  bool same_shape(const QNetwork& other) const { return sizes_ == other.sizes_; }

  friend bool operator==(const QNetwork& a, const QNetwork& b) {
    if (a.sizes_ != b.sizes_) return false;
    for (std::size_t l = 0; l < a.layers_.size(); ++l) {
      if (a.layers_[l].weight != b.layers_[l].weight || a.layers_[l].bias != b.layers_[l].bias) {
        return false;
      }
    }
    return true;
  }

 private:
  std::vector<int> sizes_;
  std::vector<DenseLayer<Scalar>> layers_;
};

template <typename Scalar>
LayerParams<Scalar> zeros_like(const QNetwork<Scalar>& net) {
  LayerParams<Scalar> z;
  for (const auto& l : net.layers()) {
    z.push_back({DenseLayer<Scalar>::Matrix::Zero(l.weight.rows(), l.weight.cols()),
                 DenseLayer<Scalar>::Vector::Zero(l.bias.size())});
  }
  return z;
}

/// Copies current parameters into the target network.
template <typename Scalar>
void sync_target(const QNetwork<Scalar>& net, QNetwork<Scalar>& target) {
  if (!net.same_shape(target)) throw DimensionError("sync_target: network shapes differ");
  target = net;
}

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

enum class OptimizerKind { Adam, PlainGradient };

/// Adam with bias correction; PlainGradient applies theta -= lr * grad.
template <typename Scalar>
class Optimizer {
 public:
  struct Settings {
    OptimizerKind kind = OptimizerKind::Adam;
    double learning_rate = 0.002;
    double decay_rate = 0.95;      // multiplicative, applied continuously
    double decay_steps = 10000.0;  // per this many updates
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
  };

  Optimizer() = default;
  Optimizer(const QNetwork<Scalar>& net, Settings settings)
      : settings_(settings), m_(zeros_like(net)), v_(zeros_like(net)) {}

  double current_learning_rate() const {
    return settings_.learning_rate *
           std::pow(settings_.decay_rate, static_cast<double>(steps_) / settings_.decay_steps);
  }

  std::uint64_t steps() const { return steps_; }

  void apply(QNetwork<Scalar>& net, const LayerParams<Scalar>& grads) {
    const double lr = current_learning_rate();
    ++steps_;
    auto& layers = net.layers();
    if (settings_.kind == OptimizerKind::PlainGradient) {
      for (std::size_t l = 0; l < layers.size(); ++l) {
        layers[l].weight -= static_cast<Scalar>(lr) * grads[l].weight;
        layers[l].bias -= static_cast<Scalar>(lr) * grads[l].bias;
      }
      return;
    }
    const double t = static_cast<double>(steps_);
    const Scalar b1 = static_cast<Scalar>(settings_.beta1);
    const Scalar b2 = static_cast<Scalar>(settings_.beta2);
    const Scalar step_size = static_cast<Scalar>(lr * std::sqrt(1.0 - std::pow(settings_.beta2, t)) /
                                                 (1.0 - std::pow(settings_.beta1, t)));
    // Bias correction folded into the step size; eps is added to sqrt(v) uncorrected.
    const Scalar eps = static_cast<Scalar>(settings_.epsilon);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      update(layers[l].weight, m_[l].weight, v_[l].weight, grads[l].weight, b1, b2, step_size, eps);
      update(layers[l].bias, m_[l].bias, v_[l].bias, grads[l].bias, b1, b2, step_size, eps);
    }
  }

 private:
  template <typename P, typename G>
  static void update(P& param, P& m, P& v, const G& g, Scalar b1, Scalar b2, Scalar step_size,
                     Scalar eps) {
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.cwiseProduct(g);
    param.array() -= step_size * m.array() / (v.array().sqrt() + eps);
  }

  Settings settings_;
  LayerParams<Scalar> m_;
  LayerParams<Scalar> v_;
  std::uint64_t steps_ = 0;
};

// ---------------------------------------------------------------------------
// Experience replay
// ---------------------------------------------------------------------------

template <typename Scalar>
struct Experience {
  std::vector<Scalar> obs;
  int action = 0;
  double reward = 0.0;
  std::vector<Scalar> next_obs;
  bool done = false;
  std::vector<bool> next_mask;  // valid actions in the successor state
};

/// Bounded FIFO; sampling is uniform with replacement.
template <typename Scalar>
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("replay buffer capacity must be positive");
    items_.reserve(capacity);
  }

  void push(Experience<Scalar> e) {
    if (items_.size() < capacity_) {
      items_.push_back(std::move(e));
    } else {
      items_[head_] = std::move(e);
      head_ = (head_ + 1) % capacity_;
    }
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }

  /// i-th oldest item.
  const Experience<Scalar>& at(std::size_t i) const { return items_[(head_ + i) % items_.size()]; }

  std::vector<const Experience<Scalar>*> sample(std::size_t n, Rng& rng) const {
    if (items_.empty()) throw Error("replay buffer: cannot sample from an empty buffer");
    std::vector<const Experience<Scalar>*> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(&items_[uniform_index(rng, items_.size())]);
    return out;
  }

 private:
  std::size_t capacity_;
  std::vector<Experience<Scalar>> items_;
  std::size_t head_ = 0;  // oldest item once full
};

// ---------------------------------------------------------------------------
// Action selection and targets
// ---------------------------------------------------------------------------

struct TrainConfig {
  int episodes = 20000;
  int batch_size = 200;
  int replay_capacity = 40000;
  double eps_init = 0.9;
  double eps_decrement = 0.0001;
  double eps_min = 0.0;
  int target_sync_period = 300;
  double learning_rate = 0.002;
  double lr_decay_rate = 0.95;
  double lr_decay_steps = 10000.0;
  std::vector<int> hidden = {200, 256};
  double value_scale = 100.0;  // network output is Q / value_scale
  int eval_period = 1;         // >0: greedy rollout every eval_period episodes, keep the best network
  int restarts = 1;            // independent trainings; the best greedy return wins
  std::uint64_t seed = 0;

  void validate() const {
    if (episodes < 1 || batch_size < 1 || replay_capacity < 1 || target_sync_period < 1) {
      throw ConfigError("train: episodes, batch_size, replay_capacity, target_sync_period must be >= 1");
    }
    if (!(eps_init >= 0.0 && eps_init <= 1.0)) throw ConfigError("train: eps_init must be in [0, 1]");
    if (!(eps_decrement >= 0.0 && eps_min >= 0.0 && eps_min <= eps_init)) {
      throw ConfigError("train: eps_decrement >= 0 and 0 <= eps_min <= eps_init required");
    }
    if (!(value_scale > 0.0)) throw ConfigError("train: value_scale must be > 0");
    if (eval_period < 0) throw ConfigError("train: eval_period must be >= 0");
    if (restarts < 1) throw ConfigError("train: restarts must be >= 1");
    if (!(learning_rate > 0.0 && lr_decay_rate > 0.0 && lr_decay_steps > 0.0)) {
      throw ConfigError("train: learning-rate parameters must be > 0");
    }
    for (int h : hidden) {
      if (h < 1) throw ConfigError("train: hidden layer sizes must be >= 1");
    }
  }
};

inline double epsilon_at(std::uint64_t step, const TrainConfig& cfg) {
  return std::max(cfg.eps_min, cfg.eps_init - static_cast<double>(step) * cfg.eps_decrement);
}

/// Masked argmax; ties go to the lowest index. Returns -1 when nothing is valid.
template <typename Scalar>
int masked_argmax(std::span<const Scalar> q, const std::vector<bool>& mask) {
  int best = -1;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (!mask[i]) continue;
    if (best < 0 || q[i] > q[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

/// Masked epsilon-greedy. The random branch is uniform over valid actions.
template <typename Scalar>
int select_action(std::span<const Scalar> q, const std::vector<bool>& mask, double epsilon,
                  Rng& rng) {
  std::vector<int> valid;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) valid.push_back(static_cast<int>(i));
  }
  if (valid.empty()) throw InvalidActionError("select_action: no valid action");
  if (epsilon > 0.0 && uniform01(rng) < epsilon) {
    return valid[uniform_index(rng, valid.size())];
  }
  return masked_argmax(q, mask);
}

/// Bootstrap targets r + max_{a valid} Q_target(s', a), or r for terminal items.
template <typename Scalar>
std::vector<double> td_targets(std::span<const Experience<Scalar>* const> batch,
                               const QNetwork<Scalar>& target_net) {
  using Matrix = typename QNetwork<Scalar>::Matrix;
  const auto n = static_cast<Eigen::Index>(batch.size());
  Matrix next(target_net.input_size(), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& e = *batch[static_cast<std::size_t>(j)];
    for (int i = 0; i < target_net.input_size(); ++i) next(i, j) = e.next_obs[static_cast<std::size_t>(i)];
  }
  const Matrix q = target_net.forward(next);
  std::vector<double> y(batch.size());
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& e = *batch[static_cast<std::size_t>(j)];
    y[static_cast<std::size_t>(j)] = e.reward;
    if (e.done) continue;
    double best = -std::numeric_limits<double>::infinity();
    for (Eigen::Index a = 0; a < q.rows(); ++a) {
      if (e.next_mask[static_cast<std::size_t>(a)]) best = std::max(best, static_cast<double>(q(a, j)));
    }
    y[static_cast<std::size_t>(j)] += best;
  }
  return y;
}

/// Mean squared TD error over the batch (taken actions only); gradients go
/// to `grads`, whose storage is reused.
template <typename Scalar>
double td_loss_and_gradient(const QNetwork<Scalar>& net, std::span<const Experience<Scalar>* const> batch,
                            std::span<const double> targets, LayerParams<Scalar>& grads) {
  using Matrix = typename QNetwork<Scalar>::Matrix;
  if (batch.size() != targets.size() || batch.empty()) {
    throw DimensionError("gradient_step: batch and targets must be non-empty and aligned");
  }
  const auto n = static_cast<Eigen::Index>(batch.size());
  Matrix inputs(net.input_size(), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& e = *batch[static_cast<std::size_t>(j)];
    if (static_cast<int>(e.obs.size()) != net.input_size()) {
      throw DimensionError("gradient_step: observation size mismatch");
    }
    for (int i = 0; i < net.input_size(); ++i) inputs(i, j) = e.obs[static_cast<std::size_t>(i)];
  }
  thread_local std::vector<Matrix> trace;
  const Matrix q = net.forward(inputs, &trace);
  Matrix d_out = Matrix::Zero(q.rows(), q.cols());
  double loss = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto a = static_cast<Eigen::Index>(batch[static_cast<std::size_t>(j)]->action);
    const double err = static_cast<double>(q(a, j)) - targets[static_cast<std::size_t>(j)];
    loss += err * err;
    d_out(a, j) = static_cast<Scalar>(2.0 * err / static_cast<double>(n));
  }
  loss /= static_cast<double>(n);
  net.backward(trace, d_out, grads);
  return loss;
}

template <typename Scalar>
std::pair<double, LayerParams<Scalar>> td_loss_and_gradient(
    const QNetwork<Scalar>& net, std::span<const Experience<Scalar>* const> batch,
    std::span<const double> targets) {
  LayerParams<Scalar> grads;
  const double loss = td_loss_and_gradient(net, batch, targets, grads);
  return {loss, std::move(grads)};
}

/// One optimizer update on the batch; returns the pre-update loss.
template <typename Scalar>
double gradient_step(QNetwork<Scalar>& net, Optimizer<Scalar>& opt,
                     std::span<const Experience<Scalar>* const> batch, std::span<const double> targets) {
  thread_local LayerParams<Scalar> grads;
  const double loss = td_loss_and_gradient(net, batch, targets, grads);
  if (!std::isfinite(loss)) {
    throw DivergenceError("gradient_step: non-finite loss after " + std::to_string(opt.steps()) +
                          " updates");
  }
  opt.apply(net, grads);
  return loss;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

using Real = float;
using Network = QNetwork<Real>;

struct EpisodeLog {
  int episode = 0;
  int steps = 0;
  double total_return = 0.0;
  double avg_aoi = 0.0;
  TerminalKind kind = TerminalKind::Running;
  double epsilon = 0.0;
  double learning_rate = 0.0;
  double mean_loss = 0.0;  // over the gradient steps of this episode, 0 if none
};

struct TrainResult {
  Network net;  // final network, or the best evaluated one when eval_period > 0
  std::vector<EpisodeLog> log;
  int best_episode = -1;      // episode after which `net` was captured
  double best_return = 0.0;   // its greedy return
  int best_restart = 0;       // restart that produced `net`
};

inline std::vector<int> network_layout(const EpisodeConfig& env, const TrainConfig& cfg) {
  std::vector<int> sizes{env.observation_size()};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(env.num_actions());
  return sizes;
}

inline Optimizer<Real>::Settings optimizer_settings(const TrainConfig& cfg) {
  Optimizer<Real>::Settings s;
  s.learning_rate = cfg.learning_rate;
  s.decay_rate = cfg.lr_decay_rate;
  s.decay_steps = cfg.lr_decay_steps;
  return s;
}

/// Greedy action from a network, restricted to valid actions.
inline Action greedy_action(const Network& net, const SystemState& s, const EpisodeConfig& env) {
  const auto obs = encode_observation<Real>(s, env);
  const auto q = net.q_values(obs);
  return action_from_index(masked_argmax<Real>(q, action_mask(s, env)), env.num_sensors());
}

inline EpisodeRecord greedy_rollout(const Network& net, const EpisodeConfig& env) {
  return rollout([&](const SystemState& s) { return greedy_action(net, s, env); }, env);
}

namespace detail {

template <typename Observer>
TrainResult train_once(const EpisodeConfig& env, const TrainConfig& cfg, std::uint64_t seed,
                       int episode_offset, Observer& on_episode) {
  Rng init_rng(derive_seed(seed, {kStreamInit}));
  Rng explore_rng(derive_seed(seed, {kStreamExplore}));
  Rng replay_rng(derive_seed(seed, {kStreamReplay}));

  TrainResult result{Network::random(network_layout(env, cfg), init_rng), {}};
  Network& net = result.net;
  Network target = net;
  Network best = net;
  Optimizer<Real> opt(net, optimizer_settings(cfg));
  ReplayBuffer<Real> replay(static_cast<std::size_t>(cfg.replay_capacity));
  const double radius = env.radius();
  const auto batch_size = static_cast<std::size_t>(cfg.batch_size);

  std::uint64_t env_steps = 0;
  for (int episode = 0; episode < cfg.episodes; ++episode) {
    EpisodeLog log;
    log.episode = episode_offset + episode;
    SystemState s = reset(env);
    std::vector<SystemState> visited{s};
    std::vector<Real> obs = encode_observation<Real>(s, env);
    std::vector<bool> mask = action_mask(s, env);
    std::vector<double> rewards;
    double loss_sum = 0.0;
    int loss_count = 0;
    while (true) {
      const double eps = epsilon_at(env_steps, cfg);
      int a;
      if (eps > 0.0 && uniform01(explore_rng) < eps) {
        a = select_action<Real>({}, mask, 1.0, explore_rng);
      } else {
        const auto q = net.q_values(obs);
        a = masked_argmax<Real>(q, mask);
      }
      StepOutcome out = step(s, action_from_index(a, env.num_sensors()), env, radius);
      std::vector<Real> next_obs = encode_observation<Real>(out.next, env);
      std::vector<bool> next_mask = out.terminal ? std::vector<bool>(mask.size(), false)
                                                 : action_mask(out.next, env);
      replay.push({obs, a, out.reward / cfg.value_scale, next_obs, out.terminal, next_mask});
      ++env_steps;
      ++log.steps;
      rewards.push_back(out.reward);

      if (replay.size() >= batch_size) {
        const auto batch = replay.sample(batch_size, replay_rng);
        const auto targets = td_targets<Real>(batch, target);
        loss_sum += gradient_step<Real>(net, opt, batch, targets);
        ++loss_count;
      }
      if (env_steps % static_cast<std::uint64_t>(cfg.target_sync_period) == 0) sync_target(net, target);

      s = std::move(out.next);
      visited.push_back(s);
      if (out.terminal) {
        log.kind = out.kind;
        break;
      }
      obs = std::move(next_obs);
      mask = std::move(next_mask);
    }
    log.total_return = episode_return(rewards);
    log.avg_aoi = weighted_average_aoi(visited, env);
    log.epsilon = epsilon_at(env_steps, cfg);
    log.learning_rate = opt.current_learning_rate();
    log.mean_loss = loss_count ? loss_sum / loss_count : 0.0;
    on_episode(log);
    result.log.push_back(log);

    const bool last = episode + 1 == cfg.episodes;
    if (cfg.eval_period > 0 && ((episode + 1) % cfg.eval_period == 0 || last)) {
      const double g = greedy_rollout(net, env).total_return;
      if (result.best_episode < 0 || g > result.best_return) {
        result.best_return = g;
        result.best_episode = episode;
        best = net;
      }
    }
  }
  if (cfg.eval_period > 0) {
    net = std::move(best);
  } else {
    result.best_episode = cfg.episodes - 1;
    result.best_return = greedy_rollout(net, env).total_return;
  }
  return result;
}

}  // namespace detail

/// Deep Q-learning with experience replay and a target network. One master
/// seed (cfg.seed) derives the initialization, exploration and replay streams.
/// With restarts > 1, further trainings use derived seeds and the network
/// with the best greedy return is kept. The log holds every restart in order,
/// numbered consecutively; best_episode is local to best_restart.
template <typename Observer>
TrainResult train(const EpisodeConfig& env, const TrainConfig& cfg, Observer&& on_episode) {
  env.validate();
  cfg.validate();
  TrainResult result;
  for (int r = 0; r < cfg.restarts; ++r) {
    const std::uint64_t seed =
        r == 0 ? cfg.seed : derive_seed(cfg.seed, {kStreamRestart, static_cast<std::uint64_t>(r)});
    TrainResult run = detail::train_once(env, cfg, seed, r * cfg.episodes, on_episode);
    std::vector<EpisodeLog> log = std::move(result.log);
    log.insert(log.end(), run.log.begin(), run.log.end());
    if (r == 0 || run.best_return > result.best_return) {
      result = std::move(run);
      result.best_restart = r;
    }
    result.log = std::move(log);
  }
  return result;
}

inline TrainResult train(const EpisodeConfig& env, const TrainConfig& cfg) {
  return train(env, cfg, [](const EpisodeLog&) {});
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------
//
// Little-endian binary layout:
//   bytes 0..7   magic "UAVQNET1"
//   u32          format version (1)
//   u32          number of layer sizes L (input, hidden..., output)
//   u32 x L      layer sizes
//   for each dense layer l = 0..L-2:
//     f64 x (out*in)  weight matrix, row-major (row = output unit)
//     f64 x out       bias vector
// Values are widened to f64, so float networks round-trip bit-exactly.

inline constexpr char kCheckpointMagic[8] = {'U', 'A', 'V', 'Q', 'N', 'E', 'T', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;


template <typename Scalar>
void save_checkpoint(const QNetwork<Scalar>& net, std::ostream& os) {
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::write_le<std::uint32_t>(os, kCheckpointVersion);
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(net.layer_sizes().size()));
  for (int s : net.layer_sizes()) detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(s));
  for (const auto& l : net.layers()) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) {
        detail::write_le<double>(os, static_cast<double>(l.weight(r, c)));
      }
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) detail::write_le<double>(os, static_cast<double>(l.bias(r)));
  }
  if (!os) throw CheckpointError("checkpoint write failed");
}

template <typename Scalar>
QNetwork<Scalar> load_checkpoint(std::istream& is) {
  char magic[sizeof(kCheckpointMagic)];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw CheckpointError("not a Q-network checkpoint (bad magic)");
  }
  const auto version = detail::read_le<std::uint32_t>(is);
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = detail::read_le<std::uint32_t>(is);
  if (count < 2 || count > 64) throw CheckpointError("implausible layer count");
  std::vector<int> sizes;
  for (std::uint32_t i = 0; i < count; ++i) sizes.push_back(static_cast<int>(detail::read_le<std::uint32_t>(is)));
  QNetwork<Scalar> net(sizes);
  for (auto& l : net.layers()) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) {
        l.weight(r, c) = static_cast<Scalar>(detail::read_le<double>(is));
      }
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = static_cast<Scalar>(detail::read_le<double>(is));
  }
  return net;
}

template <typename Scalar>
void save_checkpoint(const QNetwork<Scalar>& net, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw CheckpointError("cannot open " + path + " for writing");
  save_checkpoint(net, os);
}

template <typename Scalar>
QNetwork<Scalar> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open " + path);
  return load_checkpoint<Scalar>(is);
}

}  // namespace uavaoi
