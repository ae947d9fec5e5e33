#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "uavaoi/dqn.hpp"
#include "uavaoi/presets.hpp"

namespace uavaoi {
namespace {

using NetD = QNetwork<double>;
using MatD = NetD::Matrix;

NetD hand_built() {
  NetD net({2, 2, 2});
  auto& l = net.layers();
  l[0].weight << 1.0, -1.0, 0.5, 2.0;
  l[0].bias << 0.0, -1.0;
  l[1].weight << 1.0, 1.0, -2.0, 0.5;
  l[1].bias << 0.25, 0.0;
  return net;
}

TEST(QNetwork, HandBuiltForward) {
  const NetD net = hand_built();
  // hidden = relu([1*1 - 1*2, 0.5*1 + 2*2 - 1]) = [0, 3.5]
  const std::vector<double> obs{1.0, 2.0};
  const auto q = net.q_values(obs);
  EXPECT_DOUBLE_EQ(q[0], 3.75);
  EXPECT_DOUBLE_EQ(q[1], 1.75);
  MatD in(2, 1);
  in << 1.0, 2.0;
  const MatD out = net.forward(in);
  EXPECT_DOUBLE_EQ(out(0, 0), 3.75);
  EXPECT_DOUBLE_EQ(out(1, 0), 1.75);
}

TEST(QNetwork, ZeroNetworkOutputsZero) {
  const NetD net({5, 7, 3});
  const auto q = net.q_values(std::vector<double>{1, 2, 3, 4, 5});
  for (double v : q) EXPECT_EQ(v, 0.0);
}

TEST(QNetwork, RejectsWrongObservationSize) {
  const NetD net({3, 4, 2});
  EXPECT_THROW(net.q_values(std::vector<double>{1, 2}), DimensionError);
  EXPECT_THROW(NetD({3}), DimensionError);
}

TEST(QNetwork, RandomInitWithinFanInBound) {
  Rng rng(3);
  const auto net = NetD::random({7, 200, 256, 15}, rng);
  ASSERT_EQ(net.layers().size(), 3u);
  for (const auto& l : net.layers()) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.weight.cols()));
    EXPECT_LE(l.weight.cwiseAbs().maxCoeff(), bound);
    EXPECT_GT(l.weight.cwiseAbs().maxCoeff(), 0.9 * bound);
    EXPECT_EQ(l.bias.cwiseAbs().maxCoeff(), 0.0);
  }
  EXPECT_EQ(net.parameter_count(), 7u * 200 + 200 + 200 * 256 + 256 + 256 * 15 + 15);
}

std::vector<Experience<double>> random_batch(int in, int out, int n, Rng& rng) {
  std::vector<Experience<double>> batch;
  for (int j = 0; j < n; ++j) {
    Experience<double> e;
    for (int i = 0; i < in; ++i) e.obs.push_back(2.0 * uniform01(rng) - 1.0);
    e.action = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(out)));
    batch.push_back(e);
  }
  return batch;
}

std::vector<const Experience<double>*> pointers(const std::vector<Experience<double>>& v) {
  std::vector<const Experience<double>*> out;
  for (const auto& e : v) out.push_back(&e);
  return out;
}

TEST(Gradient, MatchesFiniteDifferences) {
  Rng rng(11);
  int checked = 0;
  for (int probe = 0; probe < 100; ++probe) {
    const int in = 2 + static_cast<int>(uniform_index(rng, 4));
    const int hidden = 2 + static_cast<int>(uniform_index(rng, 5));
    const int out = 2 + static_cast<int>(uniform_index(rng, 4));
    NetD net = NetD::random({in, hidden, hidden + 1, out}, rng);
    for (auto& l : net.layers()) {
      for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = 0.2 * (2.0 * uniform01(rng) - 1.0);
    }
    const auto batch_items = random_batch(in, out, 3, rng);
    const auto batch = pointers(batch_items);
    std::vector<double> targets;
    for (int j = 0; j < 3; ++j) targets.push_back(2.0 * uniform01(rng) - 1.0);
    const auto [loss, grads] = td_loss_and_gradient<double>(net, batch, targets);

    // Probe one random weight and one random bias per layer.
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
      auto& layer = net.layers()[l];
      const auto r = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::uint64_t>(layer.weight.rows())));
      const auto c = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::uint64_t>(layer.weight.cols())));
      for (int which = 0; which < 2; ++which) {
        double& p = which == 0 ? layer.weight(r, c) : layer.bias(r);
        const double analytic = which == 0 ? grads[l].weight(r, c) : grads[l].bias(r);
        const double h = 1e-6;
        const double saved = p;
        p = saved + h;
        const double up = td_loss_and_gradient<double>(net, batch, targets).first;
        p = saved - h;
        const double down = td_loss_and_gradient<double>(net, batch, targets).first;
        p = saved;
        const double numeric = (up - down) / (2 * h);
        EXPECT_NEAR(analytic, numeric, 1e-4 * std::max(1.0, std::abs(numeric)))
            << "probe " << probe << " layer " << l;
        ++checked;
      }
    }
  }
  EXPECT_GE(checked, 100);
}

TEST(Gradient, ScalarNetworkAnalytic) {
  // 1 -> 1 linear map, input 1: loss (w - y)^2, gradient 2 (w - y).
  NetD net({1, 1});
  net.layers()[0].weight(0, 0) = 0.7;
  Experience<double> e;
  e.obs = {1.0};
  e.action = 0;
  const std::vector<const Experience<double>*> batch{&e};
  const std::vector<double> y{-0.3};
  const auto [loss, grads] = td_loss_and_gradient<double>(net, batch, y);
  EXPECT_DOUBLE_EQ(loss, 1.0);
  EXPECT_DOUBLE_EQ(grads[0].weight(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(grads[0].bias(0), 2.0);
}

TEST(Gradient, ZeroLossWhenTargetsMatch) {
  Rng rng(4);
  const NetD net = NetD::random({3, 6, 4}, rng);
  const auto items = random_batch(3, 4, 5, rng);
  const auto batch = pointers(items);
  std::vector<double> y;
  for (const auto* e : batch) y.push_back(net.q_values(e->obs)[static_cast<std::size_t>(e->action)]);
  const auto [loss, grads] = td_loss_and_gradient<double>(net, batch, y);
  EXPECT_EQ(loss, 0.0);
  for (const auto& g : grads) {
    EXPECT_EQ(g.weight.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(g.bias.cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(Gradient, LossDecreasesOnFixedRegression) {
  Rng rng(8);
  NetD net = NetD::random({3, 16, 2}, rng);
  const auto items = random_batch(3, 2, 16, rng);
  const auto batch = pointers(items);
  std::vector<double> y;
  for (const auto* e : batch) y.push_back(e->obs[0] - 0.5 * e->obs[1]);
  Optimizer<double>::Settings s;
  s.kind = OptimizerKind::PlainGradient;
  s.learning_rate = 0.01;
  Optimizer<double> opt(net, s);
  double prev = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 100; ++i) {
    const double loss = gradient_step<double>(net, opt, batch, y);
    EXPECT_LE(loss, prev + 1e-12) << "step " << i;
    prev = loss;
  }
  EXPECT_LT(prev, td_loss_and_gradient<double>(NetD::random({3, 16, 2}, rng), batch, y).first);
}

TEST(Gradient, AdamReducesLoss) {
  Rng rng(9);
  NetD net = NetD::random({3, 16, 2}, rng);
  const auto items = random_batch(3, 2, 32, rng);
  const auto batch = pointers(items);
  std::vector<double> y;
  for (const auto* e : batch) y.push_back(std::sin(e->obs[0]) + e->obs[2]);
  Optimizer<double> opt(net, {});
  const double first = gradient_step<double>(net, opt, batch, y);
  double last = first;
  for (int i = 0; i < 500; ++i) last = gradient_step<double>(net, opt, batch, y);
  EXPECT_LT(last, 0.1 * first);
  EXPECT_EQ(opt.steps(), 501u);
}

TEST(Gradient, DivergenceIsReported) {
  NetD net({1, 1});
  Experience<double> e;
  e.obs = {1.0};
  const std::vector<const Experience<double>*> batch{&e};
  const std::vector<double> y{std::numeric_limits<double>::infinity()};
  Optimizer<double> opt(net, {});
  EXPECT_THROW(gradient_step<double>(net, opt, batch, y), DivergenceError);
}

TEST(Optimizer, LearningRateDecaysContinuously) {
  NetD net({1, 1});
  Optimizer<double> opt(net, {});
  EXPECT_DOUBLE_EQ(opt.current_learning_rate(), 0.002);
  Experience<double> e;
  e.obs = {1.0};
  const std::vector<const Experience<double>*> batch{&e};
  const std::vector<double> y{1.0};
  for (int i = 0; i < 5000; ++i) gradient_step<double>(net, opt, batch, y);
  EXPECT_NEAR(opt.current_learning_rate(), 0.002 * std::pow(0.95, 0.5), 1e-15);
}

TEST(TdTargets, Examples) {
  NetD target({1, 3});
  target.layers()[0].bias << 2.0, -5.0, 1.0;
  Experience<double> done;
  done.obs = done.next_obs = {0.0};
  done.reward = -0.8;
  done.done = true;
  Experience<double> live = done;
  live.reward = -1.0;
  live.done = false;
  live.next_mask = {true, true, true};
  Experience<double> masked = live;
  masked.next_mask = {false, true, true};  // best valid is 1.0
  const std::vector<const Experience<double>*> batch{&done, &live, &masked};
  const auto y = td_targets<double>(batch, target);
  EXPECT_DOUBLE_EQ(y[0], -0.8);
  EXPECT_DOUBLE_EQ(y[1], 1.0);
  EXPECT_DOUBLE_EQ(y[2], 0.0);

  const NetD zero({1, 3});
  EXPECT_DOUBLE_EQ(td_targets<double>(batch, zero)[1], -1.0);
}

TEST(SelectAction, GreedyAndTies) {
  Rng rng(1);
  const std::vector<double> q{1.0, 5.0, 3.0};
  EXPECT_EQ(select_action<double>(q, {true, true, true}, 0.0, rng), 1);
  EXPECT_EQ(select_action<double>(q, {true, false, true}, 0.0, rng), 2);
  const std::vector<double> tie{4.0, 4.0, 4.0};
  EXPECT_EQ(select_action<double>(tie, {true, true, true}, 0.0, rng), 0);
  EXPECT_EQ(select_action<double>(tie, {false, true, true}, 0.0, rng), 1);
  EXPECT_THROW(select_action<double>(q, {false, false, false}, 0.0, rng), InvalidActionError);
}

TEST(SelectAction, FullExplorationIsUniformOverValid) {
  Rng rng(2);
  const std::vector<double> q{0.0, 100.0, 0.0};
  const std::vector<bool> mask{true, false, true};
  int zeros = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const int a = select_action<double>(q, mask, 1.0, rng);
    ASSERT_NE(a, 1);
    zeros += a == 0;
  }
  EXPECT_NEAR(static_cast<double>(zeros) / n, 0.5, 0.02);
}

TEST(Epsilon, LinearDecayToZero) {
  const TrainConfig cfg;
  EXPECT_DOUBLE_EQ(epsilon_at(0, cfg), 0.9);
  EXPECT_NEAR(epsilon_at(4500, cfg), 0.45, 1e-12);
  EXPECT_DOUBLE_EQ(epsilon_at(9000, cfg), 0.0);
  EXPECT_DOUBLE_EQ(epsilon_at(20000, cfg), 0.0);
}

TEST(Replay, CapacityAndFifoEviction) {
  ReplayBuffer<float> buf(3);
  for (int i = 0; i < 5; ++i) {
    Experience<float> e;
    e.action = i;
    buf.push(e);
    EXPECT_EQ(buf.size(), static_cast<std::size_t>(std::min(i + 1, 3)));
  }
  EXPECT_EQ(buf.at(0).action, 2);
  EXPECT_EQ(buf.at(1).action, 3);
  EXPECT_EQ(buf.at(2).action, 4);
  EXPECT_THROW(ReplayBuffer<float>(0), ConfigError);
  Rng rng(1);
  EXPECT_THROW(ReplayBuffer<float>(2).sample(1, rng), Error);
}

TEST(Replay, SamplingIsUniform) {
  ReplayBuffer<float> buf(10);
  for (int i = 0; i < 10; ++i) {
    Experience<float> e;
    e.action = i;
    buf.push(e);
  }
  Rng rng(21);
  std::vector<int> counts(10, 0);
  const int draws = 100000;
  for (int k = 0; k < draws / 100; ++k) {
    for (const auto* e : buf.sample(100, rng)) ++counts[static_cast<std::size_t>(e->action)];
  }
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - draws / 10.0) * (c - draws / 10.0) / (draws / 10.0);
  EXPECT_LT(chi2, 27.88);  // 9 dof, p = 0.001
}

TEST(TargetSync, CopiesOnlyWhenCalled) {
  Rng rng(5);
  NetD net = NetD::random({2, 4, 3}, rng);
  NetD target = net;
  const NetD before = target;
  net.layers()[0].weight(0, 0) += 1.0;
  EXPECT_EQ(target, before);
  sync_target(net, target);
  EXPECT_EQ(target, net);
  sync_target(net, target);
  EXPECT_EQ(target, net);
  NetD other({2, 3});
  EXPECT_THROW(sync_target(net, other), DimensionError);
}

EpisodeConfig three_by_three() {
  EpisodeConfig c;
  c.grid.width = 3;
  c.grid.height = 3;
  c.grid.start = {1, 0};
  c.grid.stop = {1, 2};
  c.sensors = sensors_at_cells(c.grid, {{0, 1}});
  c.horizon = 5;
  c.age_cap = 5;
  c.link.radius_override = 25.0;
  return c;
}

TrainConfig small_training(int episodes) {
  TrainConfig tc;
  tc.episodes = episodes;
  tc.batch_size = 8;
  tc.replay_capacity = 100;
  tc.hidden = {16, 16};
  tc.seed = 3;
  return tc;
}

TEST(Train, SingleEpisodeSmoke) {
  const auto env = three_by_three();
  const auto res = train(env, small_training(1));
  ASSERT_EQ(res.log.size(), 1u);
  EXPECT_GE(res.log[0].steps, 1);
  EXPECT_NE(res.log[0].kind, TerminalKind::Running);
  EXPECT_EQ(res.net.layer_sizes(), (std::vector<int>{5, 16, 16, 10}));
}

TEST(Train, FixedSeedIsBitReproducible) {
  const auto env = three_by_three();
  const auto a = train(env, small_training(30));
  const auto b = train(env, small_training(30));
  EXPECT_EQ(a.net, b.net);
  ASSERT_EQ(a.log.size(), b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    EXPECT_EQ(a.log[i].total_return, b.log[i].total_return);
    EXPECT_EQ(a.log[i].mean_loss, b.log[i].mean_loss);
    EXPECT_EQ(a.log[i].steps, b.log[i].steps);
  }
  auto tc = small_training(30);
  tc.seed = 4;
  EXPECT_FALSE(train(env, tc).net == a.net);
}

TEST(Train, BestSnapshotIsAtLeastAsGoodAsFinal) {
  const auto env = three_by_three();
  auto tc = small_training(40);
  tc.eval_period = 1;
  const auto res = train(env, tc);
  EXPECT_DOUBLE_EQ(greedy_rollout(res.net, env).total_return, res.best_return);
  tc.eval_period = 0;
  const auto plain = train(env, tc);
  EXPECT_GE(res.best_return, greedy_rollout(plain.net, env).total_return);
}

TEST(Train, RestartsKeepTheBestRun) {
  const auto env = three_by_three();
  auto tc = small_training(20);
  const auto first = train(env, tc);
  tc.restarts = 3;
  const auto res = train(env, tc);
  ASSERT_EQ(res.log.size(), 60u);
  for (std::size_t i = 0; i < res.log.size(); ++i) EXPECT_EQ(res.log[i].episode, static_cast<int>(i));
  // Restart 0 is the single-run training.
  for (std::size_t i = 0; i < first.log.size(); ++i) EXPECT_EQ(res.log[i].total_return, first.log[i].total_return);
  EXPECT_GE(res.best_return, first.best_return);
  EXPECT_EQ(greedy_rollout(res.net, env).total_return, res.best_return);
  if (res.best_restart == 0) EXPECT_EQ(res.net, first.net);
}

TEST(Train, RejectsBadConfig) {
  auto tc = small_training(1);
  tc.batch_size = 0;
  EXPECT_THROW(train(three_by_three(), tc), ConfigError);
  tc = small_training(1);
  tc.value_scale = 0.0;
  EXPECT_THROW(train(three_by_three(), tc), ConfigError);
  tc = small_training(1);
  tc.restarts = 0;
  EXPECT_THROW(train(three_by_three(), tc), ConfigError);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  Rng rng(6);
  const auto net = Network::random({5, 20, 30, 10}, rng);
  std::stringstream ss;
  save_checkpoint(net, ss);
  const auto back = load_checkpoint<Real>(ss);
  EXPECT_EQ(back, net);
}

TEST(Checkpoint, RejectsCorruptInput) {
  std::stringstream bad("NOTANET1........");
  EXPECT_THROW(load_checkpoint<Real>(bad), CheckpointError);
  Rng rng(6);
  std::stringstream ss;
  save_checkpoint(Network::random({2, 3, 2}, rng), ss);
  std::string bytes = ss.str();
  bytes.resize(bytes.size() - 5);
  std::stringstream truncated(bytes);
  EXPECT_THROW(load_checkpoint<Real>(truncated), Error);
  EXPECT_THROW(load_checkpoint<Real>(std::string("/nonexistent/qnet.bin")), Error);
}

TEST(GreedyRollout, Deterministic) {
  const auto env = tiny_reference();
  Rng rng(12);
  const auto net = Network::random(network_layout(env, TrainConfig{}), rng);
  const auto a = greedy_rollout(net, env);
  const auto b = greedy_rollout(net, env);
  EXPECT_EQ(a.actions.size(), b.actions.size());
  EXPECT_EQ(a.states, b.states);
  EXPECT_EQ(a.total_return, b.total_return);
}

}  // namespace
}  // namespace uavaoi
