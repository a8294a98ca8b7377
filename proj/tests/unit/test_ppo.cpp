#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "passforge/error.hpp"
#include "passforge/generators.hpp"
#include "passforge/ppo.hpp"

using namespace passforge;

namespace {

// Monte Carlo return with per-step bootstrapping cut at episode ends.
std::vector<double> mc_returns(const std::vector<double>& r, const std::vector<bool>& d, double gamma, double last) {
  std::vector<double> g(r.size());
  double acc = last;
  for (std::size_t k = r.size(); k-- > 0;) {
    if (d[k]) acc = 0.0;
    acc = r[k] + gamma * acc;
    g[k] = acc;
  }
  return g;
}

// Direct sum A_t = sum_l (gamma lambda)^l delta_{t+l}, stopping after a done.
std::vector<double> gae_by_sum(const std::vector<double>& r, const std::vector<double>& v, const std::vector<bool>& d,
                               double gamma, double lambda, double last) {
  const std::size_t n = r.size();
  std::vector<double> delta(n), a(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double next = k + 1 < n ? v[k + 1] : last;
    delta[k] = r[k] + (d[k] ? 0.0 : gamma * next) - v[k];
  }
  for (std::size_t t = 0; t < n; ++t) {
    double w = 1.0;
    for (std::size_t k = t; k < n; ++k) {
      a[t] += w * delta[k];
      if (d[k]) break;
      w *= gamma * lambda;
    }
  }
  return a;
}

struct Trajectory {
  std::vector<double> rewards, values;
  std::vector<bool> dones;
};

Trajectory random_trajectory(std::uint64_t seed, int n) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Trajectory t;
  for (int i = 0; i < n; ++i) {
    t.rewards.push_back(g(rng));
    t.values.push_back(g(rng));
    t.dones.push_back(rng() % 5 == 0);
  }
  return t;
}

EnvConfig small_env() {
  EnvConfig e;
  e.q_max = 6;
  e.p_max = 8;
  e.e_max = 8;
  return e;
}

PpoConfig small_ppo() {
  PpoConfig c;
  c.rollout_steps = 64;
  c.batch_size = 32;
  c.num_envs = 2;
  c.epochs_per_update = 2;
  c.total_steps = 192;
  c.seed = 21;
  return c;
}

std::vector<BackendModel> small_pool() {
  return {synthetic_backend(Topology::Ring, 8, HeterogeneousNoise{1, 0.5, {}}),
          synthetic_backend(Topology::Line, 8, HeterogeneousNoise{2, 0.5, {}})};
}

Curriculum small_curriculum() { return {3, 5, 1.0, 2.0}; }

}  // namespace

TEST(Gae, SingleTerminalStep) {
  const auto r = compute_gae(std::vector<double>{2.0}, std::vector<double>{0.5}, {true}, 0.99, 0.95, 7.0);
  EXPECT_DOUBLE_EQ(r.advantages[0], 1.5);
  EXPECT_DOUBLE_EQ(r.returns[0], 2.0);
}

TEST(Gae, LambdaOneIsMonteCarlo) {
  const auto t = random_trajectory(1, 40);
  const auto r = compute_gae(t.rewards, t.values, t.dones, 0.9, 1.0, 0.3);
  const auto g = mc_returns(t.rewards, t.dones, 0.9, 0.3);
  for (std::size_t k = 0; k < g.size(); ++k) EXPECT_NEAR(r.returns[k], g[k], 1e-10);
}

TEST(Gae, LambdaZeroIsTemporalDifference) {
  const auto t = random_trajectory(2, 40);
  const auto r = compute_gae(t.rewards, t.values, t.dones, 0.9, 0.0, -0.4);
  for (std::size_t k = 0; k < t.rewards.size(); ++k) {
    const double next = k + 1 < t.rewards.size() ? t.values[k + 1] : -0.4;
    EXPECT_NEAR(r.advantages[k], t.rewards[k] + (t.dones[k] ? 0.0 : 0.9 * next) - t.values[k], 1e-12);
  }
}

TEST(Gae, MatchesDirectSumOnGrid) {
  const auto t = random_trajectory(3, 30);
  for (double gamma : {0.0, 0.5, 0.95, 1.0}) {
    for (double lambda : {0.0, 0.5, 0.95, 1.0}) {
      const auto r = compute_gae(t.rewards, t.values, t.dones, gamma, lambda, 1.1);
      const auto a = gae_by_sum(t.rewards, t.values, t.dones, gamma, lambda, 1.1);
      for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(r.advantages[k], a[k], 1e-10);
    }
  }
}

TEST(Gae, RejectsRaggedInput) {
  EXPECT_THROW(compute_gae(std::vector<double>{1.0}, std::vector<double>{}, {false}, 0.9, 0.9), ValidationError);
}

TEST(Surrogate, ClipsLargeRatio) {
  EXPECT_DOUBLE_EQ(clipped_surrogate(2.0, 1.0, 0.2), 1.2);
  EXPECT_DOUBLE_EQ(clipped_surrogate(2.0, -1.0, 0.2), -2.0);
  EXPECT_DOUBLE_EQ(clipped_surrogate(0.5, 1.0, 0.2), 0.5);
  EXPECT_DOUBLE_EQ(clipped_surrogate(0.5, -1.0, 0.2), -0.8);
}

TEST(Surrogate, UnitRatioIsMeanAdvantage) {
  CompilationEnv env(small_env());
  const auto obs = env.reset(random_circuit(4, 8, 1), small_pool()[0]);
  const auto shape = PolicyShape::for_env(small_env());
  const auto params = init_params<float>(shape, 3);
  const auto mask = env.action_mask();
  const auto out = evaluate_policy(params, shape, obs, mask);
  PpoBatch b;
  const std::vector<double> adv{0.3, -1.2, 2.0};
  for (double a : adv) {
    b.observations.push_back(&obs);
    b.masks.push_back(mask);
    b.actions.push_back(greedy_action(out, mask));
    b.old_log_probs.push_back(std::log(out.probs[static_cast<std::size_t>(b.actions.back())]));
    b.advantages.push_back(a);
    b.returns.push_back(out.value);
  }
  const auto loss = ppo_loss<float>(params, shape, b, PpoConfig{}, PolicyMode::Eval, 0, nullptr);
  EXPECT_NEAR(loss.policy, -(0.3 - 1.2 + 2.0) / 3.0, 1e-6);
  EXPECT_NEAR(loss.value, 0.0, 1e-10);
  EXPECT_NEAR(loss.clip_fraction, 0.0, 1e-12);
}

TEST(Ppo, BanditLossDecreases) {
  // One state, action 4 pays off: the loss on a fixed batch must fall.
  CompilationEnv env(small_env());
  const auto obs = env.reset(random_circuit(4, 8, 2), small_pool()[0]);
  const auto shape = PolicyShape::for_env(small_env());
  auto params = init_params<float>(shape, 9);
  ActionMask mask;
  for (int a = 0; a < 8; ++a) mask.set(static_cast<std::size_t>(a));
  const auto out = evaluate_policy(params, shape, obs, mask);
  PpoBatch b;
  for (int a = 0; a < 8; ++a) {
    b.observations.push_back(&obs);
    b.masks.push_back(mask);
    b.actions.push_back(a);
    b.old_log_probs.push_back(std::log(out.probs[static_cast<std::size_t>(a)]));
    b.advantages.push_back(a == 4 ? 1.0 : -1.0 / 7.0);
    b.returns.push_back(a == 4 ? 1.0 : 0.0);
  }
  PpoConfig cfg;
  cfg.clip_epsilon = 10.0;  // keep every sample on the unclipped branch
  Adam adam(params, 1e-3);
  const double first = ppo_loss<float>(params, shape, b, cfg, PolicyMode::Eval, 0, nullptr).total;
  for (int k = 0; k < 50; ++k) {
    PolicyParams g;
    ppo_loss<float>(params, shape, b, cfg, PolicyMode::Eval, 0, &g);
    adam.step(params, std::move(g), cfg.max_grad_norm);
  }
  const double last = ppo_loss<float>(params, shape, b, cfg, PolicyMode::Eval, 0, nullptr).total;
  EXPECT_LT(last, first);
  EXPECT_GT(evaluate_policy(params, shape, obs, mask).probs[4], out.probs[4]);
}

TEST(Ppo, ConfigValidation) {
  PpoConfig c = small_ppo();
  c.batch_size = 30;
  EXPECT_THROW(c.validate(), ValidationError);
  c = small_ppo();
  c.num_envs = 3;
  EXPECT_THROW(c.validate(), ValidationError);
  c = small_ppo();
  c.total_steps = 10;
  EXPECT_THROW(c.validate(), ValidationError);
  EXPECT_NO_THROW(small_ppo().validate());
}

TEST(Ppo, TrainingIsDeterministic) {
  const auto shape = PolicyShape::for_env(small_env());
  std::vector<int> checkpoints;
  TrainHooks hooks;
  hooks.on_checkpoint = [&](int u, const PolicyParams&) { checkpoints.push_back(u); };
  auto cfg = small_ppo();
  cfg.checkpoint_every = 2;
  const auto a = train(cfg, small_env(), small_pool(), small_curriculum(), shape, hooks);
  const auto b = train(cfg, small_env(), small_pool(), small_curriculum(), shape);
  ASSERT_EQ(a.log.size(), 3u);
  EXPECT_EQ(static_cast<long>(a.log.size()), cfg.total_steps / cfg.rollout_steps);
  for (std::size_t k = 0; k < a.log.size(); ++k) {
    EXPECT_EQ(train_log_csv(a.log[k]), train_log_csv(b.log[k]));
    EXPECT_EQ(a.log[k].env_steps, static_cast<long>(k + 1) * cfg.rollout_steps);
    EXPECT_TRUE(std::isfinite(a.log[k].policy_loss));
  }
  EXPECT_EQ(a.params.policy_head.w, b.params.policy_head.w);
  EXPECT_EQ(checkpoints, (std::vector<int>{2, 3}));
  EXPECT_EQ(train_log_header().find("update,env_steps"), 0u);
}

TEST(Ppo, RejectsMismatchedShapeAndCurriculum) {
  auto shape = PolicyShape::for_env(small_env());
  auto bad = shape;
  bad.pre_in += 1;
  EXPECT_THROW(train(small_ppo(), small_env(), small_pool(), small_curriculum(), bad), ValidationError);
  EXPECT_THROW(train(small_ppo(), small_env(), small_pool(), Curriculum{3, 7, 1.0, 2.0}, shape), ValidationError);
  EXPECT_THROW(train(small_ppo(), small_env(), {}, small_curriculum(), shape), ValidationError);
}

TEST(Inference, DeterministicAndMaskValid) {
  const auto shape = PolicyShape::for_env(small_env());
  const auto params = init_params<float>(shape, 31);
  const auto b = small_pool()[1];
  const auto c = random_circuit(5, 10, 6);
  const auto r1 = infer_pipeline(params, shape, c, b, small_env());
  const auto r2 = infer_pipeline(params, shape, c, b, small_env());
  EXPECT_EQ(r1.result.trace, r2.result.trace);
  EXPECT_EQ(r1.result.circuit, r2.result.circuit);
  EXPECT_GT(r1.inference_seconds, 0.0);
  EXPECT_LE(r1.inference_seconds, r1.result.compile_seconds);
  CompilationEnv env(small_env());
  env.reset(c, b);
  for (int a : r1.result.trace) {
    ASSERT_TRUE(env.action_mask().test(static_cast<std::size_t>(a)));
    env.step(a);
  }
  EXPECT_TRUE(env.done());
}
