#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "srlbench/metrics.hpp"
#include "srlbench/nn.hpp"
#include "srlbench/optim.hpp"
#include "srlbench/rng.hpp"
#include "srlbench/srl.hpp"

namespace srlbench::rl {

struct PolicySpec {
    int input_dim = 0;
    std::vector<int> hidden = {64, 64};  // tanh
    int num_actions = env::NavEnv::kNumActions;
    // raw-pixel inputs go through one small conv layer first
    bool conv_trunk = false;
    int image_size = 32;
};

// Actor-critic over a shared tanh MLP body.
class PolicyNet {
public:
    PolicySpec spec;
    nn::Conv2d conv;
    nn::Mlp trunk;
    nn::Linear actor;
    nn::Linear critic;

    PolicyNet() = default;
    PolicyNet(const PolicySpec& spec, uint64_t seed);

    // states [B, input_dim] -> (action logits [B, A], values [B])
    std::pair<ad::Tensor, ad::Tensor> forward(ad::Tape* tape, const ad::Tensor& states) const;
    nn::NamedParams params() const;
};

// Minimal environment surface the PPO loop drives; lets tests plug in
// non-navigation environments (e.g. bandits).
class RlEnv {
public:
    virtual ~RlEnv() = default;
    virtual int state_dim() const = 0;
    virtual int num_actions() const = 0;
    virtual std::vector<double> reset() = 0;
    struct StepOut {
        std::vector<double> state;
        double reward = 0.0;
        bool done = false;
    };
    virtual StepOut step(int action) = 0;
};

// Navigation environment seen through a frozen state encoder.
class EncodedNavEnv : public RlEnv {
public:
    EncodedNavEnv(const srl::SrlModel& representation, env::NavConfig cfg, uint64_t seed);

    int state_dim() const override { return representation_->output_dim(); }
    int num_actions() const override { return env::NavEnv::kNumActions; }
    std::vector<double> reset() override;
    StepOut step(int action) override;

private:
    const srl::SrlModel* representation_;
    env::NavEnv env_;
    uint64_t seed_ = 0;
    uint64_t episode_counter_ = 0;
};

struct RolloutBuffer {
    int64_t horizon = 0;
    int state_dim = 0;
    std::vector<double> states;  // horizon * state_dim
    std::vector<int> actions;
    std::vector<double> log_probs;
    std::vector<double> rewards;
    std::vector<double> values;
    std::vector<uint8_t> dones;
    double bootstrap_value = 0.0;
};

struct PpoConfig {
    double clip_epsilon = 0.2;
    double gamma = 0.99;
    double gae_lambda = 0.95;
    int epochs = 4;
    int minibatch_size = 64;
    int64_t horizon = 2048;
    double entropy_coef = 0.0;
    double value_coef = 0.5;
    double learning_rate = 3e-4;
    int64_t total_timesteps = 200000;
    std::vector<int64_t> eval_checkpoints = {25000, 50000, 100000, 200000};
    int eval_episodes = 100;
    std::vector<int> policy_hidden = {64, 64};
    // scale training rewards by the running std of the discounted return,
    // as the reference PPO wrapper stack does; evaluation rewards stay raw
    bool normalize_rewards = true;

    void validate() const;
};

struct UpdateStats {
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    double clip_fraction = 0.0;
    double approx_kl = 0.0;
};

// Samples `horizon` steps from the stochastic policy, resetting episodes
// inline. `carry_state` holds the environment state across successive
// rollouts; pass an empty vector initially.
RolloutBuffer collect_rollout(const PolicyNet& policy, RlEnv& env, int64_t horizon, Rng& rng,
                              std::vector<double>& carry_state);

// delta_t = r_t + gamma V(s_t+1)(1-done_t) - V(s_t);
// A_t = delta_t + gamma lambda (1-done_t) A_t+1; returns = A + V.
void compute_gae(const RolloutBuffer& buffer, double gamma, double lambda,
                 std::vector<double>& advantages, std::vector<double>& returns);

// In-place shift/scale to mean 0, std 1.
void normalize_advantages(std::vector<double>& advantages);

// Running scale estimate for training rewards: tracks the variance of the
// discounted return and divides rewards by its std (clipped to +-10).
class ReturnScaler {
public:
    explicit ReturnScaler(double gamma) : gamma_(gamma) {}
    double scale(double reward, bool done);

private:
    double gamma_;
    double carry_ = 0.0;
    double mean_ = 0.0;
    double m2_ = 0.0;
    int64_t count_ = 0;
};

// Clipped-surrogate update over shuffled minibatches; one optimizer step per
// minibatch. Advantages must already be normalized.
UpdateStats ppo_update(PolicyNet& policy, ad::Optimizer& optimizer, const RolloutBuffer& buffer,
                       const std::vector<double>& advantages, const std::vector<double>& returns,
                       const PpoConfig& cfg, Rng& shuffle_rng);

struct TrainingCurve {
    struct Point {
        int64_t timesteps = 0;
        metrics::EvalResult eval;
    };
    std::vector<Point> points;
    uint64_t seed = 0;
    std::string method_label;
    std::string env_label;
};

// Full PPO training of a policy on top of a frozen representation, with
// greedy 100-episode evaluations at timestep 0 and each configured
// checkpoint within budget.
TrainingCurve train_rl(const srl::SrlModel& representation, const env::NavConfig& cfg,
                       const PpoConfig& ppo, uint64_t seed, PolicyNet* out_policy = nullptr);

// Greedy argmax action for one environment step.
int greedy_policy_action(const srl::SrlModel& representation, const PolicyNet& policy,
                         const env::StepResult& step);

}  // namespace srlbench::rl
