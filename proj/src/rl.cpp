#include "srlbench/rl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace srlbench::rl {

PolicyNet::PolicyNet(const PolicySpec& s, uint64_t seed) : spec(s) {
    if (spec.input_dim < 1) throw std::invalid_argument("policy: input_dim must be positive");
    if (spec.hidden.empty()) throw std::invalid_argument("policy: need at least one hidden layer");
    Rng rng(mix_seed(seed, 0x90110));
    int mlp_in = spec.input_dim;
    if (spec.conv_trunk) {
        conv = nn::Conv2d(3, 8, 3, 2, 0, rng);
        const int side = (spec.image_size - 3) / 2 + 1;
        if (side < 1) throw std::invalid_argument("policy: image too small for conv trunk");
        mlp_in = 8 * side * side;
    }
    std::vector<int> body(spec.hidden.begin(), spec.hidden.end() - 1);
    trunk = nn::Mlp(mlp_in, body, spec.hidden.back(), nn::Activation::tanh, rng);
    actor = nn::Linear(spec.hidden.back(), spec.num_actions, nn::Activation::linear, rng);
    critic = nn::Linear(spec.hidden.back(), 1, nn::Activation::linear, rng);
}

std::pair<ad::Tensor, ad::Tensor> PolicyNet::forward(ad::Tape* tape, const ad::Tensor& states) const {
    ad::Tensor x = states;
    if (spec.conv_trunk) {
        const int b = states.dim(0);
        x = ad::reshape(tape, x, {b, 3, spec.image_size, spec.image_size});
        x = ad::relu(tape, conv.forward(tape, x));
        x = ad::flatten(tape, x);
    }
    const ad::Tensor h = ad::tanh(tape, trunk.forward(tape, x));
    ad::Tensor logits = actor.forward(tape, h);
    ad::Tensor values = ad::reshape(tape, critic.forward(tape, h), {states.dim(0)});
    return {logits, values};
}

nn::NamedParams PolicyNet::params() const {
    nn::NamedParams out;
    if (spec.conv_trunk) conv.collect(out, "conv");
    trunk.collect(out, "trunk");
    actor.collect(out, "actor");
    critic.collect(out, "critic");
    return out;
}

EncodedNavEnv::EncodedNavEnv(const srl::SrlModel& representation, env::NavConfig cfg, uint64_t seed)
    : representation_(&representation),
      env_([&] {
          // ground-truth consumers never look at pixels
          if (representation.method == srl::Method::ground_truth) cfg.render_observations = false;
          return env::NavEnv(cfg);
      }()),
      seed_(seed) {}

std::vector<double> EncodedNavEnv::reset() {
    const env::StepResult sr = env_.reset(mix_seed(seed_, episode_counter_++));
    return representation_->encode_policy_input(sr);
}

EncodedNavEnv::StepOut EncodedNavEnv::step(int action) {
    const env::StepResult sr = env_.step(action);
    StepOut out;
    out.reward = sr.reward;
    out.done = sr.done;
    out.state = representation_->encode_policy_input(sr);
    return out;
}

void PpoConfig::validate() const {
    if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) {
        throw std::invalid_argument("ppo: clip epsilon must be in (0, 1)");
    }
    if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("ppo: gamma must be in (0, 1]");
    if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) {
        throw std::invalid_argument("ppo: gae lambda must be in [0, 1]");
    }
    if (epochs < 1 || minibatch_size < 1 || horizon < 1) {
        throw std::invalid_argument("ppo: epochs, minibatch size and horizon must be positive");
    }
    if (total_timesteps < 0) throw std::invalid_argument("ppo: total_timesteps must be non-negative");
    if (eval_episodes < 1) throw std::invalid_argument("ppo: eval_episodes must be positive");
}

namespace {

int sample_categorical(const std::vector<double>& probs, Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
}

}  // namespace

RolloutBuffer collect_rollout(const PolicyNet& policy, RlEnv& env, int64_t horizon, Rng& rng,
                              std::vector<double>& carry_state) {
    RolloutBuffer buf;
    buf.horizon = horizon;
    buf.state_dim = env.state_dim();
    buf.states.reserve(static_cast<size_t>(horizon * buf.state_dim));
    buf.actions.reserve(static_cast<size_t>(horizon));
    buf.log_probs.reserve(static_cast<size_t>(horizon));
    buf.rewards.reserve(static_cast<size_t>(horizon));
    buf.values.reserve(static_cast<size_t>(horizon));
    buf.dones.reserve(static_cast<size_t>(horizon));

    if (carry_state.empty()) carry_state = env.reset();

    const int n_actions = env.num_actions();
    for (int64_t t = 0; t < horizon; ++t) {
        ad::Tensor s = ad::Tensor::from_vector({1, buf.state_dim}, carry_state);
        auto [logits, values] = policy.forward(nullptr, s);
        ad::Tensor lp = ad::log_softmax(nullptr, logits);
        std::vector<double> probs(static_cast<size_t>(n_actions));
        for (int a = 0; a < n_actions; ++a) probs[static_cast<size_t>(a)] = std::exp(lp.data()[a]);
        const int action = sample_categorical(probs, rng);

        buf.states.insert(buf.states.end(), carry_state.begin(), carry_state.end());
        buf.actions.push_back(action);
        buf.log_probs.push_back(lp.data()[action]);
        buf.values.push_back(values.data()[0]);

        RlEnv::StepOut out = env.step(action);
        buf.rewards.push_back(out.reward);
        buf.dones.push_back(out.done ? 1 : 0);
        carry_state = out.done ? env.reset() : std::move(out.state);
    }

    ad::Tensor s = ad::Tensor::from_vector({1, buf.state_dim}, carry_state);
    buf.bootstrap_value = policy.forward(nullptr, s).second.data()[0];
    return buf;
}

void compute_gae(const RolloutBuffer& buffer, double gamma, double lambda,
                 std::vector<double>& advantages, std::vector<double>& returns) {
    const int64_t h = buffer.horizon;
    advantages.assign(static_cast<size_t>(h), 0.0);
    returns.assign(static_cast<size_t>(h), 0.0);
    double next_adv = 0.0;
    for (int64_t t = h - 1; t >= 0; --t) {
        const double not_done = buffer.dones[static_cast<size_t>(t)] ? 0.0 : 1.0;
        const double next_value =
            t == h - 1 ? buffer.bootstrap_value : buffer.values[static_cast<size_t>(t + 1)];
        const double delta = buffer.rewards[static_cast<size_t>(t)] +
                             gamma * next_value * not_done - buffer.values[static_cast<size_t>(t)];
        next_adv = delta + gamma * lambda * not_done * next_adv;
        advantages[static_cast<size_t>(t)] = next_adv;
        returns[static_cast<size_t>(t)] = next_adv + buffer.values[static_cast<size_t>(t)];
    }
}

double ReturnScaler::scale(double reward, bool done) {
    carry_ = carry_ * gamma_ + reward;
    ++count_;
    const double delta = carry_ - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (carry_ - mean_);
    if (done) carry_ = 0.0;
    const double var = count_ > 1 ? m2_ / static_cast<double>(count_) : 1.0;
    return std::clamp(reward / std::sqrt(var + 1e-8), -10.0, 10.0);
}

void normalize_advantages(std::vector<double>& advantages) {
    const double n = static_cast<double>(advantages.size());
    double mean = 0.0;
    for (double a : advantages) mean += a;
    mean /= n;
    double var = 0.0;
    for (double a : advantages) var += (a - mean) * (a - mean);
    var /= n;
    const double denom = std::sqrt(var) + 1e-8;
    for (double& a : advantages) a = (a - mean) / denom;
}

UpdateStats ppo_update(PolicyNet& policy, ad::Optimizer& optimizer, const RolloutBuffer& buffer,
                       const std::vector<double>& advantages, const std::vector<double>& returns,
                       const PpoConfig& cfg, Rng& shuffle_rng) {
    const int64_t h = buffer.horizon;
    if (static_cast<int64_t>(advantages.size()) != h || static_cast<int64_t>(returns.size()) != h) {
        throw std::invalid_argument("ppo_update: advantages/returns length mismatch");
    }
    std::vector<int64_t> order(static_cast<size_t>(h));
    std::iota(order.begin(), order.end(), 0);

    UpdateStats stats;
    int64_t minibatches = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        for (int64_t start = 0; start < h; start += cfg.minibatch_size) {
            const int64_t end = std::min<int64_t>(h, start + cfg.minibatch_size);
            const int b = static_cast<int>(end - start);

            std::vector<double> sdata(static_cast<size_t>(b) * buffer.state_dim);
            std::vector<int> actions(static_cast<size_t>(b));
            std::vector<double> old_lp(static_cast<size_t>(b));
            std::vector<double> adv(static_cast<size_t>(b));
            std::vector<double> ret(static_cast<size_t>(b));
            for (int i = 0; i < b; ++i) {
                const int64_t src = order[static_cast<size_t>(start + i)];
                std::copy_n(buffer.states.begin() + src * buffer.state_dim, buffer.state_dim,
                            sdata.begin() + static_cast<int64_t>(i) * buffer.state_dim);
                actions[static_cast<size_t>(i)] = buffer.actions[static_cast<size_t>(src)];
                old_lp[static_cast<size_t>(i)] = buffer.log_probs[static_cast<size_t>(src)];
                adv[static_cast<size_t>(i)] = advantages[static_cast<size_t>(src)];
                ret[static_cast<size_t>(i)] = returns[static_cast<size_t>(src)];
            }

            ad::Tape tape;
            ad::Tensor logits, values, lp, ratio, surrogate, value_loss;
            try {
                ad::Tensor states = ad::Tensor::from_vector({b, buffer.state_dim}, std::move(sdata));
                std::tie(logits, values) = policy.forward(&tape, states);
                lp = ad::gather_log_prob(&tape, logits, actions);
                ad::Tensor old_lp_t = ad::Tensor::from_vector({b}, old_lp);
                ad::Tensor adv_t = ad::Tensor::from_vector({b}, adv);
                ratio = ad::exp(&tape, ad::sub(&tape, lp, old_lp_t));
                ad::Tensor unclipped = ad::mul(&tape, ratio, adv_t);
                ad::Tensor clipped = ad::mul(
                    &tape, ad::clamp(&tape, ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon),
                    adv_t);
                surrogate =
                    ad::scale(&tape, ad::mean(&tape, ad::minimum(&tape, unclipped, clipped)), -1.0);
                ad::Tensor ret_t = ad::Tensor::from_vector({b}, ret);
                value_loss = ad::mse(&tape, values, ret_t);
                ad::Tensor loss =
                    ad::add(&tape, surrogate, ad::scale(&tape, value_loss, cfg.value_coef));
                if (cfg.entropy_coef != 0.0) {
                    const ad::Tensor probs = ad::softmax(&tape, logits);
                    const ad::Tensor lps = ad::log_softmax(&tape, logits);
                    const ad::Tensor neg_ent_sum = ad::sum(&tape, ad::mul(&tape, probs, lps));
                    // entropy bonus: subtract coef * mean entropy
                    loss = ad::add(
                        &tape, loss,
                        ad::scale(&tape, neg_ent_sum, cfg.entropy_coef / static_cast<double>(b)));
                }
                optimizer.zero_grad();
                tape.backward(loss);
                optimizer.step();
            } catch (const std::runtime_error& e) {
                std::ostringstream os;
                os << "ppo update aborted (epoch " << epoch << ", minibatch offset " << start;
                if (surrogate.defined()) os << ", surrogate " << surrogate.item();
                if (value_loss.defined()) os << ", value loss " << value_loss.item();
                os << "): " << e.what();
                throw std::runtime_error(os.str());
            }

            // diagnostics from this minibatch
            double clip_frac = 0.0, kl = 0.0, ent = 0.0;
            for (int i = 0; i < b; ++i) {
                if (std::abs(ratio.data()[i] - 1.0) > cfg.clip_epsilon) clip_frac += 1.0;
                kl += old_lp[static_cast<size_t>(i)] - lp.data()[i];
            }
            {
                const ad::Tensor probs = ad::softmax(nullptr, logits.detach());
                const int cols = policy.spec.num_actions;
                for (int r = 0; r < b; ++r) {
                    for (int c = 0; c < cols; ++c) {
                        const double p = probs.data()[r * cols + c];
                        if (p > 0.0) ent -= p * std::log(p);
                    }
                }
            }
            stats.policy_loss += surrogate.item();
            stats.value_loss += value_loss.item();
            stats.entropy += ent / b;
            stats.clip_fraction += clip_frac / b;
            stats.approx_kl += kl / b;
            ++minibatches;
        }
    }
    const double m = static_cast<double>(minibatches);
    stats.policy_loss /= m;
    stats.value_loss /= m;
    stats.entropy /= m;
    stats.clip_fraction /= m;
    stats.approx_kl /= m;
    return stats;
}

int greedy_policy_action(const srl::SrlModel& representation, const PolicyNet& policy,
                         const env::StepResult& step) {
    const std::vector<double> state = representation.encode_policy_input(step);
    ad::Tensor s = ad::Tensor::from_vector({1, static_cast<int>(state.size())}, state);
    const ad::Tensor logits = policy.forward(nullptr, s).first;
    int best = 0;
    for (int a = 1; a < policy.spec.num_actions; ++a) {
        if (logits.data()[a] > logits.data()[best]) best = a;
    }
    return best;
}

TrainingCurve train_rl(const srl::SrlModel& representation, const env::NavConfig& cfg,
                       const PpoConfig& ppo, uint64_t seed, PolicyNet* out_policy) {
    ppo.validate();
    cfg.validate();

    EncodedNavEnv env(representation, cfg, mix_seed(seed, 0xE2));
    PolicySpec pspec;
    pspec.input_dim = representation.output_dim();
    pspec.hidden = ppo.policy_hidden;
    pspec.num_actions = env.num_actions();
    pspec.conv_trunk = representation.method == srl::Method::raw_pixels;
    pspec.image_size = representation.spec.image_size;
    PolicyNet policy(pspec, mix_seed(seed, 0x9011c));

    std::vector<ad::Tensor> params;
    for (const auto& [name, t] : policy.params()) params.push_back(t);
    ad::OptimizerConfig ocfg;
    ocfg.kind = ad::OptimizerConfig::Kind::adam;
    ocfg.learning_rate = ppo.learning_rate;
    ad::Optimizer optimizer(ocfg, params);

    Rng sample_rng(mix_seed(seed, 0x5A009));
    Rng shuffle_rng(mix_seed(seed, 0x50FF1));

    // evaluation points: timestep 0, then configured checkpoints in budget
    std::vector<int64_t> checkpoints = {0};
    for (int64_t cp : ppo.eval_checkpoints) {
        if (cp > 0 && cp <= ppo.total_timesteps) checkpoints.push_back(cp);
    }
    std::sort(checkpoints.begin(), checkpoints.end());
    checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());

    TrainingCurve curve;
    curve.seed = seed;
    curve.method_label = srl::method_name(representation.method);
    curve.env_label = cfg.variant == env::Variant::target_1d ? "nav_1d" : "nav_2d";

    env::NavConfig eval_cfg = cfg;
    if (representation.method == srl::Method::ground_truth) eval_cfg.render_observations = false;
    auto run_eval = [&](int64_t checkpoint) {
        const metrics::EvalResult ev = metrics::evaluate_policy(
            [&](const env::StepResult& sr) { return greedy_policy_action(representation, policy, sr); },
            eval_cfg, ppo.eval_episodes, mix_seed(seed, 0xEA10 + static_cast<uint64_t>(checkpoint)));
        TrainingCurve::Point p;
        p.timesteps = checkpoint;
        p.eval = ev;
        p.eval.budget_timesteps = checkpoint;
        curve.points.push_back(std::move(p));
    };

    size_t next_cp = 0;
    run_eval(checkpoints[next_cp++]);  // timestep 0

    std::vector<double> carry_state;
    std::vector<double> advantages, returns;
    ReturnScaler scaler(ppo.gamma);
    int64_t steps = 0;
    while (steps < ppo.total_timesteps) {
        RolloutBuffer buf = collect_rollout(policy, env, ppo.horizon, sample_rng, carry_state);
        if (ppo.normalize_rewards) {
            for (int64_t t = 0; t < buf.horizon; ++t) {
                buf.rewards[static_cast<size_t>(t)] = scaler.scale(
                    buf.rewards[static_cast<size_t>(t)], buf.dones[static_cast<size_t>(t)] != 0);
            }
        }
        compute_gae(buf, ppo.gamma, ppo.gae_lambda, advantages, returns);
        normalize_advantages(advantages);
        ppo_update(policy, optimizer, buf, advantages, returns, ppo, shuffle_rng);
        steps += ppo.horizon;
        while (next_cp < checkpoints.size() && checkpoints[next_cp] <= steps) {
            run_eval(checkpoints[next_cp++]);
        }
    }
    while (next_cp < checkpoints.size()) run_eval(checkpoints[next_cp++]);

    if (out_policy) *out_policy = policy;
    return curve;
}

}  // namespace srlbench::rl
