// Acceptance suite: property criteria (1-7) run in seconds; the scaled
// reproduction criteria (8-12) train the full desk-scale experiment matrix
// and take a while on one core. Run with --properties or --repro to select.

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <vector>

#include "srlbench/harness.hpp"
#include "srlbench/hash.hpp"
#include "srlbench/rl.hpp"

using namespace srlbench;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& what, const std::string& detail = "") {
    std::cout << (pass ? "[PASS]" : "[FAIL]") << " criterion " << criterion << ": " << what;
    if (!detail.empty()) std::cout << " (" << detail << ")";
    std::cout << "\n" << std::flush;
    if (!pass) ++g_failures;
}

void note(const std::string& msg) {
    std::cerr << "  .. " << msg << "\n" << std::flush;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

// ---------------------------------------------------------------- properties

void criterion_1_autodiff() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    int cases = 0;
    Rng meta(0xACC1);
    for (int arch = 0; arch < 20; ++arch) {
        Rng rng(1000 + static_cast<uint64_t>(arch));
        const int in = 2 + meta.uniform_int(5);
        const int hidden = 2 + meta.uniform_int(6);
        const int out = 2 + meta.uniform_int(4);
        const int batch = 1 + meta.uniform_int(3);
        const bool use_tanh = arch % 2 == 0;
        const int flavor = arch % 5;

        nn::Mlp mlp(in, {hidden}, out,
                    use_tanh ? nn::Activation::tanh : nn::Activation::relu, rng);
        std::vector<int> targets(static_cast<size_t>(batch));
        for (auto& t : targets) t = meta.uniform_int(out);
        ad::Tensor target_vals = ad::Tensor::zeros({batch, out});
        for (auto& v : target_vals.data()) v = rng.normal();

        auto fn = [&](ad::Tape* tape, std::vector<ad::Tensor>& inputs) {
            ad::Tensor y = mlp.forward(tape, inputs[0]);
            switch (flavor) {
                case 0: return ad::mse(tape, y, target_vals);
                case 1: return ad::cross_entropy(tape, y, targets);
                case 2: return ad::mean(tape, ad::softmax(tape, y));
                case 3: {
                    const int cut = std::max(1, out / 2);
                    if (cut >= out) return ad::mean(tape, y);
                    ad::Tensor head = ad::slice(tape, y, 0, cut);
                    ad::Tensor tail = ad::slice(tape, y, cut, out);
                    return ad::mean(tape, ad::concat(tape, head, tail));
                }
                default: return ad::sum(tape, ad::tanh(tape, y));
            }
        };

        // keep relu pre-activations clear of the kink
        ad::Tensor x;
        for (uint64_t attempt = 0;; ++attempt) {
            if (attempt > 200) break;
            Rng xr(777 + attempt * 31 + static_cast<uint64_t>(arch));
            x = ad::Tensor::zeros({batch, in}, true);
            for (auto& v : x.data()) v = xr.normal();
            if (use_tanh) break;
            const ad::Tensor pre = mlp.layers[0].forward(nullptr, x);
            bool clear = true;
            for (double v : pre.data()) clear = clear && std::abs(v) > 1e-3;
            if (clear) break;
        }

        std::vector<ad::Tensor> inputs = {x, mlp.layers[0].weight, mlp.layers[0].bias,
                                          mlp.layers[1].weight, mlp.layers[1].bias};
        const auto rep = ad::grad_check(fn, inputs);
        worst = std::max(worst, rep.max_rel_error);
        ++cases;
    }
    // one convolutional case
    {
        Rng rng(4242);
        nn::Conv2d conv(2, 3, 3, 2, 1, rng);
        nn::Linear head(3 * 3 * 3, 2, nn::Activation::linear, rng);
        auto fn = [&](ad::Tape* tape, std::vector<ad::Tensor>& inputs) {
            ad::Tensor h = ad::flatten(tape, ad::tanh(tape, conv.forward(tape, inputs[0])));
            return ad::cross_entropy(tape, head.forward(tape, h), {1});
        };
        ad::Tensor x = ad::Tensor::zeros({1, 2, 6, 6}, true);
        for (auto& v : x.data()) v = rng.normal();
        std::vector<ad::Tensor> inputs = {x, conv.weight, conv.bias, head.weight, head.bias};
        const auto rep = ad::grad_check(fn, inputs);
        worst = std::max(worst, rep.max_rel_error);
        ++cases;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report(1, worst < 1e-4 && cases >= 20 && secs < 60.0,
           "autodiff matches central finite differences across randomized architectures",
           std::to_string(cases) + " cases, max rel err " + fmt(worst) + ", " + fmt(secs) + "s");
}

void criterion_2_gtc() {
    bool ok = true;
    std::string detail;
    Rng rng(0xACC2);

    std::vector<std::vector<double>> gt_rows;
    for (int i = 0; i < 400; ++i) {
        gt_rows.push_back({rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()});
    }
    const metrics::Mat gt = metrics::Mat::from_rows(gt_rows);

    // identity
    const auto ident = metrics::gtc(gt, gt);
    for (double v : ident.gtc) ok = ok && std::abs(v - 1.0) < 1e-12;

    // affine invariance
    std::vector<std::vector<double>> affine = gt_rows;
    for (auto& row : affine) {
        row[0] = -4.0 * row[0] + 3.0;
        row[1] = 0.02 * row[1] - 9.0;
        row[2] = 7.5 * row[2];
        row[3] = -0.5 * row[3] + 0.1;
    }
    const auto aff = metrics::gtc(metrics::Mat::from_rows(affine), gt);
    for (double v : aff.gtc) ok = ok && std::abs(v - 1.0) < 1e-12;

    // permutation invariance
    std::vector<std::vector<double>> perm;
    for (const auto& row : gt_rows) perm.push_back({row[3], row[2], row[0], row[1]});
    const auto p = metrics::gtc(metrics::Mat::from_rows(perm), gt);
    for (double v : p.gtc) ok = ok && std::abs(v - 1.0) < 1e-12;
    ok = ok && p.argmax == std::vector<int>{2, 3, 1, 0};

    // monotonicity under added learned dims
    std::vector<std::vector<double>> narrow, wide;
    for (const auto& row : gt_rows) {
        narrow.push_back({row[0] + row[1], row[2] - 0.5 * row[3]});
        auto w = narrow.back();
        w.push_back(row[1]);
        w.push_back(rng.normal());
        wide.push_back(w);
    }
    const auto base = metrics::gtc(metrics::Mat::from_rows(narrow), gt);
    const auto more = metrics::gtc(metrics::Mat::from_rows(wide), gt);
    for (size_t i = 0; i < base.gtc.size(); ++i) ok = ok && more.gtc[i] >= base.gtc[i] - 1e-12;

    // pearson vs naive oracle
    double worst = 0.0;
    for (int trial = 0; trial < 10000; ++trial) {
        const size_t n = 2 + static_cast<size_t>(rng.uniform_int(40));
        std::vector<double> x(n), y(n);
        for (size_t i = 0; i < n; ++i) {
            x[i] = rng.normal() * 5.0 + 1.0;
            y[i] = 0.3 * x[i] + rng.normal();
        }
        const double got = metrics::pearson(x, y).rho;
        double mx = 0, my = 0;
        for (size_t i = 0; i < n; ++i) {
            mx += x[i];
            my += y[i];
        }
        mx /= static_cast<double>(n);
        my /= static_cast<double>(n);
        double cov = 0, vx = 0, vy = 0;
        for (size_t i = 0; i < n; ++i) {
            cov += (x[i] - mx) * (y[i] - my);
            vx += (x[i] - mx) * (x[i] - mx);
            vy += (y[i] - my) * (y[i] - my);
        }
        worst = std::max(worst, std::abs(got - cov / std::sqrt(vx * vy)));
    }
    ok = ok && worst < 1e-12;

    report(2, ok, "GTC identity / affine / permutation / monotonicity and pearson oracle",
           "pearson max deviation " + fmt(worst));
}

void criterion_3_split_isolation() {
    env::NavConfig ecfg;
    ecfg.image_size = 16;
    ecfg.max_steps = 25;
    ecfg.seed = 5;
    data::Dataset ds = data::collect(ecfg, 150, 6);
    data::split_by_episode(ds, 0.2);

    srl::EncoderSpec spec;
    spec.image_size = 16;
    spec.hidden = {24};
    spec.state_dim = 8;

    auto model = srl::build(srl::Method::srl_splits, spec, 4, nullptr, nullptr, 3);

    std::vector<int64_t> idx(16);
    std::iota(idx.begin(), idx.end(), 0);
    const srl::Batch batch = model.make_batch(ds.train(), idx);
    const auto params = model.params();
    const int inv_begin = model.layout.entry_for(srl::Loss::inverse).begin;

    bool ok = true;
    auto run_single_loss = [&](srl::LossWeights w) {
        srl::SrlModel probe = model;
        probe.weights = w;
        nn::zero_grads(params);
        ad::Tape tape;
        ad::Tensor loss = probe.loss(&tape, batch);
        tape.backward(loss);
    };

    // inverse loss: projection columns outside the inverse slice exactly zero
    run_single_loss({0, 0, 1, 0});
    {
        const ad::Tensor w = model.projection.weight;
        const int cols = w.dim(1);
        for (int r = 0; r < w.dim(0); ++r) {
            for (int c = 0; c < inv_begin; ++c) {
                ok = ok && w.grad()[static_cast<size_t>(r * cols + c)] == 0.0;
            }
        }
        for (const auto& [name, t] : params) {
            if (name.rfind("decoder", 0) == 0 || name.rfind("reward_head", 0) == 0) {
                for (double g : t.grad()) ok = ok && g == 0.0;
            }
        }
    }
    // reconstruction loss: inverse slice and inverse head exactly zero
    run_single_loss({1, 0, 0, 0});
    {
        const ad::Tensor w = model.projection.weight;
        const int cols = w.dim(1);
        for (int r = 0; r < w.dim(0); ++r) {
            for (int c = inv_begin; c < cols; ++c) {
                ok = ok && w.grad()[static_cast<size_t>(r * cols + c)] == 0.0;
            }
        }
        for (const auto& [name, t] : params) {
            if (name.rfind("inverse_head", 0) == 0) {
                for (double g : t.grad()) ok = ok && g == 0.0;
            }
        }
    }

    // combination mode == splits mode with one full-range slice, bit-exact
    const srl::SplitLayout full = srl::SplitLayout::single(
        {srl::Loss::reconstruction, srl::Loss::reward, srl::Loss::inverse}, spec.state_dim);
    auto combo = srl::build(srl::Method::srl_combination, spec, 4, nullptr, nullptr, 11);
    auto single = srl::build(srl::Method::srl_splits, spec, 4, &full, nullptr, 11);
    srl::LossBreakdown bc, bs;
    combo.loss(nullptr, combo.make_batch(ds.train(), idx), &bc);
    single.loss(nullptr, single.make_batch(ds.train(), idx), &bs);
    const bool bit_exact = std::memcmp(&bc.total, &bs.total, sizeof(double)) == 0;

    report(3, ok && bit_exact,
           "per-loss gradients stay inside their split; combination == single-slice splits",
           bit_exact ? "totals bit-exact" : "totals differ");
}

void criterion_4_loss_arithmetic() {
    // weighted-sum linearity on synthetic per-head values
    const srl::LossWeights w;  // defaults (1, 1, 2)
    const double total = w.reconstruction * 0.5 + w.reward * 0.25 + w.inverse * 0.1;
    bool ok = std::abs(total - 0.95) < 1e-15;

    // defaults live in the shipped config verbatim
    const fs::path cfg_path = fs::path(SRLBENCH_CONFIG_DIR) / "default_2d.json";
    const auto cfg = harness::ExperimentConfig::load_file(cfg_path.string());
    ok = ok && cfg.srl.weights.reconstruction == 1.0 && cfg.srl.weights.reward == 1.0 &&
         cfg.srl.weights.inverse == 2.0;

    // linearity on a live model: raising w_inverse by one adds exactly L_inv
    env::NavConfig ecfg;
    ecfg.image_size = 16;
    ecfg.max_steps = 25;
    ecfg.seed = 7;
    data::Dataset ds = data::collect(ecfg, 120, 8);
    data::split_by_episode(ds, 0.2);
    srl::EncoderSpec spec;
    spec.image_size = 16;
    spec.hidden = {16};
    spec.state_dim = 8;
    auto model = srl::build(srl::Method::srl_splits, spec, 4, nullptr, nullptr, 9);
    std::vector<int64_t> idx(12);
    std::iota(idx.begin(), idx.end(), 0);
    const srl::Batch batch = model.make_batch(ds.train(), idx);
    srl::LossBreakdown b1;
    model.loss(nullptr, batch, &b1);
    srl::SrlModel bumped = model;
    bumped.weights.inverse += 1.0;
    srl::LossBreakdown b2;
    bumped.loss(nullptr, batch, &b2);
    ok = ok && std::abs((b2.total - b1.total) - b1.per_head.at("inverse")) < 1e-9;

    report(4, ok, "weighted loss combination is linear and (1,1,2) ships in the config",
           "delta " + fmt(b2.total - b1.total) + " vs L_inv " + fmt(b1.per_head.at("inverse")));
}

void criterion_5_environment() {
    env::NavConfig cfg;  // desk defaults: 250 steps
    cfg.render_observations = false;
    env::NavEnv e(cfg);
    bool ok = true;
    double max_total = -1e9;
    Rng rng(0xACC5);
    for (int ep = 0; ep < 20; ++ep) {
        e.reset(static_cast<uint64_t>(ep));
        double total = 0;
        while (!e.done()) {
            const auto out = e.step(rng.uniform_int(4));
            ok = ok && (out.reward == -1 || out.reward == 0 || out.reward == 1);
            total += out.reward;
        }
        ok = ok && total <= 250.0;
        max_total = std::max(max_total, total);
    }
    // scripted greedy policy against the distance-adjusted bar
    int cleared = 0;
    for (int ep = 0; ep < 100; ++ep) {
        e.reset(static_cast<uint64_t>(5000 + ep));
        const auto& s = e.state();
        const double cheb =
            std::max(std::abs(s.robot_x - s.target_x), std::abs(s.robot_y - s.target_y));
        const double bar = 0.8 * (cfg.max_steps - cheb / cfg.step_length);
        double total = 0;
        while (!e.done()) total += e.step(env::greedy_action(e.gt_state(), cfg.variant)).reward;
        if (total >= bar) ++cleared;
    }
    ok = ok && cleared == 100;
    report(5, ok, "rewards in {-1,0,+1}, 250-reward ceiling, greedy policy clears 0.8 bar",
           std::to_string(cleared) + "/100 episodes cleared");
}

void criterion_6_determinism() {
    nlohmann::json j;
    j["env"] = {{"image_size", 16}, {"max_steps", 20}, {"seed", 3}};
    j["data"] = {{"samples", 120}, {"seed", 4}, {"val_fraction", 0.2}};
    j["srl"] = {{"state_dim", 8}, {"hidden", {16}}, {"epochs", 2}};
    j["rl"] = {{"total_timesteps", 128}, {"horizon", 64},      {"minibatch_size", 32},
               {"eval_checkpoints", {128}}, {"eval_episodes", 2}, {"policy_hidden", {8}},
               {"seeds", {0}}};
    const auto cfg = harness::ExperimentConfig::from_json(j);
    const fs::path a = fs::temp_directory_path() / "srlbench_acc_det_a";
    const fs::path b = fs::temp_directory_path() / "srlbench_acc_det_b";
    fs::remove_all(a);
    fs::remove_all(b);
    harness::run_experiment(cfg, a.string(), nullptr);
    harness::run_experiment(cfg, b.string(), nullptr);
    bool ok = true;
    for (const char* name : {"dataset.bin", "srl.ckpt", "policy.ckpt", "curve.csv", "gtc.json"}) {
        ok = ok && sha256_file((a / name).string()) == sha256_file((b / name).string());
    }
    fs::remove_all(a);
    fs::remove_all(b);
    report(6, ok, "identical configs give bit-identical dataset, checkpoints, curve and report");
}

class AcceptanceBandit : public rl::RlEnv {
public:
    int state_dim() const override { return 1; }
    int num_actions() const override { return 4; }
    std::vector<double> reset() override { return {1.0}; }
    StepOut step(int action) override { return {{1.0}, action == 3 ? 1.0 : 0.0, true}; }
};

void criterion_7_ppo() {
    rl::PolicySpec spec;
    spec.input_dim = 1;
    spec.hidden = {16};

    // bandit convergence within 200 updates
    AcceptanceBandit env;
    rl::PolicyNet policy(spec, 77);
    std::vector<ad::Tensor> params;
    for (auto& [n, t] : policy.params()) params.push_back(t);
    ad::OptimizerConfig ocfg;
    ocfg.learning_rate = 0.01;
    ad::Optimizer opt(ocfg, params);
    rl::PpoConfig ppo;
    ppo.horizon = 64;
    ppo.minibatch_size = 64;
    Rng sample(31), shuffle(32);
    std::vector<double> carry, adv, ret;
    for (int update = 0; update < 200; ++update) {
        const auto buf = rl::collect_rollout(policy, env, ppo.horizon, sample, carry);
        rl::compute_gae(buf, ppo.gamma, ppo.gae_lambda, adv, ret);
        rl::normalize_advantages(adv);
        rl::ppo_update(policy, opt, buf, adv, ret, ppo, shuffle);
    }
    ad::Tensor s = ad::Tensor::from_vector({1, 1}, {1.0});
    const ad::Tensor probs = ad::softmax(nullptr, policy.forward(nullptr, s).first);
    const double p_best = probs.data()[3];

    // clip 1e6 equals the unclipped surrogate bit for bit
    rl::PolicyNet pa(spec, 99), pb(spec, 99);
    AcceptanceBandit env2;
    Rng sample2(41);
    std::vector<double> carry2;
    const auto buf = rl::collect_rollout(pa, env2, 64, sample2, carry2);
    rl::compute_gae(buf, ppo.gamma, ppo.gae_lambda, adv, ret);
    rl::normalize_advantages(adv);

    rl::PpoConfig unclip = ppo;
    unclip.clip_epsilon = 1e6;
    unclip.epochs = 2;
    unclip.minibatch_size = 16;
    auto fresh_opt = [](rl::PolicyNet& p) {
        std::vector<ad::Tensor> ps;
        for (auto& [n, t] : p.params()) ps.push_back(t);
        ad::OptimizerConfig oc;
        oc.learning_rate = 3e-4;
        return ad::Optimizer(oc, ps);
    };
    {
        auto o = fresh_opt(pa);
        Rng sh(5);
        rl::ppo_update(pa, o, buf, adv, ret, unclip, sh);
    }
    {
        auto o = fresh_opt(pb);
        Rng sh(5);
        std::vector<int64_t> order(64);
        std::iota(order.begin(), order.end(), 0);
        for (int epoch = 0; epoch < unclip.epochs; ++epoch) {
            sh.shuffle(order);
            for (int64_t start = 0; start < 64; start += unclip.minibatch_size) {
                const int64_t end = std::min<int64_t>(64, start + unclip.minibatch_size);
                const int bs = static_cast<int>(end - start);
                std::vector<double> sdata(static_cast<size_t>(bs)), olp(static_cast<size_t>(bs)),
                    am(static_cast<size_t>(bs)), rm(static_cast<size_t>(bs));
                std::vector<int> actions(static_cast<size_t>(bs));
                for (int i = 0; i < bs; ++i) {
                    const int64_t src = order[static_cast<size_t>(start + i)];
                    sdata[static_cast<size_t>(i)] = buf.states[static_cast<size_t>(src)];
                    actions[static_cast<size_t>(i)] = buf.actions[static_cast<size_t>(src)];
                    olp[static_cast<size_t>(i)] = buf.log_probs[static_cast<size_t>(src)];
                    am[static_cast<size_t>(i)] = adv[static_cast<size_t>(src)];
                    rm[static_cast<size_t>(i)] = ret[static_cast<size_t>(src)];
                }
                ad::Tape tape;
                auto [logits, values] = pb.forward(&tape, ad::Tensor::from_vector({bs, 1}, sdata));
                ad::Tensor lp = ad::gather_log_prob(&tape, logits, actions);
                ad::Tensor ratio =
                    ad::exp(&tape, ad::sub(&tape, lp, ad::Tensor::from_vector({bs}, olp)));
                ad::Tensor surr = ad::scale(
                    &tape, ad::mean(&tape, ad::mul(&tape, ratio, ad::Tensor::from_vector({bs}, am))),
                    -1.0);
                ad::Tensor vloss = ad::mse(&tape, values, ad::Tensor::from_vector({bs}, rm));
                ad::Tensor loss = ad::add(&tape, surr, ad::scale(&tape, vloss, unclip.value_coef));
                o.zero_grad();
                tape.backward(loss);
                o.step();
            }
        }
    }
    bool bit_equal = true;
    const auto qa = pa.params(), qb = pb.params();
    for (size_t i = 0; i < qa.size(); ++i) {
        bit_equal = bit_equal && qa[i].second.data() == qb[i].second.data();
    }

    report(7, p_best > 0.95 && bit_equal,
           "bandit converges in 200 updates; clip 1e6 equals unclipped policy gradient",
           "p(best)=" + fmt(p_best) + (bit_equal ? ", bit-equal" : ", params differ"));
}

// ------------------------------------------------------------- reproductions

struct DeskProfile {
    env::NavConfig env;
    rl::PpoConfig ppo;
    srl::EncoderSpec spec;
    srl::TrainConfig tc;
    int64_t samples = 5000;
    std::vector<uint64_t> rl_seeds = {0, 1, 2};

    DeskProfile() {
        env.image_size = 32;
        env.seed = 0;
        spec.image_size = 32;
        spec.hidden = {64};
        spec.state_dim = 32;
        tc.epochs = 30;
        tc.batch_size = 64;
        tc.seed = 2;
        ppo.total_timesteps = 200000;
        ppo.eval_checkpoints = {50000, 200000};
        ppo.eval_episodes = 100;
    }
};

struct MethodResult {
    std::vector<rl::TrainingCurve> curves;  // one per seed
    double mean_at(int64_t t) const {
        double m = 0;
        for (const auto& c : curves) {
            for (const auto& p : c.points) {
                if (p.timesteps == t) m += p.eval.mean_reward;
            }
        }
        return m / static_cast<double>(curves.size());
    }
    double se_at(int64_t t) const {
        const double m = mean_at(t);
        double ss = 0;
        for (const auto& c : curves) {
            for (const auto& p : c.points) {
                if (p.timesteps == t) ss += (p.eval.mean_reward - m) * (p.eval.mean_reward - m);
            }
        }
        const double n = static_cast<double>(curves.size());
        return n > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
    }
};

MethodResult run_rl_seeds(const srl::SrlModel& model, const DeskProfile& desk,
                          const std::string& label) {
    MethodResult result;
    for (uint64_t seed : desk.rl_seeds) {
        const auto t0 = std::chrono::steady_clock::now();
        result.curves.push_back(rl::train_rl(model, desk.env, desk.ppo, seed));
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        note(label + " seed " + std::to_string(seed) + ": final " +
             fmt(result.curves.back().points.back().eval.mean_reward) + " (" + fmt(secs) + "s)");
    }
    return result;
}

double combined_se(const MethodResult& a, const MethodResult& b, int64_t t) {
    return std::sqrt(a.se_at(t) * a.se_at(t) + b.se_at(t) * b.se_at(t));
}

void run_reproductions() {
    DeskProfile desk;
    const int64_t kFinal = 200000, kQuarter = 50000;

    note("collecting desk datasets (5k and 1k samples)");
    data::Dataset ds5k = data::collect(desk.env, desk.samples, 1);
    data::split_by_episode(ds5k, 0.1);
    data::Dataset ds1k = data::collect(desk.env, 1000, 1);
    data::split_by_episode(ds1k, 0.1);

    auto train_model = [&](srl::Method method, const srl::EncoderSpec& spec, data::Dataset& ds,
                           uint64_t seed, const std::string& label) {
        const auto t0 = std::chrono::steady_clock::now();
        auto model = srl::build(method, spec, desk.env.gt_dim(), nullptr, nullptr, seed);
        srl::TrainConfig tc = desk.tc;
        tc.seed = seed;
        srl::train(model, ds, tc);
        note(label + " trained in " +
             fmt(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()) +
             "s");
        return model;
    };

    // --- criterion 8: GTC pattern of the splits model over 3 SRL seeds
    {
        bool ok = true;
        std::string detail;
        for (uint64_t seed : {2ull, 102ull, 202ull}) {
            auto splits = train_model(srl::Method::srl_splits, desk.spec, ds5k, seed,
                                      "srl_splits (srl seed " + std::to_string(seed) + ")");
            const metrics::Mat learned = srl::encode_matrix(splits, ds5k.val());
            const metrics::Mat gt = srl::gt_matrix(ds5k.val());
            const auto& inv = splits.layout.entry_for(srl::Loss::inverse);
            for (int coord = 0; coord < 2; ++coord) {  // x_robot, y_robot
                double best = 0;
                std::vector<double> g(static_cast<size_t>(gt.rows));
                for (int64_t r = 0; r < gt.rows; ++r) g[static_cast<size_t>(r)] = gt.at(r, coord);
                for (int j = inv.begin; j < inv.end; ++j) {
                    std::vector<double> col(static_cast<size_t>(learned.rows));
                    for (int64_t r = 0; r < learned.rows; ++r) {
                        col[static_cast<size_t>(r)] = learned.at(r, j);
                    }
                    best = std::max(best, std::abs(metrics::pearson(g, col).rho));
                }
                ok = ok && best >= 0.7;
                detail += (coord == 0 ? "x:" : " y:") + fmt(best);
            }
            detail += " |";
        }
        report(8, ok, "inverse-slice dims correlate with robot coordinates at |rho| >= 0.7", detail);
    }

    // shared models for the RL criteria
    auto splits32 = train_model(srl::Method::srl_splits, desk.spec, ds5k, 2, "srl_splits dim32");
    auto ae32 = train_model(srl::Method::autoencoder, desk.spec, ds5k, 2, "autoencoder dim32");
    auto rf32 = train_model(srl::Method::random_features, desk.spec, ds5k, 2, "random_features");
    auto gt_model = srl::build(srl::Method::ground_truth, desk.spec, desk.env.gt_dim());
    auto px_model = srl::build(srl::Method::raw_pixels, desk.spec, desk.env.gt_dim());

    const auto gt_res = run_rl_seeds(gt_model, desk, "ground_truth");
    const auto splits_res = run_rl_seeds(splits32, desk, "srl_splits");
    const auto ae_res = run_rl_seeds(ae32, desk, "autoencoder");
    const auto raw_res = run_rl_seeds(px_model, desk, "raw_pixels");
    const auto rf_res = run_rl_seeds(rf32, desk, "random_features");

    // --- criterion 9: GT >= splits >= AE at the final budget (ties within 1 SE)
    {
        const double gt_m = gt_res.mean_at(kFinal), sp_m = splits_res.mean_at(kFinal),
                     ae_m = ae_res.mean_at(kFinal);
        const bool first = gt_m >= sp_m - combined_se(gt_res, splits_res, kFinal);
        const bool second = sp_m >= ae_m - combined_se(splits_res, ae_res, kFinal);
        report(9, first && second, "final reward ordering GT >= SRL-splits >= autoencoder",
               "GT " + fmt(gt_m) + ", splits " + fmt(sp_m) + ", AE " + fmt(ae_m));
    }

    // --- criterion 10: splits beats raw pixels at the 25% budget by >= 1 SE
    {
        const double gap = splits_res.mean_at(kQuarter) - raw_res.mean_at(kQuarter);
        const double se = combined_se(splits_res, raw_res, kQuarter);
        report(10, gap > 0.0 && gap >= se, "SRL-splits beats raw pixels at the 25% budget",
               "gap " + fmt(gap) + " vs 1 SE " + fmt(se));
    }

    // --- criterion 11: random features keep >= 50% of the GT policy's final reward
    {
        const double rf_m = rf_res.mean_at(kFinal), gt_m = gt_res.mean_at(kFinal);
        report(11, gt_m > 0.0 && rf_m > 0.5 * gt_m, "random features reach half the GT policy",
               "random " + fmt(rf_m) + " vs GT " + fmt(gt_m));
    }

    // --- criterion 12: state-dim and train-size studies
    {
        srl::EncoderSpec spec64 = desk.spec;
        spec64.state_dim = 64;
        srl::EncoderSpec spec4 = desk.spec;
        spec4.state_dim = 4;
        auto splits64 = train_model(srl::Method::srl_splits, spec64, ds5k, 2, "srl_splits dim64");
        auto splits4 = train_model(srl::Method::srl_splits, spec4, ds5k, 2, "srl_splits dim4");
        auto splits1k = train_model(srl::Method::srl_splits, desk.spec, ds1k, 2, "srl_splits 1k samples");

        const auto r64 = run_rl_seeds(splits64, desk, "splits dim64");
        const auto r4 = run_rl_seeds(splits4, desk, "splits dim4");
        const auto r1k = run_rl_seeds(splits1k, desk, "splits 1k-samples");

        const double m32 = splits_res.mean_at(kFinal), m64 = r64.mean_at(kFinal),
                     m4 = r4.mean_at(kFinal), m1k = r1k.mean_at(kFinal);
        const bool plateau = std::abs(m32 - m64) <= combined_se(splits_res, r64, kFinal);
        const bool dim4_worse = m4 < m32 - combined_se(r4, splits_res, kFinal) &&
                                m4 < m64 - combined_se(r4, r64, kFinal);
        const bool size_worse = m1k < m32 - combined_se(r1k, splits_res, kFinal);
        report(12, plateau && dim4_worse && size_worse,
               "dim 32 ~ dim 64, dim 4 strictly worse; 1k samples strictly worse than 5k",
               "d32 " + fmt(m32) + ", d64 " + fmt(m64) + ", d4 " + fmt(m4) + ", n1k " + fmt(m1k));
    }
}

}  // namespace

int main(int argc, char** argv) {
    bool properties = true, repro = true;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--properties") == 0) repro = false;
        if (std::strcmp(argv[i], "--repro") == 0) properties = false;
    }
    if (properties) {
        criterion_1_autodiff();
        criterion_2_gtc();
        criterion_3_split_isolation();
        criterion_4_loss_arithmetic();
        criterion_5_environment();
        criterion_6_determinism();
        criterion_7_ppo();
    }
    if (repro) run_reproductions();

    if (g_failures == 0) {
        std::cout << "acceptance: all criteria passed\n";
        return 0;
    }
    std::cout << "acceptance: " << g_failures << " criterion(s) failed\n";
    return 1;
}
