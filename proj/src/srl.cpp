#include "srlbench/srl.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "srlbench/checkpoint.hpp"
#include "srlbench/json_io.hpp"

namespace srlbench::srl {

namespace {

constexpr int kNumActions = env::NavEnv::kNumActions;
constexpr int kRewardClasses = 3;

const std::vector<std::pair<Method, std::string>>& method_table() {
    static const std::vector<std::pair<Method, std::string>> table = {
        {Method::srl_splits, "srl_splits"},
        {Method::srl_combination, "srl_combination"},
        {Method::autoencoder, "autoencoder"},
        {Method::supervised, "supervised"},
        {Method::random_features, "random_features"},
        {Method::ground_truth, "ground_truth"},
        {Method::raw_pixels, "raw_pixels"},
    };
    return table;
}

}  // namespace

std::string method_name(Method m) {
    for (const auto& [k, v] : method_table()) {
        if (k == m) return v;
    }
    throw std::logic_error("unknown method");
}

Method method_from_name(const std::string& name) {
    for (const auto& [k, v] : method_table()) {
        if (v == name) return k;
    }
    throw std::invalid_argument("unknown SRL method: " + name);
}

bool is_learned(Method m) {
    return m != Method::ground_truth && m != Method::raw_pixels;
}

std::string loss_name(Loss l) {
    switch (l) {
        case Loss::reconstruction: return "reconstruction";
        case Loss::reward: return "reward";
        case Loss::inverse: return "inverse";
        case Loss::forward: return "forward";
    }
    throw std::logic_error("unknown loss");
}

void SplitLayout::validate(int state_dim) const {
    if (entries.empty()) throw std::invalid_argument("layout: no entries");
    std::vector<SplitEntry> sorted = entries;
    std::sort(sorted.begin(), sorted.end(),
              [](const SplitEntry& a, const SplitEntry& b) { return a.begin < b.begin; });
    int cursor = 0;
    for (const auto& e : sorted) {
        if (e.losses.empty()) throw std::invalid_argument("layout: entry with no losses");
        if (e.begin != cursor) {
            throw std::invalid_argument("layout: slices must be disjoint and cover the state vector");
        }
        if (e.end <= e.begin) throw std::invalid_argument("layout: empty slice");
        cursor = e.end;
    }
    if (cursor != state_dim) {
        throw std::invalid_argument("layout: slices cover [0, " + std::to_string(cursor) +
                                    ") but state_dim is " + std::to_string(state_dim));
    }
    int counts[4] = {0, 0, 0, 0};
    for (const auto& e : entries) {
        for (Loss l : e.losses) counts[static_cast<int>(l)]++;
    }
    for (int i = 0; i < 4; ++i) {
        if (counts[i] > 1) {
            throw std::invalid_argument("layout: loss " + loss_name(static_cast<Loss>(i)) +
                                        " assigned to more than one slice");
        }
    }
}

bool SplitLayout::has_loss(Loss l) const {
    for (const auto& e : entries) {
        if (std::find(e.losses.begin(), e.losses.end(), l) != e.losses.end()) return true;
    }
    return false;
}

const SplitEntry& SplitLayout::entry_for(Loss l) const {
    for (const auto& e : entries) {
        if (std::find(e.losses.begin(), e.losses.end(), l) != e.losses.end()) return e;
    }
    throw std::invalid_argument("layout: loss " + loss_name(l) + " not assigned");
}

std::vector<Loss> SplitLayout::active_losses() const {
    std::vector<Loss> out;
    for (Loss l : {Loss::reconstruction, Loss::reward, Loss::inverse, Loss::forward}) {
        if (has_loss(l)) out.push_back(l);
    }
    return out;
}

SplitLayout SplitLayout::single(std::vector<Loss> losses, int state_dim) {
    SplitLayout layout;
    std::sort(losses.begin(), losses.end());
    layout.entries.push_back({std::move(losses), 0, state_dim});
    return layout;
}

namespace {

Loss loss_from_token(std::string tok) {
    std::transform(tok.begin(), tok.end(), tok.begin(), [](unsigned char c) { return std::tolower(c); });
    if (tok == "ae" || tok == "autoencoder" || tok == "reconstruction") return Loss::reconstruction;
    if (tok == "rew" || tok == "reward") return Loss::reward;
    if (tok == "inv" || tok == "inverse") return Loss::inverse;
    if (tok == "fwd" || tok == "forward") return Loss::forward;
    throw std::invalid_argument("layout grammar: unknown loss token '" + tok + "'");
}

std::string loss_token(Loss l) {
    switch (l) {
        case Loss::reconstruction: return "ae";
        case Loss::reward: return "rew";
        case Loss::inverse: return "inv";
        case Loss::forward: return "fwd";
    }
    throw std::logic_error("unknown loss");
}

std::vector<std::string> split_string(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            parts.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur.push_back(c);
        }
    }
    parts.push_back(cur);
    return parts;
}

// Slice widths follow the paper's pattern: the trailing (inverse-style)
// slice stays small (2 dims), a middle slice gets ~6/32 of the state, the
// first slice takes the remainder.
std::vector<int> layout_widths(int groups, int state_dim) {
    if (groups > state_dim) {
        throw std::invalid_argument("layout grammar: more slices than state dimensions");
    }
    std::vector<int> widths(static_cast<size_t>(groups), 0);
    if (groups == 1) {
        widths[0] = state_dim;
        return widths;
    }
    widths[static_cast<size_t>(groups - 1)] = std::min(2, state_dim - (groups - 1));
    for (int i = 1; i < groups - 1; ++i) {
        widths[static_cast<size_t>(i)] =
            std::max(1, static_cast<int>(std::lround(state_dim * 6.0 / 32.0)));
    }
    int used = 0;
    for (int i = 1; i < groups; ++i) used += widths[static_cast<size_t>(i)];
    widths[0] = state_dim - used;
    // shrink middle slices if the first would vanish
    for (int i = groups - 2; i >= 1 && widths[0] < 1; --i) {
        const int give = std::min(widths[static_cast<size_t>(i)] - 1, 1 - widths[0]);
        widths[static_cast<size_t>(i)] -= give;
        widths[0] += give;
    }
    if (widths[0] < 1) throw std::invalid_argument("layout grammar: state_dim too small for layout");
    return widths;
}

}  // namespace

SplitLayout SplitLayout::parse(const std::string& grammar, int state_dim) {
    const std::vector<std::string> groups = split_string(grammar, '/');
    std::vector<std::vector<Loss>> group_losses;
    for (const auto& g : groups) {
        std::vector<Loss> losses;
        for (const auto& tok : split_string(g, '+')) {
            if (tok.empty()) throw std::invalid_argument("layout grammar: empty loss token in '" + grammar + "'");
            losses.push_back(loss_from_token(tok));
        }
        std::sort(losses.begin(), losses.end());
        losses.erase(std::unique(losses.begin(), losses.end()), losses.end());
        group_losses.push_back(std::move(losses));
    }
    const std::vector<int> widths = layout_widths(static_cast<int>(group_losses.size()), state_dim);
    SplitLayout layout;
    int cursor = 0;
    for (size_t i = 0; i < group_losses.size(); ++i) {
        layout.entries.push_back({std::move(group_losses[i]), cursor, cursor + widths[i]});
        cursor += widths[i];
    }
    layout.validate(state_dim);
    return layout;
}

std::string SplitLayout::to_string() const {
    std::vector<SplitEntry> sorted = entries;
    std::sort(sorted.begin(), sorted.end(),
              [](const SplitEntry& a, const SplitEntry& b) { return a.begin < b.begin; });
    std::string out;
    for (size_t i = 0; i < sorted.size(); ++i) {
        if (i) out += "/";
        std::vector<Loss> losses = sorted[i].losses;
        std::sort(losses.begin(), losses.end());
        for (size_t j = 0; j < losses.size(); ++j) {
            if (j) out += "+";
            out += loss_token(losses[j]);
        }
    }
    return out;
}

double LossWeights::of(Loss l) const {
    switch (l) {
        case Loss::reconstruction: return reconstruction;
        case Loss::reward: return reward;
        case Loss::inverse: return inverse;
        case Loss::forward: return forward;
    }
    throw std::logic_error("unknown loss");
}

void LossWeights::validate() const {
    for (Loss l : {Loss::reconstruction, Loss::reward, Loss::inverse, Loss::forward}) {
        if (of(l) < 0.0) throw std::invalid_argument("loss weights must be non-negative");
    }
    if (reconstruction == 0.0 && reward == 0.0 && inverse == 0.0 && forward == 0.0) {
        throw std::invalid_argument("at least one loss weight must be positive");
    }
}

int SrlModel::output_dim() const {
    switch (method) {
        case Method::ground_truth: return gt_dim;
        case Method::raw_pixels: return spec.obs_dim();
        case Method::supervised: return gt_dim;
        default: return spec.state_dim;
    }
}

nn::NamedParams SrlModel::params() const {
    nn::NamedParams out;
    if (!has_parameters()) return out;
    if (spec.arch == EncoderSpec::Arch::mlp) {
        trunk.collect(out, "trunk");
    } else {
        for (size_t i = 0; i < convs.size(); ++i) convs[i].collect(out, "conv" + std::to_string(i));
    }
    projection.collect(out, "projection");
    if (layout.has_loss(Loss::reconstruction)) decoder.collect(out, "decoder");
    if (layout.has_loss(Loss::reward)) reward_head.collect(out, "reward_head");
    if (layout.has_loss(Loss::inverse)) inverse_head.collect(out, "inverse_head");
    if (layout.has_loss(Loss::forward)) forward_head.collect(out, "forward_head");
    return out;
}

ad::Tensor SrlModel::encode_batch(ad::Tape* tape, const ad::Tensor& normalized_obs) const {
    if (method == Method::ground_truth) {
        throw std::logic_error("ground_truth passthrough does not encode observations");
    }
    if (method == Method::raw_pixels) return normalized_obs;
    if (normalized_obs.ndim() != 2 || normalized_obs.dim(1) != spec.obs_dim()) {
        throw std::invalid_argument("encode: observation batch shape " +
                                    ad::shape_str(normalized_obs.shape()) + " does not match [B, " +
                                    std::to_string(spec.obs_dim()) + "]");
    }
    ad::Tensor h;
    if (spec.arch == EncoderSpec::Arch::mlp) {
        h = ad::relu(tape, trunk.forward(tape, normalized_obs));
    } else {
        const int b = normalized_obs.dim(0);
        ad::Tensor x = ad::reshape(tape, normalized_obs, {b, 3, spec.image_size, spec.image_size});
        for (const auto& conv : convs) x = ad::relu(tape, conv.forward(tape, x));
        h = ad::flatten(tape, x);
    }
    return projection.forward(tape, h);
}

std::vector<double> SrlModel::net_input(const env::Image& image) const {
    std::vector<double> obs = pixel_norm.normalize_image(image);
    // learned encoders see zero-centered pixels; the raw-pixels passthrough
    // stays plain /255
    if (method != Method::raw_pixels) {
        for (double& v : obs) v -= 0.5;
    }
    return obs;
}

std::vector<double> SrlModel::encode(const env::StepResult& step) const {
    if (method == Method::ground_truth) return step.gt_state;
    if (step.observation.empty()) {
        throw std::invalid_argument("encode: step carries no rendered observation");
    }
    std::vector<double> obs = net_input(step.observation);
    if (method == Method::raw_pixels) return obs;
    const int obs_dim = static_cast<int>(obs.size());
    ad::Tensor x = ad::Tensor::from_vector({1, obs_dim}, std::move(obs));
    ad::Tensor s = encode_batch(nullptr, x);
    return s.data();
}

std::vector<double> SrlModel::encode_policy_input(const env::StepResult& step) const {
    std::vector<double> state = encode(step);
    if (state_norm.count > 0 && state_norm.dim() == static_cast<int64_t>(state.size())) {
        std::vector<double> out(state.size());
        state_norm.normalize(std::span<const double>(state), std::span<double>(out));
        return out;
    }
    return state;
}

ad::Tensor SrlModel::loss(ad::Tape* tape, const Batch& batch, LossBreakdown* breakdown) const {
    if (!trainable() && method != Method::random_features) {
        throw std::logic_error("loss: method " + method_name(method) + " has no training loss");
    }
    const ad::Tensor s_t = encode_batch(tape, batch.obs);

    ad::Tensor total = ad::Tensor::scalar(0.0);
    LossBreakdown bd;

    if (method == Method::supervised) {
        const ad::Tensor l = ad::mse(tape, s_t, batch.gt);
        bd.per_head["supervised"] = l.item();
        total = l;
        bd.total = total.item();
        if (breakdown) *breakdown = bd;
        return total;
    }

    const bool needs_next = layout.has_loss(Loss::reward) || layout.has_loss(Loss::inverse) ||
                            layout.has_loss(Loss::forward);
    ad::Tensor s_next;
    if (needs_next) {
        if (!batch.next_obs.defined() || batch.next_obs.size() == 0) {
            throw std::invalid_argument("loss: batch lacks next observations required by the layout");
        }
        s_next = encode_batch(tape, batch.next_obs);
    }

    auto slice_of = [&](const ad::Tensor& s, Loss l) {
        const SplitEntry& e = layout.entry_for(l);
        return ad::slice(tape, s, e.begin, e.end);
    };

    if (layout.has_loss(Loss::reconstruction)) {
        const ad::Tensor recon = decoder.forward(tape, slice_of(s_t, Loss::reconstruction));
        const ad::Tensor l = ad::mse(tape, recon, batch.obs);
        bd.per_head["reconstruction"] = l.item();
        total = ad::add(tape, total, ad::scale(tape, l, weights.reconstruction));
    }
    if (layout.has_loss(Loss::reward)) {
        const ad::Tensor x =
            ad::concat(tape, slice_of(s_t, Loss::reward), slice_of(s_next, Loss::reward));
        const ad::Tensor logits = reward_head.forward(tape, x);
        const ad::Tensor l = ad::cross_entropy(
            tape, logits, batch.reward_classes,
            reward_class_weights ? &reward_class_weights.value() : nullptr);
        bd.per_head["reward"] = l.item();
        total = ad::add(tape, total, ad::scale(tape, l, weights.reward));
    }
    if (layout.has_loss(Loss::inverse)) {
        const ad::Tensor x =
            ad::concat(tape, slice_of(s_t, Loss::inverse), slice_of(s_next, Loss::inverse));
        const ad::Tensor logits = inverse_head.forward(tape, x);
        const ad::Tensor l = ad::cross_entropy(tape, logits, batch.actions);
        bd.per_head["inverse"] = l.item();
        total = ad::add(tape, total, ad::scale(tape, l, weights.inverse));
    }
    if (layout.has_loss(Loss::forward)) {
        const ad::Tensor x = ad::concat(tape, slice_of(s_t, Loss::forward),
                                        ad::one_hot(batch.actions, kNumActions));
        const ad::Tensor pred = forward_head.forward(tape, x);
        // next-state slice is a target, not a gradient path
        const ad::Tensor target = slice_of(s_next, Loss::forward).detach();
        const ad::Tensor l = ad::mse(tape, pred, target);
        bd.per_head["forward"] = l.item();
        total = ad::add(tape, total, ad::scale(tape, l, weights.forward));
    }

    bd.total = total.item();
    if (breakdown) *breakdown = bd;
    return total;
}

Batch SrlModel::make_batch(std::span<const data::TransitionRecord> records,
                           std::span<const int64_t> indices) const {
    const int b = static_cast<int>(indices.size());
    const int obs_dim = spec.obs_dim();
    Batch batch;
    std::vector<double> obs(static_cast<size_t>(b) * obs_dim);
    std::vector<double> next_obs(static_cast<size_t>(b) * obs_dim);
    std::vector<double> gt(static_cast<size_t>(b) * gt_dim);
    batch.actions.resize(static_cast<size_t>(b));
    batch.reward_classes.resize(static_cast<size_t>(b));
    for (int i = 0; i < b; ++i) {
        const data::TransitionRecord& r = records[static_cast<size_t>(indices[static_cast<size_t>(i)])];
        const std::vector<double> o = net_input(r.obs);
        const std::vector<double> no = net_input(r.next_obs);
        std::copy(o.begin(), o.end(), obs.begin() + static_cast<int64_t>(i) * obs_dim);
        std::copy(no.begin(), no.end(), next_obs.begin() + static_cast<int64_t>(i) * obs_dim);
        std::copy(r.gt_state.begin(), r.gt_state.end(), gt.begin() + static_cast<int64_t>(i) * gt_dim);
        batch.actions[static_cast<size_t>(i)] = r.action;
        batch.reward_classes[static_cast<size_t>(i)] = r.reward + 1;
    }
    batch.obs = ad::Tensor::from_vector({b, obs_dim}, std::move(obs));
    batch.next_obs = ad::Tensor::from_vector({b, obs_dim}, std::move(next_obs));
    batch.gt = ad::Tensor::from_vector({b, gt_dim}, std::move(gt));
    return batch;
}

SrlModel build(Method method, const EncoderSpec& spec, int gt_dim, const SplitLayout* layout,
               const LossWeights* weights, uint64_t seed) {
    if (spec.state_dim < 1) throw std::invalid_argument("build: state_dim must be positive");
    if (gt_dim < 1) throw std::invalid_argument("build: gt_dim must be positive");

    SrlModel model;
    model.method = method;
    model.spec = spec;
    model.gt_dim = gt_dim;
    if (weights) model.weights = *weights;
    model.weights.validate();

    if (!is_learned(method)) return model;

    switch (method) {
        case Method::srl_splits:
            model.layout = layout ? *layout
                                  : SplitLayout::parse("ae+rew/inv", spec.state_dim);
            break;
        case Method::srl_combination:
            model.layout = layout ? *layout
                                  : SplitLayout::single(
                                        {Loss::reconstruction, Loss::reward, Loss::inverse},
                                        spec.state_dim);
            break;
        case Method::autoencoder:
            model.layout = layout ? *layout : SplitLayout::single({Loss::reconstruction}, spec.state_dim);
            break;
        default:
            // supervised / random_features have no loss heads driven by the layout
            break;
    }
    const bool has_layout = !model.layout.entries.empty();
    if (has_layout) model.layout.validate(spec.state_dim);

    Rng rng(mix_seed(seed, 0x5EED5E7));
    const int out_dim = method == Method::supervised ? gt_dim : spec.state_dim;

    int trunk_out;
    if (spec.arch == EncoderSpec::Arch::mlp) {
        if (spec.hidden.empty()) throw std::invalid_argument("build: mlp encoder needs hidden sizes");
        std::vector<int> body(spec.hidden.begin(), spec.hidden.end() - 1);
        model.trunk = nn::Mlp(spec.obs_dim(), body, spec.hidden.back(), nn::Activation::relu, rng);
        trunk_out = spec.hidden.back();
    } else {
        if (spec.conv_channels.empty()) throw std::invalid_argument("build: smallcnn encoder needs channels");
        int c = 3, side = spec.image_size;
        for (int oc : spec.conv_channels) {
            model.convs.emplace_back(c, oc, 3, 2, 0, rng);
            c = oc;
            side = (side - 3) / 2 + 1;
            if (side < 1) throw std::invalid_argument("build: image too small for conv stack");
        }
        trunk_out = c * side * side;
    }
    model.projection = nn::Linear(trunk_out, out_dim, nn::Activation::linear, rng);

    if (has_layout) {
        if (model.layout.has_loss(Loss::reconstruction)) {
            const int w = model.layout.entry_for(Loss::reconstruction).width();
            std::vector<int> rev(spec.hidden.rbegin(), spec.hidden.rend());
            model.decoder = nn::Mlp(w, rev, spec.obs_dim(), nn::Activation::relu, rng);
        }
        if (model.layout.has_loss(Loss::reward)) {
            const int w = model.layout.entry_for(Loss::reward).width();
            model.reward_head = nn::Mlp(2 * w, {16, 16}, kRewardClasses, nn::Activation::relu, rng);
        }
        if (model.layout.has_loss(Loss::inverse)) {
            const int w = model.layout.entry_for(Loss::inverse).width();
            model.inverse_head = nn::Linear(2 * w, kNumActions, nn::Activation::linear, rng);
        }
        if (model.layout.has_loss(Loss::forward)) {
            const int w = model.layout.entry_for(Loss::forward).width();
            model.forward_head = nn::Linear(w + kNumActions, w, nn::Activation::linear, rng);
        }
    }

    if (method == Method::random_features) {
        nn::set_requires_grad(model.params(), false);
    }
    return model;
}

namespace {

std::vector<double> inverse_frequency_weights(std::span<const data::TransitionRecord> records) {
    std::vector<double> counts(kRewardClasses, 0.0);
    for (const auto& r : records) counts[static_cast<size_t>(r.reward + 1)] += 1.0;
    std::vector<double> w(kRewardClasses, 0.0);
    const double total = static_cast<double>(records.size());
    for (int c = 0; c < kRewardClasses; ++c) {
        if (counts[static_cast<size_t>(c)] > 0.0) {
            w[static_cast<size_t>(c)] = total / (kRewardClasses * counts[static_cast<size_t>(c)]);
        }
    }
    return w;
}

// average of per-batch losses over a record span, no gradients
SrlTrainReport::EpochStats eval_split(const SrlModel& model,
                                      std::span<const data::TransitionRecord> records,
                                      int batch_size, bool as_val) {
    SrlTrainReport::EpochStats stats;
    double total = 0.0;
    std::map<std::string, double> heads;
    int64_t seen = 0;
    std::vector<int64_t> idx(records.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (size_t start = 0; start < idx.size(); start += static_cast<size_t>(batch_size)) {
        const size_t end = std::min(idx.size(), start + static_cast<size_t>(batch_size));
        const Batch b = model.make_batch(records, std::span<const int64_t>(idx).subspan(start, end - start));
        LossBreakdown bd;
        model.loss(nullptr, b, &bd);
        const auto n = static_cast<double>(end - start);
        total += bd.total * n;
        for (const auto& [k, v] : bd.per_head) heads[k] += v * n;
        seen += static_cast<int64_t>(end - start);
    }
    total /= static_cast<double>(seen);
    for (auto& [k, v] : heads) v /= static_cast<double>(seen);
    if (as_val) {
        stats.val_total = total;
        stats.val_heads = heads;
    } else {
        stats.train_total = total;
        stats.train_heads = heads;
    }
    return stats;
}

}  // namespace

SrlTrainReport train(SrlModel& model, data::Dataset& dataset, const TrainConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    SrlTrainReport report;

    if (dataset.split_marker == static_cast<int64_t>(dataset.records.size())) {
        data::split_by_episode(dataset, cfg.val_fraction);
    }
    const auto train_records = dataset.train();
    const auto val_records = dataset.val();
    if (train_records.empty() || val_records.empty()) {
        throw std::invalid_argument("train: dataset split has an empty side");
    }

    // running mean/std over the state vectors the encoder produces on the
    // training split; frozen here, applied as the policy's input filter
    auto fit_state_norm = [&](SrlModel& m) {
        m.state_norm = data::NormStats(data::NormMode::running_meanstd, m.output_dim());
        const metrics::Mat states = encode_matrix(m, train_records);
        for (int64_t r = 0; r < states.rows; ++r) {
            m.state_norm.update(std::span<const double>(
                states.values.data() + r * states.cols, static_cast<size_t>(states.cols)));
        }
    };

    if (!model.has_parameters()) {
        report.wall_clock_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return report;
    }
    if (cfg.reward_class_weighting && model.layout.has_loss(Loss::reward)) {
        model.reward_class_weights = inverse_frequency_weights(train_records);
    }

    if (!model.trainable()) {  // random_features: normalization statistics only, no updates
        fit_state_norm(model);
        report.wall_clock_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return report;
    }

    nn::NamedParams named = model.params();
    std::vector<ad::Tensor> params;
    for (const auto& [name, t] : named) params.push_back(t);
    ad::Optimizer opt(cfg.optimizer, params);

    std::vector<int64_t> order(train_records.size());
    std::iota(order.begin(), order.end(), 0);

    double best_val = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> best_snapshot;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(mix_seed(cfg.seed, 0xE90C + static_cast<uint64_t>(epoch)));
        shuffle_rng.shuffle(order);

        double train_total = 0.0;
        std::map<std::string, double> train_heads;
        int64_t seen = 0;

        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
            const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
            const Batch batch =
                model.make_batch(train_records, std::span<const int64_t>(order).subspan(start, end - start));
            ad::Tape tape;
            LossBreakdown bd;
            try {
                ad::Tensor loss = model.loss(&tape, batch, &bd);
                opt.zero_grad();
                tape.backward(loss);
                opt.step();
            } catch (const std::runtime_error& e) {
                std::ostringstream os;
                os << "srl train aborted at epoch " << epoch << ", batch " << start / cfg.batch_size
                   << ": " << e.what() << " (per-head:";
                for (const auto& [k, v] : bd.per_head) os << " " << k << "=" << v;
                os << ")";
                throw std::runtime_error(os.str());
            }
            const auto n = static_cast<double>(end - start);
            train_total += bd.total * n;
            for (const auto& [k, v] : bd.per_head) train_heads[k] += v * n;
            seen += static_cast<int64_t>(end - start);
        }

        SrlTrainReport::EpochStats stats = eval_split(model, val_records, cfg.batch_size, true);
        stats.train_total = train_total / static_cast<double>(seen);
        for (auto& [k, v] : train_heads) stats.train_heads[k] = v / static_cast<double>(seen);

        if (stats.val_total < best_val) {
            best_val = stats.val_total;
            best_snapshot = nn::snapshot(named);
            report.selected_epoch = epoch;
        }
        report.epochs.push_back(std::move(stats));
    }

    if (!best_snapshot.empty()) nn::restore(named, best_snapshot);
    fit_state_norm(model);
    report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

metrics::Mat encode_matrix(const SrlModel& model, std::span<const data::TransitionRecord> records) {
    metrics::Mat m;
    m.rows = static_cast<int64_t>(records.size());
    m.cols = model.output_dim();
    m.values.reserve(static_cast<size_t>(m.rows * m.cols));
    if (model.method == Method::ground_truth) {
        for (const auto& r : records) m.values.insert(m.values.end(), r.gt_state.begin(), r.gt_state.end());
        return m;
    }
    // batched to keep the matmul path hot
    constexpr int kChunk = 256;
    std::vector<int64_t> idx(records.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (size_t start = 0; start < idx.size(); start += kChunk) {
        const size_t end = std::min(idx.size(), start + kChunk);
        const int b = static_cast<int>(end - start);
        std::vector<double> obs(static_cast<size_t>(b) * model.spec.obs_dim());
        for (int i = 0; i < b; ++i) {
            const std::vector<double> o = model.net_input(records[start + static_cast<size_t>(i)].obs);
            std::copy(o.begin(), o.end(), obs.begin() + static_cast<int64_t>(i) * model.spec.obs_dim());
        }
        ad::Tensor x = ad::Tensor::from_vector({b, model.spec.obs_dim()}, std::move(obs));
        ad::Tensor s = model.encode_batch(nullptr, x);
        m.values.insert(m.values.end(), s.data().begin(), s.data().end());
    }
    return m;
}

metrics::Mat gt_matrix(std::span<const data::TransitionRecord> records) {
    metrics::Mat m;
    m.rows = static_cast<int64_t>(records.size());
    m.cols = records.empty() ? 0 : static_cast<int64_t>(records.front().gt_state.size());
    m.values.reserve(static_cast<size_t>(m.rows * m.cols));
    for (const auto& r : records) m.values.insert(m.values.end(), r.gt_state.begin(), r.gt_state.end());
    return m;
}

namespace {

nlohmann::json norm_to_json(const data::NormStats& n) {
    return {{"mode", n.mode == data::NormMode::pixel_scale ? "pixel_scale" : "running_meanstd"},
            {"mean", n.mean},
            {"m2", n.m2},
            {"count", n.count}};
}

data::NormStats norm_from_json(const nlohmann::json& j) {
    data::NormStats n(j.at("mode").get<std::string>() == "pixel_scale"
                          ? data::NormMode::pixel_scale
                          : data::NormMode::running_meanstd,
                      0);
    n.mean = j.at("mean").get<std::vector<double>>();
    n.m2 = j.at("m2").get<std::vector<double>>();
    n.count = j.at("count").get<int64_t>();
    return n;
}

// wall-clock stays out of the sidecar so identical configs hash identically;
// the harness records timing in the run manifest instead
nlohmann::json report_to_json(const SrlTrainReport& r) {
    nlohmann::json epochs = nlohmann::json::array();
    for (const auto& e : r.epochs) {
        epochs.push_back({{"train_total", e.train_total},
                          {"val_total", e.val_total},
                          {"train_heads", e.train_heads},
                          {"val_heads", e.val_heads}});
    }
    return {{"epochs", epochs}, {"selected_epoch", r.selected_epoch}};
}

}  // namespace

void save_model(const SrlModel& model, const std::string& ckpt_path,
                const std::string& sidecar_path, const SrlTrainReport* report) {
    ad::save_checkpoint(ckpt_path, model.params());

    nlohmann::json j;
    j["method"] = method_name(model.method);
    j["encoder"] = {{"arch", model.spec.arch == EncoderSpec::Arch::mlp ? "mlp" : "smallcnn"},
                    {"image_size", model.spec.image_size},
                    {"hidden", model.spec.hidden},
                    {"conv_channels", model.spec.conv_channels},
                    {"state_dim", model.spec.state_dim}};
    j["layout"] = model.layout.entries.empty() ? "" : model.layout.to_string();
    j["weights"] = {{"reconstruction", model.weights.reconstruction},
                    {"reward", model.weights.reward},
                    {"inverse", model.weights.inverse},
                    {"forward", model.weights.forward}};
    j["gt_dim"] = model.gt_dim;
    j["state_norm"] = norm_to_json(model.state_norm);
    if (model.reward_class_weights) j["reward_class_weights"] = *model.reward_class_weights;
    if (report) j["report"] = report_to_json(*report);

    std::ofstream out(sidecar_path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open sidecar for writing: " + sidecar_path);
    out << j.dump(2) << "\n";
}

SrlModel load_model(const std::string& ckpt_path, const std::string& sidecar_path) {
    std::ifstream in(sidecar_path);
    if (!in) throw std::runtime_error("cannot open sidecar: " + sidecar_path);
    nlohmann::json j = nlohmann::json::parse(in);

    EncoderSpec spec;
    const nlohmann::json& enc = j.at("encoder");
    spec.arch = enc.at("arch").get<std::string>() == "mlp" ? EncoderSpec::Arch::mlp
                                                           : EncoderSpec::Arch::smallcnn;
    spec.image_size = enc.at("image_size").get<int>();
    spec.hidden = enc.at("hidden").get<std::vector<int>>();
    spec.conv_channels = enc.at("conv_channels").get<std::vector<int>>();
    spec.state_dim = enc.at("state_dim").get<int>();

    LossWeights weights;
    weights.reconstruction = j.at("weights").at("reconstruction").get<double>();
    weights.reward = j.at("weights").at("reward").get<double>();
    weights.inverse = j.at("weights").at("inverse").get<double>();
    weights.forward = j.at("weights").at("forward").get<double>();

    const Method method = method_from_name(j.at("method").get<std::string>());
    const int gt_dim = j.at("gt_dim").get<int>();
    const std::string layout_str = j.at("layout").get<std::string>();

    SplitLayout layout;
    const bool has_layout = !layout_str.empty();
    if (has_layout) layout = SplitLayout::parse(layout_str, spec.state_dim);

    SrlModel model = build(method, spec, gt_dim, has_layout ? &layout : nullptr, &weights, 0);
    model.state_norm = norm_from_json(j.at("state_norm"));
    if (j.contains("reward_class_weights")) {
        model.reward_class_weights = j.at("reward_class_weights").get<std::vector<double>>();
    }
    if (model.has_parameters()) ad::load_checkpoint_into(ckpt_path, model.params());
    if (model.method == Method::random_features) nn::set_requires_grad(model.params(), false);
    return model;
}

}  // namespace srlbench::srl
