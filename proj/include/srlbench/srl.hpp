#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "srlbench/dataset.hpp"
#include "srlbench/metrics.hpp"
#include "srlbench/nn.hpp"
#include "srlbench/norm.hpp"
#include "srlbench/optim.hpp"

namespace srlbench::srl {

enum class Method {
    srl_splits,
    srl_combination,
    autoencoder,
    supervised,
    random_features,
    ground_truth,
    raw_pixels,
};

std::string method_name(Method m);
Method method_from_name(const std::string& name);
bool is_learned(Method m);

enum class Loss { reconstruction, reward, inverse, forward };

std::string loss_name(Loss l);

struct EncoderSpec {
    enum class Arch { mlp, smallcnn };
    Arch arch = Arch::mlp;
    int image_size = 32;  // H = W, 3 channels
    std::vector<int> hidden = {64, 64};
    std::vector<int> conv_channels = {8, 16};
    int state_dim = 32;

    int obs_dim() const { return image_size * image_size * 3; }
};

struct SplitEntry {
    std::vector<Loss> losses;  // sorted, unique
    int begin = 0;
    int end = 0;
    int width() const { return end - begin; }
};

// Assignment of losses to disjoint slices of the state vector. "a+b" in the
// grammar shares one slice, "a/b" opens a new one; e.g. "ae+rew/inv" puts
// reconstruction and reward on the first slice and inverse on the second.
struct SplitLayout {
    std::vector<SplitEntry> entries;

    void validate(int state_dim) const;
    bool has_loss(Loss l) const;
    const SplitEntry& entry_for(Loss l) const;
    std::vector<Loss> active_losses() const;

    static SplitLayout single(std::vector<Loss> losses, int state_dim);
    static SplitLayout parse(const std::string& grammar, int state_dim);
    std::string to_string() const;
};

struct LossWeights {
    double reconstruction = 1.0;
    double reward = 1.0;
    double inverse = 2.0;
    double forward = 0.0;

    double of(Loss l) const;
    void validate() const;
};

struct TrainConfig {
    int epochs = 30;
    int batch_size = 64;
    ad::OptimizerConfig optimizer{.learning_rate = 5e-3};
    uint64_t seed = 0;
    bool reward_class_weighting = false;
    double val_fraction = 0.1;  // used only if the dataset arrives unsplit
};

struct SrlTrainReport {
    struct EpochStats {
        double train_total = 0.0;
        double val_total = 0.0;
        std::map<std::string, double> train_heads;
        std::map<std::string, double> val_heads;
    };
    std::vector<EpochStats> epochs;
    int selected_epoch = -1;
    double wall_clock_seconds = 0.0;
};

struct LossBreakdown {
    double total = 0.0;
    std::map<std::string, double> per_head;  // unweighted per-loss values
};

// Normalized minibatch ready for the loss heads.
struct Batch {
    ad::Tensor obs;       // [B, obs_dim]
    ad::Tensor next_obs;  // [B, obs_dim]
    std::vector<int> actions;
    std::vector<int> reward_classes;  // reward + 1
    ad::Tensor gt;        // [B, gt_dim]
};

// State-representation model: shared extractor + linear projection to the
// state vector, with loss heads reading only their layout slices. The
// passthrough methods (ground_truth, raw_pixels) carry no parameters.
class SrlModel {
public:
    Method method = Method::srl_splits;
    EncoderSpec spec;
    SplitLayout layout;
    LossWeights weights;
    int gt_dim = 4;
    // pixels into the networks are always /255; the running mean/std below
    // normalizes the *state vector* handed to the policy, fitted over the
    // training split after SRL training and frozen thereafter
    data::NormStats pixel_norm{data::NormMode::pixel_scale, 0};
    data::NormStats state_norm{data::NormMode::running_meanstd, 0};
    std::optional<std::vector<double>> reward_class_weights;

    nn::Mlp trunk;          // extractor body (ends with a ReLU into projection)
    std::vector<nn::Conv2d> convs;  // smallcnn extractor
    nn::Linear projection;  // extractor output -> state vector
    nn::Mlp decoder;        // reconstruction slice -> image
    nn::Mlp reward_head;    // (s_t, s_t+1) slices -> 3 classes
    nn::Linear inverse_head;   // (s_t, s_t+1) slices -> action logits
    nn::Linear forward_head;   // (s_t slice, one-hot action) -> next slice

    int output_dim() const;
    bool has_parameters() const { return is_learned(method); }
    bool trainable() const { return has_parameters() && method != Method::random_features; }

    nn::NamedParams params() const;

    // [B, obs_dim] normalized pixels -> [B, output_dim]
    ad::Tensor encode_batch(ad::Tape* tape, const ad::Tensor& normalized_obs) const;

    // Single observation through the frozen model (passthroughs read gt /
    // raw pixels from the StepResult). Returns the raw state vector.
    std::vector<double> encode(const env::StepResult& step) const;

    // State as the policy sees it: encode() plus the frozen running
    // mean/std filter when one was fitted.
    std::vector<double> encode_policy_input(const env::StepResult& step) const;

    // Network-side pixel preprocessing: /255, and zero-centering for the
    // learned encoders.
    std::vector<double> net_input(const env::Image& image) const;

    ad::Tensor loss(ad::Tape* tape, const Batch& batch, LossBreakdown* breakdown = nullptr) const;

    Batch make_batch(std::span<const data::TransitionRecord> records,
                     std::span<const int64_t> indices) const;
};

SrlModel build(Method method, const EncoderSpec& spec, int gt_dim,
               const SplitLayout* layout = nullptr, const LossWeights* weights = nullptr,
               uint64_t seed = 0);

SrlTrainReport train(SrlModel& model, data::Dataset& dataset, const TrainConfig& cfg);

// Learned states over the given records' observations, one row per record.
metrics::Mat encode_matrix(const SrlModel& model, std::span<const data::TransitionRecord> records);
metrics::Mat gt_matrix(std::span<const data::TransitionRecord> records);

// Checkpoint (parameter container) + JSON sidecar with method, layout,
// weights, normalization stats and the training report.
void save_model(const SrlModel& model, const std::string& ckpt_path,
                const std::string& sidecar_path, const SrlTrainReport* report = nullptr);
SrlModel load_model(const std::string& ckpt_path, const std::string& sidecar_path);

}  // namespace srlbench::srl
