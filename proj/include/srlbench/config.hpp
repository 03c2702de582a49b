#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "srlbench/env.hpp"
#include "srlbench/rl.hpp"
#include "srlbench/srl.hpp"

namespace srlbench::harness {

// Configuration problems exit with code 1; everything else with 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataConfig {
    int64_t samples = 5000;
    uint64_t seed = 1;
    double val_fraction = 0.1;
};

struct SrlSection {
    srl::Method method = srl::Method::srl_splits;
    srl::EncoderSpec encoder;  // image_size mirrors the env section
    std::string layout;        // split grammar, "" = method default
    srl::LossWeights weights;
    int epochs = 30;
    int batch_size = 64;
    uint64_t seed = 2;
    bool reward_class_weighting = false;
    ad::OptimizerConfig optimizer;
};

struct RlSection {
    rl::PpoConfig ppo;
    std::vector<uint64_t> seeds = {0, 1, 2};
};

// One experiment, fully defaulted; unknown keys are rejected with the
// offending key path. Serialization round-trips exactly.
struct ExperimentConfig {
    int format_version = 1;
    std::string output_dir = "runs/default";
    env::NavConfig env;
    DataConfig data;
    SrlSection srl;
    RlSection rl;

    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig load_file(const std::string& path);
    void save_file(const std::string& path) const;

    std::string canonical() const { return to_json().dump(); }
    std::string config_hash() const;
    void validate() const;

    bool operator==(const ExperimentConfig& other) const {
        return canonical() == other.canonical();
    }
};

// Walks `input` against `schema` and throws ConfigError naming the key path
// of any key missing from the schema.
void reject_unknown_keys(const nlohmann::json& input, const nlohmann::json& schema,
                         const std::string& path);

}  // namespace srlbench::harness
