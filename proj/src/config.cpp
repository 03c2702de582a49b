#include "srlbench/config.hpp"

#include <fstream>

#include "srlbench/hash.hpp"
#include "srlbench/json_io.hpp"

namespace srlbench::harness {

namespace {

template <typename T>
void get_if(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void reject_unknown_keys(const nlohmann::json& input, const nlohmann::json& schema,
                         const std::string& path) {
    if (!input.is_object()) return;
    for (const auto& [key, value] : input.items()) {
        const std::string key_path = path.empty() ? key : path + "." + key;
        if (!schema.is_object() || !schema.contains(key)) {
            throw ConfigError("unknown config key: " + key_path);
        }
        if (value.is_object()) reject_unknown_keys(value, schema.at(key), key_path);
    }
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json j;
    j["format_version"] = format_version;
    j["output_dir"] = output_dir;
    j["env"] = srlbench::to_json(env);
    j["data"] = {{"samples", data.samples}, {"seed", data.seed}, {"val_fraction", data.val_fraction}};
    j["srl"] = {
        {"method", srl::method_name(srl.method)},
        {"state_dim", srl.encoder.state_dim},
        {"arch", srl.encoder.arch == srl::EncoderSpec::Arch::mlp ? "mlp" : "smallcnn"},
        {"hidden", srl.encoder.hidden},
        {"conv_channels", srl.encoder.conv_channels},
        {"layout", srl.layout},
        {"weights",
         {{"reconstruction", srl.weights.reconstruction},
          {"reward", srl.weights.reward},
          {"inverse", srl.weights.inverse},
          {"forward", srl.weights.forward}}},
        {"epochs", srl.epochs},
        {"batch_size", srl.batch_size},
        {"seed", srl.seed},
        {"reward_class_weighting", srl.reward_class_weighting},
        {"optimizer", srlbench::to_json(srl.optimizer)},
    };
    j["rl"] = {
        {"clip_epsilon", rl.ppo.clip_epsilon},
        {"gamma", rl.ppo.gamma},
        {"gae_lambda", rl.ppo.gae_lambda},
        {"epochs", rl.ppo.epochs},
        {"minibatch_size", rl.ppo.minibatch_size},
        {"horizon", rl.ppo.horizon},
        {"entropy_coef", rl.ppo.entropy_coef},
        {"value_coef", rl.ppo.value_coef},
        {"learning_rate", rl.ppo.learning_rate},
        {"total_timesteps", rl.ppo.total_timesteps},
        {"eval_checkpoints", rl.ppo.eval_checkpoints},
        {"eval_episodes", rl.ppo.eval_episodes},
        {"policy_hidden", rl.ppo.policy_hidden},
        {"seeds", rl.seeds},
    };
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;  // defaults
    try {
        reject_unknown_keys(j, cfg.to_json(), "");

        get_if(j, "format_version", cfg.format_version);
        get_if(j, "output_dir", cfg.output_dir);

        if (j.contains("env")) {
            const nlohmann::json& e = j.at("env");
            if (e.contains("variant")) cfg.env.variant = variant_from_name(e.at("variant").get<std::string>());
            get_if(e, "arena_size", cfg.env.arena_size);
            get_if(e, "image_size", cfg.env.image_size);
            get_if(e, "max_steps", cfg.env.max_steps);
            get_if(e, "step_length", cfg.env.step_length);
            get_if(e, "target_radius", cfg.env.target_radius);
            get_if(e, "seed", cfg.env.seed);
            get_if(e, "render_observations", cfg.env.render_observations);
        }
        if (j.contains("data")) {
            const nlohmann::json& d = j.at("data");
            get_if(d, "samples", cfg.data.samples);
            get_if(d, "seed", cfg.data.seed);
            get_if(d, "val_fraction", cfg.data.val_fraction);
        }
        if (j.contains("srl")) {
            const nlohmann::json& s = j.at("srl");
            if (s.contains("method")) cfg.srl.method = srl::method_from_name(s.at("method").get<std::string>());
            get_if(s, "state_dim", cfg.srl.encoder.state_dim);
            if (s.contains("arch")) {
                const std::string arch = s.at("arch").get<std::string>();
                if (arch == "mlp") {
                    cfg.srl.encoder.arch = srl::EncoderSpec::Arch::mlp;
                } else if (arch == "smallcnn") {
                    cfg.srl.encoder.arch = srl::EncoderSpec::Arch::smallcnn;
                } else {
                    throw ConfigError("unknown encoder arch: " + arch);
                }
            }
            get_if(s, "hidden", cfg.srl.encoder.hidden);
            get_if(s, "conv_channels", cfg.srl.encoder.conv_channels);
            get_if(s, "layout", cfg.srl.layout);
            if (s.contains("weights")) {
                const nlohmann::json& w = s.at("weights");
                get_if(w, "reconstruction", cfg.srl.weights.reconstruction);
                get_if(w, "reward", cfg.srl.weights.reward);
                get_if(w, "inverse", cfg.srl.weights.inverse);
                get_if(w, "forward", cfg.srl.weights.forward);
            }
            get_if(s, "epochs", cfg.srl.epochs);
            get_if(s, "batch_size", cfg.srl.batch_size);
            get_if(s, "seed", cfg.srl.seed);
            get_if(s, "reward_class_weighting", cfg.srl.reward_class_weighting);
            if (s.contains("optimizer")) {
                nlohmann::json o = srlbench::to_json(cfg.srl.optimizer);
                o.merge_patch(s.at("optimizer"));
                cfg.srl.optimizer = optimizer_config_from_json(o);
            }
        }
        if (j.contains("rl")) {
            const nlohmann::json& r = j.at("rl");
            get_if(r, "clip_epsilon", cfg.rl.ppo.clip_epsilon);
            get_if(r, "gamma", cfg.rl.ppo.gamma);
            get_if(r, "gae_lambda", cfg.rl.ppo.gae_lambda);
            get_if(r, "epochs", cfg.rl.ppo.epochs);
            get_if(r, "minibatch_size", cfg.rl.ppo.minibatch_size);
            get_if(r, "horizon", cfg.rl.ppo.horizon);
            get_if(r, "entropy_coef", cfg.rl.ppo.entropy_coef);
            get_if(r, "value_coef", cfg.rl.ppo.value_coef);
            get_if(r, "learning_rate", cfg.rl.ppo.learning_rate);
            get_if(r, "total_timesteps", cfg.rl.ppo.total_timesteps);
            get_if(r, "eval_checkpoints", cfg.rl.ppo.eval_checkpoints);
            get_if(r, "eval_episodes", cfg.rl.ppo.eval_episodes);
            get_if(r, "policy_hidden", cfg.rl.ppo.policy_hidden);
            get_if(r, "seeds", cfg.rl.seeds);
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("invalid config: ") + e.what());
    }
    cfg.srl.encoder.image_size = cfg.env.image_size;
    return cfg;
}

ExperimentConfig ExperimentConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
    }
    return from_json(j);
}

void ExperimentConfig::save_file(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write config file: " + path);
    out << to_json().dump(2) << "\n";
}

std::string ExperimentConfig::config_hash() const {
    return sha256_hex(canonical());
}

void ExperimentConfig::validate() const {
    try {
        env.validate();
        srl.weights.validate();
        rl.ppo.validate();
        if (data.samples < 1) throw std::invalid_argument("data.samples must be at least 1");
        if (!(data.val_fraction > 0.0 && data.val_fraction < 1.0)) {
            throw std::invalid_argument("data.val_fraction must be in (0, 1)");
        }
        if (srl.epochs < 0 || srl.batch_size < 1) {
            throw std::invalid_argument("srl.epochs must be >= 0 and srl.batch_size >= 1");
        }
        if (srl.encoder.state_dim < 1) throw std::invalid_argument("srl.state_dim must be positive");
        if (!srl.layout.empty()) {
            srl::SplitLayout::parse(srl.layout, srl.encoder.state_dim);
        }
        if (rl.seeds.empty()) throw std::invalid_argument("rl.seeds must not be empty");
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
}

}  // namespace srlbench::harness
