#pragma once

#include <json.hpp>

#include "srlbench/env.hpp"
#include "srlbench/optim.hpp"

namespace srlbench {

inline std::string variant_name(env::Variant v) {
    return v == env::Variant::target_1d ? "target_1d" : "target_2d";
}

inline env::Variant variant_from_name(const std::string& s) {
    if (s == "target_1d") return env::Variant::target_1d;
    if (s == "target_2d") return env::Variant::target_2d;
    throw std::invalid_argument("unknown environment variant: " + s);
}

inline nlohmann::json to_json(const env::NavConfig& c) {
    return {{"variant", variant_name(c.variant)},
            {"arena_size", c.arena_size},
            {"image_size", c.image_size},
            {"max_steps", c.max_steps},
            {"step_length", c.step_length},
            {"target_radius", c.target_radius},
            {"seed", c.seed},
            {"render_observations", c.render_observations}};
}

inline env::NavConfig nav_config_from_json(const nlohmann::json& j) {
    env::NavConfig c;
    c.variant = variant_from_name(j.at("variant").get<std::string>());
    c.arena_size = j.at("arena_size").get<double>();
    c.image_size = j.at("image_size").get<int>();
    c.max_steps = j.at("max_steps").get<int>();
    c.step_length = j.at("step_length").get<double>();
    c.target_radius = j.at("target_radius").get<double>();
    c.seed = j.at("seed").get<uint64_t>();
    c.render_observations = j.at("render_observations").get<bool>();
    return c;
}

inline nlohmann::json to_json(const ad::OptimizerConfig& c) {
    return {{"kind", c.kind == ad::OptimizerConfig::Kind::sgd ? "sgd" : "adam"},
            {"learning_rate", c.learning_rate},
            {"beta1", c.beta1},
            {"beta2", c.beta2},
            {"epsilon", c.epsilon}};
}

inline ad::OptimizerConfig optimizer_config_from_json(const nlohmann::json& j) {
    ad::OptimizerConfig c;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "sgd") {
        c.kind = ad::OptimizerConfig::Kind::sgd;
    } else if (kind == "adam") {
        c.kind = ad::OptimizerConfig::Kind::adam;
    } else {
        throw std::invalid_argument("unknown optimizer kind: " + kind);
    }
    c.learning_rate = j.at("learning_rate").get<double>();
    c.beta1 = j.at("beta1").get<double>();
    c.beta2 = j.at("beta2").get<double>();
    c.epsilon = j.at("epsilon").get<double>();
    return c;
}

}  // namespace srlbench
