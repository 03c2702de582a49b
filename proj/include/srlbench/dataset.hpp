#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "srlbench/env.hpp"

namespace srlbench::data {

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct VersionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct TruncatedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ChecksumError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One environment step. obs/next_obs are consecutive frames of the same
// episode; gt vectors are the normalized ground-truth positions.
struct TransitionRecord {
    env::Image obs;
    env::Image next_obs;
    int action = 0;
    int reward = 0;
    int episode_id = 0;
    int step_index = 0;
    std::vector<double> gt_state;
    std::vector<double> next_gt_state;
};

struct DatasetHeader {
    int format_version = 1;
    env::NavConfig env_config;
    int64_t sample_count = 0;
    uint64_t collection_seed = 0;
};

struct Dataset {
    DatasetHeader header;
    std::vector<TransitionRecord> records;
    // index of the first validation record; records [0, split_marker) train,
    // [split_marker, n) validate. Equal to records.size() while unsplit.
    int64_t split_marker = 0;

    std::span<const TransitionRecord> train() const {
        return {records.data(), static_cast<size_t>(split_marker)};
    }
    std::span<const TransitionRecord> val() const {
        return {records.data() + split_marker, records.size() - static_cast<size_t>(split_marker)};
    }
};

// Runs uniform-random-action episodes until n_samples transitions are
// gathered. Deterministic in (env_config.seed, seed).
Dataset collect(const env::NavConfig& cfg, int64_t n_samples, uint64_t seed);

// Binary container with a JSON header, length-prefixed records and a
// trailing CRC32. Byte layout documented in docs/dataset_format.md.
void save(const Dataset& dataset, const std::string& path);
Dataset load(const std::string& path);

// Whole-episode split: moves split_marker to the episode boundary closest
// to (1 - val_fraction) * n, keeping both sides non-empty.
void split_by_episode(Dataset& dataset, double val_fraction);

}  // namespace srlbench::data
