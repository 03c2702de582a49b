#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "srlbench/config.hpp"

namespace srlbench::harness {

// Canonical artifact names inside a run directory.
struct RunPaths {
    std::filesystem::path dir;
    std::filesystem::path dataset() const { return dir / "dataset.bin"; }
    std::filesystem::path srl_ckpt() const { return dir / "srl.ckpt"; }
    std::filesystem::path srl_report() const { return dir / "srl_report.json"; }
    std::filesystem::path policy_ckpt(uint64_t seed, bool single_seed) const {
        return single_seed ? dir / "policy.ckpt"
                           : dir / ("policy_seed" + std::to_string(seed) + ".ckpt");
    }
    std::filesystem::path curve_csv() const { return dir / "curve.csv"; }
    std::filesystem::path gtc_json() const { return dir / "gtc.json"; }
    std::filesystem::path manifest() const { return dir / "manifest.json"; }
};

// Each command writes its artifacts under `out_dir` and records content
// hashes in the run manifest. They throw ConfigError for configuration
// problems and std::runtime_error otherwise.
std::filesystem::path cmd_collect(const ExperimentConfig& cfg, const std::string& out_dir);
std::filesystem::path cmd_train_srl(const ExperimentConfig& cfg, const std::string& out_dir,
                                    const std::string& dataset_path);
std::filesystem::path cmd_train_rl(const ExperimentConfig& cfg, const std::string& out_dir,
                                   const std::string& srl_ckpt, const std::string& srl_sidecar);
std::filesystem::path cmd_gtc(const ExperimentConfig& cfg, const std::string& out_dir,
                              const std::string& srl_ckpt, const std::string& srl_sidecar,
                              const std::string& dataset_path);

// collect -> train-srl -> train-rl -> gtc into one run directory.
void run_experiment(const ExperimentConfig& cfg, const std::string& out_dir, std::ostream* log);

struct SweepOption {
    std::string label;
    nlohmann::json overrides;  // dotted config paths -> values
};

struct SweepAxis {
    std::string name;
    std::vector<SweepOption> options;
};

struct SweepSpec {
    nlohmann::json base;  // ExperimentConfig JSON
    std::vector<SweepAxis> axes;

    static SweepSpec from_json(const nlohmann::json& j);
    static SweepSpec load_file(const std::string& path);
};

struct PlannedRun {
    std::string run_id;
    ExperimentConfig config;
};

// Cartesian product over axes, deterministic lexicographic order.
std::vector<PlannedRun> plan_sweep(const SweepSpec& spec);

// Executes (or lists, when dry_run) the planned runs under
// out_dir/runs/<run_id> and writes an aggregated CSV + manifest.
void cmd_sweep(const SweepSpec& spec, const std::string& out_dir, bool dry_run, std::ostream& log);

// Aggregates one or more run directories into summary and budget tables
// (CSV + JSON). Missing artifacts become explicit N/A cells.
void cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_dir);

// Applies {"a.b.c": value} overrides onto a config JSON document.
nlohmann::json apply_overrides(nlohmann::json base, const nlohmann::json& overrides);

void manifest_record(const RunPaths& paths, const ExperimentConfig& cfg,
                     const std::vector<std::filesystem::path>& artifacts,
                     const std::string& status);

}  // namespace srlbench::harness
