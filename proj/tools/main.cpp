#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "srlbench/harness.hpp"

namespace {

using srlbench::harness::ConfigError;
using srlbench::harness::ExperimentConfig;
using srlbench::harness::RunPaths;
using srlbench::harness::SweepSpec;

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitRuntimeError = 2;

ExperimentConfig load_config(const std::string& config_path, const uint64_t* seed_override) {
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig()
                                               : ExperimentConfig::load_file(config_path);
    if (seed_override) {
        cfg.env.seed = *seed_override;
        cfg.data.seed = *seed_override;
        cfg.srl.seed = *seed_override;
        cfg.rl.seeds = {*seed_override};
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Desk-scale state representation learning benchmark"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "runs/default";
    bool has_seed = false;
    uint64_t seed = 0;

    auto add_common = [&](CLI::App* cmd, bool with_seed = true) {
        cmd->add_option("--config", config_path, "experiment config JSON");
        cmd->add_option("--out", out_dir, "output directory");
        if (with_seed) {
            cmd->add_option("--seed", seed, "override all seeds")->each([&](const std::string&) {
                has_seed = true;
            });
        }
    };

    // collect
    auto* collect = app.add_subcommand("collect", "collect a random-policy transition dataset");
    add_common(collect);

    // train-srl
    auto* train_srl = app.add_subcommand("train-srl", "train a state representation model");
    std::string dataset_path;
    add_common(train_srl);
    train_srl->add_option("--dataset", dataset_path, "dataset file (default <out>/dataset.bin)");

    // train-rl
    auto* train_rl = app.add_subcommand("train-rl", "train a PPO policy on a frozen representation");
    std::string ckpt_path, sidecar_path;
    add_common(train_rl);
    train_rl->add_option("--srl-ckpt", ckpt_path, "SRL checkpoint (default <out>/srl.ckpt)");
    train_rl->add_option("--srl-report", sidecar_path, "SRL sidecar (default <out>/srl_report.json)");

    // gtc
    auto* gtc = app.add_subcommand("gtc", "ground-truth correlation of a trained representation");
    add_common(gtc);
    gtc->add_option("--srl-ckpt", ckpt_path, "SRL checkpoint (default <out>/srl.ckpt)");
    gtc->add_option("--srl-report", sidecar_path, "SRL sidecar (default <out>/srl_report.json)");
    gtc->add_option("--dataset", dataset_path, "dataset file (default <out>/dataset.bin)");

    // run (full pipeline)
    auto* run = app.add_subcommand("run", "collect + train-srl + train-rl + gtc");
    add_common(run);

    // sweep
    auto* sweep = app.add_subcommand("sweep", "run an experiment grid from a sweep spec");
    bool dry_run = false;
    add_common(sweep, false);
    sweep->add_flag("--dry-run", dry_run, "list planned runs without executing");

    // report
    auto* report = app.add_subcommand("report", "aggregate run directories into summary tables");
    std::vector<std::string> run_dirs;
    add_common(report, false);
    report->add_option("--runs", run_dirs, "run directories to aggregate")->expected(-1);

    CLI11_PARSE(app, argc, argv);

    try {
        const uint64_t* seed_ptr = has_seed ? &seed : nullptr;
        if (collect->parsed()) {
            const ExperimentConfig cfg = load_config(config_path, has_seed ? &seed : nullptr);
            const auto path = srlbench::harness::cmd_collect(cfg, out_dir);
            std::cout << "dataset -> " << path.string() << "\n";
        } else if (train_srl->parsed()) {
            const ExperimentConfig cfg = load_config(config_path, seed_ptr);
            RunPaths paths{std::filesystem::path(out_dir)};
            if (dataset_path.empty()) dataset_path = paths.dataset().string();
            const auto path = srlbench::harness::cmd_train_srl(cfg, out_dir, dataset_path);
            std::cout << "srl checkpoint -> " << path.string() << "\n";
        } else if (train_rl->parsed()) {
            const ExperimentConfig cfg = load_config(config_path, seed_ptr);
            RunPaths paths{std::filesystem::path(out_dir)};
            if (ckpt_path.empty()) ckpt_path = paths.srl_ckpt().string();
            if (sidecar_path.empty()) sidecar_path = paths.srl_report().string();
            const auto path = srlbench::harness::cmd_train_rl(cfg, out_dir, ckpt_path, sidecar_path);
            std::cout << "curve -> " << path.string() << "\n";
        } else if (gtc->parsed()) {
            const ExperimentConfig cfg = load_config(config_path, seed_ptr);
            RunPaths paths{std::filesystem::path(out_dir)};
            if (ckpt_path.empty()) ckpt_path = paths.srl_ckpt().string();
            if (sidecar_path.empty()) sidecar_path = paths.srl_report().string();
            if (dataset_path.empty()) dataset_path = paths.dataset().string();
            const auto path =
                srlbench::harness::cmd_gtc(cfg, out_dir, ckpt_path, sidecar_path, dataset_path);
            std::cout << "gtc report -> " << path.string() << "\n";
        } else if (run->parsed()) {
            const ExperimentConfig cfg = load_config(config_path, seed_ptr);
            srlbench::harness::run_experiment(cfg, out_dir, &std::cout);
        } else if (sweep->parsed()) {
            if (config_path.empty()) throw ConfigError("sweep requires --config <sweep spec>");
            const SweepSpec spec = SweepSpec::load_file(config_path);
            srlbench::harness::cmd_sweep(spec, out_dir, dry_run, std::cout);
        } else if (report->parsed()) {
            if (run_dirs.empty()) throw ConfigError("report requires --runs <dir>...");
            srlbench::harness::cmd_report(run_dirs, out_dir);
            std::cout << "report -> " << out_dir << "\n";
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntimeError;
    }
    return kExitOk;
}
