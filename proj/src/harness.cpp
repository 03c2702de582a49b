#include "srlbench/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "srlbench/checkpoint.hpp"
#include "srlbench/hash.hpp"
#include "srlbench/json_io.hpp"

namespace srlbench::harness {

namespace fs = std::filesystem;

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string now_iso8601() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

std::vector<std::string> gt_dim_names(env::Variant variant) {
    if (variant == env::Variant::target_1d) return {"x_robot", "y_robot", "x_target"};
    return {"x_robot", "y_robot", "x_target", "y_target"};
}

srl::SrlModel build_from_config(const ExperimentConfig& cfg) {
    srl::EncoderSpec spec = cfg.srl.encoder;
    spec.image_size = cfg.env.image_size;
    const int gt_dim = cfg.env.gt_dim();
    if (cfg.srl.layout.empty()) {
        return srl::build(cfg.srl.method, spec, gt_dim, nullptr, &cfg.srl.weights, cfg.srl.seed);
    }
    const srl::SplitLayout layout = srl::SplitLayout::parse(cfg.srl.layout, spec.state_dim);
    return srl::build(cfg.srl.method, spec, gt_dim, &layout, &cfg.srl.weights, cfg.srl.seed);
}

// very small CSV reader: no quoting, comma-separated
std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open CSV: " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

}  // namespace

void manifest_record(const RunPaths& paths, const ExperimentConfig& cfg,
                     const std::vector<fs::path>& artifacts, const std::string& status) {
    nlohmann::json manifest;
    if (fs::exists(paths.manifest())) {
        std::ifstream in(paths.manifest());
        try {
            manifest = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception&) {
            manifest = nlohmann::json::object();
        }
    }
    manifest["config_hash"] = cfg.config_hash();
    manifest["status"] = status;
    if (!manifest.contains("artifacts")) manifest["artifacts"] = nlohmann::json::object();
    if (!manifest.contains("timestamps")) manifest["timestamps"] = nlohmann::json::object();
    for (const auto& a : artifacts) {
        const std::string name = a.filename().string();
        manifest["artifacts"][name] = sha256_file(a.string());
        manifest["timestamps"][name] = now_iso8601();
    }
    std::ofstream out(paths.manifest(), std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write manifest: " + paths.manifest().string());
    out << manifest.dump(2) << "\n";
}

fs::path cmd_collect(const ExperimentConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    RunPaths paths{fs::path(out_dir)};
    fs::create_directories(paths.dir);

    data::Dataset ds = data::collect(cfg.env, cfg.data.samples, cfg.data.seed);
    data::split_by_episode(ds, cfg.data.val_fraction);
    data::save(ds, paths.dataset().string());
    manifest_record(paths, cfg, {paths.dataset()}, "collected");
    return paths.dataset();
}

fs::path cmd_train_srl(const ExperimentConfig& cfg, const std::string& out_dir,
                       const std::string& dataset_path) {
    cfg.validate();
    RunPaths paths{fs::path(out_dir)};
    fs::create_directories(paths.dir);

    data::Dataset ds = data::load(dataset_path);
    srl::SrlModel model = build_from_config(cfg);

    srl::TrainConfig tc;
    tc.epochs = cfg.srl.epochs;
    tc.batch_size = cfg.srl.batch_size;
    tc.optimizer = cfg.srl.optimizer;
    tc.seed = cfg.srl.seed;
    tc.reward_class_weighting = cfg.srl.reward_class_weighting;
    tc.val_fraction = cfg.data.val_fraction;

    const srl::SrlTrainReport report = srl::train(model, ds, tc);
    srl::save_model(model, paths.srl_ckpt().string(), paths.srl_report().string(), &report);
    manifest_record(paths, cfg, {paths.srl_ckpt(), paths.srl_report()}, "srl_trained");
    {
        std::ifstream in(paths.manifest());
        nlohmann::json manifest = nlohmann::json::parse(in);
        in.close();
        manifest["srl_wall_clock_seconds"] = report.wall_clock_seconds;
        std::ofstream out(paths.manifest(), std::ios::trunc);
        out << manifest.dump(2) << "\n";
    }
    return paths.srl_ckpt();
}

fs::path cmd_train_rl(const ExperimentConfig& cfg, const std::string& out_dir,
                      const std::string& srl_ckpt, const std::string& srl_sidecar) {
    cfg.validate();
    RunPaths paths{fs::path(out_dir)};
    fs::create_directories(paths.dir);

    const srl::SrlModel model = srl::load_model(srl_ckpt, srl_sidecar);

    std::ofstream csv(paths.curve_csv(), std::ios::trunc);
    if (!csv) throw std::runtime_error("cannot write curve CSV: " + paths.curve_csv().string());
    csv << "timesteps,mean_reward,std_error,seed,method,env\n";

    std::vector<fs::path> artifacts = {paths.curve_csv()};
    const bool single_seed = cfg.rl.seeds.size() == 1;
    for (uint64_t seed : cfg.rl.seeds) {
        rl::PolicyNet policy;
        const rl::TrainingCurve curve = rl::train_rl(model, cfg.env, cfg.rl.ppo, seed, &policy);
        for (const auto& p : curve.points) {
            csv << p.timesteps << "," << fmt_double(p.eval.mean_reward) << ","
                << fmt_double(p.eval.std_error) << "," << seed << "," << curve.method_label << ","
                << curve.env_label << "\n";
        }
        const fs::path ckpt = paths.policy_ckpt(seed, single_seed);
        ad::save_checkpoint(ckpt.string(), policy.params());
        artifacts.push_back(ckpt);
    }
    csv.close();
    manifest_record(paths, cfg, artifacts, "rl_trained");
    return paths.curve_csv();
}

fs::path cmd_gtc(const ExperimentConfig& cfg, const std::string& out_dir,
                 const std::string& srl_ckpt, const std::string& srl_sidecar,
                 const std::string& dataset_path) {
    cfg.validate();
    RunPaths paths{fs::path(out_dir)};
    fs::create_directories(paths.dir);

    const srl::SrlModel model = srl::load_model(srl_ckpt, srl_sidecar);
    data::Dataset ds = data::load(dataset_path);
    if (ds.val().empty()) throw std::runtime_error("gtc: dataset has no validation split");

    const metrics::Mat learned = srl::encode_matrix(model, ds.val());
    const metrics::Mat gt = srl::gt_matrix(ds.val());
    const metrics::GtcReport report = metrics::gtc(learned, gt);

    const std::vector<std::string> names = gt_dim_names(ds.header.env_config.variant);
    nlohmann::json j;
    j["method"] = srl::method_name(model.method);
    nlohmann::json entries = nlohmann::json::object();
    nlohmann::json argmax = nlohmann::json::object();
    nlohmann::json zero_var = nlohmann::json::object();
    for (size_t i = 0; i < report.gtc.size(); ++i) {
        const std::string& name = i < names.size() ? names[i] : ("gt_dim_" + std::to_string(i));
        entries[name] = report.gtc[i];
        argmax[name] = report.argmax[i];
        zero_var[name] = static_cast<bool>(report.gt_zero_variance[i]);
    }
    j["gtc"] = entries;
    j["argmax"] = argmax;
    j["gt_zero_variance"] = zero_var;
    j["gtc_mean"] = report.gtc_mean;
    j["samples"] = static_cast<int64_t>(ds.val().size());
    int dead = 0;
    for (bool z : report.learned_zero_variance) dead += z ? 1 : 0;
    j["learned_zero_variance_dims"] = dead;

    std::ofstream out(paths.gtc_json(), std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write GTC report: " + paths.gtc_json().string());
    out << j.dump(2) << "\n";
    out.close();
    manifest_record(paths, cfg, {paths.gtc_json()}, "gtc_done");
    return paths.gtc_json();
}

void run_experiment(const ExperimentConfig& cfg, const std::string& out_dir, std::ostream* log) {
    RunPaths paths{fs::path(out_dir)};
    const auto dataset = cmd_collect(cfg, out_dir);
    if (log) *log << "  dataset -> " << dataset.string() << "\n" << std::flush;
    const auto ckpt = cmd_train_srl(cfg, out_dir, dataset.string());
    if (log) *log << "  srl checkpoint -> " << ckpt.string() << "\n" << std::flush;
    const auto curve = cmd_train_rl(cfg, out_dir, ckpt.string(), paths.srl_report().string());
    if (log) *log << "  curve -> " << curve.string() << "\n" << std::flush;
    const auto gtc = cmd_gtc(cfg, out_dir, ckpt.string(), paths.srl_report().string(), dataset.string());
    if (log) *log << "  gtc -> " << gtc.string() << "\n" << std::flush;
}

SweepSpec SweepSpec::from_json(const nlohmann::json& j) {
    SweepSpec spec;
    if (!j.contains("base")) throw ConfigError("sweep: missing 'base' config");
    spec.base = j.at("base");
    // validate the base eagerly so path errors name the sweep file
    ExperimentConfig::from_json(spec.base);
    if (!j.contains("axes") || !j.at("axes").is_array()) {
        throw ConfigError("sweep: missing 'axes' array");
    }
    for (const auto& axis : j.at("axes")) {
        SweepAxis a;
        a.name = axis.at("name").get<std::string>();
        for (const auto& opt : axis.at("options")) {
            SweepOption o;
            o.label = opt.at("label").get<std::string>();
            o.overrides = opt.contains("set") ? opt.at("set") : nlohmann::json::object();
            a.options.push_back(std::move(o));
        }
        if (a.options.empty()) throw ConfigError("sweep: axis '" + a.name + "' has no options");
        spec.axes.push_back(std::move(a));
    }
    if (spec.axes.empty()) throw ConfigError("sweep: no axes");
    return spec;
}

SweepSpec SweepSpec::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open sweep file: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("sweep file " + path + " is not valid JSON: " + e.what());
    }
    return from_json(j);
}

nlohmann::json apply_overrides(nlohmann::json base, const nlohmann::json& overrides) {
    for (const auto& [path, value] : overrides.items()) {
        nlohmann::json* node = &base;
        std::string key;
        std::istringstream ss(path);
        std::vector<std::string> parts;
        while (std::getline(ss, key, '.')) parts.push_back(key);
        if (parts.empty()) throw ConfigError("sweep: empty override path");
        for (size_t i = 0; i + 1 < parts.size(); ++i) node = &((*node)[parts[i]]);
        (*node)[parts.back()] = value;
    }
    return base;
}

std::vector<PlannedRun> plan_sweep(const SweepSpec& spec) {
    std::vector<PlannedRun> runs;
    std::vector<size_t> counters(spec.axes.size(), 0);
    bool done = false;
    while (!done) {
        nlohmann::json doc = spec.base;
        std::string run_id;
        for (size_t i = 0; i < spec.axes.size(); ++i) {
            const SweepOption& opt = spec.axes[i].options[counters[i]];
            doc = apply_overrides(std::move(doc), opt.overrides);
            if (!run_id.empty()) run_id += "__";
            run_id += opt.label;
        }
        PlannedRun run;
        run.run_id = run_id;
        run.config = ExperimentConfig::from_json(doc);  // rejects bad override paths
        runs.push_back(std::move(run));

        // odometer increment, last axis fastest
        done = true;
        size_t i = spec.axes.size();
        while (i-- > 0) {
            if (++counters[i] < spec.axes[i].options.size()) {
                done = false;
                break;
            }
            counters[i] = 0;
        }
    }
    return runs;
}

void cmd_sweep(const SweepSpec& spec, const std::string& out_dir, bool dry_run, std::ostream& log) {
    const std::vector<PlannedRun> runs = plan_sweep(spec);
    log << "sweep: " << runs.size() << " run(s)\n";
    for (const auto& run : runs) log << "  " << run.run_id << "\n";
    if (dry_run) return;

    const fs::path root(out_dir);
    fs::create_directories(root / "runs");

    nlohmann::json manifest;
    manifest["runs"] = nlohmann::json::object();

    std::ofstream csv(root / "sweep_results.csv", std::ios::trunc);
    if (!csv) throw std::runtime_error("cannot write sweep CSV");
    csv << "run_id,method,env,seed,timesteps,mean_reward,std_error\n";

    for (const auto& run : runs) {
        const fs::path run_dir = root / "runs" / run.run_id;
        log << "running " << run.run_id << "\n" << std::flush;
        run_experiment(run.config, run_dir.string(), &log);

        // fold this run's curve into the aggregate
        for (const auto& row : read_csv(run_dir / "curve.csv")) {
            if (row.size() != 6 || row[0] == "timesteps") continue;
            csv << run.run_id << "," << row[4] << "," << row[5] << "," << row[3] << "," << row[0]
                << "," << row[1] << "," << row[2] << "\n";
        }
        std::ifstream mf(run_dir / "manifest.json");
        manifest["runs"][run.run_id] = nlohmann::json::parse(mf);
    }
    csv.close();

    std::ofstream mout(root / "manifest.json", std::ios::trunc);
    mout << manifest.dump(2) << "\n";
    log << "sweep results -> " << (root / "sweep_results.csv").string() << "\n";
}

void cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_dir) {
    const fs::path root(out_dir);
    fs::create_directories(root);

    struct RunSummary {
        std::string name;
        std::string method = "N/A";
        std::string env = "N/A";
        // per checkpoint: seed -> mean reward
        std::map<int64_t, std::map<uint64_t, double>> by_budget;
        nlohmann::json gtc;  // null if missing
    };

    std::vector<RunSummary> summaries;
    std::set<int64_t> budgets;
    for (const auto& dir : run_dirs) {
        RunSummary s;
        s.name = fs::path(dir).filename().string();
        const fs::path curve = fs::path(dir) / "curve.csv";
        if (fs::exists(curve)) {
            for (const auto& row : read_csv(curve)) {
                if (row.size() != 6 || row[0] == "timesteps") continue;
                const int64_t t = std::stoll(row[0]);
                const uint64_t seed = std::stoull(row[3]);
                s.by_budget[t][seed] = std::stod(row[1]);
                s.method = row[4];
                s.env = row[5];
                if (t > 0) budgets.insert(t);
            }
        }
        const fs::path gtc_path = fs::path(dir) / "gtc.json";
        if (fs::exists(gtc_path)) {
            std::ifstream in(gtc_path);
            s.gtc = nlohmann::json::parse(in);
        }
        summaries.push_back(std::move(s));
    }

    // per-run mean +/- SE over seeds at a budget
    auto stat_at = [](const RunSummary& s, int64_t budget) -> std::pair<std::string, std::string> {
        const auto it = s.by_budget.find(budget);
        if (it == s.by_budget.end() || it->second.empty()) return {"N/A", "N/A"};
        std::vector<double> means;
        for (const auto& [seed, v] : it->second) means.push_back(v);
        double m = 0.0;
        for (double v : means) m += v;
        m /= static_cast<double>(means.size());
        double var = 0.0;
        for (double v : means) var += (v - m) * (v - m);
        const double se = means.size() > 1
                              ? std::sqrt(var / (static_cast<double>(means.size()) - 1.0)) /
                                    std::sqrt(static_cast<double>(means.size()))
                              : 0.0;
        return {fmt_double(m), fmt_double(se)};
    };

    std::vector<std::string> gtc_names;
    for (const auto& s : summaries) {
        if (s.gtc.is_object() && s.gtc.contains("gtc")) {
            for (const auto& [k, v] : s.gtc.at("gtc").items()) {
                if (std::find(gtc_names.begin(), gtc_names.end(), k) == gtc_names.end()) {
                    gtc_names.push_back(k);
                }
            }
        }
    }

    // summary table: final budget performance + GTC
    std::ofstream summary_csv(root / "summary.csv", std::ios::trunc);
    summary_csv << "run,method,env";
    for (const auto& n : gtc_names) summary_csv << ",gtc_" << n;
    summary_csv << ",gtc_mean,final_timesteps,mean_reward,std_error\n";
    nlohmann::json jsum = nlohmann::json::array();
    for (const auto& s : summaries) {
        const int64_t final_budget = s.by_budget.empty() ? -1 : s.by_budget.rbegin()->first;
        const auto [m, se] = final_budget < 0 ? std::pair<std::string, std::string>{"N/A", "N/A"}
                                              : stat_at(s, final_budget);
        summary_csv << s.name << "," << s.method << "," << s.env;
        nlohmann::json row = {{"run", s.name}, {"method", s.method}, {"env", s.env}};
        for (const auto& n : gtc_names) {
            if (s.gtc.is_object() && s.gtc.contains("gtc") && s.gtc.at("gtc").contains(n)) {
                summary_csv << "," << fmt_double(s.gtc.at("gtc").at(n).get<double>());
                row["gtc"][n] = s.gtc.at("gtc").at(n);
            } else {
                summary_csv << ",N/A";
            }
        }
        if (s.gtc.is_object() && s.gtc.contains("gtc_mean")) {
            summary_csv << "," << fmt_double(s.gtc.at("gtc_mean").get<double>());
            row["gtc_mean"] = s.gtc.at("gtc_mean");
        } else {
            summary_csv << ",N/A";
        }
        summary_csv << "," << (final_budget < 0 ? "N/A" : std::to_string(final_budget)) << "," << m
                    << "," << se << "\n";
        row["final_timesteps"] = final_budget;
        row["mean_reward"] = m;
        row["std_error"] = se;
        jsum.push_back(std::move(row));
    }
    summary_csv.close();

    // budget table: method x budgets
    std::ofstream budget_csv(root / "budgets.csv", std::ios::trunc);
    budget_csv << "run,method";
    for (int64_t b : budgets) budget_csv << "," << b << "," << b << "_se";
    budget_csv << "\n";
    nlohmann::json jbud = nlohmann::json::array();
    for (const auto& s : summaries) {
        budget_csv << s.name << "," << s.method;
        nlohmann::json row = {{"run", s.name}, {"method", s.method}};
        for (int64_t b : budgets) {
            const auto [m, se] = stat_at(s, b);
            budget_csv << "," << m << "," << se;
            row["budgets"][std::to_string(b)] = {{"mean_reward", m}, {"std_error", se}};
        }
        budget_csv << "\n";
        jbud.push_back(std::move(row));
    }
    budget_csv.close();

    nlohmann::json out = {{"summary", jsum}, {"budgets", jbud}};
    std::ofstream jout(root / "summary.json", std::ios::trunc);
    jout << out.dump(2) << "\n";
}

}  // namespace srlbench::harness
