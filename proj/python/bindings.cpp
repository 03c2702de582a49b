#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "srlbench/harness.hpp"
#include "srlbench/json_io.hpp"
#include "srlbench/rl.hpp"

namespace py = pybind11;
using namespace srlbench;

namespace {

py::array_t<uint8_t> image_array(const env::Image& img, int side) {
    py::array_t<uint8_t> out({side, side, 3});
    std::memcpy(out.mutable_data(), img.data(), img.size());
    return out;
}

py::array_t<double> vector_array(const std::vector<double>& v) {
    return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

metrics::Mat mat_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw std::invalid_argument("expected a 2D array");
    metrics::Mat m;
    m.rows = a.shape(0);
    m.cols = a.shape(1);
    m.values.assign(a.data(), a.data() + m.rows * m.cols);
    return m;
}

py::dict step_dict(const env::StepResult& sr, int side) {
    py::dict d;
    d["observation"] = sr.observation.empty() ? py::object(py::none())
                                              : py::object(image_array(sr.observation, side));
    d["reward"] = sr.reward;
    d["done"] = sr.done;
    d["gt_state"] = vector_array(sr.gt_state);
    return d;
}

harness::ExperimentConfig config_from_json_str(const std::string& config_json) {
    return harness::ExperimentConfig::from_json(nlohmann::json::parse(config_json));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Desk-scale state representation learning benchmark";

    py::class_<env::NavEnv>(m, "NavEnv")
        .def(py::init([](const std::string& variant, int image_size, int max_steps, uint64_t seed,
                         double arena_size, double step_length, double target_radius) {
                 env::NavConfig cfg;
                 cfg.variant = variant_from_name(variant);
                 cfg.image_size = image_size;
                 cfg.max_steps = max_steps;
                 cfg.seed = seed;
                 cfg.arena_size = arena_size;
                 cfg.step_length = step_length;
                 cfg.target_radius = target_radius;
                 return env::NavEnv(cfg);
             }),
             py::arg("variant") = "target_2d", py::arg("image_size") = 32,
             py::arg("max_steps") = 250, py::arg("seed") = 0, py::arg("arena_size") = 1.0,
             py::arg("step_length") = 0.05, py::arg("target_radius") = 0.08)
        .def("reset",
             [](env::NavEnv& e, uint64_t episode_seed) {
                 return step_dict(e.reset(episode_seed), e.config().image_size);
             },
             py::arg("episode_seed"))
        .def("step",
             [](env::NavEnv& e, int action) { return step_dict(e.step(action), e.config().image_size); },
             py::arg("action"))
        .def_property_readonly("num_actions", [](const env::NavEnv&) { return env::NavEnv::kNumActions; })
        .def_property_readonly("done", &env::NavEnv::done);

    m.def("greedy_action",
          [](const std::vector<double>& gt_state, const std::string& variant) {
              return env::greedy_action(gt_state, variant_from_name(variant));
          },
          py::arg("gt_state"), py::arg("variant") = "target_2d");

    m.def("pearson",
          [](const std::vector<double>& x, const std::vector<double>& y) {
              const auto r = metrics::pearson(x, y);
              return py::make_tuple(r.rho, r.zero_variance);
          },
          "Pearson correlation; returns (rho, zero_variance_flag)");

    m.def("gtc",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& learned,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& gt) {
              const auto report = metrics::gtc(mat_from_array(learned), mat_from_array(gt));
              py::dict d;
              d["gtc"] = vector_array(report.gtc);
              d["argmax"] = report.argmax;
              d["gtc_mean"] = report.gtc_mean;
              d["gt_zero_variance"] = report.gt_zero_variance;
              return d;
          },
          py::arg("learned_states"), py::arg("gt_states"));

    m.def("collect",
          [](const std::string& config_json, const std::string& out_dir) {
              return harness::cmd_collect(config_from_json_str(config_json), out_dir).string();
          },
          py::arg("config_json"), py::arg("out_dir"),
          "Collect a random-policy dataset; returns the dataset path");

    m.def("train_srl",
          [](const std::string& config_json, const std::string& out_dir,
             const std::string& dataset_path) {
              return harness::cmd_train_srl(config_from_json_str(config_json), out_dir, dataset_path)
                  .string();
          },
          py::arg("config_json"), py::arg("out_dir"), py::arg("dataset_path"),
          "Train a state representation; returns the checkpoint path");

    m.def("train_rl",
          [](const std::string& config_json, const std::string& out_dir, const std::string& srl_ckpt,
             const std::string& srl_sidecar) {
              return harness::cmd_train_rl(config_from_json_str(config_json), out_dir, srl_ckpt,
                                           srl_sidecar)
                  .string();
          },
          py::arg("config_json"), py::arg("out_dir"), py::arg("srl_ckpt"), py::arg("srl_sidecar"),
          "PPO training on a frozen representation; returns the curve CSV path");

    m.def("compute_gtc_report",
          [](const std::string& config_json, const std::string& out_dir, const std::string& srl_ckpt,
             const std::string& srl_sidecar, const std::string& dataset_path) {
              return harness::cmd_gtc(config_from_json_str(config_json), out_dir, srl_ckpt,
                                      srl_sidecar, dataset_path)
                  .string();
          },
          py::arg("config_json"), py::arg("out_dir"), py::arg("srl_ckpt"), py::arg("srl_sidecar"),
          py::arg("dataset_path"), "Ground-truth correlation report; returns the JSON path");

    m.def("run_experiment",
          [](const std::string& config_json, const std::string& out_dir) {
              harness::run_experiment(config_from_json_str(config_json), out_dir, nullptr);
          },
          py::arg("config_json"), py::arg("out_dir"),
          "collect + train-srl + train-rl + gtc into one run directory");

    m.def("encode",
          [](const std::string& srl_ckpt, const std::string& srl_sidecar,
             const py::array_t<uint8_t, py::array::c_style | py::array::forcecast>& obs,
             const std::vector<double>& gt_state) {
              const srl::SrlModel model = srl::load_model(srl_ckpt, srl_sidecar);
              env::StepResult sr;
              sr.observation.assign(obs.data(), obs.data() + obs.size());
              sr.gt_state = gt_state;
              return vector_array(model.encode(sr));
          },
          py::arg("srl_ckpt"), py::arg("srl_sidecar"), py::arg("observation"),
          py::arg("gt_state") = std::vector<double>{},
          "Encode one observation through a saved representation");



    m.def("default_config",
          []() { return harness::ExperimentConfig().to_json().dump(2); },
          "The fully defaulted experiment config as JSON");
}
