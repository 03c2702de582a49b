#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "srlbench/checkpoint.hpp"
#include "srlbench/hash.hpp"
#include "srlbench/nn.hpp"
#include "srlbench/ops.hpp"
#include "srlbench/optim.hpp"
#include "srlbench/rng.hpp"

using namespace srlbench;
using ad::Tensor;

namespace {

Tensor random_tensor(const ad::Shape& shape, Rng& rng, bool requires_grad, double scale = 1.0) {
    Tensor t = Tensor::zeros(shape, requires_grad);
    for (auto& v : t.data()) v = rng.normal() * scale;
    return t;
}

}  // namespace

TEST_CASE("forward op examples") {
    Tensor x = Tensor::from_vector({3}, {-1.0, 0.0, 2.5});
    Tensor y = ad::relu(nullptr, x);
    CHECK(y.data() == std::vector<double>{0.0, 0.0, 2.5});

    // identity matmul
    Tensor eye = Tensor::from_vector({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    Rng rng(1);
    Tensor m = random_tensor({3, 5}, rng, false);
    Tensor out = ad::matmul(nullptr, eye, m);
    CHECK(out.data() == m.data());

    // uniform-logit cross entropy
    Tensor logits = Tensor::from_vector({1, 3}, {0.0, 0.0, 0.0});
    Tensor ce = ad::cross_entropy(nullptr, logits, {1});
    CHECK(ce.item() == doctest::Approx(1.0986122886681098).epsilon(1e-15));
}

TEST_CASE("shape errors name both shapes") {
    Tensor a = Tensor::zeros({2, 3});
    Tensor b = Tensor::zeros({4, 5});
    CHECK_THROWS_WITH_AS(ad::matmul(nullptr, a, b),
                         doctest::Contains("[2, 3]"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(ad::mse(nullptr, a, b),
                         doctest::Contains("[4, 5]"), std::invalid_argument);
    CHECK_THROWS_AS(ad::cross_entropy(nullptr, Tensor::zeros({2, 3}), {0, 7}),
                    std::invalid_argument);
}

TEST_CASE("backward basics") {
    SUBCASE("sum gradient is all ones") {
        Tensor x = Tensor::from_vector({2, 2}, {1, 2, 3, 4}, true);
        ad::Tape tape;
        Tensor loss = ad::sum(&tape, x);
        tape.backward(loss);
        CHECK(x.grad() == std::vector<double>{1, 1, 1, 1});
    }
    SUBCASE("mse at equality has zero gradient") {
        Tensor x = Tensor::from_vector({3}, {1, 2, 3}, true);
        ad::Tape tape;
        Tensor loss = ad::mse(&tape, x, x);
        tape.backward(loss);
        CHECK(loss.item() == 0.0);
        for (double g : x.grad()) CHECK(g == 0.0);
    }
    SUBCASE("non-scalar loss rejected") {
        Tensor x = Tensor::from_vector({2}, {1, 2}, true);
        ad::Tape tape;
        Tensor y = ad::relu(&tape, x);
        CHECK_THROWS_AS(tape.backward(y), std::invalid_argument);
    }
    SUBCASE("gradient accumulates across two uses") {
        // loss = sum(x*x) + sum(x): grad = 2x + 1
        Tensor x = Tensor::from_vector({3}, {1.0, -2.0, 0.5}, true);
        ad::Tape tape;
        Tensor loss = ad::add(&tape, ad::sum(&tape, ad::mul(&tape, x, x)), ad::sum(&tape, x));
        tape.backward(loss);
        for (int i = 0; i < 3; ++i) {
            CHECK(x.grad()[i] == doctest::Approx(2.0 * x.data()[i] + 1.0).epsilon(1e-14));
        }
    }
}

TEST_CASE("slice and concat are mutually inverse") {
    Rng rng(7);
    Tensor x = random_tensor({4, 10}, rng, false);
    Tensor left = ad::slice(nullptr, x, 0, 6);
    Tensor right = ad::slice(nullptr, x, 6, 10);
    Tensor glued = ad::concat(nullptr, left, right);
    CHECK(glued.data() == ad::slice(nullptr, x, 0, 10).data());
    CHECK(glued.data() == x.data());
}

TEST_CASE("grad_check: linear model is exact") {
    Rng rng(3);
    Tensor w = random_tensor({5}, rng, true);
    auto fn = [&](ad::Tape* tape, std::vector<Tensor>& inputs) {
        return ad::sum(tape, ad::mul(tape, inputs[0], w));
    };
    Tensor x = random_tensor({5}, rng, true);
    const auto report = ad::grad_check(fn, {x});
    CHECK(report.components_checked == 5);
    CHECK(report.max_rel_error < 1e-8);
}

TEST_CASE("grad_check: two-layer relu MLP away from kinks") {
    Rng rng(11);
    nn::Mlp mlp(4, {8}, 3, nn::Activation::relu, rng);
    Tensor target = random_tensor({2, 3}, rng, false);
    auto fn = [&](ad::Tape* tape, std::vector<Tensor>& inputs) {
        return ad::mse(tape, mlp.forward(tape, inputs[0]), target);
    };
    // keep all relu pre-activations away from zero
    Tensor x;
    for (uint64_t attempt = 0;; ++attempt) {
        REQUIRE(attempt < 100);
        Rng xr(100 + attempt);
        x = random_tensor({2, 4}, xr, true);
        Tensor pre = mlp.layers[0].forward(nullptr, x);
        bool ok = true;
        for (double v : pre.data()) ok = ok && std::abs(v) > 1e-3;
        if (ok) break;
    }
    nn::NamedParams params;
    mlp.collect(params, "mlp");
    std::vector<Tensor> inputs = {x};
    const auto report = ad::grad_check(fn, inputs);
    CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("grad_check: deliberately wrong backward rule is caught") {
    Tensor x = Tensor::from_vector({3}, {0.3, -0.7, 1.2}, true);
    auto buggy_square = [](ad::Tape* tape, const Tensor& in) {
        Tensor out = Tensor::zeros(in.shape());
        for (int64_t i = 0; i < in.size(); ++i) out.data()[i] = in.data()[i] * in.data()[i];
        if (tape && in.requires_grad()) {
            out.set_requires_grad(true);
            Tensor tin = in, tout = out;
            ad::record_custom(tape, [tin, tout]() mutable {
                for (int64_t i = 0; i < tin.size(); ++i) {
                    // wrong: should be 2*x*grad
                    tin.grad()[i] += 3.0 * tout.grad()[i];
                }
            });
        }
        return out;
    };
    auto fn = [&](ad::Tape* tape, std::vector<Tensor>& inputs) {
        return ad::sum(tape, buggy_square(tape, inputs[0]));
    };
    const auto report = ad::grad_check(fn, {x});
    CHECK(report.max_rel_error > 1e-2);
}

TEST_CASE("gradients match finite differences across op mix") {
    Rng rng(21);
    // tanh -> softmax -> slice/concat -> cross entropy + mse mix
    nn::Linear l1(6, 8, nn::Activation::tanh, rng);
    nn::Linear l2(8, 5, nn::Activation::linear, rng);
    std::vector<int> targets = {1, 3};
    auto fn = [&](ad::Tape* tape, std::vector<Tensor>& inputs) {
        Tensor h = ad::tanh(tape, l1.forward(tape, inputs[0]));
        Tensor logits = l2.forward(tape, h);
        Tensor front = ad::slice(tape, logits, 0, 2);
        Tensor back = ad::slice(tape, logits, 2, 5);
        Tensor glued = ad::concat(tape, front, back);
        Tensor ce = ad::cross_entropy(tape, glued, targets);
        Tensor sm = ad::softmax(tape, logits);
        return ad::add(tape, ce, ad::mean(tape, sm));
    };
    Tensor x = random_tensor({2, 6}, rng, true);
    std::vector<Tensor> inputs = {x, l1.weight, l1.bias, l2.weight, l2.bias};
    const auto report = ad::grad_check(fn, inputs);
    CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("conv2d gradients match finite differences") {
    Rng rng(31);
    nn::Conv2d conv(2, 3, 3, 2, 1, rng);
    auto fn = [&](ad::Tape* tape, std::vector<Tensor>& inputs) {
        return ad::mean(tape, ad::relu(tape, conv.forward(tape, inputs[0])));
    };
    Tensor x = random_tensor({2, 2, 6, 6}, rng, true);
    std::vector<Tensor> inputs = {x, conv.weight, conv.bias};
    const auto report = ad::grad_check(fn, inputs);
    CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("forward determinism is bit-exact") {
    auto run = [](uint64_t seed) {
        Rng rng(seed);
        nn::Mlp mlp(5, {7}, 3, nn::Activation::relu, rng);
        Tensor x = random_tensor({4, 5}, rng, true);
        ad::Tape tape;
        Tensor loss = ad::mean(&tape, mlp.forward(&tape, x));
        nn::NamedParams params;
        mlp.collect(params, "m");
        nn::zero_grads(params);
        x.zero_grad();
        tape.backward(loss);
        std::vector<double> out = {loss.item()};
        out.insert(out.end(), x.grad().begin(), x.grad().end());
        for (const auto& [n, t] : params) out.insert(out.end(), t.grad().begin(), t.grad().end());
        return out;
    };
    CHECK(run(5) == run(5));
}

TEST_CASE("overflow is an error, not a silent state") {
    Tensor big = Tensor::from_vector({2}, {1e308, 1e308});
    CHECK_THROWS_AS(ad::add(nullptr, big, big), std::runtime_error);
    Tensor huge = Tensor::from_vector({1}, {1e4});
    CHECK_THROWS_AS(ad::exp(nullptr, huge), std::runtime_error);
}

TEST_CASE("optimizer updates") {
    SUBCASE("sgd step") {
        Tensor p = Tensor::from_vector({1}, {1.0}, true);
        p.grad()[0] = 2.0;
        ad::OptimizerConfig cfg;
        cfg.kind = ad::OptimizerConfig::Kind::sgd;
        cfg.learning_rate = 0.1;
        ad::Optimizer opt(cfg, {p});
        opt.step();
        CHECK(p.data()[0] == doctest::Approx(0.8).epsilon(1e-15));
        CHECK(opt.step_count() == 1);
        // grads untouched by the step
        CHECK(p.grad()[0] == 2.0);
    }
    SUBCASE("adam first step moves by about lr") {
        for (double g : {2.0, -0.03, 15.0}) {
            Tensor p = Tensor::from_vector({1}, {1.0}, true);
            p.grad()[0] = g;
            ad::OptimizerConfig cfg;  // adam defaults
            ad::Optimizer opt(cfg, {p});
            opt.step();
            const double delta = 1.0 - p.data()[0];
            CHECK(std::abs(delta) == doctest::Approx(cfg.learning_rate).epsilon(1e-6));
            CHECK(delta * g > 0.0);  // moves along sign(g)
        }
    }
    SUBCASE("zero gradient leaves parameters unchanged") {
        Tensor p = Tensor::from_vector({3}, {1.0, -2.0, 3.0}, true);
        p.zero_grad();
        ad::Optimizer opt(ad::OptimizerConfig{}, {p});
        opt.step();
        CHECK(p.data() == std::vector<double>{1.0, -2.0, 3.0});
    }
    SUBCASE("missing gradient is an error") {
        Tensor p = Tensor::from_vector({1}, {1.0}, true);
        ad::Optimizer opt(ad::OptimizerConfig{}, {p});
        CHECK_THROWS_AS(opt.step(), std::runtime_error);
    }
}

TEST_CASE("checkpoint container round-trips bit-exactly") {
    Rng rng(17);
    nn::Mlp mlp(6, {5}, 4, nn::Activation::relu, rng);
    nn::NamedParams params;
    mlp.collect(params, "net");
    // make values awkward: denormals, negative zero, huge magnitudes
    params[0].second.data()[0] = -0.0;
    params[0].second.data()[1] = 5e-324;
    params[0].second.data()[2] = 1.7976931348623157e308;

    const std::string path = (std::filesystem::temp_directory_path() / "srlbench_ckpt_test.bin").string();
    ad::save_checkpoint(path, params);

    nn::NamedParams loaded = ad::load_checkpoint(path);
    REQUIRE(loaded.size() == params.size());
    for (size_t i = 0; i < params.size(); ++i) {
        CHECK(loaded[i].first == params[i].first);
        CHECK(loaded[i].second.shape() == params[i].second.shape());
        for (int64_t k = 0; k < params[i].second.size(); ++k) {
            uint64_t a, b;
            std::memcpy(&a, &params[i].second.data()[k], 8);
            std::memcpy(&b, &loaded[i].second.data()[k], 8);
            CHECK(a == b);
        }
    }
    std::filesystem::remove(path);
}

TEST_CASE("checkpoint rejects bad files") {
    const auto dir = std::filesystem::temp_directory_path();
    const std::string path = (dir / "srlbench_ckpt_bad.bin").string();
    {
        std::ofstream out(path, std::ios::binary);
        out << "NOTACKPTxxxxxxxxxxxx";
    }
    CHECK_THROWS_WITH_AS(ad::load_checkpoint(path), doctest::Contains("magic"), std::runtime_error);
    std::filesystem::remove(path);
}

TEST_CASE("hash reference vectors") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    const std::string s = "123456789";
    CHECK(crc32(reinterpret_cast<const uint8_t*>(s.data()), s.size()) == 0xCBF43926u);
}
