#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <vector>

#include "absa/checkpoint.hpp"
#include "absa/ops.hpp"
#include "absa/params.hpp"
#include "test_support.hpp"

using namespace absa;

TEST_CASE("param set bookkeeping") {
    ParamSet params;
    Tensor& w = params.create("w", {2, 2});
    CHECK(w.requires_grad());
    CHECK_THROWS_AS(params.create("w", {1}), UsageError);
    CHECK_THROWS_AS(params.at("missing"), UsageError);
    CHECK(params.names() == std::vector<std::string>{"w"});

    CHECK_THROWS_AS(params.adam_step(), UsageError);  // no optimizer attached
    params.attach_adam({});
    CHECK_THROWS_AS(params.attach_adam({}), UsageError);
    CHECK_THROWS_AS(params.adam_step(), UsageError);  // step before backward
}

TEST_CASE("zero gradient leaves parameters unchanged") {
    ParamSet params;
    Tensor& w = params.create("w", {3});
    w.values() = {1.0f, -2.0f, 0.5f};
    params.attach_adam({.lr = 0.1});

    w.grad();  // allocate, stays zero
    params.adam_step();
    CHECK(w.values() == std::vector<float>{1.0f, -2.0f, 0.5f});
    CHECK(params.step_count() == 1);
    CHECK_FALSE(w.grad_allocated());  // cleared by the step
}

TEST_CASE("first Adam step approximates -lr * sign(g)") {
    ParamSet params;
    Tensor& w = params.create("w", {2});
    w.values() = {0.0f, 0.0f};
    params.attach_adam({.lr = 0.01});

    auto& g = w.grad();
    g[0] = 0.37f;
    g[1] = -5.2f;
    params.adam_step();

    CHECK(w.values()[0] == doctest::Approx(-0.01).epsilon(1e-3));
    CHECK(w.values()[1] == doctest::Approx(0.01).epsilon(1e-3));
}

TEST_CASE("10-step Adam trace matches an independent recurrence") {
    // Independent oracle: the textbook recurrence coded directly, no shared
    // machinery with ParamSetT::adam_step.
    const double lr = 0.05, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    std::vector<double> ref = {0.8, -0.3, 1.7};
    std::vector<double> m(3, 0.0), v(3, 0.0);

    ParamSetT<double> params;
    TensorT<double>& w = params.create("w", {3});
    w.values() = {0.8, -0.3, 1.7};
    params.attach_adam({.lr = lr, .beta1 = b1, .beta2 = b2, .eps = eps});

    Rng rng(42);
    for (int step = 1; step <= 10; ++step) {
        std::vector<double> g(3);
        for (auto& x : g) x = -1.0 + 2.0 * rng.next_uniform();

        // Oracle update.
        for (int i = 0; i < 3; ++i) {
            m[i] = b1 * m[i] + (1 - b1) * g[i];
            v[i] = b2 * v[i] + (1 - b2) * g[i] * g[i];
            double mh = m[i] / (1 - std::pow(b1, step));
            double vh = v[i] / (1 - std::pow(b2, step));
            ref[i] -= lr * mh / (std::sqrt(vh) + eps);
        }

        // Library update driven by the same gradients.
        auto& wg = w.grad();
        for (int i = 0; i < 3; ++i) wg[i] = g[i];
        params.adam_step();

        for (int i = 0; i < 3; ++i) {
            CHECK(std::abs(w.values()[i] - ref[i]) < 1e-6);
        }
    }
    CHECK(params.step_count() == 10);
}

TEST_CASE("training against a detached view leaves gradients with the original") {
    ParamSetT<double> params;
    TensorT<double>& w = params.create("w", {2, 2});
    w.values() = {1, 2, 3, 4};

    TapeT<double> tape;
    auto view = params.detached_view();
    TensorT<double> x({1, 2}, std::vector<double>{1, 1});
    x.set_requires_grad(true);
    auto y = matmul(tape, x, view["w"]);
    auto w2 = reshape(tape, y, {2, 1});
    auto s = matmul(tape, y, w2);
    auto loss = reshape(tape, s, {1});
    tape.backward(loss);

    CHECK(x.grad_allocated());
    CHECK_FALSE(params.at("w").grad_allocated());
    CHECK_FALSE(params.any_grad_allocated());
}

TEST_CASE("checkpoint round-trip is bit exact") {
    Rng rng(9);
    ParamSet params;
    Tensor& a = params.create("layer.weight", {3, 4});
    Tensor& b = params.create("layer.bias", {4});
    absa::test::fill_uniform(a, rng, -2.0, 2.0);
    absa::test::fill_uniform(b, rng, -2.0, 2.0);
    // Include values that stress exact round-tripping.
    a.values()[0] = 1.0000001f;
    a.values()[1] = -0.0f;
    a.values()[2] = 3.402823466e38f;

    std::string path = (std::filesystem::temp_directory_path() / "absa_ckpt_test.bin").string();
    save_checkpoint(path, params, "{\"d\":4}");

    Checkpoint loaded = load_checkpoint(path);
    CHECK(loaded.manifest == "{\"d\":4}");
    CHECK(loaded.params.names() == params.names());
    for (const auto& name : params.names()) {
        const auto& orig = params.at(name);
        const auto& back = loaded.params.at(name);
        CHECK(back.shape() == orig.shape());
        for (std::size_t i = 0; i < orig.size(); ++i) {
            std::uint32_t ob, bb;
            std::memcpy(&ob, &orig.values()[i], 4);
            std::memcpy(&bb, &back.values()[i], 4);
            CHECK(ob == bb);
        }
    }
    std::filesystem::remove(path);

    CHECK_THROWS_AS(load_checkpoint("/nonexistent/absa.bin"), IoError);
}

TEST_CASE("snapshot and load_values restore trajectories") {
    ParamSet params;
    params.create("w", {2}).values() = {1.0f, 2.0f};
    ParamSet snap = params.snapshot_values();
    params.at("w").values() = {9.0f, 9.0f};
    params.load_values(snap);
    CHECK(params.at("w").values() == std::vector<float>{1.0f, 2.0f});
}
