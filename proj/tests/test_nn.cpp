#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "wafl/nn.hpp"

using namespace wafl;

namespace {

template <typename T>
Batch<T> random_batch(int b, uint64_t seed) {
    Rng rng(seed);
    Batch<T> batch;
    batch.inputs.resize(b, kInputDim);
    batch.labels.resize(size_t(b));
    for (int r = 0; r < b; ++r) {
        for (int c = 0; c < kInputDim; ++c) batch.inputs(r, c) = T(rng.uniform());
        batch.labels[size_t(r)] = int(rng.bounded(10));
    }
    return batch;
}

}  // namespace

TEST_CASE("predict: zero parameters give zero logits and class 0") {
    ModelParams<float> p;
    Batch<float> b = random_batch<float>(4, 1);
    RowMatrix<float> logits = predict(p, b.inputs);
    CHECK(logits.rows() == 4);
    CHECK(logits.cols() == 10);
    CHECK(logits.cwiseAbs().maxCoeff() == 0.0f);
    for (int r = 0; r < 4; ++r) {
        std::array<float, 10> row;
        for (int c = 0; c < 10; ++c) row[size_t(c)] = logits(r, c);
        CHECK(argmax_class<float>(row) == 0);
    }
}

TEST_CASE("predict: a dominant bias wins for every row") {
    ModelParams<float> p;
    p.fc2_bias()(9) = 5.0f;
    Batch<float> b = random_batch<float>(8, 2);
    RowMatrix<float> logits = predict(p, b.inputs);
    for (int r = 0; r < 8; ++r) {
        std::array<float, 10> row;
        for (int c = 0; c < 10; ++c) row[size_t(c)] = logits(r, c);
        CHECK(argmax_class<float>(row) == 9);
    }
}

TEST_CASE("predict: duplicated input rows give identical logits") {
    ModelParams<float> p = init_params<float>(7);
    RowMatrix<float> x(2, kInputDim);
    Rng rng(3);
    for (int c = 0; c < kInputDim; ++c) x(0, c) = float(rng.uniform());
    x.row(1) = x.row(0);
    RowMatrix<float> logits = predict(p, x);
    for (int c = 0; c < 10; ++c) CHECK(logits(0, c) == logits(1, c));
}

TEST_CASE("predict: dimension mismatch is rejected and params stay untouched") {
    ModelParams<float> p = init_params<float>(1);
    const std::vector<float> before(p.flat().begin(), p.flat().end());
    RowMatrix<float> bad(2, 100);
    bad.setZero();
    CHECK_THROWS_AS((void)predict(p, bad), InputError);
    CHECK(std::equal(before.begin(), before.end(), p.flat().begin()));
}

TEST_CASE("loss: zero parameters give ln(10)") {
    ModelParams<double> p;
    Batch<double> b = random_batch<double>(16, 4);
    const auto lg = loss_and_grad(p, b);
    CHECK(lg.loss == doctest::Approx(std::log(10.0)).epsilon(1e-12));
}

TEST_CASE("loss: a +50 true-class margin saturates to ~0") {
    ModelParams<double> p;
    Batch<double> b = random_batch<double>(5, 5);
    for (auto& l : b.labels) l = 3;
    p.fc2_bias()(3) = 50.0;
    const auto lg = loss_and_grad(p, b);
    CHECK(lg.loss >= 0.0);
    CHECK(lg.loss < 1e-6);
}

TEST_CASE("loss: stays finite for logits around 1e4") {
    ModelParams<double> p;
    p.fc2_bias()(0) = 1e4;
    p.fc2_bias()(1) = -1e4;
    Batch<double> b = random_batch<double>(4, 6);
    for (auto& l : b.labels) l = 1;
    const auto lg = loss_and_grad(p, b);
    CHECK(std::isfinite(lg.loss));
    CHECK(lg.grad.all_finite());
}

TEST_CASE("loss: invalid label is rejected") {
    ModelParams<double> p;
    Batch<double> b = random_batch<double>(2, 7);
    b.labels[0] = 11;
    CHECK_THROWS_AS((void)loss_and_grad(p, b), InputError);
}

TEST_CASE("gradient matches central finite differences") {
    // independent oracle: (L(theta + h e_i) - L(theta - h e_i)) / 2h in f64
    const double h = 1e-5;
    Rng pick(99);
    for (uint64_t trial = 0; trial < 2; ++trial) {
        ModelParams<double> p = init_params<double>(10 + trial);
        Batch<double> b = random_batch<double>(8, 20 + trial);
        const auto lg = loss_and_grad(p, b);

        int checked = 0;
        while (checked < 25) {
            const size_t i = size_t(pick.bounded(kParamCount));
            ModelParams<double> plus = p, minus = p;
            plus.flat()[i] += h;
            minus.flat()[i] -= h;
            const double fd =
                (loss_and_grad(plus, b).loss - loss_and_grad(minus, b).loss) / (2 * h);
            const double an = lg.grad.flat()[i];
            const double scale = std::max(std::abs(fd), std::abs(an));
            if (scale >= 1e-5) {
                CHECK(std::abs(fd - an) / scale < 1e-4);
            } else {
                CHECK(std::abs(fd - an) < 1e-9);
            }
            ++checked;
        }
    }
}

TEST_CASE("adam: zero gradient leaves parameters and moments unchanged") {
    ModelParams<float> p = init_params<float>(3);
    const std::vector<float> before(p.flat().begin(), p.flat().end());
    ModelParams<float> g;  // all zero
    OptimizerState<float> st(0.001f);
    adam_step(p, g, st);
    CHECK(st.t == 1);
    CHECK(std::equal(before.begin(), before.end(), p.flat().begin()));
    for (float m : st.m) CHECK(m == 0.0f);
    for (float v : st.v) CHECK(v == 0.0f);
}

TEST_CASE("adam: hand-traced first and second step on one coordinate") {
    // w = 0, g = 1 with the defaults: step 1 gives m_hat = v_hat = 1,
    // delta = -lr / (1 + eps); step 2 repeats it.
    ModelParams<double> p;
    ModelParams<double> g;
    g.flat()[0] = 1.0;
    OptimizerState<double> st(0.001);
    adam_step(p, g, st);
    CHECK(std::abs(std::abs(p.flat()[0]) - 0.001) < 1e-8);
    CHECK(p.flat()[0] < 0.0);
    CHECK(p.flat()[1] == 0.0);
    adam_step(p, g, st);
    CHECK(p.flat()[0] == doctest::Approx(-0.002).epsilon(1e-6));
    CHECK(st.t == 2);
}

TEST_CASE("train_one_pass: step count is ceil(|D| / batch_size)") {
    auto ds = test::random_dataset(130, 11);
    std::vector<int32_t> all(130);
    for (int i = 0; i < 130; ++i) all[size_t(i)] = i;

    ModelParams<float> p = init_params<float>(5);
    OptimizerState<float> st(0.001f);
    CHECK(run_training_pass(p, st, ds, std::span<const int32_t>(all).first(64), 64, 1) == 1);
    CHECK(run_training_pass(p, st, ds, all, 64, 2) == 3);
    CHECK_THROWS_AS(run_training_pass(p, st, ds, std::span<const int32_t>{}, 64, 3), InputError);
}

TEST_CASE("train_one_pass: zero learning rate leaves parameters unchanged") {
    auto ds = test::random_dataset(96, 12);
    std::vector<int32_t> all(96);
    for (int i = 0; i < 96; ++i) all[size_t(i)] = i;
    ModelParams<float> p = init_params<float>(6);
    const std::vector<float> before(p.flat().begin(), p.flat().end());
    OptimizerState<float> st(0.0f);
    run_training_pass(p, st, ds, all, 32, 4);
    CHECK(std::equal(before.begin(), before.end(), p.flat().begin()));
    CHECK(st.t == 3);
}

TEST_CASE("training is bit-deterministic given the same seed") {
    auto ds = test::random_dataset(200, 13);
    std::vector<int32_t> all(200);
    for (int i = 0; i < 200; ++i) all[size_t(i)] = i;

    auto run = [&]() {
        ModelParams<float> p = init_params<float>(8);
        OptimizerState<float> st(0.001f);
        run_training_pass(p, st, ds, all, 64, 42);
        run_training_pass(p, st, ds, all, 64, 43);
        return std::vector<float>(p.flat().begin(), p.flat().end());
    };
    const auto a = run();
    const auto b = run();
    CHECK(a == b);
}

TEST_CASE("predict is pure") {
    ModelParams<float> p = init_params<float>(9);
    const std::vector<float> before(p.flat().begin(), p.flat().end());
    Batch<float> b = random_batch<float>(3, 14);
    (void)predict(p, b.inputs);
    (void)loss_and_grad(p, b);
    CHECK(std::equal(before.begin(), before.end(), p.flat().begin()));
}
