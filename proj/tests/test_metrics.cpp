#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <memory>

#include <json.hpp>

#include "support.hpp"
#include "wafl/metrics.hpp"
#include "wafl/synthetic.hpp"

using namespace wafl;

TEST_CASE("evaluate: constant class-0 predictor on a balanced set") {
    ModelParams<float> p;
    p.fc2_bias()(0) = 1.0f;  // class 0 always wins
    std::array<int, 10> counts{};
    counts.fill(10);
    const auto test_set = make_synthetic_digits(counts, 21);
    const auto ev = evaluate(p, test_set);
    CHECK(ev.accuracy == doctest::Approx(0.1));
    CHECK(ev.confusion.total() == 100);
    for (int t = 0; t < 10; ++t) {
        CHECK(ev.confusion.counts[size_t(t)][0] == 10);
        for (int c = 1; c < 10; ++c) CHECK(ev.confusion.counts[size_t(t)][size_t(c)] == 0);
    }
    CHECK_THROWS_AS((void)evaluate(p, LabeledDataset{}), InputError);
}

TEST_CASE("evaluate: a model fit to three samples is perfect on them") {
    std::array<int, 10> counts{};
    counts[2] = counts[5] = counts[8] = 1;
    const auto three = make_synthetic_digits(counts, 22);

    ModelParams<float> p = init_params<float>(23);
    OptimizerState<float> st(0.01f);
    const std::vector<int32_t> idx{0, 1, 2};
    for (int e = 0; e < 60; ++e) run_training_pass(p, st, three, idx, 3, uint64_t(e));

    const auto ev = evaluate(p, three);
    CHECK(ev.accuracy == 1.0);
    CHECK(ev.confusion.trace() == 3);
    CHECK(ev.confusion.total() == 3);
}

TEST_CASE("distance_from_poison: zero, single entry, closed form") {
    const auto p = init_params<float>(30);
    CHECK(distance_from_poison(p, p, "fc1.weight") == 0.0);
    CHECK(distance_from_poison(p, p, "fc2.bias") == 0.0);

    auto q = p;
    q.fc1_weight()(64, 100) += 3.0f;
    CHECK(distance_from_poison(p, q, "fc1.weight") == doctest::Approx(3.0));
    CHECK(distance_from_poison(p, q, "fc2.weight") == 0.0);

    ModelParams<float> a, b;
    const float c = 0.5f;
    for (float& v : b.layer("fc1.weight")) v = c;
    CHECK(distance_from_poison(a, b, "fc1.weight") ==
          doctest::Approx(double(c) * std::sqrt(100352.0)).epsilon(1e-9));

    CHECK_THROWS_AS((void)distance_from_poison(p, q, "fc9.weight"), InputError);
}

TEST_CASE("distance_from_poison behaves like a metric on the layer") {
    const auto a = init_params<float>(31);
    const auto b = init_params<float>(32);
    const auto c = init_params<float>(33);
    for (const char* layer : {"fc1.weight", "fc2.weight"}) {
        const double ab = distance_from_poison(a, b, layer);
        const double ba = distance_from_poison(b, a, layer);
        const double ac = distance_from_poison(a, c, layer);
        const double cb = distance_from_poison(c, b, layer);
        CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
        CHECK(ab > 0.0);
        CHECK(ab <= ac + cb + 1e-12);
    }
}

namespace {

template <typename T>
ModelParams<T> constant_params(T x) {
    ModelParams<T> p;
    for (T& v : p.flat()) v = x;
    return p;
}

}  // namespace

TEST_CASE("flow_decomposition: scalar degree-2 example") {
    // theta_c = 0, theta_l = 3, theta_r = -3, lambda = 1:
    // F_l = 1, F_r = -1, aggregation delta 0
    EpochTrace<float> trace;
    trace.epoch = 0;
    trace.nodes.resize(3);
    trace.nodes[0].before = constant_params<float>(3.0f);
    trace.nodes[1].before = constant_params<float>(0.0f);
    trace.nodes[2].before = constant_params<float>(-3.0f);
    trace.nodes[1].after_agg = constant_params<float>(0.0f);
    trace.nodes[1].after_train = constant_params<float>(0.0f);
    trace.nodes[1].neighbors = {0, 2};

    const auto fd = flow_decomposition(trace, 1, 1.0);
    REQUIRE(fd.neighbor_flow_l2.size() == 2);
    const double unit = std::sqrt(double(kParamCount));
    CHECK(fd.neighbor_flow_l2[0].second == doctest::Approx(unit));   // |F_l| = 1 per coord
    CHECK(fd.neighbor_flow_l2[1].second == doctest::Approx(unit));   // |F_r| = 1 per coord
    CHECK(fd.agg_delta_l2 == 0.0);
    CHECK(fd.agg_residual_l2 == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(fd.local_flow_l2 == 0.0);  // eta = 0: F_D exactly zero
    CHECK(fd.balance_l2 == doctest::Approx(0.0).epsilon(1e-9));
    CHECK_THROWS_AS((void)flow_decomposition(trace, 7, 1.0), InputError);
}

TEST_CASE("balance residual shrinks as a constant attack converges") {
    auto data =
        std::make_shared<LabeledDataset>(make_synthetic_digits(
            std::array<int, 10>{60, 60, 60, 60, 60, 60, 60, 60, 60, 60}, 24));
    std::vector<NodeState<float>> nodes(3);
    for (int i = 0; i < 3; ++i) {
        nodes[size_t(i)].node_id = i;
        nodes[size_t(i)].params = init_params<float>(40 + uint64_t(i));
        nodes[size_t(i)].opt = OptimizerState<float>(0.001f);
        nodes[size_t(i)].data = data;
        for (int k = 0; k < 200; ++k) nodes[size_t(i)].local_indices.push_back(i * 200 + k);
    }
    AttackerState<float> attacker{init_params<float>(555)};
    auto topo = TopologySchedule::static_line(3);
    const int start = 10, end = 160;
    topo.set_attacker(0, start, end);
    EpochOptions opt;
    opt.lambda = 0.1;
    opt.batch_size = 64;
    opt.master_seed = 11;

    double residual_at_start = -1, residual_at_end = -1;
    for (int e = 0; e < end; ++e) {
        const auto trace = run_epoch<float>(nodes, &attacker, topo, e, opt);
        if (e == start) residual_at_start = flow_decomposition(trace, 0, 0.1, &attacker).balance_l2;
        if (e == end - 1) residual_at_end = flow_decomposition(trace, 0, 0.1, &attacker).balance_l2;
    }
    REQUIRE(residual_at_start > 0.0);
    REQUIRE(residual_at_end > 0.0);
    CHECK(residual_at_end < residual_at_start);
}

TEST_CASE("window_average") {
    std::vector<MetricsRecord> recs;
    for (int e : {100, 110, 120}) {
        MetricsRecord r;
        r.epoch = e;
        r.node = 0;
        r.accuracy = 0.9;
        recs.push_back(r);
    }
    MetricsRecord a;
    a.epoch = 200;
    a.node = 1;
    a.accuracy = 0.8;
    recs.push_back(a);
    MetricsRecord b = a;
    b.epoch = 210;
    b.accuracy = 1.0;
    recs.push_back(b);

    CHECK(window_average(recs, 0, 100, 120) == doctest::Approx(0.9));
    CHECK(window_average(recs, 1, 200, 210) == doctest::Approx(0.9));
    CHECK(window_average(recs, 1, 205, 210) == doctest::Approx(1.0));
    CHECK_THROWS_AS((void)window_average(recs, 0, 300, 400), InputError);
    CHECK_THROWS_AS((void)window_average(recs, 0, 120, 100), InputError);
}

TEST_CASE("spearman: monotone, reversed, degenerate") {
    const std::vector<double> hops{1, 2, 3, 4, 5};
    const std::vector<double> up{0.1, 0.2, 0.5, 0.7, 0.9};
    const std::vector<double> down{9, 7, 5, 3, 1};
    const std::vector<double> flat{2, 2, 2, 2, 2};
    CHECK(*spearman(hops, up) == doctest::Approx(1.0));
    CHECK(*spearman(hops, down) == doctest::Approx(-1.0));
    CHECK(!spearman(hops, flat).has_value());
    CHECK_THROWS_AS((void)spearman(hops, std::vector<double>{1.0}), InputError);
}

TEST_CASE("metrics csv round trip") {
    test::TempDir tmp("metrics");
    std::vector<MetricsRecord> recs;
    for (int e : {0, 10}) {
        for (int n = 0; n < 3; ++n) {
            MetricsRecord r;
            r.epoch = e;
            r.node = n;
            r.accuracy = 0.5 + 0.01 * n;
            r.loss = 1.25;
            if (n != 1) r.distance_fc1 = 3.5;
            r.flow_l2_sum = 0.125;
            r.flow_local_l2 = 0.25;
            recs.push_back(r);
        }
    }
    const auto path = tmp.path() / "metrics.csv";
    write_metrics_csv(path, recs);

    std::ifstream is(path);
    std::string header;
    std::getline(is, header);
    CHECK(header == "epoch,node,accuracy,loss,distance_fc1,flow_l2_sum,flow_local_l2");

    const auto back = read_metrics_csv(path);
    REQUIRE(back.size() == recs.size());
    for (size_t i = 0; i < recs.size(); ++i) {
        CHECK(back[i].epoch == recs[i].epoch);
        CHECK(back[i].node == recs[i].node);
        CHECK(back[i].accuracy == doctest::Approx(recs[i].accuracy));
        CHECK(back[i].distance_fc1.has_value() == recs[i].distance_fc1.has_value());
    }
}

TEST_CASE("confusion json layout") {
    test::TempDir tmp("confusion");
    ConfusionMatrix cm;
    cm.counts[3][5] = 7;
    cm.counts[9][9] = 2;
    const auto path = tmp.path() / "confusion_e0_n0.json";
    write_confusion_json(path, cm);

    std::ifstream is(path);
    nlohmann::json j;
    is >> j;
    REQUIRE(j.is_array());
    REQUIRE(j.size() == 10);
    for (const auto& row : j) REQUIRE(row.size() == 10);
    CHECK(j[3][5] == 7);
    CHECK(j[9][9] == 2);
    CHECK(j[0][0] == 0);
}
