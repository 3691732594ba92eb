#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "wafl/config.hpp"

using namespace wafl;

namespace {

const char* kBase = R"(
train_images = data/train-images
train_labels = data/train-labels
test_images  = data/test-images
test_labels  = data/test-labels
output_dir   = out
)";

}  // namespace

TEST_CASE("defaults reproduce the paper-scale scenario") {
    const auto cfg = parse_config_text(kBase, "test");
    cfg.validate();
    CHECK(cfg.num_nodes == 10);
    CHECK(cfg.topology == "static_line");
    CHECK(cfg.lambda == 0.1);
    CHECK(cfg.learning_rate == 0.001);
    CHECK(cfg.batch_size == 64);
    CHECK(cfg.total_epochs == 2500);
    CHECK(cfg.attack_start == 500);
    CHECK(cfg.attack_end == 2000);
    CHECK(cfg.attack_kind == AttackKind::None);
    CHECK(cfg.precision == Precision::F32);
    CHECK(cfg.subset_fraction == 1.0);
    CHECK(cfg.self_train_epochs == 0);
    CHECK_FALSE(cfg.shared_init);
    CHECK_FALSE(cfg.reset_optimizer_per_epoch);
}

TEST_CASE("full override parses") {
    const std::string text = std::string(kBase) + R"(
num_nodes = 10
lambda = 0.5
learning_rate = 0.01
batch_size = 32
total_epochs = 1000
eval_interval = 5
master_seed = 99
precision = f64
attack_kind = ssc
attack_pair = 3, 8
attack_mount_node = 9
attack_start = 200
attack_end = 800
attack_seed = 12
poison_model_path = poisons/ssc.wmodel
shared_init = true
reset_optimizer_per_epoch = true
self_train_epochs = 2
subset_fraction = 0.1
confusion_interval = 4
snapshot_interval = 500
)";
    const auto cfg = parse_config_text(text, "test");
    cfg.validate();
    CHECK(cfg.lambda == 0.5);
    CHECK(cfg.precision == Precision::F64);
    CHECK(cfg.attack_kind == AttackKind::Ssc);
    CHECK(cfg.attack_pair_a == 3);
    CHECK(cfg.attack_pair_b == 8);
    CHECK(cfg.attack_mount_node == 9);
    CHECK(cfg.poison_model_path == std::filesystem::path("poisons/ssc.wmodel"));
    CHECK(cfg.shared_init);
    CHECK(cfg.subset_fraction == 0.1);
}

TEST_CASE("unknown keys are rejected by name") {
    const std::string text = std::string(kBase) + "learing_rate = 0.1\n";
    CHECK_THROWS_WITH_AS((void)parse_config_text(text, "test"),
                         doctest::Contains("learing_rate"), InputError);
}

TEST_CASE("duplicate keys are rejected") {
    const std::string text = std::string(kBase) + "lambda = 0.1\nlambda = 0.2\n";
    CHECK_THROWS_WITH_AS((void)parse_config_text(text, "test"), doctest::Contains("duplicate"),
                         InputError);
}

TEST_CASE("attack window inversion names both fields") {
    const std::string text =
        std::string(kBase) + "attack_kind = rmp\nattack_start = 900\nattack_end = 400\n";
    const auto cfg = parse_config_text(text, "test");
    try {
        cfg.validate();
        FAIL("expected InputError");
    } catch (const InputError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("attack_end") != std::string::npos);
        CHECK(msg.find("attack_start") != std::string::npos);
    }
}

TEST_CASE("value validation") {
    auto with = [&](const std::string& extra) {
        const auto cfg = parse_config_text(std::string(kBase) + extra, "test");
        cfg.validate();
    };
    CHECK_THROWS_AS(with("lambda = 0\n"), InputError);
    CHECK_THROWS_AS(with("lambda = 1.5\n"), InputError);
    CHECK_THROWS_AS(with("subset_fraction = 0\n"), InputError);
    CHECK_THROWS_AS(with("subset_fraction = 1.5\n"), InputError);
    CHECK_THROWS_AS(with("batch_size = 0\n"), InputError);
    CHECK_THROWS_AS(with("precision = f16\n"), InputError);
    CHECK_THROWS_AS(with("attack_kind = nuke\n"), InputError);
    CHECK_THROWS_AS(with("attack_kind = rmp\nattack_mount_node = 10\n"), InputError);
    CHECK_THROWS_AS(with("attack_kind = rmp\nattack_end = 9999\n"), InputError);
    CHECK_THROWS_AS(with("attack_kind = ssc\nattack_pair = 4,4\n"), InputError);
    CHECK_THROWS_AS(with("attack_kind = cod\nattack_target = 6\nattack_override = 6\n"),
                    InputError);
    CHECK_THROWS_AS(with("shared_init = maybe\n"), InputError);
    CHECK_THROWS_AS(with("total_epochs = juan\n"), InputError);
    // comments and blank lines are fine
    with("# a comment\n\nlambda = 0.2 # trailing\n");
}
