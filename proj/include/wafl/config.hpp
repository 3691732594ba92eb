#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "wafl/attacks.hpp"

namespace wafl {

enum class Precision { F32, F64 };

// Everything a run needs. Defaults are the paper-scale scenario, so a
// config that only sets the dataset paths and output_dir runs it.
struct ExperimentConfig {
    std::filesystem::path train_images;
    std::filesystem::path train_labels;
    std::filesystem::path test_images;
    std::filesystem::path test_labels;
    std::filesystem::path output_dir;

    int num_nodes = 10;
    std::string topology = "static_line";
    double lambda = 0.1;
    double learning_rate = 0.001;
    int batch_size = 64;
    int total_epochs = 2500;
    int eval_interval = 10;
    uint64_t master_seed = 1;
    Precision precision = Precision::F32;

    AttackKind attack_kind = AttackKind::None;
    int attack_pair_a = 4;
    int attack_pair_b = 9;
    int attack_target = 0;
    int attack_override = 6;
    int attack_mount_node = 0;
    int attack_start = 500;
    int attack_end = 2000;
    std::filesystem::path poison_model_path;  // empty: generate from attack_kind
    uint64_t attack_seed = 7;

    bool shared_init = false;
    bool reset_optimizer_per_epoch = false;
    int self_train_epochs = 0;
    double subset_fraction = 1.0;

    int confusion_interval = 0;  // every n-th evaluation; final epoch always written
    int snapshot_interval = 0;   // 0 disables model snapshots

    void validate() const;
};

// Flat `key = value` file, '#' comments, unknown keys rejected.
ExperimentConfig parse_config_text(const std::string& text, const std::string& source_name);
ExperimentConfig load_config(const std::filesystem::path& path);

std::string to_string(Precision p);

}  // namespace wafl
