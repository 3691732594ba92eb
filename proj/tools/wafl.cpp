// Experiment runner CLI: run, gen-poison, partition, inspect.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "wafl/attacks.hpp"
#include "wafl/experiment.hpp"
#include "wafl/metrics.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;    // bad arguments or config
constexpr int kExitRuntime = 2;  // I/O or execution failure

int cmd_run(const fs::path& config_path, bool quiet) {
    wafl::ExperimentConfig cfg = wafl::load_config(config_path);
    cfg.validate();
    wafl::RunOptions opts;
    opts.progress = !quiet;
    const wafl::RunSummary summary = wafl::run_experiment(cfg, opts);
    std::cout << "wrote " << summary.metrics_csv.string() << " (" << summary.records.size()
              << " records)\n";
    return kExitOk;
}

int cmd_gen_poison(const wafl::AttackSpec& spec, const fs::path& images, const fs::path& labels,
                   const fs::path& out) {
    spec.validate();
    wafl::ModelParams<float> poison;
    if (spec.kind == wafl::AttackKind::Rmp) {
        poison = wafl::make_rmp<float>(spec.seed);
    } else {
        if (images.empty() || labels.empty())
            throw wafl::InputError("trained attack kinds need --train-images/--train-labels");
        const wafl::LabeledDataset train = wafl::load_idx(images, labels);
        poison = wafl::make_poison<float>(train, spec);
    }
    wafl::save_model(out, poison);

    nlohmann::json side;
    side["kind"] = wafl::to_string(spec.kind);
    if (spec.kind == wafl::AttackKind::Ssc || spec.kind == wafl::AttackKind::Sdc)
        side["pair"] = {spec.class_a, spec.class_b};
    if (spec.kind == wafl::AttackKind::Cod) {
        side["target"] = spec.target;
        side["override"] = spec.override_label;
    }
    side["epochs"] = spec.epochs;
    side["batch_size"] = spec.batch_size;
    side["learning_rate"] = spec.learning_rate;
    side["seed"] = spec.seed;
    const fs::path sidecar = out.string() + ".json";
    std::ofstream os(sidecar, std::ios::trunc);
    os << side.dump(2) << '\n';
    if (!os) throw wafl::FormatError("write failed: " + sidecar.string());

    std::cout << "wrote " << out.string() << " and " << sidecar.string() << '\n';
    return kExitOk;
}

int cmd_partition(const fs::path& images, const fs::path& labels, uint64_t seed,
                  const fs::path& out_dir) {
    const wafl::LabeledDataset ds = wafl::load_idx(images, labels);
    const wafl::PartitionPlan plan = wafl::partition_noniid(ds, 10, 0.9, seed);

    fs::create_directories(out_dir);
    {
        std::ofstream os(out_dir / "assignment.csv", std::ios::trunc);
        os << "sample_index,node_id\n";
        for (size_t i = 0; i < plan.assignment.size(); ++i)
            os << i << ',' << int(plan.assignment[i]) << '\n';
        if (!os) throw wafl::FormatError("write failed: assignment.csv");
    }
    {
        std::ofstream os(out_dir / "counts.csv", std::ios::trunc);
        os << "Node,L0,L1,L2,L3,L4,L5,L6,L7,L8,L9,Summary\n";
        const auto node_totals = plan.node_totals();
        for (int n = 0; n < 10; ++n) {
            os << n;
            for (int l = 0; l < 10; ++l) os << ',' << plan.counts[size_t(n)][size_t(l)];
            os << ',' << node_totals[size_t(n)] << '\n';
        }
        const auto label_totals = plan.label_totals();
        os << "Summary";
        int64_t grand = 0;
        for (int l = 0; l < 10; ++l) {
            os << ',' << label_totals[size_t(l)];
            grand += label_totals[size_t(l)];
        }
        os << ',' << grand << '\n';
        if (!os) throw wafl::FormatError("write failed: counts.csv");
    }

    // same table on stdout for eyeballing
    std::printf("%-5s", "Node");
    for (int l = 0; l < 10; ++l) std::printf("%7s", ("L" + std::to_string(l)).c_str());
    std::printf("%9s\n", "Summary");
    const auto node_totals = plan.node_totals();
    for (int n = 0; n < 10; ++n) {
        std::printf("%-5d", n);
        for (int l = 0; l < 10; ++l) std::printf("%7d", plan.counts[size_t(n)][size_t(l)]);
        std::printf("%9d\n", node_totals[size_t(n)]);
    }
    return kExitOk;
}

int cmd_inspect(const fs::path& model_path, const fs::path& ref_path) {
    const auto model = wafl::load_model<float>(model_path);
    std::cout << model_path.string() << "\n";
    for (const auto& l : wafl::kModelLayout) {
        double norm2 = 0.0;
        for (float v : model.layer(l.name)) norm2 += double(v) * double(v);
        std::printf("  %-12s", std::string(l.name).c_str());
        if (l.rows)
            std::printf(" [%4d x %4d]", l.rows, l.cols);
        else
            std::printf(" [%11d]", l.cols);
        std::printf("  l2 = %.6f\n", std::sqrt(norm2));
    }
    if (!ref_path.empty()) {
        const auto ref = wafl::load_model<float>(ref_path);
        std::cout << "distance to " << ref_path.string() << ":\n";
        for (const auto& l : wafl::kModelLayout)
            std::printf("  %-12s  %.6f\n", std::string(l.name).c_str(),
                        wafl::distance_from_poison(model, ref, l.name));
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"WAFL resilience simulator"};
    app.require_subcommand(1);

    fs::path config_path;
    bool quiet = false;
    auto* run = app.add_subcommand("run", "execute an experiment config");
    run->add_option("config", config_path, "experiment config file")->required();
    run->add_flag("--quiet", quiet, "suppress progress output");

    wafl::AttackSpec spec;
    std::string kind_str, pair_str;
    fs::path gp_images, gp_labels, gp_out = "poison.wmodel";
    auto* gen = app.add_subcommand("gen-poison", "generate a poisoned model snapshot");
    gen->add_option("kind", kind_str, "rmp|ssc|sdc|cod")->required();
    gen->add_option("--pair", pair_str, "class pair a,b for ssc/sdc");
    gen->add_option("--target", spec.target, "class to depress (cod)");
    gen->add_option("--override", spec.override_label, "replacement label (cod)");
    gen->add_option("--epochs", spec.epochs, "training epochs (default 100)");
    gen->add_option("--batch-size", spec.batch_size, "batch size (default 64)");
    gen->add_option("--lr", spec.learning_rate, "learning rate (default 1e-4)");
    gen->add_option("--seed", spec.seed, "generation seed");
    gen->add_option("--train-images", gp_images, "IDX image file (trained kinds)");
    gen->add_option("--train-labels", gp_labels, "IDX label file (trained kinds)");
    gen->add_option("--out", gp_out, "output snapshot path");

    fs::path pt_images, pt_labels, pt_out = ".";
    uint64_t pt_seed = 1;
    auto* part = app.add_subcommand("partition", "write the non-IID partition tables");
    part->add_option("--images", pt_images, "IDX image file")->required();
    part->add_option("--labels", pt_labels, "IDX label file")->required();
    part->add_option("--seed", pt_seed, "partition seed");
    part->add_option("--out-dir", pt_out, "output directory");

    fs::path in_model, in_ref;
    auto* inspect = app.add_subcommand("inspect", "print a snapshot's layer norms");
    inspect->add_option("model", in_model, "model snapshot")->required();
    inspect->add_option("--ref", in_ref, "second snapshot to measure distances against");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, quiet);
        if (gen->parsed()) {
            spec.kind = wafl::attack_kind_from_string(kind_str);
            if (!pair_str.empty()) {
                const auto comma = pair_str.find(',');
                if (comma == std::string::npos)
                    throw wafl::InputError("--pair expects 'a,b'");
                spec.class_a = std::stoi(pair_str.substr(0, comma));
                spec.class_b = std::stoi(pair_str.substr(comma + 1));
            }
            return cmd_gen_poison(spec, gp_images, gp_labels, gp_out);
        }
        if (part->parsed()) return cmd_partition(pt_images, pt_labels, pt_seed, pt_out);
        if (inspect->parsed()) return cmd_inspect(in_model, in_ref);
    } catch (const wafl::InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}
