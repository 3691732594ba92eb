#include "wafl/experiment.hpp"

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <set>

#include <json.hpp>

#include "wafl/attacks.hpp"
#include "wafl/dataset.hpp"
#include "wafl/protocol.hpp"
#include "wafl/topology.hpp"

namespace wafl {

namespace {

namespace fs = std::filesystem;

// Exclusive ownership of an output directory for the duration of a run.
class DirLock {
public:
    explicit DirLock(const fs::path& dir) : path_(dir / ".lock") {
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (fs::exists(path_))
            throw std::runtime_error("output directory is locked by another run (remove " +
                                     path_.string() + " if that run is gone)");
        std::ofstream os(path_);
        if (!os) throw std::runtime_error("cannot create lock file " + path_.string());
        os << "pid " << ::getpid() << '\n';
    }
    ~DirLock() {
        std::error_code ec;
        fs::remove(path_, ec);
    }
    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

private:
    fs::path path_;
};

std::set<int> eval_labels(const ExperimentConfig& cfg) {
    std::set<int> labels{0, cfg.total_epochs};
    for (int e = cfg.eval_interval; e <= cfg.total_epochs; e += cfg.eval_interval)
        labels.insert(e);
    return labels;
}

double l2_diff(std::span<const float> a, std::span<const float> b) {
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = double(a[i]) - double(b[i]);
        acc += d * d;
    }
    return std::sqrt(acc);
}
double l2_diff(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

void write_manifest(const fs::path& path, const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["artifact"] = "wafl-sim";
    j["version"] = "1.0.0";
    j["train_images"] = cfg.train_images.string();
    j["train_labels"] = cfg.train_labels.string();
    j["test_images"] = cfg.test_images.string();
    j["test_labels"] = cfg.test_labels.string();
    j["output_dir"] = cfg.output_dir.string();
    j["num_nodes"] = cfg.num_nodes;
    j["topology"] = cfg.topology;
    j["lambda"] = cfg.lambda;
    j["learning_rate"] = cfg.learning_rate;
    j["batch_size"] = cfg.batch_size;
    j["total_epochs"] = cfg.total_epochs;
    j["eval_interval"] = cfg.eval_interval;
    j["master_seed"] = cfg.master_seed;
    j["precision"] = to_string(cfg.precision);
    j["attack_kind"] = to_string(cfg.attack_kind);
    j["attack_pair"] = {cfg.attack_pair_a, cfg.attack_pair_b};
    j["attack_target"] = cfg.attack_target;
    j["attack_override"] = cfg.attack_override;
    j["attack_mount_node"] = cfg.attack_mount_node;
    j["attack_start"] = cfg.attack_start;
    j["attack_end"] = cfg.attack_end;
    j["poison_model_path"] = cfg.poison_model_path.string();
    j["attack_seed"] = cfg.attack_seed;
    j["shared_init"] = cfg.shared_init;
    j["reset_optimizer_per_epoch"] = cfg.reset_optimizer_per_epoch;
    j["self_train_epochs"] = cfg.self_train_epochs;
    j["subset_fraction"] = cfg.subset_fraction;
    j["confusion_interval"] = cfg.confusion_interval;
    j["snapshot_interval"] = cfg.snapshot_interval;
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw FormatError("cannot open " + path.string() + " for writing");
    os << j.dump(2) << '\n';
}

template <typename T>
RunSummary run_impl(const ExperimentConfig& cfg, const RunOptions& opts) {
    auto train = std::make_shared<LabeledDataset>(load_idx(cfg.train_images, cfg.train_labels));
    const LabeledDataset test = load_idx(cfg.test_images, cfg.test_labels);

    TopologySchedule topo = TopologySchedule::static_line(cfg.num_nodes);
    const bool attacked = cfg.attack_kind != AttackKind::None;
    std::unique_ptr<AttackerState<T>> attacker;
    if (attacked) {
        topo.set_attacker(cfg.attack_mount_node, cfg.attack_start, cfg.attack_end);
        if (!cfg.poison_model_path.empty()) {
            attacker = std::make_unique<AttackerState<T>>(
                AttackerState<T>{load_model<T>(cfg.poison_model_path)});
        } else {
            AttackSpec spec;
            spec.kind = cfg.attack_kind;
            spec.class_a = cfg.attack_pair_a;
            spec.class_b = cfg.attack_pair_b;
            spec.target = cfg.attack_target;
            spec.override_label = cfg.attack_override;
            spec.seed = cfg.attack_seed;
            attacker = std::make_unique<AttackerState<T>>(
                AttackerState<T>{make_poison<T>(*train, spec)});
        }
    }

    // Non-IID partition, then the optional per-node desk-scale subsample.
    PartitionPlan plan = partition_noniid(*train, cfg.num_nodes, 0.9, cfg.master_seed);
    auto node_indices = indices_by_node(plan, cfg.num_nodes);
    if (cfg.subset_fraction < 1.0) {
        for (int n = 0; n < cfg.num_nodes; ++n)
            node_indices[size_t(n)] = uniform_subsample(
                node_indices[size_t(n)], cfg.subset_fraction,
                derive_seed(cfg.master_seed, seed_stream::kSubset, uint64_t(n)));
    }

    std::vector<NodeState<T>> nodes(size_t(cfg.num_nodes));
    for (int n = 0; n < cfg.num_nodes; ++n) {
        auto& node = nodes[size_t(n)];
        node.node_id = n;
        const uint64_t init_seed =
            cfg.shared_init ? derive_seed(cfg.master_seed, seed_stream::kInit, 0)
                            : derive_seed(cfg.master_seed, seed_stream::kInit, 1 + uint64_t(n));
        node.params = init_params<T>(init_seed);
        node.opt = OptimizerState<T>(T(cfg.learning_rate));
        node.data = train;
        node.local_indices = node_indices[size_t(n)];
        if (node.local_indices.empty())
            throw InputError("node " + std::to_string(n) + " has an empty partition");
    }

    // Pre-collaboration self-training.
    for (int pass = 0; pass < cfg.self_train_epochs; ++pass)
        for (auto& node : nodes)
            run_training_pass(node.params, node.opt, *node.data, node.local_indices,
                              cfg.batch_size,
                              derive_seed(cfg.master_seed, seed_stream::kSelfTrain,
                                          uint64_t(node.node_id), uint64_t(pass)));

    EpochOptions epoch_opts;
    epoch_opts.lambda = cfg.lambda;
    epoch_opts.batch_size = cfg.batch_size;
    epoch_opts.master_seed = cfg.master_seed;
    epoch_opts.reset_optimizer = cfg.reset_optimizer_per_epoch;
    epoch_opts.train = cfg.learning_rate != 0.0;

    const std::set<int> labels = eval_labels(cfg);
    DirLock lock(cfg.output_dir);
    RunSummary summary;
    summary.metrics_csv = cfg.output_dir / "metrics.csv";
    summary.manifest_json = cfg.output_dir / "manifest.json";

    int evals_done = 0;
    auto evaluate_all = [&](int label, const EpochTrace<T>* trace) {
        std::vector<MetricsRecord> rows(size_t(cfg.num_nodes));
#pragma omp parallel for schedule(dynamic, 1)
        for (int n = 0; n < cfg.num_nodes; ++n) {
            MetricsRecord rec;
            rec.epoch = label;
            rec.node = n;
            const EvalResult ev = evaluate(nodes[size_t(n)].params, test);
            rec.accuracy = ev.accuracy;
            rec.loss = ev.loss;
            rec.confusion = ev.confusion;
            if (attacker)
                rec.distance_fc1 =
                    distance_from_poison(nodes[size_t(n)].params, attacker->params, "fc1.weight");
            if (trace) {
                const auto& tn = trace->nodes[size_t(n)];
                rec.flow_l2_sum = l2_diff(tn.after_agg.flat(), tn.before.flat());
                rec.flow_local_l2 = l2_diff(tn.after_train.flat(), tn.after_agg.flat());
            }
            rows[size_t(n)] = std::move(rec);
        }
        ++evals_done;
        const bool write_confusion =
            label == cfg.total_epochs ||
            (cfg.confusion_interval > 0 && (evals_done - 1) % cfg.confusion_interval == 0);
        for (auto& rec : rows) {
            if (write_confusion) {
                char name[64];
                std::snprintf(name, sizeof(name), "confusion_e%d_n%d.json", label, rec.node);
                write_confusion_json(cfg.output_dir / name, *rec.confusion);
            }
            summary.records.push_back(std::move(rec));
        }
        if (cfg.snapshot_interval > 0 &&
            (label % cfg.snapshot_interval == 0 || label == cfg.total_epochs)) {
            for (int n = 0; n < cfg.num_nodes; ++n) {
                char name[64];
                std::snprintf(name, sizeof(name), "model_e%d_n%d.wmodel", label, n);
                save_model(cfg.output_dir / name, nodes[size_t(n)].params);
            }
        }
    };

    evaluate_all(0, nullptr);
    for (int e = 0; e < cfg.total_epochs; ++e) {
        epoch_opts.capture_trace = labels.count(e + 1) > 0;
        EpochTrace<T> trace =
            run_epoch(nodes, attacker.get(), topo, e, epoch_opts);
        if (opts.progress && (e + 1) % 100 == 0)
            std::fprintf(stderr, "epoch %d/%d\n", e + 1, cfg.total_epochs);
        if (labels.count(e + 1)) evaluate_all(e + 1, &trace);
    }

    write_metrics_csv(summary.metrics_csv, summary.records);
    write_manifest(summary.manifest_json, cfg);
    return summary;
}

}  // namespace

RunSummary run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
    cfg.validate();
    if (cfg.precision == Precision::F64) return run_impl<double>(cfg, opts);
    return run_impl<float>(cfg, opts);
}

}  // namespace wafl
