#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "wafl/nn.hpp"
#include "wafl/topology.hpp"

namespace wafl {

template <typename T>
struct NodeState {
    int node_id = 0;
    ModelParams<T> params;
    OptimizerState<T> opt;
    std::shared_ptr<const LabeledDataset> data;
    std::vector<int32_t> local_indices;
};

// The injected model, held constant for the whole run.
template <typename T>
struct AttackerState {
    ModelParams<T> params;
};

// theta' = theta + lambda * sum_k(theta_k - theta) / (|nbr| + 1).
// An empty neighbor list returns `own` unchanged.
template <typename T>
ModelParams<T> aggregate(const ModelParams<T>& own,
                         std::span<const ModelParams<T>* const> neighbors, T lambda) {
    if (!(lambda > T(0)) || lambda > T(1))
        throw InputError("aggregate: lambda outside (0,1]");
    if (neighbors.empty()) return own;
    for (const auto* nb : neighbors)
        if (nb->size() != own.size()) throw InputError("aggregate: model shape mismatch");

    ModelParams<T> out = own;
    auto o = out.flat();
    auto self = own.flat();
    const T denom = T(neighbors.size() + 1);
    for (size_t i = 0; i < self.size(); ++i) {
        T acc = T(0);
        for (const auto* nb : neighbors) acc += nb->flat()[i] - self[i];
        o[i] = self[i] + lambda * acc / denom;
    }
    return out;
}

// Per-node snapshots of one epoch: params at the epoch start, after
// aggregation, and after local training (the next epoch's start), plus the
// neighbor set used.
template <typename T>
struct EpochTrace {
    struct PerNode {
        ModelParams<T> before;
        ModelParams<T> after_agg;
        ModelParams<T> after_train;
        std::vector<int> neighbors;
    };
    int epoch = 0;
    std::vector<PerNode> nodes;
};

struct EpochOptions {
    double lambda = 0.1;
    int batch_size = 64;
    uint64_t master_seed = 1;
    bool reset_optimizer = false;
    // When false the training step is skipped entirely (diffusion-only mode,
    // equivalent to eta = 0 but without touching optimizer state).
    bool train = true;
    // When false the returned trace carries no parameter snapshots; long
    // runs only need them at evaluation epochs.
    bool capture_trace = true;
};

// One synchronous epoch: every node aggregates against the epoch-start
// snapshots of its neighbors (the attacker contributes its constant model),
// then every node runs one local training pass on the result. The attacker
// neither aggregates nor trains.
template <typename T>
EpochTrace<T> run_epoch(std::vector<NodeState<T>>& nodes, const AttackerState<T>* attacker,
                        const TopologySchedule& topo, int epoch, const EpochOptions& opt) {
    const int n = int(nodes.size());
    if (topo.attacker_active(epoch) && attacker == nullptr)
        throw InputError("run_epoch: topology schedules an attacker but none was given");

    std::vector<ModelParams<T>> snapshot;
    snapshot.reserve(size_t(n));
    for (const auto& node : nodes) snapshot.push_back(node.params);

    EpochTrace<T> trace;
    trace.epoch = epoch;
    if (opt.capture_trace) trace.nodes.resize(size_t(n));

    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
    for (int i = 0; i < n; ++i) {
        try {
            NodeState<T>& node = nodes[size_t(i)];
            const std::vector<int> nbrs = topo.neighbors(node.node_id, epoch);

            std::vector<const ModelParams<T>*> models;
            models.reserve(nbrs.size());
            for (int k : nbrs) {
                if (k == kAttackerId) {
                    models.push_back(&attacker->params);
                } else {
                    models.push_back(&snapshot[size_t(k)]);
                }
            }

            if (opt.capture_trace) {
                trace.nodes[size_t(i)].neighbors = nbrs;
                trace.nodes[size_t(i)].before = snapshot[size_t(i)];
            }
            node.params = aggregate<T>(
                snapshot[size_t(i)], std::span<const ModelParams<T>* const>(models),
                T(opt.lambda));
            if (opt.capture_trace) trace.nodes[size_t(i)].after_agg = node.params;

            if (opt.train) {
                if (opt.reset_optimizer) node.opt.reset();
                run_training_pass(node.params, node.opt, *node.data, node.local_indices,
                                  opt.batch_size,
                                  derive_seed(opt.master_seed, seed_stream::kShuffle,
                                              uint64_t(node.node_id), uint64_t(epoch)));
            }
            if (opt.capture_trace) trace.nodes[size_t(i)].after_train = node.params;
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return trace;
}

}  // namespace wafl
