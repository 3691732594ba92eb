#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wafl/model.hpp"
#include "wafl/nn.hpp"
#include "wafl/protocol.hpp"

namespace wafl {

// Rows are the true class, columns the predicted class.
struct ConfusionMatrix {
    std::array<std::array<int64_t, 10>, 10> counts{};

    int64_t total() const {
        int64_t t = 0;
        for (const auto& row : counts)
            for (int64_t c : row) t += c;
        return t;
    }
    int64_t trace() const {
        int64_t t = 0;
        for (int i = 0; i < 10; ++i) t += counts[size_t(i)][size_t(i)];
        return t;
    }
    double accuracy() const { return total() ? double(trace()) / double(total()) : 0.0; }
};

struct EvalResult {
    double accuracy = 0.0;
    double loss = 0.0;
    ConfusionMatrix confusion;
};

// Full-set evaluation: accuracy is the fraction of argmax-correct
// predictions, loss the mean cross-entropy.
template <typename T>
EvalResult evaluate(const ModelParams<T>& params, const LabeledDataset& test,
                    int eval_batch = 512) {
    if (test.size() == 0) throw InputError("evaluate: empty test set");
    EvalResult out;
    double loss_sum = 0.0;
    for (int64_t start = 0; start < test.size(); start += eval_batch) {
        const int64_t len = std::min<int64_t>(eval_batch, test.size() - start);
        RowMatrix<T> x(len, kInputDim);
        for (int64_t r = 0; r < len; ++r) {
            const auto px = test.image(start + r);
            for (int c = 0; c < kInputDim; ++c) x(r, c) = T(px[size_t(c)]);
        }
        RowMatrix<T> logits = predict(params, x);
        for (int64_t r = 0; r < len; ++r) {
            const int truth = int(test.labels[size_t(start + r)]);
            std::array<T, 10> row;
            for (int c = 0; c < kNumClasses; ++c) row[size_t(c)] = logits(r, c);
            const int pred = argmax_class<T>(row);
            out.confusion.counts[size_t(truth)][size_t(pred)] += 1;

            // log-sum-exp cross-entropy for this row
            T mx = row[0];
            for (T v : row) mx = std::max(mx, v);
            T sum = T(0);
            for (T v : row) sum += std::exp(v - mx);
            loss_sum += double(std::log(sum) + mx - row[size_t(truth)]);
        }
    }
    out.accuracy = out.confusion.accuracy();
    out.loss = loss_sum / double(test.size());
    return out;
}

// Euclidean distance between two models restricted to one named layer.
template <typename T>
double distance_from_poison(const ModelParams<T>& params, const ModelParams<T>& poison,
                            std::string_view layer) {
    auto a = params.layer(layer);
    auto b = poison.layer(layer);
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = double(a[i]) - double(b[i]);
        acc += d * d;
    }
    return std::sqrt(acc);
}

// Per-neighbor flows F_{k->c} = lambda (theta_k - theta_c) / (|nbr|+1), the
// local-training flow F_D = theta'' - theta', and the residual norms of the
// aggregation and epoch-update identities they must satisfy.
struct FlowDecomposition {
    std::vector<std::pair<int, double>> neighbor_flow_l2;  // (neighbor id, ||F_k||)
    double local_flow_l2 = 0.0;                            // ||F_D||
    double agg_delta_l2 = 0.0;                             // ||theta' - theta||
    double epoch_delta_l2 = 0.0;                           // ||theta'' - theta||
    double balance_l2 = 0.0;                               // ||sum F_k + F_D||
    double agg_residual_l2 = 0.0;    // ||theta' - theta - sum F_k||
    double epoch_residual_l2 = 0.0;  // ||theta'' - theta - sum F_k - F_D||
};

template <typename T>
FlowDecomposition flow_decomposition(const EpochTrace<T>& trace, int node, double lambda,
                                     const AttackerState<T>* attacker = nullptr) {
    if (node < 0 || node >= int(trace.nodes.size()))
        throw InputError("flow_decomposition: node not in trace");
    const auto& tn = trace.nodes[size_t(node)];
    const auto before = tn.before.flat();
    const auto after_agg = tn.after_agg.flat();
    const auto after_train = tn.after_train.flat();
    const double denom = double(tn.neighbors.size() + 1);

    FlowDecomposition out;
    std::vector<double> flow_sum(kParamCount, 0.0);
    for (int k : tn.neighbors) {
        const ModelParams<T>* other;
        if (k == kAttackerId) {
            if (!attacker)
                throw InputError("flow_decomposition: trace uses an attacker, none given");
            other = &attacker->params;
        } else {
            other = &trace.nodes[size_t(k)].before;
        }
        auto ov = other->flat();
        double norm2 = 0.0;
        for (size_t i = 0; i < kParamCount; ++i) {
            const double f = lambda * (double(ov[i]) - double(before[i])) / denom;
            flow_sum[i] += f;
            norm2 += f * f;
        }
        out.neighbor_flow_l2.emplace_back(k, std::sqrt(norm2));
    }

    double local2 = 0, aggd2 = 0, epochd2 = 0, bal2 = 0, aggr2 = 0, epochr2 = 0;
    for (size_t i = 0; i < kParamCount; ++i) {
        const double fd = double(after_train[i]) - double(after_agg[i]);
        const double agg_delta = double(after_agg[i]) - double(before[i]);
        const double epoch_delta = double(after_train[i]) - double(before[i]);
        local2 += fd * fd;
        aggd2 += agg_delta * agg_delta;
        epochd2 += epoch_delta * epoch_delta;
        bal2 += (flow_sum[i] + fd) * (flow_sum[i] + fd);
        aggr2 += (agg_delta - flow_sum[i]) * (agg_delta - flow_sum[i]);
        epochr2 += (epoch_delta - flow_sum[i] - fd) * (epoch_delta - flow_sum[i] - fd);
    }
    out.local_flow_l2 = std::sqrt(local2);
    out.agg_delta_l2 = std::sqrt(aggd2);
    out.epoch_delta_l2 = std::sqrt(epochd2);
    out.balance_l2 = std::sqrt(bal2);
    out.agg_residual_l2 = std::sqrt(aggr2);
    out.epoch_residual_l2 = std::sqrt(epochr2);
    return out;
}

// One evaluation of one node's model.
struct MetricsRecord {
    int epoch = 0;
    int node = 0;
    double accuracy = 0.0;
    double loss = 0.0;
    std::optional<double> distance_fc1;  // absent when the run has no poison model
    double flow_l2_sum = 0.0;            // ||theta' - theta|| of the epoch ending here
    double flow_local_l2 = 0.0;          // ||theta'' - theta'|| of the epoch ending here
    std::optional<ConfusionMatrix> confusion;
};

// Mean accuracy of one node's evaluations with lo <= epoch <= hi.
double window_average(const std::vector<MetricsRecord>& records, int node, int lo, int hi);

// Spearman rank correlation between per-node hop counts and distances.
// Returns nullopt when either ranking is degenerate (all values equal).
std::optional<double> spearman(std::span<const double> xs, std::span<const double> ys);

// metrics.csv with the fixed header
// epoch,node,accuracy,loss,distance_fc1,flow_l2_sum,flow_local_l2.
void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<MetricsRecord>& records);
std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path);

// Row-major 10x10 integer array as JSON.
void write_confusion_json(const std::filesystem::path& path, const ConfusionMatrix& cm);

}  // namespace wafl
