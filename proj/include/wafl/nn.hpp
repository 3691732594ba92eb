#pragma once

#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "wafl/dataset.hpp"
#include "wafl/model.hpp"

namespace wafl {

template <typename T>
struct Batch {
    RowMatrix<T> inputs;      // B x 784
    std::vector<int> labels;  // B values in [0, 9]

    void validate() const {
        if (inputs.rows() < 1) throw InputError("Batch: empty batch");
        if (inputs.cols() != kInputDim)
            throw InputError("Batch: inputs have " + std::to_string(inputs.cols()) +
                             " columns, expected " + std::to_string(kInputDim));
        if (size_t(inputs.rows()) != labels.size())
            throw InputError("Batch: " + std::to_string(inputs.rows()) + " rows but " +
                             std::to_string(labels.size()) + " labels");
        for (int l : labels)
            if (l < 0 || l >= kNumClasses)
                throw InputError("Batch: label " + std::to_string(l) + " outside [0,9]");
    }
};

// Gathers dataset rows into a batch, casting pixels to the working scalar.
template <typename T>
Batch<T> make_batch(const LabeledDataset& ds, std::span<const int32_t> rows) {
    Batch<T> b;
    b.inputs.resize(Eigen::Index(rows.size()), kInputDim);
    b.labels.resize(rows.size());
    for (size_t r = 0; r < rows.size(); ++r) {
        const auto px = ds.image(rows[r]);
        for (int c = 0; c < kInputDim; ++c) b.inputs(Eigen::Index(r), c) = T(px[size_t(c)]);
        b.labels[r] = int(ds.labels[size_t(rows[r])]);
    }
    return b;
}

// logits = fc2(relu(fc1(x))). Pure: never mutates params.
template <typename T>
RowMatrix<T> predict(const ModelParams<T>& params, const RowMatrix<T>& inputs) {
    if (inputs.rows() < 1) throw InputError("predict: empty input");
    if (inputs.cols() != kInputDim)
        throw InputError("predict: inputs have " + std::to_string(inputs.cols()) +
                         " columns, expected " + std::to_string(kInputDim));
    RowMatrix<T> h = inputs * params.fc1_weight().transpose();
    h.rowwise() += params.fc1_bias().transpose();
    h = h.cwiseMax(T(0));
    RowMatrix<T> logits = h * params.fc2_weight().transpose();
    logits.rowwise() += params.fc2_bias().transpose();
    return logits;
}

// Predicted class for one row of logits; ties resolve to the lowest index.
template <typename T>
int argmax_class(std::span<const T> logits) {
    int best = 0;
    for (int c = 1; c < int(logits.size()); ++c)
        if (logits[size_t(c)] > logits[size_t(best)]) best = c;
    return best;
}

template <typename T>
struct LossGrad {
    T loss;
    ModelParams<T> grad;
};

// Mean cross-entropy over the batch and its gradient in the canonical
// parameter layout. The log-sum-exp form keeps the loss finite for logits
// up to ~1e4.
template <typename T>
LossGrad<T> loss_and_grad(const ModelParams<T>& params, const Batch<T>& batch) {
    batch.validate();
    const Eigen::Index B = batch.inputs.rows();

    RowMatrix<T> z1 = batch.inputs * params.fc1_weight().transpose();
    z1.rowwise() += params.fc1_bias().transpose();
    RowMatrix<T> h = z1.cwiseMax(T(0));
    RowMatrix<T> logits = h * params.fc2_weight().transpose();
    logits.rowwise() += params.fc2_bias().transpose();

    // softmax cross-entropy, row-shifted by the max logit
    Vector<T> row_max = logits.rowwise().maxCoeff();
    RowMatrix<T> shifted = logits.colwise() - row_max;
    RowMatrix<T> expv = shifted.array().exp().matrix();
    Vector<T> sum_exp = expv.rowwise().sum();

    T loss = T(0);
    for (Eigen::Index i = 0; i < B; ++i)
        loss += std::log(sum_exp(i)) - shifted(i, batch.labels[size_t(i)]);
    loss /= T(B);

    // dlogits = (softmax - onehot) / B
    RowMatrix<T> dlogits = expv.array().colwise() / sum_exp.array();
    for (Eigen::Index i = 0; i < B; ++i) dlogits(i, batch.labels[size_t(i)]) -= T(1);
    dlogits /= T(B);

    LossGrad<T> out{loss, ModelParams<T>{}};
    out.grad.fc2_weight() = dlogits.transpose() * h;
    out.grad.fc2_bias() = dlogits.colwise().sum().transpose();
    RowMatrix<T> dz1 = dlogits * params.fc2_weight();
    dz1 = (z1.array() > T(0)).select(dz1, RowMatrix<T>::Zero(B, kHiddenDim));
    out.grad.fc1_weight() = dz1.transpose() * batch.inputs;
    out.grad.fc1_bias() = dz1.colwise().sum().transpose();
    return out;
}

template <typename T>
struct OptimizerState {
    std::vector<T> m, v;
    int64_t t = 0;
    T beta1 = T(0.9);
    T beta2 = T(0.999);
    T eps = T(1e-8);
    T lr = T(1e-3);

    OptimizerState() : m(kParamCount, T(0)), v(kParamCount, T(0)) {}
    explicit OptimizerState(T learning_rate) : OptimizerState() { lr = learning_rate; }

    void reset() {
        std::fill(m.begin(), m.end(), T(0));
        std::fill(v.begin(), v.end(), T(0));
        t = 0;
    }
};

// One bias-corrected Adam step, in place.
template <typename T>
void adam_step(ModelParams<T>& params, const ModelParams<T>& grad, OptimizerState<T>& st) {
    if (st.m.size() != kParamCount || st.v.size() != kParamCount)
        throw InputError("adam_step: optimizer state length mismatch");
    st.t += 1;
    const T bc1 = T(1) - T(std::pow(double(st.beta1), double(st.t)));
    const T bc2 = T(1) - T(std::pow(double(st.beta2), double(st.t)));
    auto p = params.flat();
    auto g = grad.flat();
    for (size_t i = 0; i < kParamCount; ++i) {
        st.m[i] = st.beta1 * st.m[i] + (T(1) - st.beta1) * g[i];
        st.v[i] = st.beta2 * st.v[i] + (T(1) - st.beta2) * g[i] * g[i];
        const T m_hat = st.m[i] / bc1;
        const T v_hat = st.v[i] / bc2;
        p[i] -= st.lr * m_hat / (std::sqrt(v_hat) + st.eps);
    }
}

// One shuffled pass over `indices` in mini-batches of `batch_size` (last
// batch possibly smaller), one Adam step per mini-batch. Returns the number
// of steps applied.
template <typename T>
int run_training_pass(ModelParams<T>& params, OptimizerState<T>& opt, const LabeledDataset& ds,
                      std::span<const int32_t> indices, int batch_size, uint64_t seed) {
    if (indices.empty()) throw InputError("run_training_pass: empty partition");
    if (batch_size < 1) throw InputError("run_training_pass: batch_size must be >= 1");

    std::vector<int32_t> order(indices.begin(), indices.end());
    Rng rng(seed);
    shuffle(std::span<int32_t>(order), rng);

    int steps = 0;
    for (size_t start = 0; start < order.size(); start += size_t(batch_size)) {
        const size_t len = std::min(size_t(batch_size), order.size() - start);
        Batch<T> batch = make_batch<T>(ds, std::span<const int32_t>(order).subspan(start, len));
        LossGrad<T> lg = loss_and_grad(params, batch);
        adam_step(params, lg.grad, opt);
        ++steps;
    }
    return steps;
}

}  // namespace wafl
