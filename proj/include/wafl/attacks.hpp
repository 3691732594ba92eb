#pragma once

#include <cstdint>
#include <string>

#include "wafl/dataset.hpp"
#include "wafl/nn.hpp"

namespace wafl {

enum class AttackKind { None, Rmp, Ssc, Sdc, Cod };

std::string to_string(AttackKind k);
AttackKind attack_kind_from_string(const std::string& s);

// How a poisoned model is produced. The trained kinds (SSC/SDC/COD) run a
// fresh model through `epochs` full passes over the transformed training
// set with Adam.
struct AttackSpec {
    AttackKind kind = AttackKind::Rmp;
    int class_a = 4;  // SSC/SDC pair
    int class_b = 9;
    int target = 0;  // COD
    int override_label = 6;
    int epochs = 100;
    int batch_size = 64;
    double learning_rate = 1e-4;
    uint64_t seed = 0;

    void validate() const {
        if ((kind == AttackKind::Ssc || kind == AttackKind::Sdc) && class_a == class_b)
            throw InputError("attack pair classes must differ");
        if (kind == AttackKind::Cod && target == override_label)
            throw InputError("COD target must differ from override");
        if (epochs < 1 || batch_size < 1 || learning_rate <= 0.0)
            throw InputError("attack training hyperparameters out of range");
    }
};

// Untrained model with fresh random parameters.
template <typename T>
ModelParams<T> make_rmp(uint64_t seed) {
    return init_params<T>(derive_seed(seed, seed_stream::kInit, 0));
}

namespace detail {
template <typename T>
ModelParams<T> train_poison(const LabeledDataset& train_set, const AttackSpec& spec) {
    ModelParams<T> params = init_params<T>(derive_seed(spec.seed, seed_stream::kInit, 0));
    OptimizerState<T> opt{T(spec.learning_rate)};
    std::vector<int32_t> all(size_t(train_set.size()));
    for (size_t i = 0; i < all.size(); ++i) all[i] = int32_t(i);
    for (int e = 0; e < spec.epochs; ++e)
        run_training_pass(params, opt, train_set, all, spec.batch_size,
                          derive_seed(spec.seed, seed_stream::kShuffle, 0, uint64_t(e)));
    return params;
}
}  // namespace detail

// Model trained after exchanging labels a and b (SSC when the pair is
// similar, SDC when dissimilar; the mechanics are identical).
template <typename T>
ModelParams<T> make_swap_attack(const LabeledDataset& train_set, int a, int b,
                                const AttackSpec& spec) {
    if (a == b) throw InputError("make_swap_attack: classes must differ");
    return detail::train_poison<T>(swap_labels(train_set, a, b), spec);
}

// Model trained after rewriting every `target` label to `override_label`,
// so it never learns to output the target class.
template <typename T>
ModelParams<T> make_cod_attack(const LabeledDataset& train_set, int target, int override_label,
                               const AttackSpec& spec) {
    if (target == override_label) throw InputError("make_cod_attack: target equals override");
    return detail::train_poison<T>(depress_label(train_set, target, override_label), spec);
}

// Dispatch on spec.kind.
template <typename T>
ModelParams<T> make_poison(const LabeledDataset& train_set, const AttackSpec& spec) {
    spec.validate();
    switch (spec.kind) {
        case AttackKind::Rmp:
            return make_rmp<T>(spec.seed);
        case AttackKind::Ssc:
        case AttackKind::Sdc:
            return make_swap_attack<T>(train_set, spec.class_a, spec.class_b, spec);
        case AttackKind::Cod:
            return make_cod_attack<T>(train_set, spec.target, spec.override_label, spec);
        case AttackKind::None:
            break;
    }
    throw InputError("make_poison: no attack kind set");
}

}  // namespace wafl
