#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "wafl/dataset.hpp"

namespace wafl {

// Per-class sample counts of the standard MNIST train and test files, so a
// generated dataset mirrors the real label histograms (and therefore the
// real per-label partition totals).
inline constexpr std::array<int, 10> kMnistTrainLabelCounts{
    5923, 6742, 5958, 6131, 5842, 5421, 5918, 6265, 5851, 5949};
inline constexpr std::array<int, 10> kMnistTestLabelCounts{
    980, 1135, 1032, 1010, 982, 892, 958, 1028, 974, 1009};

struct SyntheticOptions {
    double noise_sigma = 0.08;    // additive Gaussian pixel noise
    double min_intensity = 0.70;  // per-sample stroke intensity lower bound
    int max_shift = 1;            // uniform +-shift in both axes
};

// MNIST-shaped stand-in: 28x28 seven-segment style digit glyphs with
// per-sample intensity, shift and noise jitter. Classes 4/9 share most
// segments (a similar pair) while 1/6 share almost none (a dissimilar
// pair), mirroring the relationships the attack pairs rely on. Labels are
// emitted in a seeded shuffled order with exactly the requested counts.
LabeledDataset make_synthetic_digits(std::span<const int> class_counts, uint64_t seed,
                                     const SyntheticOptions& opt = {});

}  // namespace wafl
