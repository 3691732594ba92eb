#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "wafl/errors.hpp"
#include "wafl/rng.hpp"

namespace wafl {

// Images as N x 784 row-major pixels in [0, 1], labels in [0, 9], plus each
// sample's position in the source file.
struct LabeledDataset {
    std::vector<float> images;
    std::vector<uint8_t> labels;
    std::vector<int32_t> origin;

    int64_t size() const { return int64_t(labels.size()); }
    std::span<const float> image(int64_t i) const {
        return std::span<const float>(images).subspan(size_t(i) * 784, 784);
    }
};

// Big-endian IDX files: magic 2051 / N x 28 x 28 bytes for images,
// magic 2049 / N bytes for labels. Pixels are scaled to [0, 1].
LabeledDataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path);

// Writes the dataset back out as a standard IDX pair (pixels quantized to
// bytes). Used by the fixture generator and tests.
void save_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
              const LabeledDataset& ds);

struct PartitionPlan {
    std::vector<int8_t> assignment;              // sample index -> node id
    std::array<std::array<int, 10>, 10> counts;  // [node][label]

    std::array<int, 10> node_totals() const {
        std::array<int, 10> t{};
        for (int n = 0; n < 10; ++n)
            for (int l = 0; l < 10; ++l) t[size_t(n)] += counts[size_t(n)][size_t(l)];
        return t;
    }
    std::array<int, 10> label_totals() const {
        std::array<int, 10> t{};
        for (int n = 0; n < 10; ++n)
            for (int l = 0; l < 10; ++l) t[size_t(l)] += counts[size_t(n)][size_t(l)];
        return t;
    }
};

// Non-IID split: per label, a seeded shuffle assigns the first
// floor(majority_fraction * N_label) samples to the same-numbered node and
// each remaining sample independently uniformly to one of the other nodes.
// Every sample is assigned exactly once.
PartitionPlan partition_noniid(const LabeledDataset& ds, int num_nodes, double majority_fraction,
                               uint64_t seed);

// Sample indices per node, in dataset order.
std::vector<std::vector<int32_t>> indices_by_node(const PartitionPlan& plan, int num_nodes);

// Labels a and b exchanged everywhere; images untouched.
LabeledDataset swap_labels(const LabeledDataset& ds, int a, int b);

// Every `target` label rewritten to `override_label`; images untouched.
LabeledDataset depress_label(const LabeledDataset& ds, int target, int override_label);

// Seeded uniform subsample without replacement, keeping
// max(1, round(fraction * n)) indices in ascending order.
std::vector<int32_t> uniform_subsample(std::span<const int32_t> indices, double fraction,
                                       uint64_t seed);

}  // namespace wafl
