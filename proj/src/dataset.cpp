#include "wafl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

namespace wafl {

namespace {

constexpr uint32_t kImageMagic = 2051;
constexpr uint32_t kLabelMagic = 2049;

std::string read_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open " + path.string());
    return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

uint32_t get_u32_be(const std::string& buf, size_t pos, const std::filesystem::path& path) {
    if (pos + 4 > buf.size())
        throw FormatError(path.string() + ": truncated at offset " + std::to_string(pos));
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | uint8_t(buf[pos + size_t(i)]);
    return v;
}

void put_u32_be(std::string& out, uint32_t v) {
    for (int i = 3; i >= 0; --i) out.push_back(char((v >> (8 * i)) & 0xff));
}

}  // namespace

LabeledDataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path) {
    const std::string img = read_file(images_path);
    const std::string lab = read_file(labels_path);

    if (get_u32_be(img, 0, images_path) != kImageMagic)
        throw FormatError(images_path.string() + ": bad magic at offset 0 (expected 2051)");
    const uint32_t n_images = get_u32_be(img, 4, images_path);
    const uint32_t rows = get_u32_be(img, 8, images_path);
    const uint32_t cols = get_u32_be(img, 12, images_path);
    if (rows != 28 || cols != 28)
        throw FormatError(images_path.string() + ": image dims " + std::to_string(rows) + "x" +
                          std::to_string(cols) + " at offset 8, expected 28x28");
    if (img.size() != 16 + size_t(n_images) * 784)
        throw FormatError(images_path.string() + ": payload is " + std::to_string(img.size() - 16) +
                          " bytes at offset 16, expected " + std::to_string(size_t(n_images) * 784));

    if (get_u32_be(lab, 0, labels_path) != kLabelMagic)
        throw FormatError(labels_path.string() + ": bad magic at offset 0 (expected 2049)");
    const uint32_t n_labels = get_u32_be(lab, 4, labels_path);
    if (lab.size() != 8 + size_t(n_labels))
        throw FormatError(labels_path.string() + ": payload is " + std::to_string(lab.size() - 8) +
                          " bytes at offset 8, expected " + std::to_string(n_labels));
    if (n_images != n_labels)
        throw FormatError(labels_path.string() + ": " + std::to_string(n_labels) +
                          " labels but " + std::to_string(n_images) + " images in " +
                          images_path.string());

    LabeledDataset ds;
    ds.images.resize(size_t(n_images) * 784);
    ds.labels.resize(n_images);
    ds.origin.resize(n_images);
    for (size_t i = 0; i < size_t(n_images) * 784; ++i)
        ds.images[i] = float(uint8_t(img[16 + i])) / 255.0f;
    for (uint32_t i = 0; i < n_labels; ++i) {
        const uint8_t l = uint8_t(lab[8 + i]);
        if (l > 9)
            throw FormatError(labels_path.string() + ": label " + std::to_string(int(l)) +
                              " at offset " + std::to_string(8 + i) + " out of range [0,9]");
        ds.labels[i] = l;
        ds.origin[i] = int32_t(i);
    }
    return ds;
}

void save_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
              const LabeledDataset& ds) {
    const size_t n = size_t(ds.size());
    std::string img;
    img.reserve(16 + n * 784);
    put_u32_be(img, kImageMagic);
    put_u32_be(img, uint32_t(n));
    put_u32_be(img, 28);
    put_u32_be(img, 28);
    for (float p : ds.images) {
        const int q = int(std::lround(std::clamp(p, 0.0f, 1.0f) * 255.0f));
        img.push_back(char(uint8_t(q)));
    }

    std::string lab;
    lab.reserve(8 + n);
    put_u32_be(lab, kLabelMagic);
    put_u32_be(lab, uint32_t(n));
    for (uint8_t l : ds.labels) lab.push_back(char(l));

    for (const auto& [path, buf] : {std::pair{images_path, &img}, std::pair{labels_path, &lab}}) {
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        if (!os) throw FormatError("cannot open " + path.string() + " for writing");
        os.write(buf->data(), std::streamsize(buf->size()));
        if (!os) throw FormatError("write failed: " + path.string());
    }
}

PartitionPlan partition_noniid(const LabeledDataset& ds, int num_nodes, double majority_fraction,
                               uint64_t seed) {
    if (num_nodes != 10)
        throw InputError("partition_noniid: num_nodes must equal the class count (10)");
    if (majority_fraction < 0.0 || majority_fraction > 1.0)
        throw InputError("partition_noniid: majority_fraction outside [0,1]");

    PartitionPlan plan;
    plan.assignment.assign(size_t(ds.size()), int8_t(-1));
    for (auto& row : plan.counts) row.fill(0);

    for (int label = 0; label < 10; ++label) {
        std::vector<int32_t> pool;
        for (int64_t i = 0; i < ds.size(); ++i)
            if (ds.labels[size_t(i)] == label) pool.push_back(int32_t(i));

        Rng rng(derive_seed(seed, 0xDA7Aull, uint64_t(label)));
        shuffle(std::span<int32_t>(pool), rng);

        const size_t majority = size_t(std::floor(majority_fraction * double(pool.size())));
        for (size_t k = 0; k < pool.size(); ++k) {
            int node;
            if (k < majority) {
                node = label;
            } else {
                // uniform over the other nodes
                const int r = int(rng.bounded(uint64_t(num_nodes - 1)));
                node = r >= label ? r + 1 : r;
            }
            plan.assignment[size_t(pool[k])] = int8_t(node);
            plan.counts[size_t(node)][size_t(label)] += 1;
        }
    }
    return plan;
}

std::vector<std::vector<int32_t>> indices_by_node(const PartitionPlan& plan, int num_nodes) {
    const auto n = size_t(num_nodes);
    std::vector<std::vector<int32_t>> out(n);
    for (size_t i = 0; i < plan.assignment.size(); ++i)
        out[size_t(plan.assignment[i])].push_back(int32_t(i));
    return out;
}

LabeledDataset swap_labels(const LabeledDataset& ds, int a, int b) {
    if (a == b) throw InputError("swap_labels: classes must differ");
    if (a < 0 || a > 9 || b < 0 || b > 9) throw InputError("swap_labels: class outside [0,9]");
    LabeledDataset out = ds;
    for (auto& l : out.labels) {
        if (l == a)
            l = uint8_t(b);
        else if (l == b)
            l = uint8_t(a);
    }
    return out;
}

LabeledDataset depress_label(const LabeledDataset& ds, int target, int override_label) {
    if (target == override_label) throw InputError("depress_label: target equals override");
    if (target < 0 || target > 9 || override_label < 0 || override_label > 9)
        throw InputError("depress_label: class outside [0,9]");
    LabeledDataset out = ds;
    for (auto& l : out.labels)
        if (l == target) l = uint8_t(override_label);
    return out;
}

std::vector<int32_t> uniform_subsample(std::span<const int32_t> indices, double fraction,
                                       uint64_t seed) {
    if (fraction <= 0.0 || fraction > 1.0)
        throw InputError("uniform_subsample: fraction outside (0,1]");
    if (indices.empty()) return {};
    std::vector<int32_t> pool(indices.begin(), indices.end());
    Rng rng(seed);
    shuffle(std::span<int32_t>(pool), rng);
    const size_t keep =
        std::max<size_t>(1, size_t(std::lround(fraction * double(pool.size()))));
    pool.resize(std::min(keep, pool.size()));
    std::sort(pool.begin(), pool.end());
    return pool;
}

}  // namespace wafl
