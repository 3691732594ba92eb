// Writes a synthetic MNIST-shaped IDX dataset (train + test pairs) with the
// standard MNIST label histograms. A stand-in when the real files are not
// available.

#include <iostream>

#include <CLI11.hpp>

#include "wafl/synthetic.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
    CLI::App app{"synthetic MNIST-shaped dataset generator"};
    fs::path out_dir = "data";
    uint64_t seed = 1;
    double scale = 1.0;
    app.add_option("--out-dir", out_dir, "output directory");
    app.add_option("--seed", seed, "generation seed");
    app.add_option("--scale", scale, "scale all class counts by this factor (0,1]");
    CLI11_PARSE(app, argc, argv);

    if (!(scale > 0.0) || scale > 1.0) {
        std::cerr << "error: --scale must lie in (0,1]\n";
        return 1;
    }

    try {
        fs::create_directories(out_dir);
        auto scaled = [&](const std::array<int, 10>& counts) {
            std::array<int, 10> out{};
            for (int i = 0; i < 10; ++i)
                out[size_t(i)] = std::max(1, int(std::lround(scale * counts[size_t(i)])));
            return out;
        };
        const auto train_counts = scaled(wafl::kMnistTrainLabelCounts);
        const auto test_counts = scaled(wafl::kMnistTestLabelCounts);

        const auto train = wafl::make_synthetic_digits(train_counts, seed);
        wafl::save_idx(out_dir / "train-images-idx3-ubyte", out_dir / "train-labels-idx1-ubyte",
                       train);
        const auto test =
            wafl::make_synthetic_digits(test_counts, wafl::derive_seed(seed, 0x7E57ull, 0));
        wafl::save_idx(out_dir / "t10k-images-idx3-ubyte", out_dir / "t10k-labels-idx1-ubyte",
                       test);
        std::cout << "wrote " << train.size() << " train and " << test.size()
                  << " test samples under " << out_dir.string() << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
