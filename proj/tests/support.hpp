#pragma once

#include <filesystem>
#include <string>

#include "wafl/dataset.hpp"
#include "wafl/rng.hpp"

namespace wafl::test {

// Random pixels and labels; enough for math-level tests that do not care
// about learnability.
inline LabeledDataset random_dataset(int n, uint64_t seed) {
    LabeledDataset ds;
    ds.images.resize(size_t(n) * 784);
    ds.labels.resize(size_t(n));
    ds.origin.resize(size_t(n));
    Rng rng(seed);
    for (auto& p : ds.images) p = float(rng.uniform());
    for (int i = 0; i < n; ++i) {
        ds.labels[size_t(i)] = uint8_t(rng.bounded(10));
        ds.origin[size_t(i)] = i;
    }
    return ds;
}

// Unique scratch directory under the build tree, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("wafl_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace wafl::test
