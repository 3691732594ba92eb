#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "wafl/errors.hpp"
#include "wafl/rng.hpp"

namespace wafl {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// Parameter storage is kept at a fixed 64-byte alignment. Eigen's
// vectorized kernels peel loops based on the runtime pointer value, so
// mixed alignments would make bit-level results depend on where the
// allocator happened to place a buffer.
template <typename T, size_t Align>
struct AlignedAllocator {
    using value_type = T;
    template <typename U>
    struct rebind {
        using other = AlignedAllocator<U, Align>;
    };
    AlignedAllocator() = default;
    template <typename U>
    AlignedAllocator(const AlignedAllocator<U, Align>&) {}
    T* allocate(size_t n) {
        return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t(Align)));
    }
    void deallocate(T* p, size_t n) {
        ::operator delete(p, n * sizeof(T), std::align_val_t(Align));
    }
    template <typename U>
    bool operator==(const AlignedAllocator<U, Align>&) const {
        return true;
    }
};

template <typename T>
using ParamBuffer = std::vector<T, AlignedAllocator<T, 64>>;

inline constexpr int kInputDim = 784;
inline constexpr int kHiddenDim = 128;
inline constexpr int kNumClasses = 10;

// One segment of the canonical parameter layout. rows == 0 marks a bias
// vector of length cols.
struct LayerInfo {
    std::string_view name;
    int rows;
    int cols;
    size_t offset;

    constexpr size_t size() const { return size_t(rows ? rows : 1) * size_t(cols); }
};

// Canonical flattening order: fc1.weight row-major, fc1.bias,
// fc2.weight row-major, fc2.bias.
inline constexpr std::array<LayerInfo, 4> kModelLayout{{
    {"fc1.weight", kHiddenDim, kInputDim, 0},
    {"fc1.bias", 0, kHiddenDim, size_t(kHiddenDim) * kInputDim},
    {"fc2.weight", kNumClasses, kHiddenDim, size_t(kHiddenDim) * kInputDim + kHiddenDim},
    {"fc2.bias", 0, kNumClasses,
     size_t(kHiddenDim) * kInputDim + kHiddenDim + size_t(kNumClasses) * kHiddenDim},
}};

inline constexpr size_t kParamCount =
    kModelLayout.back().offset + kModelLayout.back().size();
static_assert(kParamCount == 101770);

inline const LayerInfo* find_layer(std::string_view name) {
    for (const auto& l : kModelLayout)
        if (l.name == name) return &l;
    return nullptr;
}

// Parameters of the 784-128-10 classifier as one flat vector in canonical
// order, with zero-copy Eigen views per layer.
template <typename T>
class ModelParams {
public:
    using Scalar = T;

    ModelParams() : v_(kParamCount, T(0)) {}

    static ModelParams from_flat(const std::vector<T>& flat) {
        if (flat.size() != kParamCount)
            throw InputError("ModelParams: flat vector has " + std::to_string(flat.size()) +
                             " entries, expected " + std::to_string(kParamCount));
        ModelParams p;
        std::copy(flat.begin(), flat.end(), p.v_.begin());
        return p;
    }

    std::span<T> flat() { return v_; }
    std::span<const T> flat() const { return v_; }
    size_t size() const { return v_.size(); }

    std::span<T> layer(std::string_view name) {
        const LayerInfo* l = find_layer(name);
        if (!l) throw InputError("unknown layer name: " + std::string(name));
        return std::span<T>(v_).subspan(l->offset, l->size());
    }
    std::span<const T> layer(std::string_view name) const {
        return const_cast<ModelParams*>(this)->layer(name);
    }

    Eigen::Map<RowMatrix<T>> fc1_weight() {
        return {v_.data() + kModelLayout[0].offset, kHiddenDim, kInputDim};
    }
    Eigen::Map<const RowMatrix<T>> fc1_weight() const {
        return {v_.data() + kModelLayout[0].offset, kHiddenDim, kInputDim};
    }
    Eigen::Map<Vector<T>> fc1_bias() { return {v_.data() + kModelLayout[1].offset, kHiddenDim}; }
    Eigen::Map<const Vector<T>> fc1_bias() const {
        return {v_.data() + kModelLayout[1].offset, kHiddenDim};
    }
    Eigen::Map<RowMatrix<T>> fc2_weight() {
        return {v_.data() + kModelLayout[2].offset, kNumClasses, kHiddenDim};
    }
    Eigen::Map<const RowMatrix<T>> fc2_weight() const {
        return {v_.data() + kModelLayout[2].offset, kNumClasses, kHiddenDim};
    }
    Eigen::Map<Vector<T>> fc2_bias() { return {v_.data() + kModelLayout[3].offset, kNumClasses}; }
    Eigen::Map<const Vector<T>> fc2_bias() const {
        return {v_.data() + kModelLayout[3].offset, kNumClasses};
    }

    bool all_finite() const {
        for (const T& x : v_)
            if (!std::isfinite(double(x))) return false;
        return true;
    }

private:
    ParamBuffer<T> v_;
};

// Fresh model: each layer drawn uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)],
// biases using their layer's fan_in, values drawn in canonical order.
template <typename T>
ModelParams<T> init_params(uint64_t seed) {
    ModelParams<T> p;
    Rng rng(seed);
    const double bound_fc1 = 1.0 / std::sqrt(double(kInputDim));
    const double bound_fc2 = 1.0 / std::sqrt(double(kHiddenDim));
    auto fill = [&](std::span<T> s, double bound) {
        for (T& x : s) x = T(rng.uniform(-bound, bound));
    };
    fill(p.layer("fc1.weight"), bound_fc1);
    fill(p.layer("fc1.bias"), bound_fc1);
    fill(p.layer("fc2.weight"), bound_fc2);
    fill(p.layer("fc2.bias"), bound_fc2);
    return p;
}

template <typename To, typename From>
ModelParams<To> cast_params(const ModelParams<From>& in) {
    std::vector<To> out(kParamCount);
    auto flat = in.flat();
    for (size_t i = 0; i < kParamCount; ++i) out[i] = To(flat[i]);
    return ModelParams<To>::from_flat(std::move(out));
}

// Model snapshot file: magic "WAFLM1", uint32 layer count, then per layer a
// length-prefixed name and a dimension list, then the flattened parameters
// as little-endian float32 in canonical order. Implemented in model_io.cpp.
void save_model_file(const std::filesystem::path& path, std::span<const float> flat);
std::vector<float> load_model_file(const std::filesystem::path& path);

template <typename T>
void save_model(const std::filesystem::path& path, const ModelParams<T>& params) {
    std::vector<float> f32(kParamCount);
    auto flat = params.flat();
    for (size_t i = 0; i < kParamCount; ++i) f32[i] = float(flat[i]);
    save_model_file(path, f32);
}

template <typename T>
ModelParams<T> load_model(const std::filesystem::path& path) {
    std::vector<float> f32 = load_model_file(path);
    std::vector<T> v(kParamCount);
    for (size_t i = 0; i < kParamCount; ++i) v[i] = T(f32[i]);
    return ModelParams<T>::from_flat(std::move(v));
}

}  // namespace wafl
