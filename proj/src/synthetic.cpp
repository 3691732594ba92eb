#include "wafl/synthetic.hpp"

#include <algorithm>
#include <cmath>

namespace wafl {

namespace {

// Seven-segment layout on the 28x28 grid:
//
//    aaaa        a: top        g: middle     d: bottom
//   f    b       f/b: upper left/right
//   f    b       e/c: lower left/right
//    gggg
//   e    c
//   e    c
//    dddd
//
// Segment membership per digit.
constexpr uint8_t kSegments[10] = {
    // bits: a=1, b=2, c=4, d=8, e=16, f=32, g=64
    1 | 2 | 4 | 8 | 16 | 32,      // 0
    2 | 4,                        // 1
    1 | 2 | 64 | 16 | 8,          // 2
    1 | 2 | 64 | 4 | 8,           // 3
    32 | 64 | 2 | 4,              // 4
    1 | 32 | 64 | 4 | 8,          // 5
    1 | 32 | 64 | 16 | 4 | 8,     // 6
    1 | 2 | 4,                    // 7
    1 | 2 | 4 | 8 | 16 | 32 | 64, // 8
    1 | 2 | 4 | 8 | 32 | 64,      // 9
};

constexpr int kLo = 7, kHi = 20, kMid = 13;  // glyph bounding box and midline
constexpr int kThick = 2;

void draw_hbar(float* img, int row, float intensity) {
    for (int r = row; r < row + kThick; ++r)
        for (int c = kLo; c <= kHi; ++c) img[r * 28 + c] = intensity;
}

void draw_vbar(float* img, int col, int row0, int row1, float intensity) {
    for (int c = col; c < col + kThick; ++c)
        for (int r = row0; r <= row1; ++r) img[r * 28 + c] = intensity;
}

void draw_glyph(float* img, int digit, float intensity) {
    const uint8_t seg = kSegments[digit];
    if (seg & 1) draw_hbar(img, kLo, intensity);                    // a
    if (seg & 64) draw_hbar(img, kMid, intensity);                  // g
    if (seg & 8) draw_hbar(img, kHi - kThick + 1, intensity);       // d
    if (seg & 32) draw_vbar(img, kLo, kLo, kMid, intensity);        // f
    if (seg & 2) draw_vbar(img, kHi - kThick + 1, kLo, kMid, intensity);   // b
    if (seg & 16) draw_vbar(img, kLo, kMid, kHi, intensity);        // e
    if (seg & 4) draw_vbar(img, kHi - kThick + 1, kMid, kHi, intensity);   // c
}

// Box-Muller from two uniforms.
double gaussian(Rng& rng) {
    const double u1 = std::max(rng.uniform(), 1e-12);
    const double u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace

LabeledDataset make_synthetic_digits(std::span<const int> class_counts, uint64_t seed,
                                     const SyntheticOptions& opt) {
    if (class_counts.size() != 10) throw InputError("make_synthetic_digits: need 10 class counts");

    std::vector<uint8_t> labels;
    for (int c = 0; c < 10; ++c) {
        if (class_counts[size_t(c)] < 0) throw InputError("make_synthetic_digits: negative count");
        labels.insert(labels.end(), size_t(class_counts[size_t(c)]), uint8_t(c));
    }
    Rng order_rng(derive_seed(seed, 0x0DDEull, 0));
    shuffle(std::span<uint8_t>(labels), order_rng);

    LabeledDataset ds;
    const size_t n = labels.size();
    ds.images.assign(n * 784, 0.0f);
    ds.labels = std::move(labels);
    ds.origin.resize(n);

    Rng rng(derive_seed(seed, 0x1111ull, 1));
    std::vector<float> canvas(784);
    for (size_t i = 0; i < n; ++i) {
        ds.origin[i] = int32_t(i);
        std::fill(canvas.begin(), canvas.end(), 0.0f);
        const float intensity = float(rng.uniform(opt.min_intensity, 1.0));
        draw_glyph(canvas.data(), int(ds.labels[i]), intensity);

        const int shift = 2 * opt.max_shift + 1;
        const int dr = int(rng.bounded(uint64_t(shift))) - opt.max_shift;
        const int dc = int(rng.bounded(uint64_t(shift))) - opt.max_shift;

        float* out = ds.images.data() + i * 784;
        for (int r = 0; r < 28; ++r) {
            for (int c = 0; c < 28; ++c) {
                const int sr = r - dr, sc = c - dc;
                float v = (sr >= 0 && sr < 28 && sc >= 0 && sc < 28) ? canvas[sr * 28 + sc] : 0.0f;
                v += float(opt.noise_sigma * gaussian(rng));
                out[r * 28 + c] = std::clamp(v, 0.0f, 1.0f);
            }
        }
    }
    return ds;
}

}  // namespace wafl
