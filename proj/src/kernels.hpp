#pragma once

// Row kernels shared by the autodiff ops and the incremental inference
// engine. Both paths must call these so their results stay bit-identical.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <algorithm>
#include <bit>
#include <limits>
#include <span>

namespace schedsynth::kern {

// out[j] = sum_k a[k] * b[k * n + j], accumulated in k order.
inline void gemm_row(const double* a, std::size_t k_dim, const double* b, std::size_t n, double* out) {
    for (std::size_t j = 0; j < n; ++j) out[j] = 0.0;
    for (std::size_t k = 0; k < k_dim; ++k) {
        const double ak = a[k];
        const double* brow = b + k * n;
#pragma omp simd
        for (std::size_t j = 0; j < n; ++j) out[j] += ak * brow[j];
    }
}

inline void add_row(const double* a, const double* b, std::size_t n, double* out) {
#pragma omp simd
    for (std::size_t j = 0; j < n; ++j) out[j] = a[j] + b[j];
}

inline void mul_row(const double* a, const double* b, std::size_t n, double* out) {
#pragma omp simd
    for (std::size_t j = 0; j < n; ++j) out[j] = a[j] * b[j];
}

inline void relu_row(const double* a, std::size_t n, double* out) {
    for (std::size_t j = 0; j < n; ++j) out[j] = a[j] > 0.0 ? a[j] : 0.0;
}

// Normalises one lane to zero mean and unit variance; returns 1/sqrt(var+eps).
inline double layer_norm_lane(const double* x, std::size_t n, std::size_t stride, double eps, double* out) {
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += x[j * stride];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double d = x[j * stride] - mean;
        var += d * d;
    }
    var /= static_cast<double>(n);
    const double inv = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) out[j * stride] = (x[j * stride] - mean) * inv;
    return inv;
}

// Masked, max-shifted softmax over one lane. Returns false when every entry
// is masked out. mask may be null (nothing masked).
inline bool softmax_lane(const double* x, const double* mask, std::size_t n, std::size_t stride, double* out) {
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
        const double m = mask ? mask[j * stride] : 0.0;
        if (m == -std::numeric_limits<double>::infinity()) continue;
        top = std::max(top, x[j * stride] + m);
    }
    if (top == -std::numeric_limits<double>::infinity()) return false;
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double m = mask ? mask[j * stride] : 0.0;
        if (m == -std::numeric_limits<double>::infinity()) {
            out[j * stride] = 0.0;
            continue;
        }
        const double e = std::exp(x[j * stride] + m - top);
        out[j * stride] = e;
        sum += e;
    }
    for (std::size_t j = 0; j < n; ++j) out[j * stride] /= sum;
    return true;
}

// sum_j a[j] * b[j] over eight fixed lanes, so the rounding does not depend
// on how the compiler vectorises or aligns the loop.
inline double dot_lanes(const double* a, const double* b, std::size_t n) {
    constexpr std::size_t W = 8;
    double acc[W] = {};
    std::size_t j = 0;
    for (; j + W <= n; j += W) {
#pragma omp simd
        for (std::size_t k = 0; k < W; ++k) acc[k] += a[j + k] * b[j + k];
    }
    for (std::size_t k = 0; j < n; ++j, ++k) acc[k] += a[j] * b[j];
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

inline double sum_lanes(const double* a, std::size_t n) {
    constexpr std::size_t W = 8;
    double acc[W] = {};
    std::size_t j = 0;
    for (; j + W <= n; j += W) {
#pragma omp simd
        for (std::size_t k = 0; k < W; ++k) acc[k] += a[j + k];
    }
    for (std::size_t k = 0; j < n; ++j, ++k) acc[k] += a[j];
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

// exp for x <= 0, written so the compiler can vectorise it. Inputs below
// -708 give 0. Accurate to a few ulp.
[[gnu::always_inline]] inline double exp_nonpos(double x) {
    const double xc = x < -708.0 ? -708.0 : (x > 0.0 ? 0.0 : x);
    const double n = std::floor(xc * 1.4426950408889634 + 0.5);
    const double r = (xc - n * 6.93147180369123816490e-01) - n * 1.90821492927058770002e-10;
    double p = 1.0 / 6227020800.0;
    p = p * r + 1.0 / 479001600.0;
    p = p * r + 1.0 / 39916800.0;
    p = p * r + 1.0 / 3628800.0;
    p = p * r + 1.0 / 362880.0;
    p = p * r + 1.0 / 40320.0;
    p = p * r + 1.0 / 5040.0;
    p = p * r + 1.0 / 720.0;
    p = p * r + 1.0 / 120.0;
    p = p * r + 1.0 / 24.0;
    p = p * r + 1.0 / 6.0;
    p = p * r + 0.5;
    p = p * r + 1.0;
    p = p * r + 1.0;
    const std::int64_t bits = (static_cast<std::int64_t>(n) + 1023) << 52;
    return x < -708.0 ? 0.0 : p * std::bit_cast<double>(bits);
}

// One query row of one attention head.
//   q      : head_dim query values
//   kt, vt : head_dim x stride, keys and values transposed (column j is key j)
//   allowed: per-key permission for this query, covering [begin, end)
//   probs  : end - begin output weights for keys begin..end-1; blocked keys
//            are exactly 0
//   out    : head_dim outputs
// Returns false if no key in [begin, end) is allowed.
inline bool attention_row(const double* q, std::size_t head_dim, const double* kt, const double* vt,
                          std::size_t stride, const std::uint8_t* allowed, std::size_t begin, std::size_t end,
                          double scale, double* probs, double* out) {
    const std::size_t n = end - begin;
    const std::uint8_t* a = allowed + begin;
    for (std::size_t j = 0; j < n; ++j) probs[j] = 0.0;
    for (std::size_t c = 0; c < head_dim; ++c) {
        const double qc = q[c];
        const double* krow = kt + c * stride + begin;
#pragma omp simd
        for (std::size_t j = 0; j < n; ++j) probs[j] += qc * krow[j];
    }
    double top = -std::numeric_limits<double>::infinity();
#pragma omp simd reduction(max : top)
    for (std::size_t j = 0; j < n; ++j) {
        const double s = probs[j] * scale;
        probs[j] = s;
        top = a[j] && s > top ? s : top;
    }
    if (top == -std::numeric_limits<double>::infinity()) {
        for (std::size_t c = 0; c < head_dim; ++c) out[c] = 0.0;
        return false;
    }
#pragma omp simd
    for (std::size_t j = 0; j < n; ++j) {
        const double e = exp_nonpos(probs[j] - top);
        probs[j] = a[j] ? e : 0.0;
    }
    const double inv = 1.0 / sum_lanes(probs, n);
#pragma omp simd
    for (std::size_t j = 0; j < n; ++j) probs[j] *= inv;
    for (std::size_t c = 0; c < head_dim; ++c) out[c] = dot_lanes(probs, vt + c * stride + begin, n);
    return true;
}

}  // namespace schedsynth::kern
