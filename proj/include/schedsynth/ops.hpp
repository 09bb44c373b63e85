#pragma once

#include <optional>
#include <span>
#include <vector>

#include "schedsynth/mask.hpp"
#include "schedsynth/rng.hpp"
#include "schedsynth/tensor.hpp"

namespace schedsynth {

// (m x k) * (k x n)
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
// Elementwise; b may also be a single row broadcast over a's rows.
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor relu(const Tensor& a);
// Softmax along axis (0 or 1 for matrices). additive_mask, when given, has
// a's size and holds 0 or -infinity. A lane with nothing unmasked throws.
Tensor softmax(const Tensor& a, int axis, std::span<const double> additive_mask = {});
// Zero-mean unit-variance normalisation along axis, no affine part.
Tensor layer_norm(const Tensor& a, int axis, double eps = 1e-5);
// Rows of table (V x d) picked by indices -> (n x d).
Tensor embedding_lookup(const Tensor& table, std::span<const int> indices);
Tensor concat(const std::vector<Tensor>& parts, int axis);
// Inverted dropout; identity when !train or rate == 0.
Tensor dropout(const Tensor& a, double rate, bool train, Rng& rng);
// Mean over non-ignored rows of -log softmax(logits)[target].
Tensor cross_entropy(const Tensor& logits, std::span<const int> targets, std::optional<int> ignore_code = std::nullopt);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

// x * w + b, with b a single row.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

// Scaled dot-product attention over `heads` column blocks of q, k, v (each
// L x d). Blocked keys receive probability exactly 0.
Tensor multi_head_attention(const Tensor& q, const Tensor& k, const Tensor& v, int heads, const AttentionMask& mask);

// Attention probabilities of the last multi_head_attention forward for
// inspection: heads x L x L, row-major. Only filled when record is true.
struct AttentionProbe {
    bool record = false;
    std::vector<double> probs;
};
Tensor multi_head_attention(const Tensor& q, const Tensor& k, const Tensor& v, int heads, const AttentionMask& mask,
                            AttentionProbe* probe);

}  // namespace schedsynth
