#include "schedsynth/ops.hpp"

#include <cmath>
#include <limits>

#include "kernels.hpp"
#include "schedsynth/errors.hpp"

namespace schedsynth {

namespace {

void require_matrix(const Tensor& t, const char* op) {
    if (!t.defined()) throw ShapeError(std::string(op) + ": undefined operand");
    if (t.rank() != 2) throw ShapeError(std::string(op) + ": expected a matrix, got " + shape_string(t.shape()));
}

// Grad buffer of a parent that wants one, else null.
double* grad_of(Node& self, std::size_t i) {
    Node& p = *self.parents[i];
    return p.requires_grad ? p.ensure_grad().data() : nullptr;
}

enum class Broadcast { same, row };

Broadcast broadcast_kind(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() == b.shape()) return Broadcast::same;
    const bool b_is_row = (b.rank() == 1 && b.shape()[0] == a.cols()) || (b.rank() == 2 && b.rows() == 1 && b.cols() == a.cols());
    if (a.rank() == 2 && b_is_row) return Broadcast::row;
    throw ShapeError(std::string(op) + ": cannot combine " + shape_string(a.shape()) + " with " + shape_string(b.shape()));
}

// Lane iteration for axis-wise ops on rank-1/2 tensors.
struct Lanes {
    std::size_t count;
    std::size_t length;
    std::size_t stride;
    std::size_t start_step;
    std::size_t start(std::size_t lane) const { return lane * start_step; }
};

Lanes lanes_for(const Tensor& a, int axis, const char* op) {
    if (a.rank() == 1) {
        if (axis != 0) throw ShapeError(std::string(op) + ": invalid axis " + std::to_string(axis) + " for a vector");
        return {1, a.size(), 1, 0};
    }
    if (axis == 1) return {a.rows(), a.cols(), 1, a.cols()};
    if (axis == 0) return {a.cols(), a.rows(), a.cols(), 1};
    throw ShapeError(std::string(op) + ": invalid axis " + std::to_string(axis));
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_matrix(a, "matmul");
    require_matrix(b, "matmul");
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    if (b.rows() != k) {
        throw ShapeError("matmul: " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
    }
    std::vector<double> out(m * n);
    const double* A = a.data().data();
    const double* B = b.data().data();
    for (std::size_t i = 0; i < m; ++i) kern::gemm_row(A + i * k, k, B, n, out.data() + i * n);

    return make_result({m, n}, std::move(out), "matmul", {a, b}, [m, k, n](Node& self) {
        const double* G = self.grad.data();
        const double* A = self.parents[0]->value.data();
        const double* B = self.parents[1]->value.data();
        if (double* dA = grad_of(self, 0)) {
            std::vector<double> bt(n * k);
            for (std::size_t r = 0; r < k; ++r)
                for (std::size_t c = 0; c < n; ++c) bt[c * k + r] = B[r * n + c];
            std::vector<double> row(k);
            for (std::size_t i = 0; i < m; ++i) {
                kern::gemm_row(G + i * n, n, bt.data(), k, row.data());
                for (std::size_t j = 0; j < k; ++j) dA[i * k + j] += row[j];
            }
        }
        if (double* dB = grad_of(self, 1)) {
            for (std::size_t i = 0; i < m; ++i) {
                const double* grow = G + i * n;
                for (std::size_t r = 0; r < k; ++r) {
                    const double air = A[i * k + r];
                    double* drow = dB + r * n;
#pragma omp simd
                    for (std::size_t j = 0; j < n; ++j) drow[j] += air * grow[j];
                }
            }
        }
    });
}

Tensor transpose(const Tensor& a) {
    require_matrix(a, "transpose");
    const std::size_t m = a.rows(), n = a.cols();
    std::vector<double> out(m * n);
    const double* A = a.data().data();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j * m + i] = A[i * n + j];
    return make_result({n, m}, std::move(out), "transpose", {a}, [m, n](Node& self) {
        double* dA = grad_of(self, 0);
        if (!dA) return;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) dA[i * n + j] += self.grad[j * m + i];
    });
}

Tensor add(const Tensor& a, const Tensor& b) {
    const Broadcast kind = broadcast_kind(a, b, "add");
    const std::size_t n = a.cols(), m = a.rows();
    std::vector<double> out(a.size());
    const double* A = a.data().data();
    const double* B = b.data().data();
    for (std::size_t i = 0; i < m; ++i) {
        kern::add_row(A + i * n, kind == Broadcast::same ? B + i * n : B, n, out.data() + i * n);
    }
    return make_result(a.shape(), std::move(out), "add", {a, b}, [kind, m, n](Node& self) {
        const double* G = self.grad.data();
        if (double* dA = grad_of(self, 0)) {
            for (std::size_t i = 0; i < m * n; ++i) dA[i] += G[i];
        }
        if (double* dB = grad_of(self, 1)) {
            if (kind == Broadcast::same) {
                for (std::size_t i = 0; i < m * n; ++i) dB[i] += G[i];
            } else {
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j) dB[j] += G[i * n + j];
            }
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    const Broadcast kind = broadcast_kind(a, b, "mul");
    const std::size_t n = a.cols(), m = a.rows();
    std::vector<double> out(a.size());
    const double* A = a.data().data();
    const double* B = b.data().data();
    for (std::size_t i = 0; i < m; ++i) {
        kern::mul_row(A + i * n, kind == Broadcast::same ? B + i * n : B, n, out.data() + i * n);
    }
    return make_result(a.shape(), std::move(out), "mul", {a, b}, [kind, m, n](Node& self) {
        const double* G = self.grad.data();
        const double* A = self.parents[0]->value.data();
        const double* B = self.parents[1]->value.data();
        if (double* dA = grad_of(self, 0)) {
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    dA[i * n + j] += G[i * n + j] * (kind == Broadcast::same ? B[i * n + j] : B[j]);
        }
        if (double* dB = grad_of(self, 1)) {
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    dB[kind == Broadcast::same ? i * n + j : j] += G[i * n + j] * A[i * n + j];
        }
    });
}

Tensor scale(const Tensor& a, double factor) {
    std::vector<double> out(a.data().begin(), a.data().end());
    for (double& x : out) x *= factor;
    return make_result(a.shape(), std::move(out), "scale", {a}, [factor](Node& self) {
        double* dA = grad_of(self, 0);
        if (!dA) return;
        for (std::size_t i = 0; i < self.grad.size(); ++i) dA[i] += self.grad[i] * factor;
    });
}

Tensor relu(const Tensor& a) {
    std::vector<double> out(a.size());
    kern::relu_row(a.data().data(), a.size(), out.data());
    return make_result(a.shape(), std::move(out), "relu", {a}, [](Node& self) {
        double* dA = grad_of(self, 0);
        if (!dA) return;
        const double* X = self.parents[0]->value.data();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            if (X[i] > 0.0) dA[i] += self.grad[i];
        }
    });
}

Tensor softmax(const Tensor& a, int axis, std::span<const double> additive_mask) {
    const Lanes lanes = lanes_for(a, axis, "softmax");
    if (!additive_mask.empty() && additive_mask.size() != a.size()) {
        throw ShapeError("softmax: mask size " + std::to_string(additive_mask.size()) + " does not match input size " +
                         std::to_string(a.size()));
    }
    for (double m : additive_mask) {
        if (m != 0.0 && m != -std::numeric_limits<double>::infinity()) {
            throw ShapeError("softmax: mask entries must be 0 or -infinity");
        }
    }
    std::vector<double> out(a.size());
    const double* X = a.data().data();
    for (std::size_t l = 0; l < lanes.count; ++l) {
        const std::size_t s = lanes.start(l);
        const double* mask = additive_mask.empty() ? nullptr : additive_mask.data() + s;
        if (!kern::softmax_lane(X + s, mask, lanes.length, lanes.stride, out.data() + s)) {
            throw NumericError("softmax: lane " + std::to_string(l) + " has no unmasked position");
        }
    }
    return make_result(a.shape(), std::move(out), "softmax", {a}, [lanes](Node& self) {
        double* dA = grad_of(self, 0);
        if (!dA) return;
        const double* Y = self.value.data();
        const double* G = self.grad.data();
        for (std::size_t l = 0; l < lanes.count; ++l) {
            const std::size_t s = lanes.start(l);
            double dot = 0.0;
            for (std::size_t j = 0; j < lanes.length; ++j) dot += Y[s + j * lanes.stride] * G[s + j * lanes.stride];
            for (std::size_t j = 0; j < lanes.length; ++j) {
                const std::size_t idx = s + j * lanes.stride;
                dA[idx] += Y[idx] * (G[idx] - dot);
            }
        }
    });
}

Tensor layer_norm(const Tensor& a, int axis, double eps) {
    const Lanes lanes = lanes_for(a, axis, "layer_norm");
    if (!(eps > 0.0)) throw ShapeError("layer_norm: eps must be positive");
    std::vector<double> out(a.size());
    std::vector<double> inv(lanes.count);
    const double* X = a.data().data();
    for (std::size_t l = 0; l < lanes.count; ++l) {
        const std::size_t s = lanes.start(l);
        inv[l] = kern::layer_norm_lane(X + s, lanes.length, lanes.stride, eps, out.data() + s);
    }
    return make_result(a.shape(), std::move(out), "layer_norm", {a}, [lanes, inv = std::move(inv)](Node& self) {
        double* dA = grad_of(self, 0);
        if (!dA) return;
        const double* Y = self.value.data();
        const double* G = self.grad.data();
        const double n = static_cast<double>(lanes.length);
        for (std::size_t l = 0; l < lanes.count; ++l) {
            const std::size_t s = lanes.start(l);
            double g_sum = 0.0, gy_sum = 0.0;
            for (std::size_t j = 0; j < lanes.length; ++j) {
                const std::size_t idx = s + j * lanes.stride;
                g_sum += G[idx];
                gy_sum += G[idx] * Y[idx];
            }
            for (std::size_t j = 0; j < lanes.length; ++j) {
                const std::size_t idx = s + j * lanes.stride;
                dA[idx] += inv[l] / n * (n * G[idx] - g_sum - Y[idx] * gy_sum);
            }
        }
    });
}

Tensor embedding_lookup(const Tensor& table, std::span<const int> indices) {
    require_matrix(table, "embedding_lookup");
    const std::size_t vocab = table.rows(), d = table.cols();
    std::vector<double> out(indices.size() * d);
    const double* T = table.data().data();
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] < 0 || static_cast<std::size_t>(indices[i]) >= vocab) {
            throw ShapeError("embedding_lookup: index " + std::to_string(indices[i]) + " outside table of " +
                             std::to_string(vocab) + " rows");
        }
        std::copy_n(T + static_cast<std::size_t>(indices[i]) * d, d, out.data() + i * d);
    }
    std::vector<int> idx(indices.begin(), indices.end());
    return make_result({indices.size(), d}, std::move(out), "embedding_lookup", {table},
                       [d, idx = std::move(idx)](Node& self) {
                           double* dT = grad_of(self, 0);
                           if (!dT) return;
                           for (std::size_t i = 0; i < idx.size(); ++i) {
                               double* row = dT + static_cast<std::size_t>(idx[i]) * d;
                               for (std::size_t j = 0; j < d; ++j) row[j] += self.grad[i * d + j];
                           }
                       });
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
    if (parts.empty()) throw ShapeError("concat: no operands");
    for (const auto& p : parts) require_matrix(p, "concat");
    if (axis != 0 && axis != 1) throw ShapeError("concat: invalid axis " + std::to_string(axis));
    const std::size_t m0 = parts[0].rows(), n0 = parts[0].cols();
    std::size_t total = 0;
    for (const auto& p : parts) {
        if ((axis == 1 && p.rows() != m0) || (axis == 0 && p.cols() != n0)) {
            throw ShapeError("concat: mismatched operand " + shape_string(p.shape()));
        }
        total += axis == 1 ? p.cols() : p.rows();
    }
    const std::size_t m = axis == 1 ? m0 : total;
    const std::size_t n = axis == 1 ? total : n0;
    std::vector<double> out(m * n);
    std::vector<std::size_t> offsets;
    std::size_t off = 0;
    for (const auto& p : parts) {
        offsets.push_back(off);
        const double* P = p.data().data();
        if (axis == 1) {
            for (std::size_t i = 0; i < m; ++i) std::copy_n(P + i * p.cols(), p.cols(), out.data() + i * n + off);
            off += p.cols();
        } else {
            std::copy_n(P, p.size(), out.data() + off * n);
            off += p.rows();
        }
    }
    return make_result({m, n}, std::move(out), "concat", parts, [axis, m, n, offsets](Node& self) {
        for (std::size_t k = 0; k < self.parents.size(); ++k) {
            double* dP = grad_of(self, k);
            if (!dP) continue;
            const Node& p = *self.parents[k];
            const std::size_t pc = p.shape[1], pr = p.shape[0];
            if (axis == 1) {
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < pc; ++j) dP[i * pc + j] += self.grad[i * n + offsets[k] + j];
            } else {
                for (std::size_t i = 0; i < pr * pc; ++i) dP[i] += self.grad[offsets[k] * n + i];
            }
        }
    });
}

Tensor dropout(const Tensor& a, double rate, bool train, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) throw ShapeError("dropout: rate must be in [0, 1)");
    if (!train || rate == 0.0) return a;
    const double keep_scale = 1.0 / (1.0 - rate);
    std::vector<double> factor(a.size());
    for (double& f : factor) f = uniform01(rng) < rate ? 0.0 : keep_scale;
    std::vector<double> out(a.size());
    kern::mul_row(a.data().data(), factor.data(), a.size(), out.data());
    return make_result(a.shape(), std::move(out), "dropout", {a}, [factor = std::move(factor)](Node& self) {
        double* dA = grad_of(self, 0);
        if (!dA) return;
        for (std::size_t i = 0; i < self.grad.size(); ++i) dA[i] += self.grad[i] * factor[i];
    });
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> targets, std::optional<int> ignore_code) {
    require_matrix(logits, "cross_entropy");
    const std::size_t n = logits.rows(), k = logits.cols();
    if (targets.size() != n) {
        throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets for " + std::to_string(n) + " rows");
    }
    const double* L = logits.data().data();
    std::vector<double> probs(n * k, 0.0);
    std::vector<std::uint8_t> active(n, 0);
    std::size_t count = 0;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (ignore_code && targets[i] == *ignore_code) continue;
        if (targets[i] < 0 || static_cast<std::size_t>(targets[i]) >= k) {
            throw ShapeError("cross_entropy: target " + std::to_string(targets[i]) + " outside 0.." + std::to_string(k - 1));
        }
        active[i] = 1;
        ++count;
        const double* row = L + i * k;
        double top = row[0];
        for (std::size_t j = 1; j < k; ++j) top = std::max(top, row[j]);
        double s = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            probs[i * k + j] = std::exp(row[j] - top);
            s += probs[i * k + j];
        }
        for (std::size_t j = 0; j < k; ++j) probs[i * k + j] /= s;
        total += top + std::log(s) - row[targets[i]];
    }
    if (count == 0) throw NumericError("cross_entropy: every row is ignored");
    const double loss = total / static_cast<double>(count);
    std::vector<int> tgt(targets.begin(), targets.end());
    return make_result({1}, {loss}, "cross_entropy", {logits},
                       [n, k, count, probs = std::move(probs), active = std::move(active), tgt = std::move(tgt)](Node& self) {
                           double* dL = grad_of(self, 0);
                           if (!dL) return;
                           const double g = self.grad[0] / static_cast<double>(count);
                           for (std::size_t i = 0; i < n; ++i) {
                               if (!active[i]) continue;
                               for (std::size_t j = 0; j < k; ++j) {
                                   const double onehot = static_cast<int>(j) == tgt[i] ? 1.0 : 0.0;
                                   dL[i * k + j] += g * (probs[i * k + j] - onehot);
                               }
                           }
                       });
}

Tensor sum(const Tensor& a) {
    double s = 0.0;
    for (double x : a.data()) s += x;
    return make_result({1}, {s}, "sum", {a}, [](Node& self) {
        double* dA = grad_of(self, 0);
        if (!dA) return;
        const std::size_t n = self.parents[0]->value.size();
        for (std::size_t i = 0; i < n; ++i) dA[i] += self.grad[0];
    });
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.size())); }

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) { return add(matmul(x, w), b); }

Tensor multi_head_attention(const Tensor& q, const Tensor& k, const Tensor& v, int heads, const AttentionMask& mask) {
    return multi_head_attention(q, k, v, heads, mask, nullptr);
}

Tensor multi_head_attention(const Tensor& q, const Tensor& k, const Tensor& v, int heads, const AttentionMask& mask,
                            AttentionProbe* probe) {
    require_matrix(q, "attention");
    require_matrix(k, "attention");
    require_matrix(v, "attention");
    const std::size_t L = q.rows(), d = q.cols();
    if (k.shape() != q.shape() || v.shape() != q.shape()) throw ShapeError("attention: q, k, v shapes differ");
    if (heads <= 0 || d % static_cast<std::size_t>(heads) != 0) {
        throw ShapeError("attention: width " + std::to_string(d) + " not divisible by " + std::to_string(heads) + " heads");
    }
    if (mask.size() != L) throw ShapeError("attention: mask size does not match sequence length");
    const std::size_t H = static_cast<std::size_t>(heads), dh = d / H;
    const double scale_factor = 1.0 / std::sqrt(static_cast<double>(dh));

    const bool keep = grad_enabled() && (q.requires_grad() || k.requires_grad() || v.requires_grad());
    const bool record = keep || (probe && probe->record);
    // Row i keeps weights for keys begin(i)..end(i)-1 only, at offset[i].
    std::vector<std::size_t> begins(L), offset(L + 1, 0);
    for (std::size_t i = 0; i < L; ++i) {
        begins[i] = mask.row_begin(i);
        offset[i + 1] = offset[i] + (mask.row_end(i) - begins[i]);
    }
    const std::size_t span = offset[L];
    std::vector<double> probs(record ? H * span : 0);
    std::vector<double> row_probs(L);
    std::vector<double> out(L * d);
    std::vector<double> kt(dh * L), vt(dh * L);
    const double* Q = q.data().data();
    const double* K = k.data().data();
    const double* V = v.data().data();
    auto transpose_head = [&](const double* X, std::size_t h, double* xt) {
        for (std::size_t j = 0; j < L; ++j)
            for (std::size_t c = 0; c < dh; ++c) xt[c * L + j] = X[j * d + h * dh + c];
    };
    for (std::size_t h = 0; h < H; ++h) {
        transpose_head(K, h, kt.data());
        transpose_head(V, h, vt.data());
        for (std::size_t i = 0; i < L; ++i) {
            double* p = record ? probs.data() + h * span + offset[i] : row_probs.data();
            const bool ok = kern::attention_row(Q + i * d + h * dh, dh, kt.data(), vt.data(), L, mask.row(i).data(),
                                                begins[i], mask.row_end(i), scale_factor, p, out.data() + i * d + h * dh);
            if (!ok) throw NumericError("attention: query row " + std::to_string(i) + " has no allowed key");
        }
    }
    if (probe && probe->record) {
        probe->probs.assign(H * L * L, 0.0);
        for (std::size_t h = 0; h < H; ++h)
            for (std::size_t i = 0; i < L; ++i)
                std::copy(probs.begin() + static_cast<std::ptrdiff_t>(h * span + offset[i]),
                          probs.begin() + static_cast<std::ptrdiff_t>(h * span + offset[i + 1]),
                          probe->probs.begin() + static_cast<std::ptrdiff_t>((h * L + i) * L + begins[i]));
    }
    if (!keep) probs.clear();

    return make_result(
        {L, d}, std::move(out), "multi_head_attention", {q, k, v},
        [L, d, H, dh, scale_factor, span, begins = std::move(begins), offset = std::move(offset),
         probs = std::move(probs)](Node& self) {
            const double* G = self.grad.data();
            const double* Q = self.parents[0]->value.data();
            const double* K = self.parents[1]->value.data();
            const double* V = self.parents[2]->value.data();
            double* dQ = grad_of(self, 0);
            double* dK = grad_of(self, 1);
            double* dV = grad_of(self, 2);
            std::vector<double> kt(dh * L), vt(dh * L), dkt(dh * L), dvt(dh * L), dp(L);
            for (std::size_t h = 0; h < H; ++h) {
                for (std::size_t j = 0; j < L; ++j) {
                    for (std::size_t c = 0; c < dh; ++c) {
                        kt[c * L + j] = K[j * d + h * dh + c];
                        vt[c * L + j] = V[j * d + h * dh + c];
                    }
                }
                std::fill(dkt.begin(), dkt.end(), 0.0);
                std::fill(dvt.begin(), dvt.end(), 0.0);
                for (std::size_t i = 0; i < L; ++i) {
                    const std::size_t begin = begins[i], n = offset[i + 1] - offset[i];
                    const double* p = probs.data() + h * span + offset[i];
                    const double* g = G + i * d + h * dh;
                    const double* qi = Q + i * d + h * dh;
                    for (std::size_t c = 0; c < dh; ++c) {
                        const double gc = g[c];
                        double* row = dvt.data() + c * L + begin;
#pragma omp simd
                        for (std::size_t j = 0; j < n; ++j) row[j] += p[j] * gc;
                    }
                    for (std::size_t j = 0; j < n; ++j) dp[j] = 0.0;
                    for (std::size_t c = 0; c < dh; ++c) {
                        const double gc = g[c];
                        const double* vrow = vt.data() + c * L + begin;
#pragma omp simd
                        for (std::size_t j = 0; j < n; ++j) dp[j] += gc * vrow[j];
                    }
                    const double dot = kern::dot_lanes(p, dp.data(), n);
#pragma omp simd
                    for (std::size_t j = 0; j < n; ++j) dp[j] = p[j] * (dp[j] - dot) * scale_factor;
                    for (std::size_t c = 0; c < dh; ++c) {
                        const double* krow = kt.data() + c * L + begin;
                        double* dkrow = dkt.data() + c * L + begin;
                        const double qc = qi[c];
                        double acc = 0.0;
#pragma omp simd reduction(+ : acc)
                        for (std::size_t j = 0; j < n; ++j) {
                            acc += dp[j] * krow[j];
                            dkrow[j] += dp[j] * qc;
                        }
                        if (dQ) dQ[i * d + h * dh + c] += acc;
                    }
                }
                for (std::size_t j = 0; j < L; ++j) {
                    for (std::size_t c = 0; c < dh; ++c) {
                        if (dK) dK[j * d + h * dh + c] += dkt[c * L + j];
                        if (dV) dV[j * d + h * dh + c] += dvt[c * L + j];
                    }
                }
            }
        });
}

}  // namespace schedsynth
