#include "schedsynth/inference.hpp"

#include <algorithm>
#include <cmath>

#include "kernels.hpp"
#include "schedsynth/errors.hpp"

namespace schedsynth {

namespace {

const double* ptr(const ParameterSet& params, const std::string& name) { return params.get(name).data().data(); }

// gemm_row then bias, matching linear() = add(matmul(x, w), b).
void linear_row(const double* x, std::size_t in, const double* w, const double* b, std::size_t out, double* tmp,
                double* y) {
    kern::gemm_row(x, in, w, out, tmp);
    kern::add_row(tmp, b, out, y);
}

// layer_norm -> mul(g) -> add(b), as three separate passes like the graph.
void norm_row(const double* x, std::size_t n, double eps, const double* g, const double* b, double* tmp, double* y) {
    kern::layer_norm_lane(x, n, 1, eps, tmp);
    kern::mul_row(tmp, g, n, y);
    kern::add_row(y, b, n, tmp);
    std::copy_n(tmp, n, y);
}

}  // namespace

IncrementalEncoder::IncrementalEncoder(const SequenceModel& model, const AttentionMask& mask)
    : model_(model), mask_(mask), length_(mask.size()) {
    const auto& enc = model.config().encoder;
    if (length_ == 0 || length_ > static_cast<std::size_t>(enc.max_len)) {
        throw ShapeError("incremental encoder length outside 1..max_len");
    }
    d_ = static_cast<std::size_t>(enc.d_model);
    heads_ = static_cast<std::size_t>(enc.heads);
    head_dim_ = d_ / heads_;
    ff_ = static_cast<std::size_t>(enc.d_ff);
    const auto layers = static_cast<std::size_t>(enc.layers);
    x_.assign(layers + 1, std::vector<double>(length_ * d_, 0.0));
    kt_.assign(layers, std::vector<double>(heads_ * head_dim_ * length_, 0.0));
    vt_.assign(layers, std::vector<double>(heads_ * head_dim_ * length_, 0.0));
    q_.assign(length_ * d_, 0.0);
    logits_.assign(static_cast<std::size_t>(model.outputs()), 0.0);
    probs_.assign(length_, 0.0);
    const std::size_t wide = std::max({d_, ff_, logits_.size()});
    scratch_ = {std::vector<double>(d_), std::vector<double>(wide), std::vector<double>(d_), std::vector<double>(d_),
                std::vector<double>(d_),  std::vector<double>(ff_),  std::vector<double>(ff_), std::vector<double>(d_),
                std::vector<double>(d_)};

    const auto& p = model.params();
    for (std::size_t l = 0; l < layers; ++l) {
        const std::string pre = "encoder.L" + std::to_string(l);
        layers_.push_back({ptr(p, pre + ".attn.q.w"), ptr(p, pre + ".attn.q.b"), ptr(p, pre + ".attn.k.w"),
                           ptr(p, pre + ".attn.k.b"), ptr(p, pre + ".attn.v.w"), ptr(p, pre + ".attn.v.b"),
                           ptr(p, pre + ".attn.o.w"), ptr(p, pre + ".attn.o.b"), ptr(p, pre + ".ln1.g"),
                           ptr(p, pre + ".ln1.b"), ptr(p, pre + ".ffn.in.w"), ptr(p, pre + ".ffn.in.b"),
                           ptr(p, pre + ".ffn.out.w"), ptr(p, pre + ".ffn.out.b"), ptr(p, pre + ".ln2.g"),
                           ptr(p, pre + ".ln2.b")});
    }
    if (enc.norm == NormPlacement::pre && layers > 0) {
        final_g_ = ptr(p, "encoder.final_ln.g");
        final_b_ = ptr(p, "encoder.final_ln.b");
    }
}

void IncrementalEncoder::set_input(std::size_t row, int token, int weekday, int position, const PersonAttributes& attrs) {
    if (row >= length_) throw ShapeError("row outside sequence");
    const auto& spec = model_.config().features;
    const auto& p = model_.params();
    if (token < 0 || token >= model_.vocab()) throw ConfigError("token " + std::to_string(token) + " outside vocabulary");
    if (weekday < 0 || weekday >= kDaysPerWeek) throw ConfigError("weekday outside 0..6");
    if (!validate_attributes(attrs).empty()) throw ConfigError("person attributes outside 0..6");
    const std::size_t pe_rows = model_.pe_table().size() / d_;
    if (position < 0 || static_cast<std::size_t>(position) >= pe_rows) throw ConfigError("position exceeds max_len");

    const std::size_t width = static_cast<std::size_t>(spec.concat_width());
    std::vector<double> features(width);
    std::size_t off = 0;
    auto put = [&](const char* table, int index, int dim) {
        const auto n = static_cast<std::size_t>(dim);
        std::copy_n(ptr(p, table) + static_cast<std::size_t>(index) * n, n, features.data() + off);
        off += n;
    };
    put("input.state", token, spec.state_embed_dim);
    put("input.weekday", weekday, spec.weekday_embed_dim);
    put("input.age", attrs.age_class, spec.age_embed_dim);
    put("input.occupation", attrs.occupation_class, spec.occupation_embed_dim);

    std::vector<double> tmp(d_), projected(d_);
    linear_row(features.data(), width, ptr(p, "input.proj.w"), ptr(p, "input.proj.b"), d_, tmp.data(), projected.data());
    kern::add_row(projected.data(), model_.pe_table().data() + static_cast<std::size_t>(position) * d_, d_,
                  x_[0].data() + row * d_);
}

void IncrementalEncoder::compute(std::span<const std::size_t> rows) {
    const auto& enc = model_.config().encoder;
    auto& tmp = scratch_.tmp;
    auto& normed = scratch_.normed;
    auto& proj = scratch_.a;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const LayerParams& lp = layers_[l];
        for (std::size_t r : rows) {
            if (r >= length_) throw ShapeError("row outside sequence");
            const double* x = x_[l].data() + r * d_;
            const double* src = x;
            if (enc.norm == NormPlacement::pre) {
                norm_row(x, d_, enc.layer_norm_eps, lp.ln1_g, lp.ln1_b, tmp.data(), normed.data());
                src = normed.data();
            }
            linear_row(src, d_, lp.wq, lp.bq, d_, tmp.data(), q_.data() + r * d_);
            linear_row(src, d_, lp.wk, lp.bk, d_, tmp.data(), proj.data());
            for (std::size_t h = 0; h < heads_; ++h)
                for (std::size_t c = 0; c < head_dim_; ++c)
                    kt_[l][(h * head_dim_ + c) * length_ + r] = proj[h * head_dim_ + c];
            linear_row(src, d_, lp.wv, lp.bv, d_, tmp.data(), proj.data());
            for (std::size_t c = 0; c < d_; ++c) vt_[l][c * length_ + r] = proj[c];
        }
        for (std::size_t r : rows) finish_row(l, r);
    }
}

void IncrementalEncoder::finish_row(std::size_t l, std::size_t r) {
    const auto& enc = model_.config().encoder;
    const LayerParams& lp = layers_[l];
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim_));
    const double eps = enc.layer_norm_eps;
    auto& [att, tmp, a, s, h1, f1, f1r, f2, normed] = scratch_;

    const auto allowed = mask_.row(r);
    const std::size_t begin = mask_.row_begin(r), end = mask_.row_end(r);
    for (std::size_t h = 0; h < heads_; ++h) {
        const std::size_t off = h * head_dim_ * length_;
        const bool ok = kern::attention_row(q_.data() + r * d_ + h * head_dim_, head_dim_, kt_[l].data() + off,
                                            vt_[l].data() + off, length_, allowed.data(), begin, end, scale,
                                            probs_.data(), att.data() + h * head_dim_);
        if (!ok) throw NumericError("attention: query row " + std::to_string(r) + " has no allowed key");
    }
    linear_row(att.data(), d_, lp.wo, lp.bo, d_, tmp.data(), a.data());

    const double* x = x_[l].data() + r * d_;
    double* out = x_[l + 1].data() + r * d_;
    if (enc.norm == NormPlacement::post) {
        kern::add_row(x, a.data(), d_, s.data());
        norm_row(s.data(), d_, eps, lp.ln1_g, lp.ln1_b, tmp.data(), h1.data());
        linear_row(h1.data(), d_, lp.w1, lp.b1, ff_, tmp.data(), f1.data());
        kern::relu_row(f1.data(), ff_, f1r.data());
        linear_row(f1r.data(), ff_, lp.w2, lp.b2, d_, tmp.data(), f2.data());
        kern::add_row(h1.data(), f2.data(), d_, s.data());
        norm_row(s.data(), d_, eps, lp.ln2_g, lp.ln2_b, tmp.data(), out);
    } else {
        kern::add_row(x, a.data(), d_, h1.data());
        norm_row(h1.data(), d_, eps, lp.ln2_g, lp.ln2_b, tmp.data(), normed.data());
        linear_row(normed.data(), d_, lp.w1, lp.b1, ff_, tmp.data(), f1.data());
        kern::relu_row(f1.data(), ff_, f1r.data());
        linear_row(f1r.data(), ff_, lp.w2, lp.b2, d_, tmp.data(), f2.data());
        kern::add_row(h1.data(), f2.data(), d_, out);
    }
}

std::span<const double> IncrementalEncoder::logits(std::size_t row) {
    if (row >= length_) throw ShapeError("row outside sequence");
    const auto& p = model_.params();
    const auto& enc = model_.config().encoder;
    const double* h = x_.back().data() + row * d_;
    auto& tmp = scratch_.tmp;
    auto& normed = scratch_.normed;
    if (final_g_) {
        norm_row(h, d_, enc.layer_norm_eps, final_g_, final_b_, tmp.data(), normed.data());
        h = normed.data();
    }
    linear_row(h, d_, ptr(p, "head.w"), ptr(p, "head.b"), logits_.size(), tmp.data(), logits_.data());
    return logits_;
}

}  // namespace schedsynth
