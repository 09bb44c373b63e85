#include "schedsynth/attention.hpp"

#include <cmath>

#include "schedsynth/errors.hpp"

namespace schedsynth {

std::string to_string(NormPlacement n) { return n == NormPlacement::post ? "post" : "pre"; }

NormPlacement norm_placement_from_string(const std::string& text) {
    if (text == "post") return NormPlacement::post;
    if (text == "pre") return NormPlacement::pre;
    throw ConfigError("norm placement must be 'post' or 'pre', got '" + text + "'");
}

void EncoderConfig::validate() const {
    if (layers < 0) throw ConfigError("layers must be >= 0");
    if (d_model <= 0 || d_model % 2 != 0) throw ConfigError("d_model must be positive and even");
    if (heads <= 0 || d_model % heads != 0) throw ConfigError("d_model must be divisible by heads");
    if (d_ff <= 0) throw ConfigError("d_ff must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
    if (max_len <= 0) throw ConfigError("max_len must be positive");
    if (!(layer_norm_eps > 0.0)) throw ConfigError("layer_norm_eps must be positive");
}

void InputFeatureSpec::validate() const {
    if (state_embed_dim <= 0 || weekday_embed_dim <= 0 || age_embed_dim <= 0 || occupation_embed_dim <= 0) {
        throw ConfigError("input embedding widths must be positive");
    }
}

std::vector<double> positional_encoding(int max_len, int d_model) {
    if (d_model <= 0 || d_model % 2 != 0) throw ConfigError("positional encoding needs an even d_model");
    if (max_len <= 0) throw ConfigError("positional encoding needs max_len > 0");
    std::vector<double> pe(static_cast<std::size_t>(max_len) * static_cast<std::size_t>(d_model));
    for (int pos = 0; pos < max_len; ++pos) {
        for (int i = 0; 2 * i < d_model; ++i) {
            const double angle = pos / std::pow(10000.0, 2.0 * i / d_model);
            pe[static_cast<std::size_t>(pos * d_model + 2 * i)] = std::sin(angle);
            pe[static_cast<std::size_t>(pos * d_model + 2 * i + 1)] = std::cos(angle);
        }
    }
    return pe;
}

AttentionMask lookahead_mask(std::size_t length) {
    if (length == 0) throw ConfigError("mask length must be >= 1");
    return AttentionMask::causal(length);
}

AttentionMask imputation_mask(std::span<const std::uint8_t> at_home) {
    const std::size_t L = at_home.size();
    if (L == 0) throw ConfigError("mask length must be >= 1");
    std::vector<std::uint8_t> allowed(L * L, 0);
    for (std::size_t q = 0; q < L; ++q) {
        auto* row = allowed.data() + q * L;
        for (std::size_t k = 0; k < L; ++k) {
            row[k] = at_home[k] ? (at_home[q] && k <= q) : 1;
        }
    }
    return AttentionMask(L, std::move(allowed));
}

AttentionMask imputation_mask(std::span<const StateCode> states, StateCode at_home_code) {
    std::vector<std::uint8_t> flags(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) flags[i] = states[i] == at_home_code;
    return imputation_mask(flags);
}

Tensor& ParameterSet::add(const std::string& name, Shape shape, std::vector<double> values) {
    if (contains(name)) throw ConfigError("duplicate parameter '" + name + "'");
    items_.emplace_back(name, Tensor::from(std::move(shape), std::move(values), true));
    return items_.back().second;
}

const Tensor& ParameterSet::get(const std::string& name) const {
    for (const auto& [n, t] : items_) {
        if (n == name) return t;
    }
    throw ConfigError("missing parameter '" + name + "'");
}

bool ParameterSet::contains(const std::string& name) const {
    for (const auto& item : items_) {
        if (item.first == name) return true;
    }
    return false;
}

std::vector<Tensor> ParameterSet::tensors() const {
    std::vector<Tensor> out;
    out.reserve(items_.size());
    for (const auto& item : items_) out.push_back(item.second);
    return out;
}

std::size_t ParameterSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& item : items_) n += item.second.size();
    return n;
}

std::vector<std::vector<double>> ParameterSet::snapshot() const {
    std::vector<std::vector<double>> out;
    out.reserve(items_.size());
    for (const auto& item : items_) out.emplace_back(item.second.data().begin(), item.second.data().end());
    return out;
}

void ParameterSet::restore(const std::vector<std::vector<double>>& values) {
    if (values.size() != items_.size()) throw ShapeError("parameter snapshot has the wrong tensor count");
    for (std::size_t i = 0; i < items_.size(); ++i) {
        auto dst = items_[i].second.mutable_data();
        if (values[i].size() != dst.size()) throw ShapeError("parameter snapshot size mismatch for " + items_[i].first);
        std::copy(values[i].begin(), values[i].end(), dst.begin());
    }
}

void ParameterSet::zero_grad() {
    for (auto& item : items_) item.second.zero_grad();
}

std::vector<double> xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::vector<double> out(fan_in * fan_out);
    for (double& x : out) x = (2.0 * uniform01(rng) - 1.0) * limit;
    return out;
}

std::vector<double> normal_init(std::size_t n, double stddev, Rng& rng) {
    std::normal_distribution<double> dist(0.0, stddev);
    std::vector<double> out(n);
    for (double& x : out) x = dist(rng);
    return out;
}

namespace {

std::size_t as_size(int v) { return static_cast<std::size_t>(v); }

void add_linear(ParameterSet& params, const std::string& prefix, std::size_t in, std::size_t out, Rng& rng) {
    params.add(prefix + ".w", {in, out}, xavier_uniform(in, out, rng));
    params.add(prefix + ".b", {out}, std::vector<double>(out, 0.0));
}

void add_norm(ParameterSet& params, const std::string& prefix, std::size_t width) {
    params.add(prefix + ".g", {width}, std::vector<double>(width, 1.0));
    params.add(prefix + ".b", {width}, std::vector<double>(width, 0.0));
}

Tensor apply_linear(const ParameterSet& params, const std::string& prefix, const Tensor& x) {
    return linear(x, params.get(prefix + ".w"), params.get(prefix + ".b"));
}

Tensor apply_norm(const ParameterSet& params, const std::string& prefix, const Tensor& x, double eps) {
    return add(mul(layer_norm(x, 1, eps), params.get(prefix + ".g")), params.get(prefix + ".b"));
}

std::string layer_prefix(int layer) { return "encoder.L" + std::to_string(layer); }

}  // namespace

void add_input_parameters(ParameterSet& params, const InputFeatureSpec& spec, int vocab, int d_model, Rng& rng) {
    spec.validate();
    if (vocab <= 0) throw ConfigError("input vocabulary must be non-empty");
    params.add("input.state", {as_size(vocab), as_size(spec.state_embed_dim)},
               normal_init(as_size(vocab * spec.state_embed_dim), 1.0, rng));
    params.add("input.weekday", {as_size(kDaysPerWeek), as_size(spec.weekday_embed_dim)},
               normal_init(as_size(kDaysPerWeek * spec.weekday_embed_dim), 1.0, rng));
    params.add("input.age", {as_size(kAttributeClasses), as_size(spec.age_embed_dim)},
               normal_init(as_size(kAttributeClasses * spec.age_embed_dim), 1.0, rng));
    params.add("input.occupation", {as_size(kAttributeClasses), as_size(spec.occupation_embed_dim)},
               normal_init(as_size(kAttributeClasses * spec.occupation_embed_dim), 1.0, rng));
    add_linear(params, "input.proj", as_size(spec.concat_width()), as_size(d_model), rng);
}

void add_encoder_parameters(ParameterSet& params, const EncoderConfig& config, Rng& rng) {
    config.validate();
    const std::size_t d = as_size(config.d_model), ff = as_size(config.d_ff);
    for (int l = 0; l < config.layers; ++l) {
        const std::string p = layer_prefix(l);
        add_linear(params, p + ".attn.q", d, d, rng);
        add_linear(params, p + ".attn.k", d, d, rng);
        add_linear(params, p + ".attn.v", d, d, rng);
        add_linear(params, p + ".attn.o", d, d, rng);
        add_norm(params, p + ".ln1", d);
        add_linear(params, p + ".ffn.in", d, ff, rng);
        add_linear(params, p + ".ffn.out", ff, d, rng);
        add_norm(params, p + ".ln2", d);
    }
    if (config.norm == NormPlacement::pre && config.layers > 0) add_norm(params, "encoder.final_ln", d);
}

Tensor concat_features(std::span<const int> tokens, std::span<const int> weekdays, const PersonAttributes& attrs,
                       const ParameterSet& params) {
    if (weekdays.size() != tokens.size()) throw ShapeError("tokens and weekdays differ in length");
    if (!validate_attributes(attrs).empty()) throw ConfigError("person attributes outside 0..6");
    for (int w : weekdays) {
        if (w < 0 || w >= kDaysPerWeek) throw ConfigError("weekday code " + std::to_string(w) + " outside 0..6");
    }
    const std::vector<int> age(tokens.size(), attrs.age_class);
    const std::vector<int> occupation(tokens.size(), attrs.occupation_class);
    return concat({embedding_lookup(params.get("input.state"), tokens), embedding_lookup(params.get("input.weekday"), weekdays),
                   embedding_lookup(params.get("input.age"), age), embedding_lookup(params.get("input.occupation"), occupation)},
                  1);
}

Tensor assemble_inputs(std::span<const int> tokens, std::span<const int> weekdays, std::span<const int> positions,
                       const PersonAttributes& attrs, const ParameterSet& params, std::span<const double> pe_table,
                       int d_model) {
    if (positions.size() != tokens.size()) throw ShapeError("tokens and positions differ in length");
    const std::size_t d = as_size(d_model);
    const std::size_t pe_rows = pe_table.size() / d;
    std::vector<double> pe(tokens.size() * d);
    for (std::size_t t = 0; t < positions.size(); ++t) {
        if (positions[t] < 0 || as_size(positions[t]) >= pe_rows) {
            throw ConfigError("position " + std::to_string(positions[t]) + " exceeds max_len " + std::to_string(pe_rows));
        }
        std::copy_n(pe_table.data() + as_size(positions[t]) * d, d, pe.data() + t * d);
    }
    Tensor projected = apply_linear(params, "input.proj", concat_features(tokens, weekdays, attrs, params));
    return add(projected, Tensor::from({tokens.size(), d}, std::move(pe)));
}

Tensor encoder_forward(const Tensor& inputs, const AttentionMask& mask, const EncoderConfig& config,
                       const ParameterSet& params, ForwardOptions options) {
    config.validate();
    if (inputs.rank() != 2 || inputs.cols() != as_size(config.d_model)) {
        throw ShapeError("encoder input must be L x d_model, got " + shape_string(inputs.shape()));
    }
    if (inputs.rows() > as_size(config.max_len)) throw ShapeError("sequence longer than max_len");
    if (mask.size() != inputs.rows()) throw ShapeError("mask size does not match sequence length");
    const bool use_dropout = options.train && config.dropout > 0.0;
    if (use_dropout && !options.rng) throw ConfigError("training forward with dropout needs an rng");
    auto drop = [&](const Tensor& t) { return use_dropout ? dropout(t, config.dropout, true, *options.rng) : t; };
    const double eps = config.layer_norm_eps;

    Tensor h = inputs;
    for (int l = 0; l < config.layers; ++l) {
        const std::string p = layer_prefix(l);
        auto attention = [&](const Tensor& x) {
            Tensor a = multi_head_attention(apply_linear(params, p + ".attn.q", x), apply_linear(params, p + ".attn.k", x),
                                            apply_linear(params, p + ".attn.v", x), config.heads, mask);
            return drop(apply_linear(params, p + ".attn.o", a));
        };
        auto feed_forward = [&](const Tensor& x) {
            return drop(apply_linear(params, p + ".ffn.out", relu(apply_linear(params, p + ".ffn.in", x))));
        };
        if (config.norm == NormPlacement::post) {
            h = apply_norm(params, p + ".ln1", add(h, attention(h)), eps);
            h = apply_norm(params, p + ".ln2", add(h, feed_forward(h)), eps);
        } else {
            h = add(h, attention(apply_norm(params, p + ".ln1", h, eps)));
            h = add(h, feed_forward(apply_norm(params, p + ".ln2", h, eps)));
        }
    }
    if (config.norm == NormPlacement::pre && config.layers > 0) h = apply_norm(params, "encoder.final_ln", h, eps);
    return h;
}

}  // namespace schedsynth
