#pragma once

#include <span>
#include <string>
#include <vector>

#include "schedsynth/domain.hpp"
#include "schedsynth/mask.hpp"
#include "schedsynth/ops.hpp"
#include "schedsynth/rng.hpp"
#include "schedsynth/tensor.hpp"

namespace schedsynth {

enum class NormPlacement { post, pre };

std::string to_string(NormPlacement n);
NormPlacement norm_placement_from_string(const std::string& text);

struct EncoderConfig {
    int layers = 2;
    int d_model = 64;
    int heads = 4;
    int d_ff = 256;
    double dropout = 0.1;
    int max_len = kStepsPerWeek;
    NormPlacement norm = NormPlacement::post;
    double layer_norm_eps = 1e-5;

    void validate() const;
    bool operator==(const EncoderConfig&) const = default;
};

// Widths of the per-step features concatenated before projection to d_model.
struct InputFeatureSpec {
    int state_embed_dim = 16;
    int weekday_embed_dim = 8;
    int age_embed_dim = 4;
    int occupation_embed_dim = 4;

    int concat_width() const { return state_embed_dim + weekday_embed_dim + age_embed_dim + occupation_embed_dim; }
    void validate() const;
    bool operator==(const InputFeatureSpec&) const = default;
};

// Sinusoidal table: even columns sin(pos / 10000^(2i/d)), odd columns cos.
std::vector<double> positional_encoding(int max_len, int d_model);

// allowed(q, k) <=> k <= q.
AttentionMask lookahead_mask(std::size_t length);

// Imputation visibility over a sequence whose positions are either at home
// (activity unknown until revealed in time order) or away (always known):
//   away query    -> every away key
//   at-home query -> every away key, and at-home keys k <= q
// Away rows never see at-home keys, so no representation carries an
// activity from a later position into an earlier query, across any number
// of layers. at_home[i] is nonzero for at-home positions.
AttentionMask imputation_mask(std::span<const std::uint8_t> at_home);
// Same, deriving at-home flags from state codes.
AttentionMask imputation_mask(std::span<const StateCode> states, StateCode at_home_code);

// Ordered, named parameter tensors. Copies share storage; use snapshot and
// restore for value copies.
class ParameterSet {
public:
    Tensor& add(const std::string& name, Shape shape, std::vector<double> values);
    const Tensor& get(const std::string& name) const;
    bool contains(const std::string& name) const;

    std::vector<Tensor> tensors() const;
    const std::vector<std::pair<std::string, Tensor>>& items() const { return items_; }
    std::size_t count() const { return items_.size(); }
    std::size_t scalar_count() const;

    std::vector<std::vector<double>> snapshot() const;
    void restore(const std::vector<std::vector<double>>& values);
    void zero_grad();

private:
    std::vector<std::pair<std::string, Tensor>> items_;
};

// Parameter initialisers (deterministic given rng state).
std::vector<double> xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);
std::vector<double> normal_init(std::size_t n, double stddev, Rng& rng);

// Adds input-embedding parameters (prefix "input.") for a vocabulary.
void add_input_parameters(ParameterSet& params, const InputFeatureSpec& spec, int vocab, int d_model, Rng& rng);
// Adds encoder parameters (prefix "encoder.").
void add_encoder_parameters(ParameterSet& params, const EncoderConfig& config, Rng& rng);

// Per-step features before projection: [state | weekday | age | occupation].
Tensor concat_features(std::span<const int> tokens, std::span<const int> weekdays, const PersonAttributes& attrs,
                       const ParameterSet& params);

// Per step: concat(state, weekday, age, occupation embeddings) -> linear
// projection to d_model -> + positional-encoding row positions[t].
Tensor assemble_inputs(std::span<const int> tokens, std::span<const int> weekdays, std::span<const int> positions,
                       const PersonAttributes& attrs, const ParameterSet& params, std::span<const double> pe_table,
                       int d_model);

struct ForwardOptions {
    bool train = false;
    Rng* rng = nullptr;  // required when train && dropout > 0
};

// `layers` blocks of masked multi-head self-attention and a ReLU FFN, each
// wrapped in residual + layer norm (post-norm by default).
Tensor encoder_forward(const Tensor& inputs, const AttentionMask& mask, const EncoderConfig& config,
                       const ParameterSet& params, ForwardOptions options = {});

}  // namespace schedsynth
