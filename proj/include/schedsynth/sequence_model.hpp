#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "schedsynth/attention.hpp"

namespace schedsynth {

// Which row of the sinusoidal table a step receives.
//   time_of_day: step within the day (0..143), the weekday embedding
//                supplies the day, so the same clock time on different days
//                shares its encoding.
//   sequence:    index along the sequence (0..L-1).
enum class PositionIndex { time_of_day, sequence };

std::string to_string(PositionIndex p);
PositionIndex position_index_from_string(const std::string& text);

// Hyperparameters: the layers / d_model / learning rate / batch size grid axes
// plus the defaults the encoder needs.
struct ModelConfig {
    EncoderConfig encoder;
    InputFeatureSpec features;
    double learning_rate = 1e-3;
    int batch_size = 64;
    int max_epochs = 200;
    int patience = 5;
    PositionIndex position_index = PositionIndex::time_of_day;
    double head_init_std = 0.02;

    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

// One model input: per-step token, weekday and positional-table row.
struct SequenceInput {
    std::vector<int> tokens;
    std::vector<int> weekdays;
    std::vector<int> positions;
    PersonAttributes attributes;

    std::size_t length() const { return tokens.size(); }
};

// Embedding + encoder + linear output head.
class SequenceModel {
public:
    SequenceModel() = default;
    SequenceModel(ModelConfig config, int vocab, int outputs, std::uint64_t seed);

    const ModelConfig& config() const { return config_; }
    int vocab() const { return vocab_; }
    int outputs() const { return outputs_; }
    std::uint64_t init_seed() const { return init_seed_; }
    const ParameterSet& params() const { return params_; }
    ParameterSet& params() { return params_; }
    std::span<const double> pe_table() const { return pe_table_; }

    // L x outputs logits.
    Tensor logits(const SequenceInput& input, const AttentionMask& mask, ForwardOptions options = {}) const;

private:
    ModelConfig config_;
    int vocab_ = 0;
    int outputs_ = 0;
    std::uint64_t init_seed_ = 0;
    ParameterSet params_;
    std::vector<double> pe_table_;
};

inline constexpr int kIgnoreTarget = -1;

// A teacher-forced training example. Targets equal to kIgnoreTarget carry no
// loss. at_home is empty for causal examples and holds the imputation
// visibility flags otherwise.
struct TrainingExample {
    SequenceInput input;
    std::vector<int> targets;
    std::vector<std::uint8_t> at_home;

    std::size_t active_targets() const;
};

AttentionMask mask_for(const TrainingExample& example);

struct EpochRecord {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainReport {
    double initial_val_loss = 0.0;
    double initial_val_accuracy = 0.0;
    std::vector<EpochRecord> epochs;
    int best_epoch = 0;  // argmin validation loss; 0 when no epoch ran
    bool stopped_early = false;
};

struct LossAndAccuracy {
    double loss = 0.0;
    double accuracy = 0.0;
    std::size_t targets = 0;
};

// Target-weighted mean cross-entropy and argmax accuracy, evaluation mode.
LossAndAccuracy evaluate_examples(const SequenceModel& model, std::span<const TrainingExample> examples,
                                  int threads = 1);

// Called after each epoch; returning false stops training.
using EpochCallback = std::function<bool(const EpochRecord&)>;

// Adam on batch-mean cross-entropy with early stopping on validation loss.
// The best epoch's parameters are left in the model. Examples of a batch are
// spread over `threads` workers; the result is the same for any thread count.
TrainReport fit(SequenceModel& model, std::span<const TrainingExample> train, std::span<const TrainingExample> validation,
                std::uint64_t seed, const EpochCallback& on_epoch = {}, int threads = 1);

}  // namespace schedsynth
