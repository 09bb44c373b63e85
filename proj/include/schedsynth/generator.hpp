#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "schedsynth/domain.hpp"
#include "schedsynth/metrics.hpp"
#include "schedsynth/sequence_model.hpp"

namespace schedsynth {

// Token fed at step 0 in place of a previous state.
inline constexpr int kBosToken = kMobilityStates;

// Autoregressive week generator: input at step t is the state at t-1 (BOS at
// t = 0) under a look-ahead mask; the head predicts the state at t.
struct GeneratorModel {
    StateAlphabet alphabet = StateAlphabet::mobility_default();
    SequenceModel network;
    bool trained = false;
    std::uint64_t training_seed = 0;
};

GeneratorModel make_generator(const ModelConfig& config, std::uint64_t seed);

struct GeneratorTraining {
    GeneratorModel model;
    TrainReport report;
};

// Teacher-forced example for one week.
TrainingExample generator_example(const WeeklySchedule& week, PositionIndex position_index);
// Model input for a (possibly partial) history: tokens [BOS, s0, .., s_{n-1}].
SequenceInput generator_input(std::span<const StateCode> history, const PersonAttributes& attrs,
                              PositionIndex position_index);

GeneratorTraining train_generator(const WeekCorpus& corpus, const SplitPlan& split, int fold, const ModelConfig& config,
                                  std::uint64_t seed, const EpochCallback& on_epoch = {}, int threads = 1);

// Mean teacher-forced loss / accuracy of a model on a corpus.
LossAndAccuracy generator_loss(const GeneratorModel& model, std::span<const WeeklySchedule> weeks);

// Logits for the state following `history` (length < 1008).
std::vector<double> next_state_logits(const GeneratorModel& model, const PersonAttributes& attrs,
                                      std::span<const StateCode> history);

// Samples n weeks for one attribute profile. Week i uses an RNG stream
// derived from (seed, i); temperature 0 is greedy.
std::vector<WeeklySchedule> generate(const GeneratorModel& model, const PersonAttributes& attrs, int n, std::uint64_t seed,
                                     double temperature = 1.0);
// One week per attribute entry, week i on stream (seed, i). threads > 1
// splits the work without changing the result.
std::vector<WeeklySchedule> generate_for(const GeneratorModel& model, std::span<const PersonAttributes> attrs,
                                         std::uint64_t seed, double temperature = 1.0, int threads = 1);

// Generates n weeks with attributes resampled from the reference and
// compares them with the reference (resampled to n persons for hd).
struct GeneratorEvaluation {
    MetricsReport report;
    std::vector<WeeklySchedule> generated;
};
GeneratorEvaluation evaluate_generator(const GeneratorModel& model, const WeekCorpus& reference, int n, std::uint64_t seed,
                                       double temperature = 1.0, int threads = 1);

}  // namespace schedsynth
