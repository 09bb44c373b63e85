#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "schedsynth/domain.hpp"
#include "schedsynth/metrics.hpp"
#include "schedsynth/sequence_model.hpp"

namespace schedsynth {

// Input vocabulary: away mobility states 1..5 -> tokens 0..4, activities
// 0..9 -> tokens 5..14, and a placeholder for "no activity revealed yet".
inline constexpr int kImputerVocab = kAwayStates + kActivityStates + 1;
inline constexpr int kPlaceholderToken = kImputerVocab - 1;

int away_token(StateCode mobility_code);    // mobility 1..5
int activity_token(StateCode activity);     // activity 0..9
// Activity-alphabet code of an away mobility state (10..14).
StateCode activity_code_of_away(StateCode mobility_code);

// At-home steps are filled in time order. An at-home step's input token is
// the activity of the previous at-home step (placeholder for the first one),
// so a query never reads its own or any later activity.
struct ImputerModel {
    StateAlphabet mobility = StateAlphabet::mobility_default();
    StateAlphabet activities = StateAlphabet::activity_default();
    SequenceModel network;
    bool trained = false;
    std::uint64_t training_seed = 0;
};

ImputerModel make_imputer(const ModelConfig& config, std::uint64_t seed);

struct ImputerTraining {
    ImputerModel model;
    TrainReport report;
};

// The diary's days ordered by weekday and concatenated (144 to 432 steps);
// targets are the activities at at-home steps, away steps are ignored.
TrainingExample imputer_example(const DiarySample& sample, PositionIndex position_index);

ImputerTraining train_imputer(const DiaryCorpus& corpus, const SplitPlan& split, int fold, const ModelConfig& config,
                              std::uint64_t seed, const EpochCallback& on_epoch = {}, int threads = 1);

LossAndAccuracy imputer_loss(const ImputerModel& model, std::span<const DiarySample> samples);

// Week step -> weekday of the diary day (04:00 origin) it falls into.
int diary_weekday_of_week_step(int step);

// Fills the at-home steps of a mobility week with activities; away steps map
// to their activity-alphabet codes. Output is in the 15-state alphabet.
WeeklySchedule impute(const ImputerModel& model, const WeeklySchedule& week, std::uint64_t seed,
                      double temperature = 1.0);
// Week i on stream (seed, i).
std::vector<WeeklySchedule> impute_all(const ImputerModel& model, std::span<const WeeklySchedule> weeks,
                                       std::uint64_t seed, double temperature = 1.0, int threads = 1);

// Re-imputes the at-home steps of a diary sample, keeping its away steps.
DiarySample impute_diary(const ImputerModel& model, const DiarySample& sample, std::uint64_t seed,
                         double temperature = 1.0);

// Draws n diary samples from the reference, re-imputes their at-home steps
// and compares the imputed days with the drawn days (no hd).
struct ImputerEvaluation {
    MetricsReport report;
    std::vector<DiarySample> imputed;
    std::vector<DiarySample> reference;
};
inline constexpr int kDayAcMaxLag = 72;
ImputerEvaluation evaluate_imputer(const ImputerModel& model, const DiaryCorpus& reference, int n, std::uint64_t seed,
                                   double temperature = 1.0, int threads = 1);

}  // namespace schedsynth
