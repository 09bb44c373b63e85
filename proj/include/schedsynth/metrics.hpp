#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "schedsynth/domain.hpp"

namespace schedsynth {

// Equal-length categorical sequences over `n_states` codes. Metrics operate on
// this view so week corpora and diary days share one implementation.
struct SequenceCorpus {
    int n_states = 0;
    std::vector<std::string> labels;
    std::vector<std::vector<StateCode>> sequences;

    std::size_t count() const { return sequences.size(); }
    std::size_t length() const { return sequences.empty() ? 0 : sequences.front().size(); }
};

SequenceCorpus as_sequences(const WeekCorpus& corpus);
SequenceCorpus as_sequences(const StateAlphabet& alphabet, std::span<const WeeklySchedule> weeks);
// Every diary day as its own 144-step sequence.
SequenceCorpus as_day_sequences(const DiaryCorpus& corpus);

inline constexpr int kDefaultAcMaxLag = 432;
inline constexpr int kDefaultDurationCap = 432;
inline constexpr int kHammingBins = kStepsPerDay + 1;  // distances 0..144
inline constexpr int kWorkingDays = 5;

// p_s(t): share of sequences in state s at step t; n_states x L, row-major.
std::vector<double> state_probability_curves(const SequenceCorpus& corpus);

// Run-length histograms per state, normalised to probabilities per state.
// Bin b holds runs of length b + 1; runs longer than cap land in the last
// bin. n_states x cap, row-major; all-zero rows for states without runs.
std::vector<double> duration_histograms(const SequenceCorpus& corpus, int cap = kDefaultDurationCap);

struct AutocorrelationSummary {
    int max_lag = 0;
    std::vector<double> mean;  // index k - 1 holds lag k
    std::vector<double> q25;
    std::vector<double> q75;
    std::size_t persons_used = 0;
    std::size_t persons_excluded = 0;  // indicator constant over the sequence
};

// Pearson correlation between x[0..T-k) and x[k..T) of the indicator
// x(t) = [state(t) in states], per person, for lags 1..max_lag. A lag whose
// segments are constant contributes 0. Throws when every person is excluded.
AutocorrelationSummary state_autocorrelation(const SequenceCorpus& corpus, std::span<const StateCode> states,
                                             int max_lag = kDefaultAcMaxLag);
// Single-person curve (empty when the indicator is constant).
std::vector<double> indicator_autocorrelation(std::span<const StateCode> sequence, std::span<const StateCode> states,
                                              int max_lag);

// Mean number of episodes (maximal runs) per sequence, per state.
std::vector<double> weekly_activity_counts(const SequenceCorpus& corpus);

// Counts of pairwise Hamming distances between the five working days
// (Monday..Friday) of each week; 145 bins, total = persons x 10.
std::vector<std::uint64_t> hamming_distribution(const SequenceCorpus& corpus);

struct StateMetrics {
    std::string label;
    double sp_rmse = 0.0;
    double sd_rmse = 0.0;
    std::optional<double> ac_rmse;  // absent when neither corpus varies in this state
    double na_abs_diff = 0.0;
};

struct MetricsReport {
    double sp_rmse = 0.0;  // percentage points
    double sd_rmse = 0.0;  // percentage points
    double ac_rmse = 0.0;
    double na_mae = 0.0;
    std::optional<double> hd_mae;  // weekly corpora only
    std::vector<StateMetrics> per_state;
    std::size_t generated_count = 0;
    std::size_t reference_count = 0;
    std::size_t sequence_length = 0;
    int ac_max_lag = 0;
    int duration_cap = 0;
};

struct CompareOptions {
    bool hamming = true;
    int ac_max_lag = kDefaultAcMaxLag;
    int duration_cap = kDefaultDurationCap;
};

// sp: RMSE over (state, step) of probability curves x 100
// sd: RMSE over (state, bin) of duration histograms x 100
// ac: RMSE over (state, lag) of mean autocorrelation curves; a state whose
//     curve exists on one side only is compared against zeros
// na: mean over states of |difference of mean episode counts|
// hd: mean over the 145 bins of |count difference|; needs equal person counts
MetricsReport compare(const SequenceCorpus& generated, const SequenceCorpus& reference, const CompareOptions& options = {});

// RMSE of two equally sized vectors.
double rmse(std::span<const double> a, std::span<const double> b);

// n sequences drawn with replacement (stream derived from seed).
SequenceCorpus resample(const SequenceCorpus& corpus, std::size_t n, std::uint64_t seed);

// Replaces each step, with probability rate, by a uniformly drawn state.
SequenceCorpus inject_noise(const SequenceCorpus& corpus, double rate, std::uint64_t seed);

}  // namespace schedsynth
