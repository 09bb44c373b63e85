#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "schedsynth/domain.hpp"

namespace schedsynth {

// First-order chain with one transition matrix per week step. Matrix t maps
// the state at t to the state at t + 1; matrix 1007 wraps to step 0.
struct MarkovChain {
    int states = 0;
    std::vector<double> initial;      // states
    std::vector<double> transitions;  // kStepsPerWeek x states x states
    std::size_t persons = 0;

    double p(int t, int from, int to) const {
        const auto k = static_cast<std::size_t>(states);
        return transitions[(static_cast<std::size_t>(t) * k + static_cast<std::size_t>(from)) * k +
                           static_cast<std::size_t>(to)];
    }
};

inline constexpr double kDefaultMarkovAlpha = 0.5;
inline constexpr std::size_t kDefaultMinCellPersons = 30;

struct MarkovOptions {
    double alpha = kDefaultMarkovAlpha;
    bool stratify = true;
    std::size_t min_cell_persons = kDefaultMinCellPersons;
};

using AttributeCell = std::pair<int, int>;  // (age_class, occupation_class)

struct MarkovModel {
    StateAlphabet alphabet = StateAlphabet::mobility_default();
    MarkovOptions options;
    MarkovChain pooled;
    std::map<AttributeCell, MarkovChain> cells;  // cells with enough persons
    // Persons per (age, occupation) cell, row-major 7 x 7.
    std::vector<std::uint64_t> attribute_counts;
    bool fitted = false;

    // Chain used for a person with these attributes.
    const MarkovChain& chain_for(const PersonAttributes& attrs) const;
};

// P[t][i][j] = (n(s_t = i, s_t+1 = j) + alpha) / (n(s_t = i) + K alpha);
// rows without observations are uniform. The initial distribution is the
// step-0 frequency.
MarkovChain fit_chain(std::span<const WeeklySchedule* const> weeks, int states, double alpha);
MarkovModel fit_markov(const WeekCorpus& corpus, const MarkovOptions& options = {});

// n weeks; week i draws attributes from the fitted attribute histogram and
// states from its chain on stream (seed, i).
std::vector<WeeklySchedule> sample_markov(const MarkovModel& model, int n, std::uint64_t seed);
// One week per attribute entry, stream (seed, i).
std::vector<WeeklySchedule> sample_markov_for(const MarkovModel& model, std::span<const PersonAttributes> attrs,
                                              std::uint64_t seed);

// Marginal state probabilities of the chain at every step (states x 1008).
std::vector<double> chain_marginals(const MarkovChain& chain);

}  // namespace schedsynth
