#pragma once

// Small models and random inputs shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "schedsynth/domain.hpp"
#include "schedsynth/rng.hpp"
#include "schedsynth/sequence_model.hpp"

namespace fixtures {

inline schedsynth::ModelConfig tiny_config(int layers = 2, int d_model = 16, int heads = 4) {
    schedsynth::ModelConfig c;
    c.encoder.layers = layers;
    c.encoder.d_model = d_model;
    c.encoder.heads = heads;
    c.encoder.d_ff = 2 * d_model;
    c.encoder.dropout = 0.1;
    c.features = {8, 4, 2, 2};
    c.batch_size = 8;
    c.max_epochs = 5;
    c.patience = 5;
    return c;
}

inline schedsynth::PersonAttributes attrs(int age = 2, int occupation = 3, const char* id = "p") {
    return {age, occupation, id};
}

// Random input of length L over `vocab` tokens with time-of-day positions.
inline schedsynth::SequenceInput random_input(std::size_t L, int vocab, schedsynth::Rng& rng) {
    schedsynth::SequenceInput in;
    std::uniform_int_distribution<int> tok(0, vocab - 1), age(0, 6);
    for (std::size_t t = 0; t < L; ++t) {
        in.tokens.push_back(tok(rng));
        in.weekdays.push_back(static_cast<int>(t / schedsynth::kStepsPerDay) % 7);
        in.positions.push_back(static_cast<int>(t % schedsynth::kStepsPerDay));
    }
    in.attributes = {age(rng), age(rng), "r"};
    return in;
}

// A week that is at home except for one block of `state` over [from, to) each day.
inline schedsynth::WeeklySchedule block_week(int from, int to, schedsynth::StateCode state = 2,
                                             schedsynth::PersonAttributes a = attrs()) {
    schedsynth::WeeklySchedule w;
    w.attributes = std::move(a);
    w.states.assign(schedsynth::kStepsPerWeek, schedsynth::kAtHome);
    for (int d = 0; d < schedsynth::kDaysPerWeek; ++d)
        for (int s = from; s < to; ++s) w.states[static_cast<std::size_t>(d * schedsynth::kStepsPerDay + s)] = state;
    return w;
}

inline std::vector<std::string> ids(const std::vector<schedsynth::WeeklySchedule>& weeks) {
    std::vector<std::string> out;
    for (const auto& w : weeks) out.push_back(w.attributes.person_id);
    return out;
}

}  // namespace fixtures
