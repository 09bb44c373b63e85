#include "schedsynth/markov.hpp"

#include <cmath>

#include "schedsynth/errors.hpp"
#include "schedsynth/rng.hpp"

namespace schedsynth {

namespace {

void require_fitted(const MarkovModel& model) {
    if (!model.fitted) throw ConfigError("markov model is not fitted");
}

WeeklySchedule sample_chain(const MarkovChain& chain, const PersonAttributes& attrs, Rng& rng) {
    const auto k = static_cast<std::size_t>(chain.states);
    WeeklySchedule week;
    week.attributes = attrs;
    week.states.resize(kStepsPerWeek);
    int s = sample_categorical(chain.initial, uniform01(rng));
    week.states[0] = static_cast<StateCode>(s);
    for (std::size_t t = 0; t + 1 < static_cast<std::size_t>(kStepsPerWeek); ++t) {
        const std::span<const double> row(chain.transitions.data() + (t * k + static_cast<std::size_t>(s)) * k, k);
        s = sample_categorical(row, uniform01(rng));
        week.states[t + 1] = static_cast<StateCode>(s);
    }
    return week;
}

}  // namespace

const MarkovChain& MarkovModel::chain_for(const PersonAttributes& attrs) const {
    auto it = cells.find({attrs.age_class, attrs.occupation_class});
    return it != cells.end() ? it->second : pooled;
}

MarkovChain fit_chain(std::span<const WeeklySchedule* const> weeks, int states, double alpha) {
    if (weeks.empty()) throw DataError("cannot fit a markov chain to an empty corpus");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("smoothing alpha must be finite and >= 0");
    const auto k = static_cast<std::size_t>(states);
    constexpr auto T = static_cast<std::size_t>(kStepsPerWeek);
    std::vector<std::uint64_t> counts(T * k * k, 0);
    std::vector<std::uint64_t> first(k, 0);
    for (const auto* w : weeks) {
        const auto& s = w->states;
        ++first[s[0]];
        for (std::size_t t = 0; t < T; ++t) ++counts[(t * k + s[t]) * k + s[(t + 1) % T]];
    }
    MarkovChain chain;
    chain.states = states;
    chain.persons = weeks.size();
    chain.initial.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        chain.initial[i] = static_cast<double>(first[i]) / static_cast<double>(weeks.size());
    }
    chain.transitions.resize(T * k * k);
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t i = 0; i < k; ++i) {
            const std::uint64_t* row = counts.data() + (t * k + i) * k;
            double* out = chain.transitions.data() + (t * k + i) * k;
            std::uint64_t total = 0;
            for (std::size_t j = 0; j < k; ++j) total += row[j];
            const double denom = static_cast<double>(total) + static_cast<double>(k) * alpha;
            for (std::size_t j = 0; j < k; ++j) {
                out[j] = denom > 0.0 ? (static_cast<double>(row[j]) + alpha) / denom : 1.0 / static_cast<double>(k);
            }
        }
    }
    return chain;
}

MarkovModel fit_markov(const WeekCorpus& corpus, const MarkovOptions& options) {
    if (corpus.schedules.empty()) throw DataError("cannot fit a markov model to an empty corpus");
    for (const auto& s : corpus.schedules) {
        const auto v = validate_schedule(s, corpus.alphabet);
        if (!v.empty()) throw DataError("person " + s.attributes.person_id + ": " + v.front().message);
    }
    MarkovModel model;
    model.alphabet = corpus.alphabet;
    model.options = options;
    model.attribute_counts.assign(kAttributeClasses * kAttributeClasses, 0);
    std::vector<const WeeklySchedule*> all;
    std::map<AttributeCell, std::vector<const WeeklySchedule*>> by_cell;
    for (const auto& s : corpus.schedules) {
        all.push_back(&s);
        by_cell[{s.attributes.age_class, s.attributes.occupation_class}].push_back(&s);
        ++model.attribute_counts[static_cast<std::size_t>(s.attributes.age_class * kAttributeClasses +
                                                          s.attributes.occupation_class)];
    }
    model.pooled = fit_chain(all, corpus.alphabet.size(), options.alpha);
    if (options.stratify) {
        for (const auto& [cell, weeks] : by_cell) {
            if (weeks.size() >= options.min_cell_persons) {
                model.cells.emplace(cell, fit_chain(weeks, corpus.alphabet.size(), options.alpha));
            }
        }
    }
    model.fitted = true;
    return model;
}

std::vector<WeeklySchedule> sample_markov_for(const MarkovModel& model, std::span<const PersonAttributes> attrs,
                                              std::uint64_t seed) {
    require_fitted(model);
    std::vector<WeeklySchedule> out;
    out.reserve(attrs.size());
    for (std::size_t i = 0; i < attrs.size(); ++i) {
        if (!validate_attributes(attrs[i]).empty()) throw ConfigError("person attributes outside 0..6");
        Rng rng = make_rng(seed, i);
        out.push_back(sample_chain(model.chain_for(attrs[i]), attrs[i], rng));
    }
    return out;
}

std::vector<WeeklySchedule> sample_markov(const MarkovModel& model, int n, std::uint64_t seed) {
    require_fitted(model);
    if (n < 0) throw ConfigError("sample count must be non-negative");
    std::vector<double> weights(model.attribute_counts.begin(), model.attribute_counts.end());
    std::vector<WeeklySchedule> out;
    out.reserve(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
        Rng rng = make_rng(seed, i);
        const int cell = sample_categorical(weights, uniform01(rng));
        PersonAttributes attrs{cell / kAttributeClasses, cell % kAttributeClasses, "markov-" + std::to_string(i)};
        out.push_back(sample_chain(model.chain_for(attrs), attrs, rng));
    }
    return out;
}

std::vector<double> chain_marginals(const MarkovChain& chain) {
    const auto k = static_cast<std::size_t>(chain.states);
    constexpr auto T = static_cast<std::size_t>(kStepsPerWeek);
    std::vector<double> out(k * T, 0.0);
    std::vector<double> p = chain.initial, next(k);
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t i = 0; i < k; ++i) out[i * T + t] = p[i];
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) next[j] += p[i] * chain.p(static_cast<int>(t), static_cast<int>(i), static_cast<int>(j));
        p = next;
    }
    return out;
}

}  // namespace schedsynth
