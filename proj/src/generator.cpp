#include "schedsynth/generator.hpp"

#include <algorithm>
#include <thread>
#include <unordered_map>

#include "schedsynth/errors.hpp"
#include "schedsynth/inference.hpp"
#include "schedsynth/rng.hpp"

namespace schedsynth {

namespace {

int position_of(int step, PositionIndex index) { return index == PositionIndex::time_of_day ? step % kStepsPerDay : step; }

void require_trained(const GeneratorModel& model) {
    if (!model.trained) throw ConfigError("generator model is untrained");
}

std::vector<const WeeklySchedule*> select(const WeekCorpus& corpus, const std::vector<std::string>& ids) {
    std::unordered_map<std::string, const WeeklySchedule*> by_id;
    for (const auto& s : corpus.schedules) by_id.emplace(s.attributes.person_id, &s);
    std::vector<const WeeklySchedule*> out;
    for (const auto& id : ids) {
        auto it = by_id.find(id);
        if (it != by_id.end()) out.push_back(it->second);
    }
    return out;
}

WeeklySchedule sample_week(const GeneratorModel& model, IncrementalEncoder& encoder, const PersonAttributes& attrs,
                           Rng& rng, double temperature) {
    const PositionIndex index = model.network.config().position_index;
    WeeklySchedule week;
    week.attributes = attrs;
    week.states.resize(kStepsPerWeek);
    int token = kBosToken;
    for (std::size_t t = 0; t < static_cast<std::size_t>(kStepsPerWeek); ++t) {
        const int step = static_cast<int>(t);
        encoder.set_input(t, token, step / kStepsPerDay, position_of(step, index), attrs);
        encoder.compute(std::span<const std::size_t>(&t, 1));
        token = sample_logits(encoder.logits(t), temperature, rng);
        week.states[t] = static_cast<StateCode>(token);
    }
    return week;
}

}  // namespace

GeneratorModel make_generator(const ModelConfig& config, std::uint64_t seed) {
    if (config.encoder.max_len < kStepsPerWeek) throw ConfigError("generator needs max_len >= 1008");
    GeneratorModel model;
    model.network = SequenceModel(config, kMobilityStates + 1, kMobilityStates, seed);
    model.training_seed = seed;
    return model;
}

SequenceInput generator_input(std::span<const StateCode> history, const PersonAttributes& attrs,
                              PositionIndex position_index) {
    if (history.size() >= static_cast<std::size_t>(kStepsPerWeek)) throw ShapeError("history must be shorter than a week");
    SequenceInput in;
    in.attributes = attrs;
    const std::size_t n = history.size() + 1;
    in.tokens.resize(n);
    in.weekdays.resize(n);
    in.positions.resize(n);
    in.tokens[0] = kBosToken;
    for (std::size_t t = 0; t < n; ++t) {
        if (t > 0) in.tokens[t] = history[t - 1];
        const int step = static_cast<int>(t);
        in.weekdays[t] = step / kStepsPerDay;
        in.positions[t] = position_of(step, position_index);
    }
    return in;
}

TrainingExample generator_example(const WeeklySchedule& week, PositionIndex position_index) {
    if (week.states.size() != static_cast<std::size_t>(kStepsPerWeek)) throw DataError("schedule is not 1008 steps");
    TrainingExample ex;
    ex.input = generator_input(std::span<const StateCode>(week.states).first(kStepsPerWeek - 1), week.attributes,
                               position_index);
    ex.targets.assign(week.states.begin(), week.states.end());
    return ex;
}

GeneratorTraining train_generator(const WeekCorpus& corpus, const SplitPlan& split, int fold, const ModelConfig& config,
                                  std::uint64_t seed, const EpochCallback& on_epoch, int threads) {
    if (fold < 0 || fold >= kFolds) throw ConfigError("fold must be in 0..8");
    if (corpus.alphabet.size() != kMobilityStates) throw DataError("generator needs the 6-state mobility alphabet");
    for (const auto& s : corpus.schedules) {
        const auto v = validate_schedule(s, corpus.alphabet);
        if (!v.empty()) throw DataError("person " + s.attributes.person_id + ": " + v.front().message);
    }
    const auto train_weeks = select(corpus, split.training_ids(fold));
    const auto val_weeks = select(corpus, split.validation_ids(fold));
    if (train_weeks.empty()) throw DataError("training fold is empty");
    if (val_weeks.empty()) throw DataError("validation fold is empty");

    GeneratorTraining out{make_generator(config, seed), {}};
    out.model.alphabet = corpus.alphabet;
    std::vector<TrainingExample> train, val;
    for (const auto* w : train_weeks) train.push_back(generator_example(*w, config.position_index));
    for (const auto* w : val_weeks) val.push_back(generator_example(*w, config.position_index));
    out.report = fit(out.model.network, train, val, seed, on_epoch, threads);
    out.model.trained = true;
    return out;
}

LossAndAccuracy generator_loss(const GeneratorModel& model, std::span<const WeeklySchedule> weeks) {
    std::vector<TrainingExample> examples;
    for (const auto& w : weeks) examples.push_back(generator_example(w, model.network.config().position_index));
    return evaluate_examples(model.network, examples);
}

std::vector<double> next_state_logits(const GeneratorModel& model, const PersonAttributes& attrs,
                                      std::span<const StateCode> history) {
    NoGradGuard no_grad;
    const SequenceInput in = generator_input(history, attrs, model.network.config().position_index);
    const Tensor logits = model.network.logits(in, lookahead_mask(in.length()));
    const auto k = logits.cols();
    const auto row = logits.data().subspan((in.length() - 1) * k, k);
    return {row.begin(), row.end()};
}

std::vector<WeeklySchedule> generate(const GeneratorModel& model, const PersonAttributes& attrs, int n, std::uint64_t seed,
                                     double temperature) {
    if (n <= 0) throw ConfigError("sample count must be positive");
    std::vector<PersonAttributes> attrs_list(static_cast<std::size_t>(n), attrs);
    return generate_for(model, attrs_list, seed, temperature, 1);
}

std::vector<WeeklySchedule> generate_for(const GeneratorModel& model, std::span<const PersonAttributes> attrs,
                                         std::uint64_t seed, double temperature, int threads) {
    require_trained(model);
    if (temperature < 0.0) throw ConfigError("temperature must be >= 0");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    for (const auto& a : attrs) {
        if (!validate_attributes(a).empty()) throw ConfigError("person attributes outside 0..6");
    }
    std::vector<WeeklySchedule> out(attrs.size());
    const AttentionMask mask = lookahead_mask(kStepsPerWeek);
    auto work = [&](std::size_t first, std::size_t stride) {
        IncrementalEncoder encoder(model.network, mask);
        for (std::size_t i = first; i < attrs.size(); i += stride) {
            Rng rng = make_rng(seed, i);
            out[i] = sample_week(model, encoder, attrs[i], rng, temperature);
        }
    };
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(threads), std::max<std::size_t>(attrs.size(), 1));
    if (workers <= 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
        for (auto& t : pool) t.join();
    }
    return out;
}

GeneratorEvaluation evaluate_generator(const GeneratorModel& model, const WeekCorpus& reference, int n, std::uint64_t seed,
                                       double temperature, int threads) {
    if (n <= 0) throw ConfigError("evaluation needs n > 0 samples");
    if (reference.schedules.empty()) throw DataError("reference corpus is empty");
    Rng rng = make_rng(seed, 0xa77);
    std::uniform_int_distribution<std::size_t> pick(0, reference.schedules.size() - 1);
    std::vector<PersonAttributes> attrs(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < attrs.size(); ++i) {
        attrs[i] = reference.schedules[pick(rng)].attributes;
        attrs[i].person_id = "gen-" + std::to_string(i);
    }
    GeneratorEvaluation out;
    out.generated = generate_for(model, attrs, derive_seed(seed, 1), temperature, threads);
    SequenceCorpus ref = as_sequences(reference);
    if (ref.count() != static_cast<std::size_t>(n)) ref = resample(ref, static_cast<std::size_t>(n), derive_seed(seed, 2));
    out.report = compare(as_sequences(reference.alphabet, out.generated), ref);
    return out;
}

}  // namespace schedsynth
