#include "schedsynth/imputer.hpp"

#include <algorithm>
#include <numeric>
#include <thread>
#include <unordered_map>

#include "schedsynth/errors.hpp"
#include "schedsynth/inference.hpp"
#include "schedsynth/rng.hpp"

namespace schedsynth {

namespace {

// Time features and away tokens of one sequence to impute.
struct Frame {
    std::vector<std::uint8_t> at_home;
    std::vector<int> tokens;  // away tokens; at-home entries filled during the scan
    std::vector<int> weekdays;
    std::vector<int> positions;
};

void require_trained(const ImputerModel& model) {
    if (!model.trained) throw ConfigError("imputer model is untrained");
}

bool is_activity(StateCode code) { return code < kActivityStates; }

// Day order by weekday.
std::vector<std::size_t> day_order(const DiarySample& sample) {
    std::vector<std::size_t> order(sample.days.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return sample.days[a].weekday < sample.days[b].weekday; });
    return order;
}

Frame diary_frame(const DiarySample& sample, PositionIndex index) {
    Frame f;
    int i = 0;
    for (std::size_t d : day_order(sample)) {
        const auto& day = sample.days[d];
        if (day.states.size() != static_cast<std::size_t>(kStepsPerDay)) throw DataError("diary day is not 144 steps");
        for (int s = 0; s < kStepsPerDay; ++s, ++i) {
            const StateCode c = day.states[static_cast<std::size_t>(s)];
            f.at_home.push_back(is_activity(c));
            f.tokens.push_back(is_activity(c) ? kPlaceholderToken : c - kActivityStates);
            f.weekdays.push_back(day.weekday);
            f.positions.push_back(index == PositionIndex::time_of_day ? (s + kDiaryDayOffset) % kStepsPerDay : i);
        }
    }
    return f;
}

Frame week_frame(const WeeklySchedule& week, PositionIndex index) {
    Frame f;
    for (int t = 0; t < kStepsPerWeek; ++t) {
        const StateCode m = week.states[static_cast<std::size_t>(t)];
        f.at_home.push_back(m == kAtHome);
        f.tokens.push_back(m == kAtHome ? kPlaceholderToken : away_token(m));
        f.weekdays.push_back(diary_weekday_of_week_step(t));
        f.positions.push_back(index == PositionIndex::time_of_day ? t % kStepsPerDay : t);
    }
    return f;
}

// Computes every away row, then each at-home row in order, feeding the
// previous revealed activity. Returns the activity per position (at-home
// positions only are meaningful).
std::vector<StateCode> scan(const ImputerModel& model, Frame& f, const PersonAttributes& attrs, Rng& rng,
                            double temperature) {
    const std::size_t L = f.at_home.size();
    std::vector<StateCode> out(L, 0);
    if (std::none_of(f.at_home.begin(), f.at_home.end(), [](std::uint8_t h) { return h != 0; })) return out;
    const AttentionMask mask = imputation_mask(f.at_home);
    IncrementalEncoder encoder(model.network, mask);
    std::vector<std::size_t> away;
    for (std::size_t i = 0; i < L; ++i) {
        if (!f.at_home[i]) {
            encoder.set_input(i, f.tokens[i], f.weekdays[i], f.positions[i], attrs);
            away.push_back(i);
        }
    }
    encoder.compute(away);
    int previous = kPlaceholderToken;
    for (std::size_t i = 0; i < L; ++i) {
        if (!f.at_home[i]) continue;
        f.tokens[i] = previous;
        encoder.set_input(i, previous, f.weekdays[i], f.positions[i], attrs);
        encoder.compute(std::span<const std::size_t>(&i, 1));
        const int a = sample_logits(encoder.logits(i), temperature, rng);
        out[i] = static_cast<StateCode>(a);
        previous = activity_token(out[i]);
    }
    return out;
}

template <typename Item, typename Result, typename F>
std::vector<Result> parallel_map(std::span<const Item> items, int threads, F&& f) {
    if (threads < 1) throw ConfigError("threads must be >= 1");
    std::vector<Result> out(items.size());
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(threads), std::max<std::size_t>(items.size(), 1));
    auto work = [&](std::size_t first) {
        for (std::size_t i = first; i < items.size(); i += workers) out[i] = f(items[i], i);
    };
    if (workers <= 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }
    return out;
}

}  // namespace

int away_token(StateCode mobility_code) {
    if (mobility_code == kAtHome || mobility_code >= kMobilityStates) throw DataError("not an away mobility state");
    return mobility_code - 1;
}

int activity_token(StateCode activity) {
    if (activity >= kActivityStates) throw DataError("not an at-home activity");
    return kAwayStates + activity;
}

StateCode activity_code_of_away(StateCode mobility_code) {
    return static_cast<StateCode>(kActivityStates + away_token(mobility_code));
}

int diary_weekday_of_week_step(int step) {
    if (step < 0 || step >= kStepsPerWeek) throw ConfigError("week step outside 0..1007");
    return ((step - kDiaryDayOffset + kStepsPerWeek) % kStepsPerWeek) / kStepsPerDay;
}

ImputerModel make_imputer(const ModelConfig& config, std::uint64_t seed) {
    ImputerModel model;
    model.network = SequenceModel(config, kImputerVocab, kActivityStates, seed);
    model.training_seed = seed;
    return model;
}

TrainingExample imputer_example(const DiarySample& sample, PositionIndex position_index) {
    if (sample.days.empty() || sample.days.size() > 3) throw DataError("diary sample needs 1..3 days");
    Frame f = diary_frame(sample, position_index);
    TrainingExample ex;
    ex.input.attributes = sample.attributes;
    ex.targets.assign(f.at_home.size(), kIgnoreTarget);
    int previous = kPlaceholderToken;
    std::size_t i = 0;
    for (std::size_t d : day_order(sample)) {
        for (StateCode c : sample.days[d].states) {
            if (is_activity(c)) {
                f.tokens[i] = previous;
                ex.targets[i] = c;
                previous = activity_token(c);
            }
            ++i;
        }
    }
    ex.input.tokens = std::move(f.tokens);
    ex.input.weekdays = std::move(f.weekdays);
    ex.input.positions = std::move(f.positions);
    ex.at_home = std::move(f.at_home);
    return ex;
}

ImputerTraining train_imputer(const DiaryCorpus& corpus, const SplitPlan& split, int fold, const ModelConfig& config,
                              std::uint64_t seed, const EpochCallback& on_epoch, int threads) {
    if (fold < 0 || fold >= kFolds) throw ConfigError("fold must be in 0..8");
    if (corpus.alphabet.size() != kActivityStates + kAwayStates) throw DataError("imputer needs the 15-state activity alphabet");
    std::size_t at_home_steps = 0;
    for (const auto& s : corpus.samples) {
        const auto v = validate_diary(s, corpus.alphabet);
        if (!v.empty()) throw DataError("person " + s.attributes.person_id + ": " + v.front().message);
        for (const auto& d : s.days) at_home_steps += std::count_if(d.states.begin(), d.states.end(), is_activity);
    }
    if (at_home_steps == 0) throw DataError("diary corpus has no at-home steps");

    std::unordered_map<std::string, const DiarySample*> by_id;
    for (const auto& s : corpus.samples) by_id.emplace(s.attributes.person_id, &s);
    auto examples = [&](const std::vector<std::string>& ids) {
        std::vector<TrainingExample> out;
        for (const auto& id : ids) {
            auto it = by_id.find(id);
            if (it != by_id.end()) out.push_back(imputer_example(*it->second, config.position_index));
        }
        return out;
    };
    const auto train = examples(split.training_ids(fold));
    const auto val = examples(split.validation_ids(fold));
    if (train.empty()) throw DataError("training fold is empty");
    if (val.empty()) throw DataError("validation fold is empty");

    ImputerTraining out{make_imputer(config, seed), {}};
    out.model.activities = corpus.alphabet;
    out.report = fit(out.model.network, train, val, seed, on_epoch, threads);
    out.model.trained = true;
    return out;
}

LossAndAccuracy imputer_loss(const ImputerModel& model, std::span<const DiarySample> samples) {
    std::vector<TrainingExample> examples;
    for (const auto& s : samples) examples.push_back(imputer_example(s, model.network.config().position_index));
    return evaluate_examples(model.network, examples);
}

WeeklySchedule impute(const ImputerModel& model, const WeeklySchedule& week, std::uint64_t seed, double temperature) {
    require_trained(model);
    if (temperature < 0.0) throw ConfigError("temperature must be >= 0");
    const auto v = validate_schedule(week, model.mobility);
    if (!v.empty()) throw DataError("person " + week.attributes.person_id + ": " + v.front().message);
    if (model.network.config().encoder.max_len < kStepsPerWeek &&
        model.network.config().position_index == PositionIndex::sequence) {
        throw ConfigError("sequence position index needs max_len >= 1008 to impute weeks");
    }
    Frame f = week_frame(week, model.network.config().position_index);
    Rng rng = make_rng(seed, 0);
    const auto acts = scan(model, f, week.attributes, rng, temperature);
    WeeklySchedule out;
    out.attributes = week.attributes;
    out.states.resize(week.states.size());
    for (std::size_t t = 0; t < week.states.size(); ++t) {
        out.states[t] = week.states[t] == kAtHome ? acts[t] : activity_code_of_away(week.states[t]);
    }
    return out;
}

std::vector<WeeklySchedule> impute_all(const ImputerModel& model, std::span<const WeeklySchedule> weeks,
                                       std::uint64_t seed, double temperature, int threads) {
    return parallel_map<WeeklySchedule, WeeklySchedule>(weeks, threads, [&](const WeeklySchedule& w, std::size_t i) {
        return impute(model, w, derive_seed(seed, i), temperature);
    });
}

DiarySample impute_diary(const ImputerModel& model, const DiarySample& sample, std::uint64_t seed, double temperature) {
    require_trained(model);
    if (temperature < 0.0) throw ConfigError("temperature must be >= 0");
    const auto v = validate_diary(sample, model.activities);
    if (!v.empty()) throw DataError("person " + sample.attributes.person_id + ": " + v.front().message);
    Frame f = diary_frame(sample, model.network.config().position_index);
    Rng rng = make_rng(seed, 0);
    const auto acts = scan(model, f, sample.attributes, rng, temperature);
    DiarySample out = sample;
    std::size_t i = 0;
    for (std::size_t d : day_order(sample)) {
        for (auto& c : out.days[d].states) {
            if (is_activity(c)) c = acts[i];
            ++i;
        }
    }
    return out;
}

ImputerEvaluation evaluate_imputer(const ImputerModel& model, const DiaryCorpus& reference, int n, std::uint64_t seed,
                                   double temperature, int threads) {
    if (n <= 0) throw ConfigError("evaluation needs n > 0 samples");
    if (reference.samples.empty()) throw DataError("reference corpus is empty");
    ImputerEvaluation out;
    Rng rng = make_rng(seed, 0xd1a);
    std::uniform_int_distribution<std::size_t> pick(0, reference.samples.size() - 1);
    for (int i = 0; i < n; ++i) out.reference.push_back(reference.samples[pick(rng)]);
    const std::uint64_t stream = derive_seed(seed, 1);
    out.imputed = parallel_map<DiarySample, DiarySample>(
        std::span<const DiarySample>(out.reference), threads,
        [&](const DiarySample& s, std::size_t i) { return impute_diary(model, s, derive_seed(stream, i), temperature); });
    DiaryCorpus imputed{reference.alphabet, out.imputed}, drawn{reference.alphabet, out.reference};
    CompareOptions options;
    options.hamming = false;
    options.ac_max_lag = kDayAcMaxLag;
    out.report = compare(as_day_sequences(imputed), as_day_sequences(drawn), options);
    return out;
}

}  // namespace schedsynth
