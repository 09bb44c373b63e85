#include "schedsynth/domain.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "schedsynth/errors.hpp"

namespace schedsynth {

StateAlphabet::StateAlphabet(std::string name, AlphabetKind kind, std::vector<std::string> labels)
    : name_(std::move(name)), kind_(kind) {
    if (labels.empty() || labels.size() > 255) {
        throw ConfigError("alphabet '" + name_ + "' must have 1..255 states");
    }
    std::set<std::string> seen;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i].empty() || !seen.insert(labels[i]).second) {
            throw ConfigError("alphabet '" + name_ + "' has an empty or duplicate label");
        }
        if (labels[i].find_first_of(";=\n\r") != std::string::npos) {
            throw ConfigError("alphabet label '" + labels[i] + "' contains a reserved character");
        }
        states_.push_back({static_cast<StateCode>(i), std::move(labels[i])});
    }
    if (kind_ == AlphabetKind::mobility) {
        if (size() != kMobilityStates || !find("at home") || !find("driving car")) {
            throw ConfigError("mobility alphabet needs 6 states including 'at home' and 'driving car'");
        }
        if (code_of("at home") != kAtHome) {
            throw ConfigError("'at home' must carry mobility code 0");
        }
    } else if (size() != kActivityStates + kAwayStates) {
        throw ConfigError("activity alphabet needs 10 activities plus 5 away states");
    }
}

StateAlphabet StateAlphabet::mobility_default() {
    return StateAlphabet("mobility", AlphabetKind::mobility,
                         {"at home", "driving car", "work/education", "shopping/errands",
                          "leisure/other place", "on the way (non-car)"});
}

StateAlphabet StateAlphabet::activity_default() {
    return activity_from({"sleeping", "personal hygiene", "eating", "cooking", "dishwashing/cleaning",
                          "laundry/ironing", "tv/media", "computer/ict", "hobbies", "other at home"},
                         mobility_default());
}

StateAlphabet StateAlphabet::activity_from(const std::vector<std::string>& activities,
                                           const StateAlphabet& mobility) {
    if (mobility.kind() != AlphabetKind::mobility) {
        throw ConfigError("activity alphabet must be derived from a mobility alphabet");
    }
    std::vector<std::string> labels = activities;
    for (int c = 1; c < mobility.size(); ++c) {
        labels.push_back(mobility.label(static_cast<StateCode>(c)));
    }
    return StateAlphabet("activity", AlphabetKind::activity, std::move(labels));
}

const std::string& StateAlphabet::label(StateCode code) const {
    if (!contains(code)) {
        throw ConfigError("state code " + std::to_string(code) + " outside alphabet '" + name_ + "'");
    }
    return states_[code].label;
}

std::optional<StateCode> StateAlphabet::find(const std::string& label) const {
    for (const auto& s : states_) {
        if (s.label == label) return s.code;
    }
    return std::nullopt;
}

StateCode StateAlphabet::code_of(const std::string& label) const {
    auto code = find(label);
    if (!code) throw ConfigError("label '" + label + "' not in alphabet '" + name_ + "'");
    return *code;
}

bool StateAlphabet::operator==(const StateAlphabet& other) const {
    if (name_ != other.name_ || kind_ != other.kind_ || states_.size() != other.states_.size()) return false;
    for (std::size_t i = 0; i < states_.size(); ++i) {
        if (states_[i].label != other.states_[i].label) return false;
    }
    return true;
}

std::string to_string(AlphabetKind kind) {
    return kind == AlphabetKind::mobility ? "mobility" : "activity";
}

AlphabetKind alphabet_kind_from_string(const std::string& text) {
    if (text == "mobility") return AlphabetKind::mobility;
    if (text == "activity") return AlphabetKind::activity;
    throw DataError("unknown alphabet kind '" + text + "'");
}

int weekday_of(int step) {
    if (step < 0 || step >= kStepsPerWeek) {
        throw ConfigError("week step " + std::to_string(step) + " outside 0..1007");
    }
    return step / kStepsPerDay;
}

std::vector<Violation> validate_attributes(const PersonAttributes& attrs) {
    std::vector<Violation> out;
    if (attrs.age_class < 0 || attrs.age_class >= kAttributeClasses) {
        out.push_back({ViolationKind::attribute_range, "age class " + std::to_string(attrs.age_class) + " not in 0..6"});
    }
    if (attrs.occupation_class < 0 || attrs.occupation_class >= kAttributeClasses) {
        out.push_back({ViolationKind::attribute_range,
                       "occupation class " + std::to_string(attrs.occupation_class) + " not in 0..6"});
    }
    return out;
}

namespace {

void check_codes(std::span<const StateCode> states, const StateAlphabet& alphabet, const std::string& where,
                 std::vector<Violation>& out) {
    for (std::size_t t = 0; t < states.size(); ++t) {
        if (!alphabet.contains(states[t])) {
            out.push_back({ViolationKind::code_range, where + "step " + std::to_string(t) + ": code " +
                                                          std::to_string(states[t]) + " outside alphabet '" +
                                                          alphabet.name() + "'"});
        }
    }
}

}  // namespace

std::vector<Violation> validate_schedule(const WeeklySchedule& s, const StateAlphabet& alphabet) {
    std::vector<Violation> out = validate_attributes(s.attributes);
    if (s.states.size() != static_cast<std::size_t>(kStepsPerWeek)) {
        out.push_back({ViolationKind::length, "schedule has " + std::to_string(s.states.size()) + " steps, expected 1008"});
    }
    check_codes(s.states, alphabet, "", out);
    return out;
}

std::vector<Violation> validate_diary(const DiarySample& d, const StateAlphabet& alphabet) {
    std::vector<Violation> out = validate_attributes(d.attributes);
    if (d.days.empty() || d.days.size() > 3) {
        out.push_back({ViolationKind::day_count, "diary has " + std::to_string(d.days.size()) + " days, expected 1..3"});
    }
    std::set<int> weekdays;
    for (std::size_t i = 0; i < d.days.size(); ++i) {
        const auto& day = d.days[i];
        const std::string where = "day " + std::to_string(i) + " ";
        if (day.weekday < 0 || day.weekday >= kDaysPerWeek) {
            out.push_back({ViolationKind::weekday_range, where + "weekday " + std::to_string(day.weekday) + " not in 0..6"});
        } else if (!weekdays.insert(day.weekday).second) {
            out.push_back({ViolationKind::duplicate_weekday, where + "repeats weekday " + std::to_string(day.weekday)});
        }
        if (day.states.size() != static_cast<std::size_t>(kStepsPerDay)) {
            out.push_back({ViolationKind::length,
                           where + "has " + std::to_string(day.states.size()) + " steps, expected 144"});
        }
        check_codes(day.states, alphabet, where, out);
    }
    return out;
}

std::vector<std::string> SplitPlan::validation_ids(int fold) const {
    if (fold < 0 || fold >= kFolds) throw ConfigError("fold " + std::to_string(fold) + " not in 0..8");
    std::vector<std::string> out;
    for (const auto& [id, f] : fold_of) {
        if (f == fold) out.push_back(id);
    }
    return out;
}

std::vector<std::string> SplitPlan::training_ids(int fold) const {
    if (fold < 0 || fold >= kFolds) throw ConfigError("fold " + std::to_string(fold) + " not in 0..8");
    std::vector<std::string> out;
    for (const auto& [id, f] : fold_of) {
        if (f != fold) out.push_back(id);
    }
    return out;
}

SplitPlan build_split(std::span<const std::string> ids, std::uint64_t seed) {
    std::vector<std::string> sorted(ids.begin(), ids.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw ConfigError("duplicate person id in split input");
    }
    if (sorted.size() < static_cast<std::size_t>(kMinSplitPersons)) {
        throw ConfigError("split needs at least 20 persons, got " + std::to_string(sorted.size()));
    }
    std::mt19937_64 rng(seed);
    std::shuffle(sorted.begin(), sorted.end(), rng);

    SplitPlan plan;
    plan.seed = seed;
    const std::size_t n_test = (sorted.size() + 5) / 10;
    plan.test_ids.assign(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n_test));
    std::sort(plan.test_ids.begin(), plan.test_ids.end());
    for (std::size_t i = n_test; i < sorted.size(); ++i) {
        plan.fold_of[sorted[i]] = static_cast<int>((i - n_test) % kFolds);
    }
    return plan;
}

std::vector<std::string> person_ids(const WeekCorpus& corpus) {
    std::vector<std::string> out;
    out.reserve(corpus.schedules.size());
    for (const auto& s : corpus.schedules) out.push_back(s.attributes.person_id);
    return out;
}

std::vector<std::string> person_ids(const DiaryCorpus& corpus) {
    std::vector<std::string> out;
    out.reserve(corpus.samples.size());
    for (const auto& s : corpus.samples) out.push_back(s.attributes.person_id);
    return out;
}

}  // namespace schedsynth
