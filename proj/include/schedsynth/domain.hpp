#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace schedsynth {

using StateCode = std::uint8_t;

inline constexpr int kStepsPerDay = 144;
inline constexpr int kDaysPerWeek = 7;
inline constexpr int kStepsPerWeek = kStepsPerDay * kDaysPerWeek;  // 1008
inline constexpr int kAttributeClasses = 7;
inline constexpr int kFolds = 9;
// Diary days run 04:00 to 04:00; this is the offset of 04:00 in steps.
inline constexpr int kDiaryDayOffset = 24;

enum class AlphabetKind { mobility, activity };

struct State {
    StateCode code = 0;
    std::string label;
};

// Ordered categorical state set. Codes are dense 0..K-1.
class StateAlphabet {
public:
    StateAlphabet(std::string name, AlphabetKind kind, std::vector<std::string> labels);

    // {at home, driving car, work/education, shopping/errands,
    //  leisure/other place, on the way (non-car)}
    static StateAlphabet mobility_default();
    // Ten at-home activities (codes 0..9) followed by the five away states of
    // the mobility alphabet (codes 10..14).
    static StateAlphabet activity_default();
    // Builds the activity alphabet from activity labels and a mobility alphabet.
    static StateAlphabet activity_from(const std::vector<std::string>& activities,
                                       const StateAlphabet& mobility);

    const std::string& name() const { return name_; }
    AlphabetKind kind() const { return kind_; }
    int size() const { return static_cast<int>(states_.size()); }
    const std::vector<State>& states() const { return states_; }
    const std::string& label(StateCode code) const;
    std::optional<StateCode> find(const std::string& label) const;
    StateCode code_of(const std::string& label) const;  // throws if absent
    bool contains(int code) const { return code >= 0 && code < size(); }

    bool operator==(const StateAlphabet& other) const;

private:
    std::string name_;
    AlphabetKind kind_;
    std::vector<State> states_;
};

std::string to_string(AlphabetKind kind);
AlphabetKind alphabet_kind_from_string(const std::string& text);

inline constexpr int kMobilityStates = 6;
inline constexpr int kActivityStates = 10;
inline constexpr int kAwayStates = kMobilityStates - 1;

// Mobility code of "at home" in the default alphabet.
inline constexpr StateCode kAtHome = 0;

struct PersonAttributes {
    int age_class = 0;
    int occupation_class = 0;
    std::string person_id;

    bool operator==(const PersonAttributes&) const = default;
};

struct WeeklySchedule {
    std::vector<StateCode> states;  // kStepsPerWeek codes, Monday 00:00 origin
    PersonAttributes attributes;

    bool operator==(const WeeklySchedule&) const = default;
};

struct DiaryDay {
    int weekday = 0;                // 0 = Monday
    std::vector<StateCode> states;  // kStepsPerDay codes, 04:00 origin

    bool operator==(const DiaryDay&) const = default;
};

struct DiarySample {
    std::vector<DiaryDay> days;  // 1..3 days, distinct weekdays
    PersonAttributes attributes;

    bool operator==(const DiarySample&) const = default;
};

struct WeekCorpus {
    StateAlphabet alphabet = StateAlphabet::mobility_default();
    std::vector<WeeklySchedule> schedules;
};

struct DiaryCorpus {
    StateAlphabet alphabet = StateAlphabet::activity_default();
    std::vector<DiarySample> samples;
};

// Weekday of a week step (Monday = 0). Throws ConfigError when out of range.
int weekday_of(int step);

enum class ViolationKind { length, code_range, attribute_range, weekday_range, duplicate_weekday, day_count };

struct Violation {
    ViolationKind kind;
    std::string message;
};

std::vector<Violation> validate_attributes(const PersonAttributes& attrs);
std::vector<Violation> validate_schedule(const WeeklySchedule& s, const StateAlphabet& alphabet);
std::vector<Violation> validate_diary(const DiarySample& d, const StateAlphabet& alphabet);

// Person-level train/validation/test assignment.
struct SplitPlan {
    std::vector<std::string> test_ids;
    std::map<std::string, int> fold_of;  // person_id -> 0..kFolds-1
    std::uint64_t seed = 0;

    std::vector<std::string> validation_ids(int fold) const;
    std::vector<std::string> training_ids(int fold) const;
    bool operator==(const SplitPlan&) const = default;
};

inline constexpr int kMinSplitPersons = 20;

SplitPlan build_split(std::span<const std::string> person_ids, std::uint64_t seed);

std::vector<std::string> person_ids(const WeekCorpus& corpus);
std::vector<std::string> person_ids(const DiaryCorpus& corpus);

}  // namespace schedsynth
