#include <doctest.h>

#include <algorithm>
#include <set>

#include "schedsynth/domain.hpp"
#include "schedsynth/errors.hpp"

using namespace schedsynth;

namespace {

std::vector<std::string> make_ids(int n) {
    std::vector<std::string> ids;
    for (int i = 0; i < n; ++i) ids.push_back("p" + std::to_string(i));
    return ids;
}

WeeklySchedule home_week() {
    WeeklySchedule w;
    w.states.assign(kStepsPerWeek, kAtHome);
    w.attributes = {1, 2, "a"};
    return w;
}

}  // namespace

TEST_CASE("default alphabets") {
    const auto m = StateAlphabet::mobility_default();
    CHECK(m.size() == 6);
    CHECK(m.kind() == AlphabetKind::mobility);
    CHECK(m.code_of("at home") == 0);
    CHECK(m.code_of("driving car") == 1);
    const auto a = StateAlphabet::activity_default();
    CHECK(a.size() == 15);
    CHECK(a.kind() == AlphabetKind::activity);
    for (int i = 1; i < 6; ++i) CHECK(a.label(static_cast<StateCode>(9 + i)) == m.label(static_cast<StateCode>(i)));
    CHECK_FALSE(a.find("at home").has_value());
}

TEST_CASE("alphabet construction rejects bad label sets") {
    CHECK_THROWS_AS(StateAlphabet("m", AlphabetKind::mobility, {"at home", "driving car", "x"}), ConfigError);
    CHECK_THROWS_AS(StateAlphabet("m", AlphabetKind::mobility, {"at home", "x", "y", "z", "u", "v"}), ConfigError);
    CHECK_THROWS_AS(StateAlphabet("m", AlphabetKind::mobility, {"at home", "driving car", "y", "y", "u", "v"}), ConfigError);
    CHECK_THROWS_AS(StateAlphabet("m", AlphabetKind::mobility, {"driving car", "at home", "a", "b", "c", "d"}), ConfigError);
    CHECK_NOTHROW(StateAlphabet("m", AlphabetKind::mobility, {"at home", "a", "driving car", "b", "c", "d"}));
    CHECK_THROWS_AS(StateAlphabet::mobility_default().code_of("nowhere"), ConfigError);
}

TEST_CASE("activity alphabet from custom labels") {
    std::vector<std::string> acts;
    for (int i = 0; i < 10; ++i) acts.push_back("act" + std::to_string(i));
    const auto a = StateAlphabet::activity_from(acts, StateAlphabet::mobility_default());
    CHECK(a.size() == 15);
    CHECK(a.label(0) == "act0");
    CHECK(a.label(10) == "driving car");
    acts.pop_back();
    CHECK_THROWS_AS(StateAlphabet::activity_from(acts, StateAlphabet::mobility_default()), ConfigError);
}

TEST_CASE("weekday_of boundaries") {
    CHECK(weekday_of(0) == 0);
    CHECK(weekday_of(143) == 0);
    CHECK(weekday_of(144) == 1);
    CHECK(weekday_of(1007) == 6);
    CHECK_THROWS_AS(weekday_of(-1), ConfigError);
    CHECK_THROWS_AS(weekday_of(1008), ConfigError);
    std::set<int> seen;
    int prev = 0;
    for (int t = 0; t < kStepsPerWeek; ++t) {
        CHECK(weekday_of(t) >= prev);
        prev = weekday_of(t);
        seen.insert(prev);
    }
    CHECK(seen.size() == 7);
}

TEST_CASE("validate_schedule") {
    const auto alphabet = StateAlphabet::mobility_default();
    CHECK(validate_schedule(home_week(), alphabet).empty());

    auto short_week = home_week();
    short_week.states.pop_back();
    auto v = validate_schedule(short_week, alphabet);
    REQUIRE(v.size() == 1);
    CHECK(v[0].kind == ViolationKind::length);

    auto bad_code = home_week();
    bad_code.states[10] = 6;
    v = validate_schedule(bad_code, alphabet);
    REQUIRE(v.size() == 1);
    CHECK(v[0].kind == ViolationKind::code_range);

    auto both = bad_code;
    both.states.pop_back();
    both.attributes.age_class = 7;
    v = validate_schedule(both, alphabet);
    CHECK(v.size() == 3);
}

TEST_CASE("validate_diary") {
    const auto alphabet = StateAlphabet::activity_default();
    DiarySample d;
    d.attributes = {0, 0, "d"};
    CHECK_FALSE(validate_diary(d, alphabet).empty());  // no days
    d.days.push_back({0, std::vector<StateCode>(kStepsPerDay, 3)});
    d.days.push_back({5, std::vector<StateCode>(kStepsPerDay, 12)});
    CHECK(validate_diary(d, alphabet).empty());
    d.days.push_back({5, std::vector<StateCode>(kStepsPerDay, 1)});
    auto v = validate_diary(d, alphabet);
    REQUIRE_FALSE(v.empty());
    CHECK(v[0].kind == ViolationKind::duplicate_weekday);
    d.days.back().weekday = 7;
    CHECK(validate_diary(d, alphabet).front().kind == ViolationKind::weekday_range);
    d.days.back().weekday = 6;
    d.days.push_back({1, std::vector<StateCode>(kStepsPerDay, 1)});
    CHECK(validate_diary(d, alphabet).front().kind == ViolationKind::day_count);
    d.days.pop_back();
    d.days[0].states.push_back(0);
    CHECK(validate_diary(d, alphabet).front().kind == ViolationKind::length);
}

TEST_CASE("split of 100 persons") {
    const auto ids = make_ids(100);
    const auto plan = build_split(ids, 1);
    CHECK(plan.test_ids.size() == 10);
    std::vector<int> sizes(kFolds, 0);
    for (const auto& [id, f] : plan.fold_of) ++sizes[static_cast<std::size_t>(f)];
    for (int s : sizes) CHECK(s == 10);
    CHECK(build_split(ids, 1) == plan);
    CHECK_FALSE(build_split(ids, 2) == plan);
}

TEST_CASE("split of 95 persons partitions exactly") {
    const auto ids = make_ids(95);
    const auto plan = build_split(ids, 7);
    CHECK((plan.test_ids.size() == 9 || plan.test_ids.size() == 10));
    const std::size_t rest = 95 - plan.test_ids.size();
    std::vector<std::size_t> sizes(kFolds, 0);
    for (const auto& [id, f] : plan.fold_of) ++sizes[static_cast<std::size_t>(f)];
    for (auto s : sizes) {
        CHECK(s >= rest / kFolds);
        CHECK(s <= rest / kFolds + 1);
    }
    std::set<std::string> all(plan.test_ids.begin(), plan.test_ids.end());
    CHECK(all.size() == plan.test_ids.size());
    for (const auto& [id, f] : plan.fold_of) CHECK(all.insert(id).second);
    CHECK(all == std::set<std::string>(ids.begin(), ids.end()));

    for (int k = 0; k < kFolds; ++k) {
        const auto val = plan.validation_ids(k);
        const auto train = plan.training_ids(k);
        CHECK(val.size() == sizes[static_cast<std::size_t>(k)]);
        CHECK(val.size() + train.size() == rest);
        std::set<std::string> v(val.begin(), val.end());
        for (const auto& id : train) CHECK(v.count(id) == 0);
    }
}

TEST_CASE("split errors") {
    CHECK_THROWS_AS(build_split(make_ids(19), 1), ConfigError);
    CHECK_NOTHROW(build_split(make_ids(20), 1));
    auto ids = make_ids(30);
    ids[3] = ids[4];
    CHECK_THROWS_AS(build_split(ids, 1), ConfigError);
    const auto plan = build_split(make_ids(30), 1);
    CHECK_THROWS_AS(plan.validation_ids(9), ConfigError);
}
