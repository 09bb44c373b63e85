#include "schedsynth/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "schedsynth/errors.hpp"
#include "schedsynth/rng.hpp"

namespace schedsynth {

namespace {

constexpr StateCode kCar = 1, kWork = 2, kShopping = 3, kLeisure = 4, kOnTheWay = 5;
constexpr StateCode kSleeping = 0, kHygiene = 1, kEating = 2, kCooking = 3, kDishes = 4;
constexpr StateCode kFreeTime[5] = {5, 6, 7, 8, 9};

struct Person {
    const PersonaSpec* persona = nullptr;
    PersonAttributes attrs;
    int shift = 0;
    StateCode travel = kOnTheWay;
};

int clipped_shift(double sigma, Rng& rng) {
    if (sigma <= 0.0) return 0;
    std::normal_distribution<double> normal(0.0, sigma);
    const auto limit = static_cast<long>(std::floor(3.0 * sigma));
    return static_cast<int>(std::clamp(std::lround(normal(rng)), -limit, limit));
}

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

void fill(std::vector<StateCode>& s, int from, int to, StateCode c) {
    for (int t = std::max(from, 0); t < to; ++t) s[static_cast<std::size_t>(t)] = c;
}

// A trip: travel, `dur` steps at the destination, travel back. Returns the
// step the person is home again, or `start` when it does not fit.
int trip(std::vector<StateCode>& s, int base, int start, int dur, int travel_steps, StateCode place, StateCode travel,
         int day_end) {
    const int end = start + 2 * travel_steps + dur;
    if (end > day_end) return start;
    fill(s, base + start, base + start + travel_steps, travel);
    fill(s, base + start + travel_steps, base + start + travel_steps + dur, place);
    fill(s, base + start + travel_steps + dur, base + end, travel);
    return end;
}

std::vector<StateCode> simulate_week(const Person& p, const SyntheticSpec& spec, Rng& rng) {
    const PersonaSpec& ps = *p.persona;
    std::vector<StateCode> s(kStepsPerWeek, kAtHome);
    for (int d = 0; d < kDaysPerWeek; ++d) {
        const int base = d * kStepsPerDay;
        if (d < 5 && ps.works) {
            const int delta = p.shift + clipped_shift(spec.sigma, rng);
            const int a = ps.leave + delta, b = ps.work_end + delta;
            fill(s, base + a, base + a + ps.commute, p.travel);
            fill(s, base + a + ps.commute, base + b, kWork);
            fill(s, base + b, base + b + ps.commute, p.travel);
            if (uniform01(rng) < ps.errand_probability) {
                trip(s, base, b + ps.commute + uniform_int(rng, 2, 12), uniform_int(rng, 3, 9), 1, kShopping, p.travel,
                     kStepsPerDay - 2);
            }
        } else if (d < 5) {
            if (uniform01(rng) < ps.errand_probability) {
                trip(s, base, uniform_int(rng, 54, 96), uniform_int(rng, 6, 18), 2, kShopping, p.travel, kStepsPerDay - 2);
            }
        } else {
            int free_from = 54;
            if (d == 5 && uniform01(rng) < 0.5) {
                free_from = trip(s, base, uniform_int(rng, 54, 84), uniform_int(rng, 6, 12), 2, kShopping, p.travel,
                                 kStepsPerDay - 2);
            }
            if (uniform01(rng) < ps.outing_probability) {
                trip(s, base, std::max(free_from + 2, uniform_int(rng, 60, 108)), uniform_int(rng, 12, 36), 2, kLeisure,
                     p.travel, kStepsPerDay - 2);
            }
        }
    }
    return s;
}

// Anchored at-home day. `free` picks the free-time activity of each hour.
template <typename FreeTime>
StateCode profile_activity(int tod, int wake, int bed, FreeTime&& free) {
    if (tod < wake || tod >= bed) return kSleeping;
    if (tod < wake + 3) return kHygiene;
    if (tod < wake + 6) return kEating;
    if (tod >= bed - 3) return kHygiene;
    if (tod >= 66 && tod < 72) return kCooking;
    if (tod >= 72 && tod < 78) return kEating;
    if (tod >= 78 && tod < 81) return kDishes;
    if (tod >= 102 && tod < 108) return kCooking;
    if (tod >= 108 && tod < 114) return kEating;
    if (tod >= 114 && tod < 117) return kDishes;
    return free(tod / 6);
}

Person draw_person(const SyntheticSpec& spec, const std::vector<double>& weights, std::size_t index, Rng& rng) {
    Person p;
    p.persona = &spec.personas[static_cast<std::size_t>(sample_categorical(weights, uniform01(rng)))];
    p.attrs = {p.persona->age_class, p.persona->occupation_class, "p" + std::to_string(index)};
    p.shift = clipped_shift(spec.person_sigma, rng);
    p.travel = uniform01(rng) < p.persona->car_probability ? kCar : kOnTheWay;
    return p;
}

std::vector<double> persona_weights(const SyntheticSpec& spec) {
    std::vector<double> w;
    for (const auto& p : spec.personas) w.push_back(p.weight);
    return w;
}

// Two distinct weekdays and one weekend day, ascending.
std::vector<int> diary_days(Rng& rng) {
    int a = uniform_int(rng, 0, 4), b = uniform_int(rng, 0, 3);
    if (b >= a) ++b;
    std::vector<int> days{std::min(a, b), std::max(a, b), uniform_int(rng, 5, 6)};
    return days;
}

// Diary day of weekday d cut from a week: steps 04:00 of d to 04:00 of d + 1.
template <typename Activity>
DiaryDay cut_day(const std::vector<StateCode>& week, int d, Activity&& activity) {
    DiaryDay day;
    day.weekday = d;
    day.states.resize(kStepsPerDay);
    for (int s = 0; s < kStepsPerDay; ++s) {
        const int t = (d * kStepsPerDay + s + kDiaryDayOffset) % kStepsPerWeek;
        const StateCode m = week[static_cast<std::size_t>(t)];
        const int tod = (s + kDiaryDayOffset) % kStepsPerDay;
        day.states[static_cast<std::size_t>(s)] =
            m == kAtHome ? activity(tod) : static_cast<StateCode>(kActivityStates + m - 1);
    }
    return day;
}

// Rounded, clipped N(0, sigma) as a probability table over -limit..limit.
std::vector<double> shift_distribution(double sigma, int& limit) {
    limit = static_cast<int>(std::floor(3.0 * sigma));
    std::vector<double> p(static_cast<std::size_t>(2 * limit + 1), 0.0);
    auto cdf = [&](double x) { return 0.5 * std::erfc(-x / (sigma * std::sqrt(2.0))); };
    for (int k = -limit; k <= limit; ++k) {
        const double lo = k == -limit ? 0.0 : cdf(k - 0.5);
        const double hi = k == limit ? 1.0 : cdf(k + 0.5);
        p[static_cast<std::size_t>(k + limit)] = hi - lo;
    }
    return p;
}

}  // namespace

void PersonaSpec::validate() const {
    if (!(weight > 0.0)) throw ConfigError("persona '" + name + "': weight must be positive");
    if (age_class < 0 || age_class >= kAttributeClasses || occupation_class < 0 || occupation_class >= kAttributeClasses) {
        throw ConfigError("persona '" + name + "': attribute classes must be in 0..6");
    }
    if (commute < 1) throw ConfigError("persona '" + name + "': commute must be >= 1 step");
    if (works && !(leave >= 0 && leave + commute < work_end && work_end + commute <= kStepsPerDay)) {
        throw ConfigError("persona '" + name + "': work template is not ordered within the day");
    }
    if (!(wake >= kDiaryDayOffset && wake + 6 < 66 && bed > 117 + 3 && bed <= kStepsPerDay)) {
        throw ConfigError("persona '" + name + "': wake/bed must satisfy 24 <= wake < 60 and 120 < bed <= 144");
    }
    for (double p : {car_probability, errand_probability, outing_probability}) {
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("persona '" + name + "': probabilities must be in [0, 1]");
    }
    double total = 0.0;
    for (double w : free_time) {
        if (!(w >= 0.0)) throw ConfigError("persona '" + name + "': free-time weights must be >= 0");
        total += w;
    }
    if (!(total > 0.0)) throw ConfigError("persona '" + name + "': free-time weights sum to zero");
}

void SyntheticSpec::validate() const {
    if (personas.empty()) throw ConfigError("synthetic spec has no personas");
    if (!(sigma >= 0.0) || !(person_sigma >= 0.0)) throw ConfigError("jitter sigma must be >= 0");
    for (const auto& p : personas) {
        p.validate();
        if (p.works) {
            const int reach = static_cast<int>(std::floor(3.0 * sigma) + std::floor(3.0 * person_sigma));
            if (p.leave - reach < 0 || p.work_end + p.commute + reach > kStepsPerDay) {
                throw ConfigError("persona '" + p.name + "': shifted work block can leave the day");
            }
        }
    }
}

SyntheticSpec SyntheticSpec::defaults() {
    SyntheticSpec spec;
    auto persona = [](std::string name, double weight, int age, int occ, bool works, int leave, int work_end, int commute,
                      double car, double errand, double outing, int wake, int bed, std::array<double, 5> free) {
        PersonaSpec p;
        p.name = std::move(name);
        p.weight = weight;
        p.age_class = age;
        p.occupation_class = occ;
        p.works = works;
        p.leave = leave;
        p.work_end = work_end;
        p.commute = commute;
        p.car_probability = car;
        p.errand_probability = errand;
        p.outing_probability = outing;
        p.wake = wake;
        p.bed = bed;
        p.free_time = free;
        return p;
    };
    spec.personas = {
        persona("early full-time", 0.22, 2, 0, true, 42, 99, 4, 0.7, 0.1, 0.5, 36, 132, {1, 3, 1, 1, 1}),
        persona("late full-time", 0.22, 3, 0, true, 54, 105, 3, 0.5, 0.1, 0.5, 42, 138, {1, 2, 3, 1, 1}),
        persona("part-time", 0.14, 3, 1, true, 48, 78, 2, 0.4, 0.15, 0.5, 40, 134, {2, 2, 1, 2, 1}),
        persona("student", 0.14, 1, 2, true, 45, 90, 5, 0.1, 0.1, 0.6, 38, 140, {1, 2, 3, 1, 1}),
        persona("retired", 0.18, 5, 4, false, 0, 0, 2, 0.6, 0.5, 0.4, 40, 130, {1, 3, 1, 2, 1}),
        persona("at home", 0.10, 4, 3, false, 0, 0, 2, 0.5, 0.4, 0.4, 42, 136, {2, 2, 1, 1, 2}),
    };
    return spec;
}

SyntheticCorpus make_synthetic_corpus(const SyntheticSpec& spec, int n_persons, std::uint64_t seed) {
    spec.validate();
    if (n_persons <= 0) throw ConfigError("synthetic corpus needs at least one person");
    const auto weights = persona_weights(spec);
    SyntheticCorpus out;
    for (std::size_t i = 0; i < static_cast<std::size_t>(n_persons); ++i) {
        Rng rng = make_rng(seed, i);
        const Person p = draw_person(spec, weights, i, rng);
        out.weeks.schedules.push_back({simulate_week(p, spec, rng), p.attrs});

        const auto diary_week = simulate_week(p, spec, rng);
        const std::vector<double> free(p.persona->free_time.begin(), p.persona->free_time.end());
        DiarySample sample;
        sample.attributes = p.attrs;
        for (int d : diary_days(rng)) {
            // One free-time choice per hour of the day.
            std::vector<StateCode> hourly(24);
            for (auto& h : hourly) h = kFreeTime[sample_categorical(free, uniform01(rng))];
            sample.days.push_back(cut_day(diary_week, d, [&](int tod) {
                return profile_activity(tod, p.persona->wake, p.persona->bed, [&](int hour) { return hourly[hour]; });
            }));
        }
        out.diaries.samples.push_back(std::move(sample));
    }
    return out;
}

StateCode deterministic_activity(int time_of_day) {
    return profile_activity(time_of_day, 39, 135, [](int hour) { return kFreeTime[hour % 5]; });
}

DiaryCorpus make_time_deterministic_diaries(const SyntheticSpec& spec, int n_persons, std::uint64_t seed) {
    spec.validate();
    if (n_persons <= 0) throw ConfigError("synthetic corpus needs at least one person");
    const auto weights = persona_weights(spec);
    DiaryCorpus out;
    for (std::size_t i = 0; i < static_cast<std::size_t>(n_persons); ++i) {
        Rng rng = make_rng(seed, i);
        const Person p = draw_person(spec, weights, i, rng);
        const auto week = simulate_week(p, spec, rng);
        DiarySample sample;
        sample.attributes = p.attrs;
        for (int d : diary_days(rng)) sample.days.push_back(cut_day(week, d, deterministic_activity));
        out.samples.push_back(std::move(sample));
    }
    return out;
}

int shift_hamming(int shift, int commute) {
    const int a = std::abs(shift);
    return 2 * (a + std::min(a, commute));
}

double expected_working_day_hamming(double sigma, int commute) {
    if (!(sigma >= 0.0)) throw ConfigError("sigma must be >= 0");
    if (sigma == 0.0) return 0.0;
    int limit = 0;
    const auto p = shift_distribution(sigma, limit);
    double e = 0.0;
    for (int i = -limit; i <= limit; ++i)
        for (int j = -limit; j <= limit; ++j)
            e += p[static_cast<std::size_t>(i + limit)] * p[static_cast<std::size_t>(j + limit)] * shift_hamming(i - j, commute);
    return e;
}

}  // namespace schedsynth
