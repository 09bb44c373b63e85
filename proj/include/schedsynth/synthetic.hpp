#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "schedsynth/domain.hpp"

namespace schedsynth {

// Habit template of one (age, occupation) cell. Times are steps of the day.
struct PersonaSpec {
    std::string name;
    double weight = 1.0;  // share of persons
    int age_class = 0;
    int occupation_class = 0;
    bool works = true;
    int leave = 45;     // leaves home for work
    int work_end = 102; // leaves work
    int commute = 3;    // steps of travel each way
    double car_probability = 0.5;      // person-level: car (driving) or non-car travel
    double errand_probability = 0.1;   // per working day
    double outing_probability = 0.5;   // per weekend day
    int wake = 39;
    int bed = 135;
    // Free-time preference over laundry, TV, computer, hobbies, other.
    std::array<double, 5> free_time{1, 1, 1, 1, 1};

    void validate() const;
};

// Every working day shifts the persona's work block rigidly by a rounded
// N(0, sigma) draw on top of a per-person rounded N(0, person_sigma) shift;
// both are clipped to three standard deviations.
struct SyntheticSpec {
    std::vector<PersonaSpec> personas;
    double sigma = 6.0;
    double person_sigma = 6.0;

    static SyntheticSpec defaults();
    void validate() const;
};

struct SyntheticCorpus {
    WeekCorpus weeks;
    DiaryCorpus diaries;
};

// n persons, each with one mobility week and a diary of two weekdays and one
// weekend day (04:00 origin) cut from a second simulated week, with at-home
// activities from the persona's time-of-day profile.
SyntheticCorpus make_synthetic_corpus(const SyntheticSpec& spec, int n_persons, std::uint64_t seed);

// Diaries whose at-home activity is deterministic_activity(time of day).
DiaryCorpus make_time_deterministic_diaries(const SyntheticSpec& spec, int n_persons, std::uint64_t seed);
StateCode deterministic_activity(int time_of_day);

// Hamming distance of two working days whose work blocks differ by a rigid
// shift of `shift` steps: 2 (|shift| + min(|shift|, commute)).
int shift_hamming(int shift, int commute);
// Its expectation over two independent clipped rounded N(0, sigma) shifts.
double expected_working_day_hamming(double sigma, int commute);

}  // namespace schedsynth
