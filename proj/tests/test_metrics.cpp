#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "oracle.hpp"
#include "schedsynth/errors.hpp"
#include "schedsynth/metrics.hpp"
#include "schedsynth/synthetic.hpp"

using namespace schedsynth;

namespace {

SequenceCorpus make(int S, const std::vector<std::vector<int>>& seqs) {
    SequenceCorpus c;
    c.n_states = S;
    for (int s = 0; s < S; ++s) c.labels.push_back("s" + std::to_string(s));
    for (const auto& q : seqs) c.sequences.emplace_back(q.begin(), q.end());
    return c;
}

oracle::Corpus plain(const SequenceCorpus& c) {
    oracle::Corpus out;
    for (const auto& q : c.sequences) out.emplace_back(q.begin(), q.end());
    return out;
}

// Three random weeks built from a few day templates so hd has structure.
SequenceCorpus toy_weeks(std::uint64_t seed) {
    Rng rng(seed);
    std::uniform_int_distribution<int> start(30, 60), len(10, 50), st(1, 5), coin(0, 9);
    std::vector<std::vector<int>> seqs;
    for (int p = 0; p < 3; ++p) {
        std::vector<int> q(kStepsPerWeek, 0);
        for (int d = 0; d < 7; ++d) {
            const int s = start(rng), e = s + len(rng), code = st(rng);
            for (int t = s; t < e; ++t) q[static_cast<std::size_t>(d * 144 + t)] = code;
        }
        for (auto& v : q)
            if (coin(rng) == 0) v = st(rng) - 1;
        seqs.push_back(q);
    }
    return make(6, seqs);
}

}  // namespace

TEST_CASE("duration histograms of a short sequence") {
    // H H W W W H
    const auto c = make(2, {{0, 0, 1, 1, 1, 0}});
    const auto h = duration_histograms(c, 6);
    CHECK(h[0] == 0.5);
    CHECK(h[1] == 0.5);
    CHECK(h[6 + 2] == 1.0);
    const auto capped = duration_histograms(c, 2);
    CHECK(capped[2 + 1] == 1.0);
    CHECK_THROWS_AS(duration_histograms(c, 0), ConfigError);
}

TEST_CASE("episode counts") {
    std::vector<int> q(500, 0);
    q.insert(q.end(), 8, 2);
    q.insert(q.end(), 500, 0);
    const auto na = weekly_activity_counts(make(3, {q}));
    CHECK(na[0] == 2.0);
    CHECK(na[1] == 0.0);
    CHECK(na[2] == 1.0);
}

TEST_CASE("state probability curves") {
    const auto c = make(3, {{0, 1, 2}, {0, 0, 2}, {1, 0, 2}, {0, 0, 2}});
    const auto p = state_probability_curves(c);
    CHECK(p[0] == 0.75);
    CHECK(p[1] == 0.75);
    CHECK(p[3 + 0] == 0.25);
    CHECK(p[6 + 2] == 1.0);
}

TEST_CASE("white noise autocorrelation is near zero") {
    Rng rng(4);
    std::bernoulli_distribution b(0.4);
    const int T = 4000;
    std::vector<StateCode> q(T);
    for (auto& v : q) v = b(rng) ? 1 : 0;
    const StateCode s = 1;
    const auto curve = indicator_autocorrelation(q, std::span<const StateCode>(&s, 1), 50);
    REQUIRE(curve.size() == 50);
    // each lag is ~N(0, 1/T); over 50 lags an occasional 3-sigma value is expected
    const double se = 1.0 / std::sqrt(static_cast<double>(T));
    int beyond = 0;
    for (int k = 1; k <= 50; ++k) {
        const double r = curve[static_cast<std::size_t>(k - 1)];
        beyond += std::abs(r) > 3 * se;
        CHECK(std::abs(r) < 4.5 * se);
        const std::vector<double> x(q.begin(), q.end());
        CHECK(r == doctest::Approx(oracle::pearson({x.begin(), x.end() - k}, {x.begin() + k, x.end()})).epsilon(1e-12));
    }
    CHECK(beyond <= 2);

    const std::vector<StateCode> constant(100, 0);
    CHECK(indicator_autocorrelation(constant, std::span<const StateCode>(&s, 1), 5).empty());
}

TEST_CASE("periodic indicator has full correlation at its period") {
    std::vector<StateCode> q(kStepsPerWeek, 0);
    for (int t = 0; t < kStepsPerWeek; ++t) q[static_cast<std::size_t>(t)] = (t % 144) >= 50 && (t % 144) < 90;
    const StateCode s = 1;
    const auto curve = indicator_autocorrelation(q, std::span<const StateCode>(&s, 1), 300);
    CHECK(curve[143] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(curve[287] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(curve[71] < 0.0);
}

TEST_CASE("hamming distribution") {
    const auto same = make(2, {std::vector<int>(kStepsPerWeek, 0)});
    auto h = hamming_distribution(same);
    CHECK(h[0] == 10);

    std::vector<int> alt(kStepsPerWeek, 0);
    for (int d = 0; d < 5; ++d)
        for (int t = 0; t < 144; ++t) alt[static_cast<std::size_t>(d * 144 + t)] = d;
    h = hamming_distribution(make(5, {alt}));
    CHECK(h[144] == 10);

    std::vector<int> one(kStepsPerWeek, 0);
    one[2 * 144 + 77] = 1;
    h = hamming_distribution(make(2, {one}));
    CHECK(h[1] == 4);
    CHECK(h[0] == 6);

    CHECK_THROWS_AS(hamming_distribution(make(2, {{0, 1, 0}})), DataError);
}

TEST_CASE("all five metrics agree with the brute-force oracle on toy corpora") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        CAPTURE(seed);
        const auto g = toy_weeks(seed), r = toy_weeks(seed + 100);
        const auto rep = compare(g, r);
        const auto og = plain(g), orf = plain(r);
        CHECK(rep.sp_rmse == doctest::Approx(100 * oracle::rmse(oracle::sp(og, 6), oracle::sp(orf, 6))).epsilon(1e-12));
        CHECK(rep.sd_rmse ==
              doctest::Approx(100 * oracle::rmse(oracle::sd(og, 6, 432), oracle::sd(orf, 6, 432))).epsilon(1e-12));
        const auto nag = oracle::na(og, 6), nar = oracle::na(orf, 6);
        double na = 0.0;
        for (int s = 0; s < 6; ++s) na += std::abs(nag[static_cast<std::size_t>(s)] - nar[static_cast<std::size_t>(s)]);
        CHECK(rep.na_mae == doctest::Approx(na / 6).epsilon(1e-12));
        CHECK(rep.ac_rmse == doctest::Approx(oracle::ac_rmse(og, orf, 6, 432)).epsilon(1e-9));
        REQUIRE(rep.hd_mae.has_value());
        CHECK(*rep.hd_mae == doctest::Approx(oracle::hd_mae(og, orf)).epsilon(1e-12));
    }
}

TEST_CASE("short-sequence metrics with one-sided autocorrelation") {
    // state 2 varies only in the generated corpus
    const auto g = make(3, {{0, 0, 2, 2, 1, 1, 0, 2}, {1, 1, 1, 0, 0, 0, 0, 1}, {0, 2, 0, 2, 0, 2, 0, 2}});
    const auto r = make(3, {{0, 0, 0, 1, 1, 1, 0, 0}, {1, 0, 1, 0, 1, 0, 1, 0}, {0, 0, 1, 1, 0, 0, 1, 1}});
    CompareOptions o;
    o.hamming = false;
    o.ac_max_lag = 4;
    o.duration_cap = 5;
    const auto rep = compare(g, r, o);
    const auto og = plain(g), orf = plain(r);
    CHECK(rep.sp_rmse == doctest::Approx(100 * oracle::rmse(oracle::sp(og, 3), oracle::sp(orf, 3))).epsilon(1e-12));
    CHECK(rep.sd_rmse == doctest::Approx(100 * oracle::rmse(oracle::sd(og, 3, 5), oracle::sd(orf, 3, 5))).epsilon(1e-12));
    CHECK(rep.ac_rmse == doctest::Approx(oracle::ac_rmse(og, orf, 3, 4)).epsilon(1e-12));
    CHECK_FALSE(rep.hd_mae.has_value());
    REQUIRE(rep.per_state[2].ac_rmse.has_value());
    CHECK(rep.ac_max_lag == 4);
    CHECK(rep.duration_cap == 5);
}

TEST_CASE("self comparison is zero") {
    const auto c = as_sequences(make_synthetic_corpus(SyntheticSpec::defaults(), 40, 3).weeks);
    const auto rep = compare(c, c);
    CHECK(rep.sp_rmse == 0.0);
    CHECK(rep.sd_rmse == 0.0);
    CHECK(rep.ac_rmse == 0.0);
    CHECK(rep.na_mae == 0.0);
    CHECK(*rep.hd_mae == 0.0);
}

TEST_CASE("permuting state labels moves the probability curves") {
    auto c = as_sequences(make_synthetic_corpus(SyntheticSpec::defaults(), 30, 4).weeks);
    auto swapped = c;
    for (auto& q : swapped.sequences)
        for (auto& v : q) v = v == 0 ? 2 : v == 2 ? 0 : v;
    CHECK(compare(swapped, c).sp_rmse > 0.0);
}

TEST_CASE("metrics grow with injected noise") {
    const auto ref = as_sequences(make_synthetic_corpus(SyntheticSpec::defaults(), 200, 5).weeks);
    std::vector<MetricsReport> reps;
    for (double eps : {0.01, 0.05, 0.1}) reps.push_back(compare(inject_noise(ref, eps, 8), ref));
    for (std::size_t i = 1; i < reps.size(); ++i) {
        CHECK(reps[i].sp_rmse > reps[i - 1].sp_rmse);
        CHECK(reps[i].sd_rmse > reps[i - 1].sd_rmse);
        CHECK(reps[i].ac_rmse > reps[i - 1].ac_rmse);
        CHECK(reps[i].na_mae > reps[i - 1].na_mae);
        CHECK(*reps[i].hd_mae > *reps[i - 1].hd_mae);
    }
    CHECK(reps[0].sp_rmse > 0.0);
}

TEST_CASE("compare errors") {
    const auto a = make(2, {std::vector<int>(kStepsPerWeek, 0)});
    const auto b = make(2, {std::vector<int>(kStepsPerWeek, 0), std::vector<int>(kStepsPerWeek, 1)});
    CHECK_THROWS_AS(compare(a, b), DataError);
    CompareOptions o;
    o.hamming = false;
    CHECK_NOTHROW(compare(a, b, o));
    CHECK_THROWS_AS(compare(a, make(2, {{0, 1}}), o), DataError);
    CHECK_THROWS_AS(compare(a, make(3, {std::vector<int>(kStepsPerWeek, 0)}), o), DataError);
    CHECK_THROWS_AS(compare(SequenceCorpus{}, a, o), DataError);
    CHECK(resample(b, 7, 1).count() == 7);
    CHECK(resample(b, 7, 1).sequences == resample(b, 7, 1).sequences);
}
