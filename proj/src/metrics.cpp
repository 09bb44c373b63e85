#include "schedsynth/metrics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "schedsynth/errors.hpp"
#include "schedsynth/rng.hpp"

namespace schedsynth {

namespace {

std::vector<std::string> labels_of(const StateAlphabet& alphabet) {
    std::vector<std::string> out;
    for (const auto& s : alphabet.states()) out.push_back(s.label);
    return out;
}

void require_uniform(const SequenceCorpus& corpus, const char* what) {
    if (corpus.n_states <= 0) throw DataError(std::string(what) + ": corpus has no states");
    for (const auto& s : corpus.sequences) {
        if (s.size() != corpus.length()) throw DataError(std::string(what) + ": sequences have mixed lengths");
        for (StateCode c : s) {
            if (c >= corpus.n_states) throw DataError(std::string(what) + ": state code outside alphabet");
        }
    }
}

template <typename F>
void for_each_run(std::span<const StateCode> seq, F&& f) {
    std::size_t start = 0;
    for (std::size_t t = 1; t <= seq.size(); ++t) {
        if (t == seq.size() || seq[t] != seq[start]) {
            f(seq[start], t - start);
            start = t;
        }
    }
}

// Linear interpolation between order statistics (the common "type 7").
double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.size() == 1) return sorted[0];
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

using Bits = std::vector<std::uint64_t>;

Bits pack(std::span<const StateCode> seq, std::span<const StateCode> states) {
    Bits bits((seq.size() + 63) / 64, 0);
    for (std::size_t t = 0; t < seq.size(); ++t) {
        if (std::find(states.begin(), states.end(), seq[t]) != states.end()) bits[t / 64] |= std::uint64_t{1} << (t % 64);
    }
    return bits;
}

// popcount(x & (x >> lag)), restricted implicitly to t + lag < T.
std::int64_t lagged_overlap(const Bits& x, std::size_t lag) {
    const std::size_t words = lag / 64, bits = lag % 64;
    std::int64_t total = 0;
    for (std::size_t i = 0; i + words < x.size(); ++i) {
        std::uint64_t shifted = x[i + words] >> bits;
        if (bits && i + words + 1 < x.size()) shifted |= x[i + words + 1] << (64 - bits);
        total += std::popcount(x[i] & shifted);
    }
    return total;
}

}  // namespace

SequenceCorpus as_sequences(const StateAlphabet& alphabet, std::span<const WeeklySchedule> weeks) {
    SequenceCorpus out;
    out.n_states = alphabet.size();
    out.labels = labels_of(alphabet);
    out.sequences.reserve(weeks.size());
    for (const auto& w : weeks) out.sequences.push_back(w.states);
    return out;
}

SequenceCorpus as_sequences(const WeekCorpus& corpus) { return as_sequences(corpus.alphabet, corpus.schedules); }

SequenceCorpus as_day_sequences(const DiaryCorpus& corpus) {
    SequenceCorpus out;
    out.n_states = corpus.alphabet.size();
    out.labels = labels_of(corpus.alphabet);
    for (const auto& s : corpus.samples) {
        for (const auto& d : s.days) out.sequences.push_back(d.states);
    }
    return out;
}

std::vector<double> state_probability_curves(const SequenceCorpus& corpus) {
    require_uniform(corpus, "state probability");
    if (corpus.count() == 0) throw DataError("state probability: empty corpus");
    const std::size_t L = corpus.length(), S = static_cast<std::size_t>(corpus.n_states);
    std::vector<std::uint64_t> counts(S * L, 0);
    for (const auto& seq : corpus.sequences)
        for (std::size_t t = 0; t < L; ++t) ++counts[seq[t] * L + t];
    std::vector<double> out(S * L);
    const double n = static_cast<double>(corpus.count());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(counts[i]) / n;
    return out;
}

std::vector<double> duration_histograms(const SequenceCorpus& corpus, int cap) {
    require_uniform(corpus, "duration histogram");
    if (cap <= 0) throw ConfigError("duration cap must be positive");
    const std::size_t S = static_cast<std::size_t>(corpus.n_states), C = static_cast<std::size_t>(cap);
    std::vector<std::uint64_t> counts(S * C, 0);
    std::vector<std::uint64_t> totals(S, 0);
    for (const auto& seq : corpus.sequences) {
        for_each_run(seq, [&](StateCode s, std::size_t len) {
            ++counts[s * C + std::min(len, C) - 1];
            ++totals[s];
        });
    }
    std::vector<double> out(S * C, 0.0);
    for (std::size_t s = 0; s < S; ++s) {
        if (totals[s] == 0) continue;
        for (std::size_t b = 0; b < C; ++b) {
            out[s * C + b] = static_cast<double>(counts[s * C + b]) / static_cast<double>(totals[s]);
        }
    }
    return out;
}

std::vector<double> indicator_autocorrelation(std::span<const StateCode> sequence, std::span<const StateCode> states,
                                              int max_lag) {
    const std::size_t T = sequence.size();
    if (max_lag <= 0 || static_cast<std::size_t>(max_lag) >= T) {
        throw ConfigError("autocorrelation needs 0 < max_lag < sequence length");
    }
    const Bits x = pack(sequence, states);
    // prefix[t] = number of ones in x[0..t)
    std::vector<std::int64_t> prefix(T + 1, 0);
    for (std::size_t t = 0; t < T; ++t) prefix[t + 1] = prefix[t] + ((x[t / 64] >> (t % 64)) & 1);
    const std::int64_t ones = prefix[T];
    if (ones == 0 || ones == static_cast<std::int64_t>(T)) return {};

    std::vector<double> out(static_cast<std::size_t>(max_lag));
    for (std::size_t k = 1; k <= static_cast<std::size_t>(max_lag); ++k) {
        const auto n = static_cast<std::int64_t>(T - k);
        const std::int64_t sx = prefix[T - k];
        const std::int64_t sy = ones - prefix[k];
        const std::int64_t sxy = lagged_overlap(x, k);
        const std::int64_t vx = n * sx - sx * sx;
        const std::int64_t vy = n * sy - sy * sy;
        if (vx == 0 || vy == 0) {
            out[k - 1] = 0.0;
            continue;
        }
        out[k - 1] = static_cast<double>(n * sxy - sx * sy) /
                     std::sqrt(static_cast<double>(vx) * static_cast<double>(vy));
    }
    return out;
}

AutocorrelationSummary state_autocorrelation(const SequenceCorpus& corpus, std::span<const StateCode> states,
                                             int max_lag) {
    require_uniform(corpus, "autocorrelation");
    if (static_cast<std::size_t>(std::max(max_lag, 0)) >= corpus.length()) {
        throw ConfigError("autocorrelation needs sequences longer than max_lag");
    }
    AutocorrelationSummary out;
    out.max_lag = max_lag;
    std::vector<std::vector<double>> curves;
    for (const auto& seq : corpus.sequences) {
        auto c = indicator_autocorrelation(seq, states, max_lag);
        if (c.empty()) {
            ++out.persons_excluded;
        } else {
            curves.push_back(std::move(c));
        }
    }
    if (curves.empty()) throw DataError("autocorrelation: every indicator is constant");
    out.persons_used = curves.size();
    const auto K = static_cast<std::size_t>(max_lag);
    out.mean.assign(K, 0.0);
    out.q25.assign(K, 0.0);
    out.q75.assign(K, 0.0);
    std::vector<double> column(curves.size());
    for (std::size_t k = 0; k < K; ++k) {
        double s = 0.0;
        for (std::size_t p = 0; p < curves.size(); ++p) {
            column[p] = curves[p][k];
            s += column[p];
        }
        out.mean[k] = s / static_cast<double>(curves.size());
        std::sort(column.begin(), column.end());
        out.q25[k] = quantile_sorted(column, 0.25);
        out.q75[k] = quantile_sorted(column, 0.75);
    }
    return out;
}

std::vector<double> weekly_activity_counts(const SequenceCorpus& corpus) {
    require_uniform(corpus, "activity counts");
    if (corpus.count() == 0) throw DataError("activity counts: empty corpus");
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(corpus.n_states), 0);
    for (const auto& seq : corpus.sequences) {
        for_each_run(seq, [&](StateCode s, std::size_t) { ++counts[s]; });
    }
    std::vector<double> out(counts.size());
    for (std::size_t s = 0; s < counts.size(); ++s) {
        out[s] = static_cast<double>(counts[s]) / static_cast<double>(corpus.count());
    }
    return out;
}

std::vector<std::uint64_t> hamming_distribution(const SequenceCorpus& corpus) {
    require_uniform(corpus, "hamming distribution");
    if (corpus.count() > 0 && corpus.length() != static_cast<std::size_t>(kStepsPerWeek)) {
        throw DataError("hamming distribution needs week-length sequences");
    }
    std::vector<std::uint64_t> hist(kHammingBins, 0);
    constexpr auto D = static_cast<std::size_t>(kStepsPerDay);
    for (const auto& seq : corpus.sequences) {
        for (std::size_t a = 0; a < kWorkingDays; ++a) {
            for (std::size_t b = a + 1; b < kWorkingDays; ++b) {
                std::size_t diff = 0;
                for (std::size_t t = 0; t < D; ++t) diff += seq[a * D + t] != seq[b * D + t] ? 1 : 0;
                ++hist[diff];
            }
        }
    }
    return hist;
}

double rmse(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeError("rmse: length mismatch");
    if (a.empty()) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s / static_cast<double>(a.size()));
}

MetricsReport compare(const SequenceCorpus& generated, const SequenceCorpus& reference, const CompareOptions& options) {
    if (generated.count() == 0 || reference.count() == 0) throw DataError("compare: both corpora must be non-empty");
    if (generated.length() != reference.length()) throw DataError("compare: sequence lengths differ");
    if (generated.n_states != reference.n_states) throw DataError("compare: alphabets differ");
    const std::size_t L = reference.length(), S = static_cast<std::size_t>(reference.n_states);
    const int cap = std::min<int>(options.duration_cap, static_cast<int>(L));
    const int max_lag = std::min<int>(options.ac_max_lag, static_cast<int>(L) - 1);

    MetricsReport r;
    r.generated_count = generated.count();
    r.reference_count = reference.count();
    r.sequence_length = L;
    r.ac_max_lag = max_lag;
    r.duration_cap = cap;

    const auto sp_g = state_probability_curves(generated), sp_r = state_probability_curves(reference);
    const auto sd_g = duration_histograms(generated, cap), sd_r = duration_histograms(reference, cap);
    const auto na_g = weekly_activity_counts(generated), na_r = weekly_activity_counts(reference);
    const auto C = static_cast<std::size_t>(cap), K = static_cast<std::size_t>(max_lag);

    std::vector<double> ac_g_all, ac_r_all;
    double na_sum = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
        StateMetrics m;
        m.label = s < reference.labels.size() ? reference.labels[s] : std::to_string(s);
        const std::span<const double> pg(sp_g.data() + s * L, L), pr(sp_r.data() + s * L, L);
        m.sp_rmse = 100.0 * rmse(pg, pr);
        const std::span<const double> dg(sd_g.data() + s * C, C), dr(sd_r.data() + s * C, C);
        m.sd_rmse = 100.0 * rmse(dg, dr);
        m.na_abs_diff = std::abs(na_g[s] - na_r[s]);
        na_sum += m.na_abs_diff;

        const StateCode code = static_cast<StateCode>(s);
        auto curve = [&](const SequenceCorpus& c) -> std::vector<double> {
            try {
                return state_autocorrelation(c, std::span<const StateCode>(&code, 1), max_lag).mean;
            } catch (const DataError&) {
                return {};
            }
        };
        auto ac_g = curve(generated), ac_r = curve(reference);
        if (!ac_g.empty() || !ac_r.empty()) {
            if (ac_g.empty()) ac_g.assign(K, 0.0);
            if (ac_r.empty()) ac_r.assign(K, 0.0);
            m.ac_rmse = rmse(ac_g, ac_r);
            ac_g_all.insert(ac_g_all.end(), ac_g.begin(), ac_g.end());
            ac_r_all.insert(ac_r_all.end(), ac_r.begin(), ac_r.end());
        }
        r.per_state.push_back(std::move(m));
    }
    r.sp_rmse = 100.0 * rmse(sp_g, sp_r);
    r.sd_rmse = 100.0 * rmse(sd_g, sd_r);
    r.ac_rmse = rmse(ac_g_all, ac_r_all);
    r.na_mae = na_sum / static_cast<double>(S);

    if (options.hamming) {
        if (generated.count() != reference.count()) {
            throw DataError("compare: hamming metric needs equal person counts (" + std::to_string(generated.count()) +
                            " vs " + std::to_string(reference.count()) + "); resample first");
        }
        const auto hg = hamming_distribution(generated), hr = hamming_distribution(reference);
        double s = 0.0;
        for (std::size_t b = 0; b < hg.size(); ++b) {
            s += std::abs(static_cast<double>(hg[b]) - static_cast<double>(hr[b]));
        }
        r.hd_mae = s / static_cast<double>(hg.size());
    }
    return r;
}

SequenceCorpus resample(const SequenceCorpus& corpus, std::size_t n, std::uint64_t seed) {
    if (corpus.count() == 0) throw DataError("resample: empty corpus");
    SequenceCorpus out;
    out.n_states = corpus.n_states;
    out.labels = corpus.labels;
    Rng rng = make_rng(seed, 0x5e5a);
    std::uniform_int_distribution<std::size_t> pick(0, corpus.count() - 1);
    out.sequences.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.sequences.push_back(corpus.sequences[pick(rng)]);
    return out;
}

SequenceCorpus inject_noise(const SequenceCorpus& corpus, double rate, std::uint64_t seed) {
    if (!(rate >= 0.0 && rate <= 1.0)) throw ConfigError("noise rate must be in [0, 1]");
    SequenceCorpus out = corpus;
    Rng rng = make_rng(seed, 0x4015e);
    std::uniform_int_distribution<int> state(0, corpus.n_states - 1);
    for (auto& seq : out.sequences) {
        for (auto& c : seq) {
            if (uniform01(rng) < rate) c = static_cast<StateCode>(state(rng));
        }
    }
    return out;
}

}  // namespace schedsynth
