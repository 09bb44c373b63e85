// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <CLI11.hpp>
#include <boost/math/distributions/chi_squared.hpp>

#include <malloc.h>

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "fixtures.hpp"
#include "gradient_cases.hpp"
#include "oracle.hpp"
#include "schedsynth/checkpoint.hpp"
#include "schedsynth/corpus_io.hpp"
#include "schedsynth/generator.hpp"
#include "schedsynth/imputer.hpp"
#include "schedsynth/markov.hpp"
#include "schedsynth/metrics.hpp"
#include "schedsynth/report_io.hpp"
#include "schedsynth/synthetic.hpp"

using namespace schedsynth;

namespace {

constexpr int kGenVocab = kBosToken + 1;

struct Outcome {
    bool pass = true;
    std::string detail;
};

struct Options {
    int threads = 1;
    int persons = 1000;
    int max_epochs = 30;
    std::uint64_t seed = 1;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int precision = 4) {
    std::ostringstream s;
    s << std::setprecision(precision) << v;
    return s.str();
}

bool rows_equal(const Tensor& a, const Tensor& b, std::size_t rows) {
    const std::size_t c = a.cols();
    return std::equal(a.data().begin(), a.data().begin() + static_cast<std::ptrdiff_t>(rows * c), b.data().begin());
}

std::vector<PersonAttributes> attributes_of(const WeekCorpus& c) {
    std::vector<PersonAttributes> out;
    for (const auto& w : c.schedules) out.push_back(w.attributes);
    return out;
}

WeekCorpus subset(const WeekCorpus& c, const std::vector<std::string>& ids) {
    const std::set<std::string> keep(ids.begin(), ids.end());
    WeekCorpus out;
    out.alphabet = c.alphabet;
    for (const auto& w : c.schedules)
        if (keep.count(w.attributes.person_id)) out.schedules.push_back(w);
    return out;
}

WeekCorpus with_alphabet(const StateAlphabet& a, std::vector<WeeklySchedule> weeks) {
    WeekCorpus out;
    out.alphabet = a;
    out.schedules = std::move(weeks);
    return out;
}

template <typename T>
std::string bytes_of(const T& thing) {
    std::ostringstream s;
    if constexpr (std::is_same_v<T, WeekCorpus> || std::is_same_v<T, DiaryCorpus>)
        write_corpus(s, thing);
    else
        save_checkpoint(s, thing);
    return s.str();
}

// 1. finite-difference gradients
Outcome gradients() {
    const auto start = Clock::now();
    double worst = 0.0;
    std::string worst_name;
    int cases = 0;
    auto note = [&](const gradcheck::Case& c) {
        ++cases;
        if (c.rel_error >= worst) {
            worst = c.rel_error;
            worst_name = c.name;
        }
    };
    for (std::uint64_t seed = 1; seed <= 4; ++seed)
        for (const auto& c : gradcheck::primitive_cases(seed)) note(c);
    for (auto norm : {NormPlacement::post, NormPlacement::pre}) note(gradcheck::encoder_case(norm));
    const double elapsed = seconds_since(start);
    Outcome o;
    o.pass = cases >= 50 && worst < 1e-4 && elapsed < 120.0;
    o.detail = std::to_string(cases) + " cases, max rel err " + fmt(worst, 3) + " (" + worst_name + "), " +
               fmt(elapsed, 3) + " s";
    return o;
}

// 2. masks do not leak
Outcome leakage() {
    int causal_ok = 0, imputation_ok = 0;
    for (std::uint64_t i = 1; i <= 20; ++i) {
        Rng rng = make_rng(2024, i);
        std::uniform_int_distribution<int> pick(0, 1);
        auto cfg = fixtures::tiny_config(1 + pick(rng), pick(rng) ? 16 : 8, pick(rng) ? 4 : 2);
        cfg.encoder.norm = pick(rng) ? NormPlacement::post : NormPlacement::pre;

        // causal: perturb every token after t
        const SequenceModel gen(cfg, kGenVocab, kMobilityStates, i);
        const std::size_t L = 80;
        const auto in = fixtures::random_input(L, kGenVocab, rng);
        const auto mask = lookahead_mask(L);
        const Tensor base = gen.logits(in, mask);
        const std::size_t t = std::uniform_int_distribution<std::size_t>(0, L - 2)(rng);
        auto changed = in;
        std::uniform_int_distribution<int> bump(1, kGenVocab - 1);
        for (std::size_t j = t + 1; j < L; ++j) changed.tokens[j] = (changed.tokens[j] + bump(rng)) % kGenVocab;
        causal_ok += rows_equal(base, gen.logits(changed, mask), t + 1);

        // imputation: permute the activity labels of at-home steps after t
        const ImputerModel imp = make_imputer(cfg, i);
        DiarySample d;
        d.attributes = fixtures::attrs();
        std::uniform_int_distribution<int> act(0, kActivityStates - 1), away(kActivityStates, kActivityStates + 4),
            coin(0, 3);
        for (int day : {0, 2, 6}) {
            DiaryDay dd{day, {}};
            for (int s = 0; s < kStepsPerDay; ++s)
                dd.states.push_back(static_cast<StateCode>(coin(rng) == 0 ? away(rng) : act(rng)));
            d.days.push_back(dd);
        }
        const auto ex = imputer_example(d, cfg.position_index);
        const Tensor ibase = imp.network.logits(ex.input, mask_for(ex));
        const std::size_t q = std::uniform_int_distribution<std::size_t>(0, ex.input.length() - 2)(rng);
        std::vector<StateCode*> later;
        std::size_t pos = 0;
        for (auto& day : d.days)
            for (auto& c : day.states) {
                if (pos > q && c < kActivityStates) later.push_back(&c);
                ++pos;
            }
        std::vector<StateCode> values;
        for (auto* c : later) values.push_back(*c);
        std::shuffle(values.begin(), values.end(), rng);
        for (std::size_t j = 0; j < later.size(); ++j) *later[j] = values[j];
        const auto permuted = imputer_example(d, cfg.position_index);
        imputation_ok += rows_equal(ibase, imp.network.logits(permuted.input, mask_for(permuted)), q + 1);
    }
    Outcome o;
    o.pass = causal_ok == 20 && imputation_ok == 20;
    o.detail = "causal " + std::to_string(causal_ok) + "/20, imputation " + std::to_string(imputation_ok) +
               "/20 bit-identical";
    return o;
}

// 3. Markov counts and sampled marginals
Outcome markov(const Options& opt) {
    MarkovOptions exact;
    exact.alpha = 0.0;
    exact.stratify = false;
    std::size_t mismatches = 0, checked = 0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto toy = make_synthetic_corpus(SyntheticSpec::defaults(), 20, seed).weeks;
        const auto m = fit_markov(toy, exact);
        for (int t = 0; t < kStepsPerWeek; ++t) {
            std::vector<double> counts(36, 0.0), rows(6, 0.0);
            for (const auto& w : toy.schedules) {
                const int a = w.states[static_cast<std::size_t>(t)];
                const int b = w.states[static_cast<std::size_t>((t + 1) % kStepsPerWeek)];
                counts[static_cast<std::size_t>(a * 6 + b)] += 1;
                rows[static_cast<std::size_t>(a)] += 1;
            }
            for (int a = 0; a < 6; ++a)
                for (int b = 0; b < 6; ++b) {
                    const auto ra = rows[static_cast<std::size_t>(a)];
                    const double expected = ra > 0 ? counts[static_cast<std::size_t>(a * 6 + b)] / ra : 1.0 / 6.0;
                    mismatches += m.pooled.p(t, a, b) != expected;
                    ++checked;
                }
        }
    }

    const auto corpus = make_synthetic_corpus(SyntheticSpec::defaults(), opt.persons, opt.seed).weeks;
    const auto m = fit_markov(corpus, exact);
    const auto sampled = sample_markov(m, 50000, opt.seed);
    const auto p_model = state_probability_curves(as_sequences(with_alphabet(corpus.alphabet, sampled)));
    const auto p_corpus = state_probability_curves(as_sequences(corpus));
    double worst = 0.0;
    for (std::size_t i = 0; i < p_model.size(); ++i) worst = std::max(worst, std::abs(p_model[i] - p_corpus[i]));
    Outcome o;
    o.pass = mismatches == 0 && worst < 1e-2;
    o.detail = std::to_string(mismatches) + "/" + std::to_string(checked) +
               " transition probabilities differ from hand counts; max |sp diff| over 50000 weeks " + fmt(worst, 3);
    return o;
}

// 4. metrics against brute force
Outcome metrics() {
    auto toy = [](std::uint64_t seed) {
        Rng rng(seed);
        std::uniform_int_distribution<int> start(30, 60), len(10, 50), st(1, 5), coin(0, 9);
        SequenceCorpus c;
        c.n_states = 6;
        for (int s = 0; s < 6; ++s) c.labels.push_back("s" + std::to_string(s));
        for (int p = 0; p < 3; ++p) {
            std::vector<StateCode> q(kStepsPerWeek, 0);
            for (int d = 0; d < 7; ++d) {
                const int s = start(rng), e = s + len(rng), code = st(rng);
                for (int t = s; t < e; ++t) q[static_cast<std::size_t>(d * 144 + t)] = static_cast<StateCode>(code);
            }
            for (auto& v : q)
                if (coin(rng) == 0) v = static_cast<StateCode>(st(rng) - 1);
            c.sequences.push_back(q);
        }
        return c;
    };
    auto plain = [](const SequenceCorpus& c) {
        oracle::Corpus out;
        for (const auto& q : c.sequences) out.emplace_back(q.begin(), q.end());
        return out;
    };
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); };
    int oracle_ok = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto g = toy(seed), r = toy(seed + 50);
        const auto rep = compare(g, r);
        const auto og = plain(g), orf = plain(r);
        const auto nag = oracle::na(og, 6), nar = oracle::na(orf, 6);
        double na = 0.0;
        for (std::size_t s = 0; s < 6; ++s) na += std::abs(nag[s] - nar[s]);
        oracle_ok += close(rep.sp_rmse, 100 * oracle::rmse(oracle::sp(og, 6), oracle::sp(orf, 6))) &&
                     close(rep.sd_rmse, 100 * oracle::rmse(oracle::sd(og, 6, kDefaultDurationCap),
                                                           oracle::sd(orf, 6, kDefaultDurationCap))) &&
                     close(rep.ac_rmse, oracle::ac_rmse(og, orf, 6, kDefaultAcMaxLag)) && close(rep.na_mae, na / 6) &&
                     rep.hd_mae && close(*rep.hd_mae, oracle::hd_mae(og, orf));
    }

    const auto ref = as_sequences(make_synthetic_corpus(SyntheticSpec::defaults(), 200, 5).weeks);
    const auto self = compare(ref, ref);
    const bool zero = self.sp_rmse == 0 && self.sd_rmse == 0 && self.ac_rmse == 0 && self.na_mae == 0 && *self.hd_mae == 0;
    std::vector<MetricsReport> noisy;
    for (double eps : {0.01, 0.05, 0.1}) noisy.push_back(compare(inject_noise(ref, eps, 8), ref));
    bool monotone = self.sp_rmse < noisy[0].sp_rmse;
    for (std::size_t i = 1; i < noisy.size(); ++i) {
        const auto &a = noisy[i - 1], &b = noisy[i];
        monotone = monotone && b.sp_rmse > a.sp_rmse && b.sd_rmse > a.sd_rmse && b.ac_rmse > a.ac_rmse &&
                   b.na_mae > a.na_mae && *b.hd_mae > *a.hd_mae;
    }
    Outcome o;
    o.pass = oracle_ok == 5 && zero && monotone;
    o.detail = "oracle " + std::to_string(oracle_ok) + "/5 toy corpora, self-comparison " + (zero ? "zero" : "NONZERO") +
               ", noise ordering " + (monotone ? "monotone" : "NOT monotone");
    return o;
}

// Local maximum within 144 +/- 3; value 0 when none exists.
std::pair<int, double> daily_peak(const std::vector<double>& curve) {
    std::pair<int, double> best{0, 0.0};
    for (int lag = 141; lag <= 147; ++lag) {
        const auto i = static_cast<std::size_t>(lag - 1);
        if (curve[i] >= curve[i - 1] && curve[i] >= curve[i + 1] && (best.first == 0 || curve[i] > best.second))
            best = {lag, curve[i]};
    }
    return best;
}

// 5. attention vs Markov on the habit corpus
Outcome end_to_end(const Options& opt) {
    const auto start = Clock::now();
    SyntheticSpec spec = SyntheticSpec::defaults();
    spec.sigma = 6.0;
    const auto corpus = make_synthetic_corpus(spec, opt.persons, opt.seed).weeks;
    const SplitPlan split = build_split(person_ids(corpus), opt.seed);

    ModelConfig cfg;
    cfg.encoder.layers = 2;
    cfg.encoder.d_model = 32;
    cfg.encoder.heads = 4;
    cfg.encoder.d_ff = 128;
    cfg.learning_rate = 1e-3;
    cfg.batch_size = 32;
    cfg.max_epochs = opt.max_epochs;
    const auto trained = train_generator(corpus, split, 0, cfg, opt.seed,
                                         [&](const EpochRecord& r) {
                                             std::cerr << "  epoch " << r.epoch << " val_loss " << fmt(r.val_loss, 5)
                                                       << " val_acc " << fmt(r.val_accuracy, 5) << " ("
                                                       << fmt(seconds_since(start) / 60, 3) << " min)\n";
                                             return true;
                                         },
                                         opt.threads);
    // unsmoothed so the chain reproduces the training marginals; default smoothing is reported alongside
    MarkovOptions exact;
    exact.alpha = 0.0;
    const auto markov_train = subset(corpus, split.training_ids(0));
    const auto markov_model = fit_markov(markov_train, exact);
    const auto smoothed_model = fit_markov(markov_train);

    const auto attrs = attributes_of(corpus);
    const auto attention = with_alphabet(corpus.alphabet, generate_for(trained.model, attrs, derive_seed(opt.seed, 5), 1.0,
                                                                       opt.threads));
    const auto chain = with_alphabet(corpus.alphabet, sample_markov_for(markov_model, attrs, derive_seed(opt.seed, 6)));
    const auto ref = as_sequences(corpus);
    const auto ra = compare(as_sequences(attention), ref), rm = compare(as_sequences(chain), ref);
    const auto rs = compare(
        as_sequences(with_alphabet(corpus.alphabet, sample_markov_for(smoothed_model, attrs, derive_seed(opt.seed, 6)))),
        ref);

    std::vector<StateCode> away;
    for (StateCode s = 1; s < kMobilityStates; ++s) away.push_back(s);
    const auto ac_ref = state_autocorrelation(ref, away).mean;
    const auto ac_att = state_autocorrelation(as_sequences(attention), away).mean;
    const auto ac_mk = state_autocorrelation(as_sequences(chain), away).mean;
    const double away_att = rmse(ac_att, ac_ref), away_mk = rmse(ac_mk, ac_ref);
    const auto [peak_lag, peak] = daily_peak(ac_att);
    const double ref_at_peak = peak_lag ? ac_ref[static_cast<std::size_t>(peak_lag - 1)] : 0.0;

    const bool a = *ra.hd_mae < 0.5 * *rm.hd_mae;
    const bool b = away_att < away_mk && peak_lag != 0 && std::abs(peak - ref_at_peak) <= 0.15;
    const bool c = rm.sp_rmse <= ra.sp_rmse + 0.5;
    const double minutes = seconds_since(start) / 60.0;
    const unsigned cores = std::thread::hardware_concurrency();
    const bool budget_measurable = cores >= 4 && opt.threads >= 4;

    Outcome o;
    o.pass = a && b && c && (!budget_measurable || minutes <= 30.0);
    std::ostringstream d;
    d << "(a) hd_mae " << fmt(*ra.hd_mae) << " vs markov " << fmt(*rm.hd_mae) << (a ? " ok" : " FAIL") << "; (b) away ac_rmse "
      << fmt(away_att) << " vs markov " << fmt(away_mk) << ", peak lag " << peak_lag << " value " << fmt(peak)
      << " vs corpus " << fmt(ref_at_peak) << (b ? " ok" : " FAIL") << "; (c) sp_rmse markov " << fmt(rm.sp_rmse)
      << " vs attention " << fmt(ra.sp_rmse) << (c ? " ok" : " FAIL") << "; best epoch " << trained.report.best_epoch << "/"
      << trained.report.epochs.size() << ", runtime " << fmt(minutes, 3) << " min on " << opt.threads << " thread(s)"
      << "; markov alpha " << fmt(kDefaultMarkovAlpha) << ": hd_mae " << fmt(*rs.hd_mae) << ", sp_rmse " << fmt(rs.sp_rmse);
    if (!budget_measurable) d << " (30 min 4-core budget needs >= 4 cores and --threads 4)";
    o.detail = d.str();
    return o;
}

// 6. imputer learns time-deterministic activities; initial losses
Outcome imputer(const Options& opt) {
    const auto diaries = make_time_deterministic_diaries(SyntheticSpec::defaults(), 200, opt.seed);
    const SplitPlan split = build_split(person_ids(diaries), opt.seed);
    ModelConfig cfg;
    cfg.encoder.layers = 2;
    cfg.encoder.d_model = 32;
    cfg.encoder.heads = 4;
    cfg.encoder.d_ff = 64;
    cfg.learning_rate = 3e-3;
    cfg.batch_size = 16;
    cfg.max_epochs = 20;
    cfg.patience = 20;
    // stop once the target is met; the criterion only asks for it within 20 epochs
    const auto trained = train_imputer(
        diaries, split, 0, cfg, opt.seed, [](const EpochRecord& e) { return e.val_accuracy < 0.99; }, opt.threads);
    double best = 0.0;
    int reached = 0;
    for (const auto& e : trained.report.epochs) {
        best = std::max(best, e.val_accuracy);
        if (!reached && e.val_accuracy >= 0.99) reached = e.epoch;
    }
    const auto weeks = make_synthetic_corpus(SyntheticSpec::defaults(), 50, opt.seed).weeks;
    const double gen_initial = generator_loss(make_generator(cfg, opt.seed), weeks.schedules).loss;
    const double imp_initial = trained.report.initial_val_loss;
    const bool init_ok = std::abs(gen_initial - std::log(6.0)) < 0.2 && std::abs(imp_initial - std::log(10.0)) < 0.2;
    Outcome o;
    o.pass = reached != 0 && init_ok;
    o.detail = "best val acc " + fmt(best, 5) + (reached ? " (>= 0.99 at epoch " + std::to_string(reached) + ")" : "") +
               "; initial loss generator " + fmt(gen_initial) + " (ln 6 = " + fmt(std::log(6.0)) + "), imputer " +
               fmt(imp_initial) + " (ln 10 = " + fmt(std::log(10.0)) + ")";
    return o;
}

// 7. categorical sampling
Outcome sampling() {
    auto g = make_generator(fixtures::tiny_config(1, 8, 2), 10);
    for (const auto& [name, t] : g.network.params().items())
        if (name.rfind("head", 0) == 0) {
            auto data = const_cast<Tensor&>(t).mutable_data();
            for (std::size_t i = 0; i < data.size(); ++i) data[i] = 0.3 * std::sin(1.0 + static_cast<double>(i));
        }
    g.trained = true;
    const auto w = fixtures::block_week(40, 90, 2);
    const std::vector<StateCode> history(w.states.begin(), w.states.begin() + 60);
    const auto logits = next_state_logits(g, fixtures::attrs(), history);
    double max_p = 0.0;
    double min_pvalue = 1.0;
    for (double temperature : {1.0, 0.7}) {
        std::vector<double> p(logits.size());
        const double top = *std::max_element(logits.begin(), logits.end());
        double z = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k) z += p[k] = std::exp((logits[k] - top) / temperature);
        for (auto& v : p) v /= z;
        for (double v : p) max_p = std::max(max_p, v);
        Rng rng = make_rng(77, static_cast<std::uint64_t>(temperature * 10));
        const int draws = 10000;
        std::vector<double> counts(p.size(), 0.0);
        for (int i = 0; i < draws; ++i) counts[static_cast<std::size_t>(sample_logits(logits, temperature, rng))] += 1;
        double chi2 = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k) chi2 += std::pow(counts[k] - draws * p[k], 2) / (draws * p[k]);
        const auto dof = static_cast<double>(p.size() - 1);
        min_pvalue = std::min(min_pvalue,
                              boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), chi2)));
    }
    // greedy generation picks the argmax at every step
    const auto greedy = generate(g, fixtures::attrs(), 1, 3, 0.0).front();
    int argmax_ok = 0;
    const std::vector<std::size_t> steps{0, 1, 2, 59, 60, 143, 144, 500, 1007};
    for (std::size_t t : steps) {
        const std::vector<StateCode> h(greedy.states.begin(), greedy.states.begin() + static_cast<std::ptrdiff_t>(t));
        argmax_ok += greedy.states[t] == argmax(next_state_logits(g, fixtures::attrs(), h));
    }
    Rng rng(1);
    bool direct = true;
    for (int i = 0; i < 100; ++i) direct = direct && sample_logits(logits, 0.0, rng) == argmax(logits);
    Outcome o;
    o.pass = min_pvalue > 0.01 && argmax_ok == static_cast<int>(steps.size()) && direct;
    o.detail = "min chi2 p-value " + fmt(min_pvalue, 3) + " over 10000 draws at T = 1, 0.7 (max class p " + fmt(max_p, 3) +
               "); temperature 0 matches argmax at " + std::to_string(argmax_ok) + "/" + std::to_string(steps.size()) +
               " generated steps";
    return o;
}

// 8. reproducibility and checkpoint round trips
Outcome reproducibility(const Options& opt) {
    std::vector<std::string> failures;
    auto expect = [&](bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    };
    auto run = [&] {
        const auto corpus = make_synthetic_corpus(SyntheticSpec::defaults(), 60, opt.seed);
        const SplitPlan split = build_split(person_ids(corpus.weeks), opt.seed);
        auto cfg = fixtures::tiny_config(1, 8, 2);
        cfg.max_epochs = 2;
        const auto gen = train_generator(corpus.weeks, split, 0, cfg, opt.seed, {}, 1).model;
        const auto imp = train_imputer(corpus.diaries, build_split(person_ids(corpus.diaries), opt.seed), 0, cfg,
                                       opt.seed, {}, 1)
                             .model;
        const auto mk = fit_markov(corpus.weeks);
        const auto attrs = attributes_of(corpus.weeks);
        const auto generated = with_alphabet(corpus.weeks.alphabet, generate_for(gen, attrs, 9, 1.0, 1));
        const auto sampled = with_alphabet(corpus.weeks.alphabet, sample_markov_for(mk, attrs, 9));
        const auto filled = with_alphabet(StateAlphabet::activity_default(), impute_all(imp, corpus.weeks.schedules, 9, 1.0, 1));
        const auto report = to_json(compare(as_sequences(generated), as_sequences(corpus.weeks))).dump();
        return std::vector<std::string>{bytes_of(corpus.weeks), bytes_of(corpus.diaries), bytes_of(gen), bytes_of(imp),
                                        bytes_of(mk),           bytes_of(generated),      bytes_of(sampled),
                                        bytes_of(filled),       report};
    };
    const auto first = run(), second = run();
    const std::vector<std::string> names{"week corpus",   "diary corpus",     "generator checkpoint",
                                         "imputer checkpoint", "markov checkpoint", "generated corpus",
                                         "markov corpus", "imputed corpus",   "metrics report"};
    for (std::size_t i = 0; i < names.size(); ++i) expect(first[i] == second[i], names[i] + " differs");

    // round trips on a probe batch
    std::istringstream gs(first[2]), is(first[3]), ms(first[4]);
    const auto gen = load_generator(gs);
    const auto imp = load_imputer(is);
    const auto mk = load_markov(ms);
    expect(bytes_of(gen) == first[2] && bytes_of(imp) == first[3] && bytes_of(mk) == first[4], "re-save differs");
    const auto probe = make_synthetic_corpus(SyntheticSpec::defaults(), 4, opt.seed + 1);
    {
        std::istringstream again(first[2]);
        const auto reloaded = load_generator(again);
        for (const auto& w : probe.weeks.schedules) {
            const auto ex = generator_example(w, gen.network.config().position_index);
            expect(rows_equal(gen.network.logits(ex.input, mask_for(ex)),
                              reloaded.network.logits(ex.input, mask_for(ex)), ex.input.length()),
                   "generator logits differ after reload");
        }
        std::istringstream iagain(first[3]);
        const auto ireloaded = load_imputer(iagain);
        for (const auto& d : probe.diaries.samples) {
            const auto ex = imputer_example(d, imp.network.config().position_index);
            expect(rows_equal(imp.network.logits(ex.input, mask_for(ex)),
                              ireloaded.network.logits(ex.input, mask_for(ex)), ex.input.length()),
                   "imputer logits differ after reload");
        }
        expect(generate_for(gen, attributes_of(probe.weeks), 3, 1.0, 1) ==
                   generate_for(reloaded, attributes_of(probe.weeks), 3, 1.0, 1),
               "generated weeks differ after reload");
        std::istringstream magain(first[4]);
        expect(sample_markov(mk, 5, 3) == sample_markov(load_markov(magain), 5, 3), "markov samples differ");
    }
    Outcome o;
    o.pass = failures.empty();
    o.detail = failures.empty() ? "corpora, checkpoints, generated corpora and report bit-identical; round trips "
                                  "output-equivalent on probe batches"
                                : failures.front() + (failures.size() > 1 ? " (+" + std::to_string(failures.size() - 1) + " more)" : "");
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    mallopt(M_MMAP_THRESHOLD, 32 << 20);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
    CLI::App app{"Runs the acceptance criteria and prints one PASS/FAIL line each."};
    Options opt;
    opt.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    std::vector<int> only;
    app.add_option("--only", only, "Criteria to run (default: all)")->check(CLI::Range(1, 8));
    app.add_option("--threads", opt.threads, "Training and sampling threads")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--persons", opt.persons, "Habit corpus size for criteria 3 and 5")->capture_default_str()->check(CLI::Range(20, 100000));
    app.add_option("--max-epochs", opt.max_epochs, "Epoch cap for criterion 5")->capture_default_str()->check(CLI::Range(1, 30));
    app.add_option("--seed", opt.seed, "Seed")->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
        {1, gradients},
        {2, leakage},
        {3, [&] { return markov(opt); }},
        {4, metrics},
        {5, [&] { return end_to_end(opt); }},
        {6, [&] { return imputer(opt); }},
        {7, sampling},
        {8, [&] { return reproducibility(opt); }},
    };
    int failed = 0;
    for (const auto& [id, run] : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
        const auto start = Clock::now();
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << "  ["
                  << fmt(seconds_since(start), 3) << " s]" << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
