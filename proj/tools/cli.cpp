#include "cli.hpp"

#include <zlib.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "schedsynth/checkpoint.hpp"
#include "schedsynth/corpus_io.hpp"
#include "schedsynth/errors.hpp"
#include "schedsynth/generator.hpp"
#include "schedsynth/imputer.hpp"
#include "schedsynth/markov.hpp"
#include "schedsynth/metrics.hpp"
#include "schedsynth/report_io.hpp"
#include "schedsynth/rng.hpp"
#include "schedsynth/synthetic.hpp"

namespace schedsynth::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string hex32(std::uint32_t v) {
    std::ostringstream s;
    s << std::hex << std::setw(8) << std::setfill('0') << v;
    return s.str();
}

std::uint32_t crc_of_string(const std::string& text) {
    return static_cast<std::uint32_t>(
        crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(text.data()), static_cast<uInt>(text.size())));
}

Json file_fingerprint(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    uLong crc = crc32(0L, Z_NULL, 0);
    std::uint64_t bytes = 0;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        crc = crc32(crc, reinterpret_cast<const Bytef*>(buf), static_cast<uInt>(in.gcount()));
        bytes += static_cast<std::uint64_t>(in.gcount());
    }
    return {{"path", path.string()}, {"bytes", bytes}, {"crc32", hex32(static_cast<std::uint32_t>(crc))}};
}

std::string utc_stamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream s;
    s << std::put_time(&tm, "%Y%m%d-%H%M%S");
    return s.str();
}

std::string file_label(const std::string& label) {
    std::string out;
    for (char c : label) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
    return out;
}

// Options shared by all commands.
struct Common {
    std::string out;
    std::uint64_t seed = 1;
    int threads = 1;
};

struct ModelFlags {
    ModelConfig config;
    std::string norm = "post";
    std::string position = "time_of_day";
    std::string config_json;

    ModelConfig resolve() const {
        ModelConfig c = config;
        c.encoder.norm = norm_placement_from_string(norm);
        c.position_index = position_index_from_string(position);
        if (!config_json.empty()) c = model_config_from_json(read_json(config_json), c);
        c.validate();
        return c;
    }
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--out", c.out, "Output directory (default: $SCHEDSYNTH_RUNS or runs/, then <timestamp>-<hash>)");
    sub->add_option("--seed", c.seed, "Random seed")->capture_default_str();
    sub->add_option("--threads", c.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
}

void add_model(CLI::App* sub, ModelFlags& m) {
    auto& c = m.config;
    sub->add_option("--layers", c.encoder.layers, "Encoder layers")->capture_default_str();
    sub->add_option("--d-model", c.encoder.d_model, "Model width")->capture_default_str();
    sub->add_option("--heads", c.encoder.heads, "Attention heads")->capture_default_str();
    sub->add_option("--d-ff", c.encoder.d_ff, "Feed-forward width")->capture_default_str();
    sub->add_option("--dropout", c.encoder.dropout, "Dropout rate")->capture_default_str();
    sub->add_option("--max-len", c.encoder.max_len, "Positional table rows")->capture_default_str();
    sub->add_option("--norm", m.norm, "Layer-norm placement: post|pre")->capture_default_str();
    sub->add_option("--position-index", m.position, "Positional row: time_of_day|sequence")->capture_default_str();
    sub->add_option("--lr", c.learning_rate, "Adam learning rate")->capture_default_str();
    sub->add_option("--batch-size", c.batch_size, "Sequences per batch")->capture_default_str();
    sub->add_option("--max-epochs", c.max_epochs, "Epoch cap")->capture_default_str();
    sub->add_option("--patience", c.patience, "Early-stopping patience")->capture_default_str();
    sub->add_option("--model-config", m.config_json, "JSON model config applied over the flags");
}

class Run {
public:
    Run(CLI::App* sub, const Common& common, std::ostream& out)
        : sub_(sub), out_(out), start_(std::chrono::steady_clock::now()) {
        std::string resolved;
        std::istringstream lines(sub->config_to_str(true, false));
        for (std::string line; std::getline(lines, line);) {
            if (line.rfind("out=", 0) != 0 && line.rfind("threads=", 0) != 0) resolved += line + "\n";
        }
        resolved_ = resolved;
        hash_ = hex32(crc_of_string(sub->get_name() + "\n" + resolved));
        if (!common.out.empty()) {
            dir_ = common.out;
        } else {
            const char* root = std::getenv("SCHEDSYNTH_RUNS");
            dir_ = fs::path(root && *root ? root : "runs") / (utc_stamp() + "-" + hash_);
        }
        fs::create_directories(dir_);
        manifest_["tool"] = "schedsynth";
        manifest_["version"] = kVersion;
        manifest_["command"] = sub->get_name();
        manifest_["config_hash"] = hash_;
        manifest_["seeds"] = Json::object();
        manifest_["seeds"]["seed"] = common.seed;
        manifest_["inputs"] = Json::array();
        manifest_["outputs"] = Json::array();
    }

    const fs::path& dir() const { return dir_; }
    fs::path path(const std::string& name) { return dir_ / name; }

    void input(const fs::path& p) { manifest_["inputs"].push_back(file_fingerprint(p)); }
    void seed(const std::string& name, std::uint64_t v) { manifest_["seeds"][name] = v; }
    void output(const std::string& name) { manifest_["outputs"].push_back(name); }
    Json& extra() { return manifest_; }

    void finish() {
        {
            std::ofstream cfg(dir_ / "config.toml", std::ios::binary);
            cfg << "# resolved options of '" << sub_->get_name() << "'\n" << resolved_;
        }
        manifest_["wall_time_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        write_json(dir_ / "manifest.json", manifest_);
        out_ << "outputs written to " << dir_.string() << "\n";
    }

private:
    CLI::App* sub_;
    std::ostream& out_;
    std::chrono::steady_clock::time_point start_;
    fs::path dir_;
    std::string resolved_;
    std::string hash_;
    Json manifest_;
};

EpochCallback progress(std::ostream& err, std::mutex* lock = nullptr, std::string prefix = {}) {
    return [&err, lock, prefix](const EpochRecord& r) {
        std::unique_lock<std::mutex> guard;
        if (lock) guard = std::unique_lock<std::mutex>(*lock);
        err << prefix << "epoch " << r.epoch << " train_loss " << format_double(r.train_loss) << " val_loss "
            << format_double(r.val_loss) << " val_acc " << format_double(r.val_accuracy) << "\n";
        return true;
    };
}

SplitPlan split_for_weeks(const WeekCorpus& c, std::uint64_t seed) {
    const auto ids = person_ids(c);
    return build_split(ids, seed);
}

SplitPlan split_for_diaries(const DiaryCorpus& c, std::uint64_t seed) {
    const auto ids = person_ids(c);
    return build_split(ids, seed);
}

template <typename T, typename Id>
std::vector<T> subset(const std::vector<T>& items, const std::vector<std::string>& ids, Id&& id_of) {
    std::vector<T> out;
    for (const auto& item : items) {
        if (std::find(ids.begin(), ids.end(), id_of(item)) != ids.end()) out.push_back(item);
    }
    return out;
}

// Plot-ready curves for a comparison.
void export_curves(Run& run, const SequenceCorpus& gen, const SequenceCorpus& ref, const MetricsReport& report,
                   bool weekly) {
    const fs::path dir = run.path("curves");
    const std::size_t L = ref.length();
    const auto sp_g = state_probability_curves(gen), sp_r = state_probability_curves(ref);
    const auto cap = static_cast<std::size_t>(report.duration_cap);
    const auto sd_g = duration_histograms(gen, report.duration_cap), sd_r = duration_histograms(ref, report.duration_cap);
    std::vector<double> steps(L), bins(cap), lags(static_cast<std::size_t>(report.ac_max_lag));
    for (std::size_t i = 0; i < L; ++i) steps[i] = static_cast<double>(i);
    for (std::size_t i = 0; i < cap; ++i) bins[i] = static_cast<double>(i + 1);
    for (std::size_t i = 0; i < lags.size(); ++i) lags[i] = static_cast<double>(i + 1);

    auto ac_columns = [&](std::span<const StateCode> states) -> std::optional<std::vector<Column>> {
        std::vector<Column> cols{{"lag", lags}};
        for (const auto* c : {&gen, &ref}) {
            const std::string side = c == &gen ? "generated" : "reference";
            try {
                const auto ac = state_autocorrelation(*c, states, report.ac_max_lag);
                cols.push_back({side + "_mean", ac.mean});
                cols.push_back({side + "_q25", ac.q25});
                cols.push_back({side + "_q75", ac.q75});
            } catch (const DataError&) {
                const std::vector<double> zeros(lags.size(), 0.0);
                cols.push_back({side + "_mean", zeros});
                cols.push_back({side + "_q25", zeros});
                cols.push_back({side + "_q75", zeros});
            }
        }
        return cols;
    };

    for (int s = 0; s < ref.n_states; ++s) {
        const auto us = static_cast<std::size_t>(s);
        const std::string name = file_label(ref.labels[us]);
        write_columns(dir / ("sp_" + name + ".csv"),
                      {{"step", steps},
                       {"generated", {sp_g.begin() + static_cast<long>(us * L), sp_g.begin() + static_cast<long>((us + 1) * L)}},
                       {"reference", {sp_r.begin() + static_cast<long>(us * L), sp_r.begin() + static_cast<long>((us + 1) * L)}}});
        write_columns(dir / ("sd_" + name + ".csv"),
                      {{"duration", bins},
                       {"generated", {sd_g.begin() + static_cast<long>(us * cap), sd_g.begin() + static_cast<long>((us + 1) * cap)}},
                       {"reference", {sd_r.begin() + static_cast<long>(us * cap), sd_r.begin() + static_cast<long>((us + 1) * cap)}}});
        const StateCode code = static_cast<StateCode>(s);
        write_columns(dir / ("ac_" + name + ".csv"), *ac_columns(std::span<const StateCode>(&code, 1)));
    }
    if (weekly) {
        std::vector<StateCode> away;
        for (int s = 1; s < ref.n_states; ++s) away.push_back(static_cast<StateCode>(s));
        write_columns(dir / "ac_away.csv", *ac_columns(away));
        if (gen.count() == ref.count()) {
            const auto hg = hamming_distribution(gen), hr = hamming_distribution(ref);
            std::vector<double> dist(hg.size()), g(hg.size()), r(hr.size());
            for (std::size_t i = 0; i < hg.size(); ++i) {
                dist[i] = static_cast<double>(i);
                g[i] = static_cast<double>(hg[i]);
                r[i] = static_cast<double>(hr[i]);
            }
            write_columns(dir / "hd.csv", {{"distance", dist}, {"generated", g}, {"reference", r}});
        }
    }
    run.output("curves/");
}

void print_report(std::ostream& out, const std::string& name, const MetricsReport& r) {
    out << name << ": sp_rmse " << format_double(r.sp_rmse) << " sd_rmse " << format_double(r.sd_rmse) << " ac_rmse "
        << format_double(r.ac_rmse) << " na_mae " << format_double(r.na_mae);
    if (r.hd_mae) out << " hd_mae " << format_double(*r.hd_mae);
    out << "\n";
}

std::vector<PersonAttributes> attributes_from(const WeekCorpus& corpus, int n, std::uint64_t seed) {
    Rng rng = make_rng(seed, 0xa77);
    std::uniform_int_distribution<std::size_t> pick(0, corpus.schedules.size() - 1);
    std::vector<PersonAttributes> out(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = corpus.schedules[pick(rng)].attributes;
        out[i].person_id = "gen-" + std::to_string(i);
    }
    return out;
}

// Samples n weeks from a generator or markov checkpoint.
std::vector<WeeklySchedule> sample_model(const fs::path& model, const WeekCorpus* attrs_from, int n,
                                         std::uint64_t seed, double temperature, int threads) {
    if (n <= 0) throw ConfigError("--n must be positive");
    const CheckpointKind kind = checkpoint_kind(model);
    if (kind == CheckpointKind::generator) {
        const GeneratorModel g = load_generator(model);
        std::vector<PersonAttributes> attrs;
        if (attrs_from) {
            attrs = attributes_from(*attrs_from, n, seed);
        } else {
            attrs.assign(static_cast<std::size_t>(n), PersonAttributes{});
            for (std::size_t i = 0; i < attrs.size(); ++i) attrs[i].person_id = "gen-" + std::to_string(i);
        }
        return generate_for(g, attrs, derive_seed(seed, 1), temperature, threads);
    }
    if (kind == CheckpointKind::markov) {
        const MarkovModel m = load_markov(model);
        if (attrs_from) return sample_markov_for(m, attributes_from(*attrs_from, n, seed), derive_seed(seed, 1));
        return sample_markov(m, n, derive_seed(seed, 1));
    }
    throw ConfigError("checkpoint " + model.string() + " is an imputer; use impute or evaluate");
}

struct GridRow {
    int layers = 0, d_model = 0, batch = 0;
    double lr = 0.0;
    double loss = 0.0, acc = 0.0;
    int epoch = 0;
    MetricsReport metrics;
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Train, sample and evaluate attention-based schedule generators and activity imputers", "schedsynth"};
    app.set_config("--config", "", "Read options from a TOML/INI file ([command] sections)");
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    // make-corpus
    Common mc_common;
    int mc_persons = 1000;
    double mc_sigma = 6.0, mc_person_sigma = 6.0;
    bool mc_deterministic = false;
    auto* mc = app.add_subcommand("make-corpus", "Write a synthetic habit-structured week corpus and diaries");
    add_common(mc, mc_common);
    mc->add_option("--persons", mc_persons, "Number of persons")->capture_default_str();
    mc->add_option("--sigma", mc_sigma, "Day-to-day shift standard deviation (steps)")->capture_default_str();
    mc->add_option("--person-sigma", mc_person_sigma, "Person-level shift standard deviation (steps)")->capture_default_str();
    mc->add_flag("--deterministic-diaries", mc_deterministic, "Diary activities as a fixed function of time of day");

    // train-gen / train-imp
    Common tg_common, ti_common;
    ModelFlags tg_model, ti_model;
    std::string tg_corpus, ti_corpus;
    int tg_fold = 0, ti_fold = 0;
    std::uint64_t tg_split_seed = 1, ti_split_seed = 1;
    auto* tg = app.add_subcommand("train-gen", "Train the autoregressive week generator");
    add_common(tg, tg_common);
    add_model(tg, tg_model);
    tg->add_option("--corpus", tg_corpus, "Week corpus file")->required();
    tg->add_option("--fold", tg_fold, "Validation fold 0..8")->capture_default_str();
    tg->add_option("--split-seed", tg_split_seed, "Seed of the person-level split")->capture_default_str();
    auto* ti = app.add_subcommand("train-imp", "Train the at-home activity imputer on diaries");
    add_common(ti, ti_common);
    add_model(ti, ti_model);
    ti->add_option("--corpus", ti_corpus, "Diary corpus file")->required();
    ti->add_option("--fold", ti_fold, "Validation fold 0..8")->capture_default_str();
    ti->add_option("--split-seed", ti_split_seed, "Seed of the person-level split")->capture_default_str();

    // generate
    Common ge_common;
    std::string ge_model, ge_attrs;
    int ge_n = 2000;
    double ge_temperature = 1.0;
    auto* ge = app.add_subcommand("generate", "Sample weeks from a generator or markov checkpoint");
    add_common(ge, ge_common);
    ge->add_option("--model", ge_model, "Checkpoint file")->required();
    ge->add_option("--n", ge_n, "Number of weeks")->capture_default_str();
    ge->add_option("--attributes-from", ge_attrs, "Week corpus whose attributes are resampled");
    ge->add_option("--temperature", ge_temperature, "Sampling temperature (0 = argmax)")->capture_default_str();

    // impute
    Common im_common;
    std::string im_model, im_input;
    double im_temperature = 1.0;
    auto* im = app.add_subcommand("impute", "Fill the at-home steps of mobility weeks with activities");
    add_common(im, im_common);
    im->add_option("--model", im_model, "Imputer checkpoint")->required();
    im->add_option("--input", im_input, "Mobility week corpus")->required();
    im->add_option("--temperature", im_temperature, "Sampling temperature (0 = argmax)")->capture_default_str();

    // fit-markov
    Common fm_common;
    std::string fm_corpus;
    MarkovOptions fm_options;
    bool fm_pooled = false;
    auto* fm = app.add_subcommand("fit-markov", "Fit the time-inhomogeneous first-order Markov baseline");
    add_common(fm, fm_common);
    fm->add_option("--corpus", fm_corpus, "Week corpus file")->required();
    fm->add_option("--alpha", fm_options.alpha, "Additive smoothing")->capture_default_str();
    fm->add_option("--min-cell", fm_options.min_cell_persons, "Persons needed for a stratified cell")->capture_default_str();
    fm->add_flag("--pooled", fm_pooled, "Fit a single pooled chain");

    // evaluate
    Common ev_common;
    std::string ev_reference, ev_generated, ev_model;
    int ev_n = 2000;
    double ev_temperature = 1.0;
    auto* ev = app.add_subcommand("evaluate", "Compare generated data with a reference corpus and export curves");
    add_common(ev, ev_common);
    ev->add_option("--reference", ev_reference, "Reference corpus (weeks, or diaries for an imputer)")->required();
    auto* ev_gen_opt = ev->add_option("--generated", ev_generated, "Generated week corpus");
    ev->add_option("--model", ev_model, "Checkpoint to sample from instead")->excludes(ev_gen_opt);
    ev->add_option("--n", ev_n, "Samples when --model is given")->capture_default_str();
    ev->add_option("--temperature", ev_temperature, "Sampling temperature")->capture_default_str();

    // compare
    Common cp_common;
    std::string cp_reference, cp_generator, cp_markov;
    int cp_n = 2000;
    double cp_temperature = 1.0;
    auto* cp = app.add_subcommand("compare", "Attention generator vs Markov baseline on one reference corpus");
    add_common(cp, cp_common);
    cp->add_option("--reference", cp_reference, "Reference week corpus")->required();
    cp->add_option("--generator", cp_generator, "Generator checkpoint")->required();
    cp->add_option("--markov", cp_markov, "Markov checkpoint")->required();
    cp->add_option("--n", cp_n, "Samples per model")->capture_default_str();
    cp->add_option("--temperature", cp_temperature, "Generator sampling temperature")->capture_default_str();

    // grid
    Common gr_common;
    ModelFlags gr_model;
    std::string gr_corpus;
    std::vector<int> gr_layers{1, 4, 8}, gr_dmodel{64, 128}, gr_batch{64, 128, 256};
    std::vector<double> gr_lr{0.001, 0.0005};
    int gr_fold = 0, gr_n = 2000, gr_parallel = 1;
    std::uint64_t gr_split_seed = 1;
    auto* gr = app.add_subcommand("grid", "Hyperparameter sweep over layers, d_model, learning rate and batch size");
    add_common(gr, gr_common);
    add_model(gr, gr_model);
    gr->add_option("--corpus", gr_corpus, "Week corpus (generator) or diary corpus (imputer)")->required();
    gr->add_option("--grid-layers", gr_layers, "Layer counts")->capture_default_str()->delimiter(',');
    gr->add_option("--grid-d-model", gr_dmodel, "Model widths")->capture_default_str()->delimiter(',');
    gr->add_option("--grid-lr", gr_lr, "Learning rates")->capture_default_str()->delimiter(',');
    gr->add_option("--grid-batch", gr_batch, "Batch sizes")->capture_default_str()->delimiter(',');
    gr->add_option("--fold", gr_fold, "Validation fold 0..8")->capture_default_str();
    gr->add_option("--split-seed", gr_split_seed, "Seed of the person-level split")->capture_default_str();
    gr->add_option("--n", gr_n, "Evaluation samples per configuration")->capture_default_str();
    gr->add_option("--parallel", gr_parallel, "Configurations trained concurrently")->capture_default_str()->check(CLI::PositiveNumber);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (mc->parsed()) {
            Run run(mc, mc_common, out);
            SyntheticSpec spec = SyntheticSpec::defaults();
            spec.sigma = mc_sigma;
            spec.person_sigma = mc_person_sigma;
            SyntheticCorpus corpus = make_synthetic_corpus(spec, mc_persons, mc_common.seed);
            if (mc_deterministic) corpus.diaries = make_time_deterministic_diaries(spec, mc_persons, mc_common.seed);
            write_corpus(run.path("weeks.csv"), corpus.weeks);
            write_corpus(run.path("diaries.csv"), corpus.diaries);
            run.output("weeks.csv");
            run.output("diaries.csv");
            out << "wrote " << corpus.weeks.schedules.size() << " weeks and " << corpus.diaries.samples.size()
                << " diaries\n";
            run.finish();
        } else if (tg->parsed() || ti->parsed()) {
            const bool gen = tg->parsed();
            CLI::App* sub = gen ? tg : ti;
            const Common& common = gen ? tg_common : ti_common;
            const ModelConfig config = (gen ? tg_model : ti_model).resolve();
            const std::string& corpus_path = gen ? tg_corpus : ti_corpus;
            const int fold = gen ? tg_fold : ti_fold;
            const std::uint64_t split_seed = gen ? tg_split_seed : ti_split_seed;
            Run run(sub, common, out);
            run.seed("split_seed", split_seed);
            write_json(run.path("model_config.json"), to_json(config));
            run.output("model_config.json");
            Json summary;
            if (gen) {
                const WeekCorpus corpus = read_week_corpus(fs::path(corpus_path));
                run.input(corpus_path);
                const SplitPlan split = split_for_weeks(corpus, split_seed);
                auto trained = train_generator(corpus, split, fold, config, common.seed, progress(err), common.threads);
                save_checkpoint(run.path("generator.ckpt"), trained.model);
                const auto test = subset(corpus.schedules, split.test_ids,
                                         [](const WeeklySchedule& s) { return s.attributes.person_id; });
                summary = to_json(trained.report);
                if (!test.empty()) {
                    const auto t = generator_loss(trained.model, test);
                    summary["test_loss"] = t.loss;
                    summary["test_accuracy"] = t.accuracy;
                }
                write_json(run.path("split.json"), to_json(split));
                run.output("generator.ckpt");
            } else {
                const DiaryCorpus corpus = read_diary_corpus(fs::path(corpus_path));
                run.input(corpus_path);
                const SplitPlan split = split_for_diaries(corpus, split_seed);
                auto trained = train_imputer(corpus, split, fold, config, common.seed, progress(err), common.threads);
                save_checkpoint(run.path("imputer.ckpt"), trained.model);
                const auto test = subset(corpus.samples, split.test_ids,
                                         [](const DiarySample& s) { return s.attributes.person_id; });
                summary = to_json(trained.report);
                if (!test.empty()) {
                    const auto t = imputer_loss(trained.model, test);
                    summary["test_loss"] = t.loss;
                    summary["test_accuracy"] = t.accuracy;
                }
                write_json(run.path("split.json"), to_json(split));
                run.output("imputer.ckpt");
            }
            write_json(run.path("train_report.json"), summary);
            run.output("train_report.json");
            run.output("split.json");
            out << "best epoch " << summary["best_epoch"].get<int>() << "\n";
            run.finish();
        } else if (ge->parsed()) {
            Run run(ge, ge_common, out);
            std::optional<WeekCorpus> attrs;
            if (!ge_attrs.empty()) {
                attrs = read_week_corpus(fs::path(ge_attrs));
                run.input(ge_attrs);
            }
            run.input(ge_model);
            auto weeks = sample_model(ge_model, attrs ? &*attrs : nullptr, ge_n, ge_common.seed, ge_temperature,
                                      ge_common.threads);
            write_corpus(run.path("generated.csv"), WeekCorpus{StateAlphabet::mobility_default(), std::move(weeks)});
            run.output("generated.csv");
            out << "generated " << ge_n << " weeks\n";
            run.finish();
        } else if (im->parsed()) {
            Run run(im, im_common, out);
            const ImputerModel model = load_imputer(fs::path(im_model));
            const WeekCorpus weeks = read_week_corpus(fs::path(im_input), model.mobility);
            run.input(im_model);
            run.input(im_input);
            auto filled = impute_all(model, weeks.schedules, im_common.seed, im_temperature, im_common.threads);
            write_corpus(run.path("imputed.csv"), WeekCorpus{model.activities, std::move(filled)});
            run.output("imputed.csv");
            out << "imputed " << weeks.schedules.size() << " weeks\n";
            run.finish();
        } else if (fm->parsed()) {
            Run run(fm, fm_common, out);
            const WeekCorpus corpus = read_week_corpus(fs::path(fm_corpus));
            run.input(fm_corpus);
            fm_options.stratify = !fm_pooled;
            const MarkovModel model = fit_markov(corpus, fm_options);
            save_checkpoint(run.path("markov.ckpt"), model);
            run.output("markov.ckpt");
            out << "fitted markov chain on " << corpus.schedules.size() << " weeks, " << model.cells.size()
                << " stratified cells\n";
            run.finish();
        } else if (ev->parsed()) {
            Run run(ev, ev_common, out);
            run.input(ev_reference);
            if (!ev_model.empty()) run.input(ev_model);
            if (!ev_generated.empty()) run.input(ev_generated);
            if (ev_generated.empty() && ev_model.empty()) throw ConfigError("evaluate needs --generated or --model");
            MetricsReport report;
            if (corpus_kind(ev_reference) == CorpusKind::day) {
                if (ev_model.empty()) throw ConfigError("day corpora are evaluated with --model <imputer checkpoint>");
                const ImputerModel model = load_imputer(fs::path(ev_model));
                const DiaryCorpus ref = read_diary_corpus(fs::path(ev_reference), model.activities);
                const auto e = evaluate_imputer(model, ref, ev_n, ev_common.seed, ev_temperature, ev_common.threads);
                report = e.report;
                const DiaryCorpus imputed{ref.alphabet, e.imputed}, drawn{ref.alphabet, e.reference};
                write_corpus(run.path("imputed_diaries.csv"), imputed);
                run.output("imputed_diaries.csv");
                export_curves(run, as_day_sequences(imputed), as_day_sequences(drawn), report, false);
            } else {
                const WeekCorpus ref = read_week_corpus(fs::path(ev_reference));
                WeekCorpus gen{ref.alphabet, {}};
                if (!ev_generated.empty()) {
                    gen = read_week_corpus(fs::path(ev_generated), ref.alphabet);
                } else {
                    gen.schedules = sample_model(ev_model, &ref, ev_n, ev_common.seed, ev_temperature, ev_common.threads);
                    write_corpus(run.path("generated.csv"), gen);
                    run.output("generated.csv");
                }
                SequenceCorpus g = as_sequences(gen), r = as_sequences(ref);
                if (r.count() != g.count()) r = resample(r, g.count(), derive_seed(ev_common.seed, 2));
                report = compare(g, r);
                export_curves(run, g, r, report, true);
            }
            write_json(run.path("report.json"), to_json(report));
            run.output("report.json");
            print_report(out, "report", report);
            run.finish();
        } else if (cp->parsed()) {
            Run run(cp, cp_common, out);
            const WeekCorpus ref = read_week_corpus(fs::path(cp_reference));
            run.input(cp_reference);
            run.input(cp_generator);
            run.input(cp_markov);
            if (checkpoint_kind(cp_generator) != CheckpointKind::generator) throw DataError("--generator is not a generator checkpoint");
            if (checkpoint_kind(cp_markov) != CheckpointKind::markov) throw DataError("--markov is not a markov checkpoint");
            SequenceCorpus r = as_sequences(ref);
            if (r.count() != static_cast<std::size_t>(cp_n)) r = resample(r, static_cast<std::size_t>(cp_n), derive_seed(cp_common.seed, 2));
            Json rows = Json::array();
            std::ostringstream table;
            table << "| model | sp rmse | sd rmse | ac rmse | na mae | hd mae |\n|---|---|---|---|---|---|\n";
            for (const auto& [name, path] : {std::pair<std::string, std::string>{"attention", cp_generator},
                                             std::pair<std::string, std::string>{"markov", cp_markov}}) {
                auto weeks = sample_model(path, &ref, cp_n, cp_common.seed, cp_temperature, cp_common.threads);
                const MetricsReport rep = compare(as_sequences(ref.alphabet, weeks), r);
                Json row = to_json(rep);
                row["model"] = name;
                rows.push_back(row);
                table << "| " << name << " | " << format_double(rep.sp_rmse) << " | " << format_double(rep.sd_rmse) << " | "
                      << format_double(rep.ac_rmse) << " | " << format_double(rep.na_mae) << " | "
                      << format_double(*rep.hd_mae) << " |\n";
            }
            write_json(run.path("compare.json"), rows);
            {
                std::ofstream md(run.path("compare.md"), std::ios::binary);
                md << table.str();
            }
            run.output("compare.json");
            run.output("compare.md");
            out << table.str();
            run.finish();
        } else if (gr->parsed()) {
            Run run(gr, gr_common, out);
            run.input(gr_corpus);
            run.seed("split_seed", gr_split_seed);
            const ModelConfig base = gr_model.resolve();
            const bool weekly = corpus_kind(gr_corpus) == CorpusKind::week;
            std::optional<WeekCorpus> weeks;
            std::optional<DiaryCorpus> diaries;
            SplitPlan split;
            if (weekly) {
                weeks = read_week_corpus(fs::path(gr_corpus));
                split = split_for_weeks(*weeks, gr_split_seed);
            } else {
                diaries = read_diary_corpus(fs::path(gr_corpus));
                split = split_for_diaries(*diaries, gr_split_seed);
            }
            std::vector<GridRow> rows;
            for (int l : gr_layers)
                for (int d : gr_dmodel)
                    for (double lr : gr_lr)
                        for (int b : gr_batch) rows.push_back({l, d, b, lr, 0.0, 0.0, 0, {}});
            std::mutex lock;
            auto train_one = [&](std::size_t i) {
                GridRow& row = rows[i];
                ModelConfig c = base;
                c.encoder.layers = row.layers;
                c.encoder.d_model = row.d_model;
                c.encoder.d_ff = 4 * row.d_model;
                c.learning_rate = row.lr;
                c.batch_size = row.batch;
                c.validate();
                const std::uint64_t seed = derive_seed(gr_common.seed, i);
                const std::string tag = "run" + std::to_string(i) + " ";
                const fs::path sub = run.path("run" + std::to_string(i));
                TrainReport report;
                if (weekly) {
                    auto t = train_generator(*weeks, split, gr_fold, c, seed, progress(err, &lock, tag));
                    report = t.report;
                    save_checkpoint(sub / "generator.ckpt", t.model);
                    row.metrics = evaluate_generator(t.model, *weeks, gr_n, seed).report;
                } else {
                    auto t = train_imputer(*diaries, split, gr_fold, c, seed, progress(err, &lock, tag));
                    report = t.report;
                    save_checkpoint(sub / "imputer.ckpt", t.model);
                    row.metrics = evaluate_imputer(t.model, *diaries, gr_n, seed).report;
                }
                const auto& best = report.epochs.at(static_cast<std::size_t>(report.best_epoch - 1));
                row.loss = best.val_loss;
                row.acc = best.val_accuracy;
                row.epoch = report.best_epoch;
                Json j = to_json(report);
                j["config"] = to_json(c);
                j["metrics"] = to_json(row.metrics);
                write_json(sub / "report.json", j);
            };
            const auto workers = std::min<std::size_t>(static_cast<std::size_t>(gr_parallel), rows.size());
            if (workers <= 1) {
                for (std::size_t i = 0; i < rows.size(); ++i) train_one(i);
            } else {
                std::vector<std::thread> pool;
                std::exception_ptr failure;
                for (std::size_t w = 0; w < workers; ++w) {
                    pool.emplace_back([&, w] {
                        try {
                            for (std::size_t i = w; i < rows.size(); i += workers) train_one(i);
                        } catch (...) {
                            std::lock_guard<std::mutex> g(lock);
                            if (!failure) failure = std::current_exception();
                        }
                    });
                }
                for (auto& t : pool) t.join();
                if (failure) std::rethrow_exception(failure);
            }
            std::vector<Column> cols{{"layers", {}}, {"d_model", {}}, {"learning_rate", {}}, {"batch_size", {}},
                                     {"loss", {}},   {"acc", {}},     {"epoch", {}},         {"sp_rmse", {}},
                                     {"sd_rmse", {}}, {"ac_rmse", {}}, {"na_mae", {}}};
            if (weekly) cols.push_back({"hd_mae", {}});
            for (const auto& r : rows) {
                const double values[] = {static_cast<double>(r.layers), static_cast<double>(r.d_model), r.lr,
                                         static_cast<double>(r.batch), r.loss, r.acc, static_cast<double>(r.epoch),
                                         r.metrics.sp_rmse, r.metrics.sd_rmse, r.metrics.ac_rmse, r.metrics.na_mae,
                                         r.metrics.hd_mae.value_or(0.0)};
                for (std::size_t c = 0; c < cols.size(); ++c) cols[c].values.push_back(values[c]);
            }
            write_columns(run.path("grid.csv"), cols);
            run.output("grid.csv");
            out << "trained " << rows.size() << " configurations\n";
            run.finish();
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << "\n";
        return kNumeric;
    } catch (const Error& e) {
        err << "data error: " << e.what() << "\n";
        return kData;
    } catch (const fs::filesystem_error& e) {
        err << "data error: " << e.what() << "\n";
        return kData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kOk;
}

}  // namespace schedsynth::cli
