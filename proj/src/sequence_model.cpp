#include "schedsynth/sequence_model.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "schedsynth/adam.hpp"
#include "schedsynth/errors.hpp"

namespace schedsynth {

std::string to_string(PositionIndex p) { return p == PositionIndex::time_of_day ? "time_of_day" : "sequence"; }

PositionIndex position_index_from_string(const std::string& text) {
    if (text == "time_of_day") return PositionIndex::time_of_day;
    if (text == "sequence") return PositionIndex::sequence;
    throw ConfigError("position index must be 'time_of_day' or 'sequence', got '" + text + "'");
}

void ModelConfig::validate() const {
    encoder.validate();
    features.validate();
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (batch_size <= 0) throw ConfigError("batch size must be positive");
    if (max_epochs < 0) throw ConfigError("max_epochs must be >= 0");
    if (patience <= 0) throw ConfigError("patience must be positive");
    if (!(head_init_std > 0.0)) throw ConfigError("head_init_std must be positive");
}

SequenceModel::SequenceModel(ModelConfig config, int vocab, int outputs, std::uint64_t seed)
    : config_(std::move(config)), vocab_(vocab), outputs_(outputs), init_seed_(seed) {
    config_.validate();
    if (outputs_ <= 0) throw ConfigError("model needs at least one output class");
    Rng rng = make_rng(seed, 0);
    add_input_parameters(params_, config_.features, vocab_, config_.encoder.d_model, rng);
    add_encoder_parameters(params_, config_.encoder, rng);
    const auto d = static_cast<std::size_t>(config_.encoder.d_model);
    const auto k = static_cast<std::size_t>(outputs_);
    params_.add("head.w", {d, k}, normal_init(d * k, config_.head_init_std, rng));
    params_.add("head.b", {k}, std::vector<double>(k, 0.0));
    pe_table_ = positional_encoding(config_.encoder.max_len, config_.encoder.d_model);
}

Tensor SequenceModel::logits(const SequenceInput& input, const AttentionMask& mask, ForwardOptions options) const {
    Tensor x = assemble_inputs(input.tokens, input.weekdays, input.positions, input.attributes, params_, pe_table_,
                               config_.encoder.d_model);
    Tensor h = encoder_forward(x, mask, config_.encoder, params_, options);
    return linear(h, params_.get("head.w"), params_.get("head.b"));
}

std::size_t TrainingExample::active_targets() const {
    std::size_t n = 0;
    for (int t : targets) n += t != kIgnoreTarget ? 1 : 0;
    return n;
}

AttentionMask mask_for(const TrainingExample& example) {
    return example.at_home.empty() ? lookahead_mask(example.input.length()) : imputation_mask(example.at_home);
}

namespace {

// Runs body(i) for i in [0, n) on up to `threads` workers; worker w takes
// i = w, w + workers, ... The first exception is rethrown after joining.
template <typename Body>
void parallel_for(std::size_t n, int threads, Body&& body) {
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i, 0);
        return;
    }
    std::exception_ptr failure;
    std::mutex lock;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) body(i, w);
            } catch (...) {
                std::lock_guard<std::mutex> g(lock);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

struct ExampleScore {
    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::size_t total = 0;
};

ExampleScore score(const SequenceModel& model, const TrainingExample& ex) {
    ExampleScore r;
    const std::size_t n = ex.active_targets();
    if (n == 0) return r;
    Tensor logits = model.logits(ex.input, mask_for(ex));
    r.loss_sum = cross_entropy(logits, ex.targets, kIgnoreTarget).item() * static_cast<double>(n);
    const std::size_t k = logits.cols();
    const auto values = logits.data();
    for (std::size_t i = 0; i < ex.targets.size(); ++i) {
        if (ex.targets[i] == kIgnoreTarget) continue;
        r.correct += argmax(values.subspan(i * k, k)) == ex.targets[i] ? 1 : 0;
    }
    r.total = n;
    return r;
}

// A model with its own parameter storage.
SequenceModel replica(const SequenceModel& model) {
    SequenceModel copy(model.config(), model.vocab(), model.outputs(), model.init_seed());
    copy.params().restore(model.params().snapshot());
    return copy;
}

}  // namespace

LossAndAccuracy evaluate_examples(const SequenceModel& model, std::span<const TrainingExample> examples, int threads) {
    std::vector<ExampleScore> scores(examples.size());
    parallel_for(examples.size(), threads, [&](std::size_t i, std::size_t) {
        NoGradGuard no_grad;
        scores[i] = score(model, examples[i]);
    });
    double loss_sum = 0.0;
    std::size_t correct = 0, total = 0;
    for (const auto& s : scores) {
        loss_sum += s.loss_sum;
        correct += s.correct;
        total += s.total;
    }
    if (total == 0) throw DataError("evaluation set has no targets");
    return {loss_sum / static_cast<double>(total), static_cast<double>(correct) / static_cast<double>(total), total};
}

TrainReport fit(SequenceModel& model, std::span<const TrainingExample> train, std::span<const TrainingExample> validation,
                std::uint64_t seed, const EpochCallback& on_epoch, int threads) {
    const ModelConfig& cfg = model.config();
    if (threads < 1) throw ConfigError("threads must be >= 1");
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < train.size(); ++i) {
        if (train[i].active_targets() > 0) order.push_back(i);
    }
    if (order.empty()) throw DataError("training set has no targets");

    TrainReport report;
    {
        const auto init = evaluate_examples(model, validation, threads);
        report.initial_val_loss = init.loss;
        report.initial_val_accuracy = init.accuracy;
    }

    auto params = model.params().tensors();
    AdamState adam = make_adam_state(params, {cfg.learning_rate});
    model.params().zero_grad();
    auto best = model.params().snapshot();
    double best_loss = report.initial_val_loss;
    int since_best = 0;
    const auto batch = static_cast<std::size_t>(cfg.batch_size);

    // Each example's gradient is computed on a worker's own parameter copy and
    // summed in batch order, so the result does not depend on `threads`.
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(threads), batch);
    std::vector<SequenceModel> replicas;
    for (std::size_t w = 0; w < workers; ++w) replicas.push_back(replica(model));
    std::vector<std::vector<double>> example_grads(std::min(batch, order.size()));
    std::vector<double> example_loss(example_grads.size());
    std::vector<std::size_t> offsets{0};
    for (const auto& p : params) offsets.push_back(offsets.back() + p.size());
    for (auto& g : example_grads) g.resize(offsets.back());

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        Rng rng = make_rng(seed, static_cast<std::uint64_t>(epoch));
        std::shuffle(order.begin(), order.end(), rng);
        const std::uint64_t dropout_seed = derive_seed(seed, 0x100000000ULL + static_cast<std::uint64_t>(epoch));
        double epoch_loss = 0.0;
        std::size_t epoch_targets = 0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t stop = std::min(order.size(), start + batch);
            std::size_t batch_targets = 0;
            for (std::size_t i = start; i < stop; ++i) batch_targets += train[order[i]].active_targets();
            for (auto& r : replicas) r.params().restore(model.params().snapshot());
            parallel_for(stop - start, static_cast<int>(workers), [&](std::size_t j, std::size_t w) {
                SequenceModel& net = replicas[w];
                const auto& ex = train[order[start + j]];
                const std::size_t n = ex.active_targets();
                Rng ex_rng = make_rng(dropout_seed, start + j);
                net.params().zero_grad();
                Tensor logits = net.logits(ex.input, mask_for(ex), {true, &ex_rng});
                Tensor loss = cross_entropy(logits, ex.targets, kIgnoreTarget);
                if (!std::isfinite(loss.item())) {
                    throw NumericError("non-finite training loss at epoch " + std::to_string(epoch));
                }
                example_loss[j] = loss.item() * static_cast<double>(n);
                backward(scale(loss, static_cast<double>(n) / static_cast<double>(batch_targets)));
                const auto leaves = net.params().tensors();
                auto& out = example_grads[j];
                for (std::size_t p = 0; p < leaves.size(); ++p) {
                    const auto g = leaves[p].grad();
                    if (g.empty()) {
                        std::fill(out.begin() + static_cast<std::ptrdiff_t>(offsets[p]),
                                  out.begin() + static_cast<std::ptrdiff_t>(offsets[p + 1]), 0.0);
                    } else {
                        std::copy(g.begin(), g.end(), out.begin() + static_cast<std::ptrdiff_t>(offsets[p]));
                    }
                }
            });
            std::vector<std::vector<double>> grads(params.size());
            for (std::size_t p = 0; p < params.size(); ++p) {
                auto& acc = grads[p];
                acc.assign(params[p].size(), 0.0);
                for (std::size_t j = 0; j < stop - start; ++j) {
                    const double* g = example_grads[j].data() + offsets[p];
                    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += g[k];
                }
            }
            for (std::size_t j = 0; j < stop - start; ++j) {
                epoch_loss += example_loss[j];
                epoch_targets += train[order[start + j]].active_targets();
            }
            adam_step(adam, params, grads);
        }
        EpochRecord record;
        record.epoch = epoch;
        record.train_loss = epoch_loss / static_cast<double>(epoch_targets);
        const auto val = evaluate_examples(model, validation, threads);
        if (!std::isfinite(val.loss)) throw NumericError("non-finite validation loss at epoch " + std::to_string(epoch));
        record.val_loss = val.loss;
        record.val_accuracy = val.accuracy;
        report.epochs.push_back(record);

        if (val.loss < best_loss || report.best_epoch == 0) {
            best_loss = val.loss;
            report.best_epoch = epoch;
            best = model.params().snapshot();
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            report.stopped_early = true;
        }
        const bool keep_going = on_epoch ? on_epoch(record) : true;
        if (report.stopped_early || !keep_going) break;
    }
    model.params().restore(best);
    return report;
}

}  // namespace schedsynth
