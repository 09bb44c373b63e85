#pragma once

#include <span>
#include <vector>

#include "schedsynth/mask.hpp"
#include "schedsynth/sequence_model.hpp"

namespace schedsynth {

// Row-at-a-time evaluation of a SequenceModel under a fixed mask, caching
// keys and values per layer. A row may be computed once every key it is
// allowed to see has been computed (in an earlier call or in the same call).
// Produces the same values as SequenceModel::logits in evaluation mode.
class IncrementalEncoder {
public:
    IncrementalEncoder(const SequenceModel& model, const AttentionMask& mask);

    // Sets the input features of a row; must precede compute() for that row.
    void set_input(std::size_t row, int token, int weekday, int position, const PersonAttributes& attrs);
    // Runs the listed rows through every layer.
    void compute(std::span<const std::size_t> rows);
    // Output-head logits of a computed row.
    std::span<const double> logits(std::size_t row);

    std::size_t length() const { return length_; }

private:
    const SequenceModel& model_;
    const AttentionMask& mask_;
    std::size_t length_;
    std::size_t d_;
    std::size_t heads_;
    std::size_t head_dim_;
    std::size_t ff_;
    // layer inputs: (layers + 1) x L x d
    std::vector<std::vector<double>> x_;
    // per layer: heads x head_dim x L, keys and values transposed
    std::vector<std::vector<double>> kt_;
    std::vector<std::vector<double>> vt_;
    std::vector<double> q_;  // L x d scratch for the current call
    std::vector<double> logits_;
    std::vector<double> probs_;
    struct Scratch {
        std::vector<double> att, tmp, a, s, h1, f1, f1r, f2, normed;
    } scratch_;

    struct LayerParams {
        const double *wq, *bq, *wk, *bk, *wv, *bv, *wo, *bo;
        const double *ln1_g, *ln1_b, *w1, *b1, *w2, *b2, *ln2_g, *ln2_b;
    };
    std::vector<LayerParams> layers_;
    const double* final_g_ = nullptr;
    const double* final_b_ = nullptr;

    void finish_row(std::size_t layer, std::size_t row);
};

}  // namespace schedsynth
