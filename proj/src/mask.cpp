#include "schedsynth/mask.hpp"

#include <limits>

#include "schedsynth/errors.hpp"

namespace schedsynth {

AttentionMask::AttentionMask(std::size_t length, std::vector<std::uint8_t> allowed)
    : length_(length), allowed_(std::move(allowed)), begin_(length, 0), end_(length, 0) {
    if (allowed_.size() != length_ * length_) throw ShapeError("attention mask must be L x L");
    for (std::size_t q = 0; q < length_; ++q) {
        const auto* row = allowed_.data() + q * length_;
        std::size_t b = 0;
        while (b < length_ && !row[b]) ++b;
        std::size_t e = length_;
        while (e > b && !row[e - 1]) --e;
        begin_[q] = b;
        end_[q] = e;
    }
}

AttentionMask AttentionMask::full(std::size_t length) {
    return AttentionMask(length, std::vector<std::uint8_t>(length * length, 1));
}

AttentionMask AttentionMask::causal(std::size_t length) {
    std::vector<std::uint8_t> allowed(length * length, 0);
    for (std::size_t q = 0; q < length; ++q)
        for (std::size_t k = 0; k <= q; ++k) allowed[q * length + k] = 1;
    return AttentionMask(length, std::move(allowed));
}

std::size_t AttentionMask::allowed_count() const {
    std::size_t n = 0;
    for (auto a : allowed_) n += a ? 1 : 0;
    return n;
}

bool AttentionMask::has_empty_row() const {
    for (std::size_t q = 0; q < length_; ++q) {
        if (begin_[q] == end_[q]) return true;
    }
    return false;
}

std::vector<double> AttentionMask::additive() const {
    std::vector<double> out(allowed_.size());
    for (std::size_t i = 0; i < allowed_.size(); ++i) {
        out[i] = allowed_[i] ? 0.0 : -std::numeric_limits<double>::infinity();
    }
    return out;
}

}  // namespace schedsynth
