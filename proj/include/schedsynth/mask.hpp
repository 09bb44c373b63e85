#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace schedsynth {

// L x L attention permission matrix; true means query row may attend key column.
class AttentionMask {
public:
    AttentionMask() = default;
    AttentionMask(std::size_t length, std::vector<std::uint8_t> allowed);

    static AttentionMask full(std::size_t length);
    static AttentionMask causal(std::size_t length);

    std::size_t size() const { return length_; }
    bool allowed(std::size_t query, std::size_t key) const { return allowed_[query * length_ + key] != 0; }
    std::span<const std::uint8_t> row(std::size_t query) const {
        return std::span<const std::uint8_t>(allowed_).subspan(query * length_, length_);
    }
    // Half-open column range that covers every allowed key of the row.
    std::size_t row_begin(std::size_t query) const { return begin_[query]; }
    std::size_t row_end(std::size_t query) const { return end_[query]; }

    std::size_t allowed_count() const;
    bool has_empty_row() const;
    // 0 where allowed, -infinity where blocked.
    std::vector<double> additive() const;

    bool operator==(const AttentionMask& other) const {
        return length_ == other.length_ && allowed_ == other.allowed_;
    }

private:
    std::size_t length_ = 0;
    std::vector<std::uint8_t> allowed_;
    std::vector<std::size_t> begin_;
    std::vector<std::size_t> end_;
};

}  // namespace schedsynth
