#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace cov::detail {

// Dense bit set over linear cell keys; used for rasterizing target grids.
class Bitmap {
public:
    explicit Bitmap(std::size_t size) : size_(size), words_((size + 63) / 64, 0) {}

    std::size_t size() const { return size_; }

    bool test(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1U; }
    void set(std::size_t i) { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }
    void reset(std::size_t i) { words_[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }

    /// Sets bits [first, last).
    void set_range(std::size_t first, std::size_t last) {
        if (first >= last) return;
        std::size_t wf = first >> 6, wl = (last - 1) >> 6;
        const std::uint64_t head = ~std::uint64_t{0} << (first & 63);
        const std::uint64_t tail = ~std::uint64_t{0} >> (63 - ((last - 1) & 63));
        if (wf == wl) {
            words_[wf] |= head & tail;
            return;
        }
        words_[wf] |= head;
        for (std::size_t w = wf + 1; w < wl; ++w) words_[w] = ~std::uint64_t{0};
        words_[wl] |= tail;
    }

    std::size_t count() const {
        std::size_t c = 0;
        for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
        return c;
    }

    /// Number of bits set in both maps.
    std::size_t count_and(const Bitmap& other) const {
        std::size_t c = 0;
        for (std::size_t w = 0; w < words_.size(); ++w)
            c += static_cast<std::size_t>(std::popcount(words_[w] & other.words_[w]));
        return c;
    }

    template <typename Fn>
    void for_each(Fn&& fn) const {
        for (std::size_t w = 0; w < words_.size(); ++w) {
            std::uint64_t bits = words_[w];
            while (bits) {
                const int b = std::countr_zero(bits);
                fn(w * 64 + static_cast<std::size_t>(b));
                bits &= bits - 1;
            }
        }
    }

private:
    std::size_t size_;
    std::vector<std::uint64_t> words_;
};

}  // namespace cov::detail
