#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "eval.hpp"
#include "random.hpp"

namespace hashsimp {

// SimHash signature: bit j is set iff the j-th hyperplane projection is > 0.
class HashKey {
public:
    HashKey() = default;
    explicit HashKey(std::size_t bits) : bits_(bits), words_((bits + 63) / 64, 0) {}

    [[nodiscard]] std::size_t bits() const { return bits_; }

    [[nodiscard]] bool test(std::size_t j) const { return ((words_[j / 64] >> (j % 64)) & 1ULL) != 0; }
    void set(std::size_t j) { words_[j / 64] |= 1ULL << (j % 64); }

    [[nodiscard]] std::size_t popcount() const
    {
        std::size_t count = 0;
        for (auto w : words_) {
            count += static_cast<std::size_t>(__builtin_popcountll(w));
        }
        return count;
    }

    [[nodiscard]] std::size_t matching_bits(const HashKey& other) const
    {
        std::size_t differing = 0;
        for (std::size_t w = 0; w < words_.size(); ++w) {
            differing += static_cast<std::size_t>(__builtin_popcountll(words_[w] ^ other.words_[w]));
        }
        return bits_ - differing;
    }

    // '0'/'1' per bit, bit 0 first; `limit` truncates for display.
    [[nodiscard]] std::string to_string(std::size_t limit = std::numeric_limits<std::size_t>::max()) const
    {
        std::string s;
        const auto n = std::min(bits_, limit);
        s.reserve(n);
        for (std::size_t j = 0; j < n; ++j) {
            s += test(j) ? '1' : '0';
        }
        return s;
    }

    [[nodiscard]] std::size_t digest() const
    {
        std::size_t h = bits_;
        for (auto w : words_) {
            h ^= static_cast<std::size_t>(w) + 0x9E3779B97F4A7C15ULL + (h << 6U) + (h >> 2U);
        }
        return h;
    }

    friend bool operator==(const HashKey&, const HashKey&) = default;

private:
    std::size_t bits_ = 0;
    std::vector<std::uint64_t> words_;
};

struct HashKeyHasher {
    std::size_t operator()(const HashKey& key) const { return key.digest(); }
};

// b x d matrix of i.i.d. standard normal entries, reproducible from its seed.
class HyperplaneSet {
public:
    HyperplaneSet(std::size_t bits, std::size_t dim, std::uint64_t seed)
        : bits_(bits), dim_(dim), seed_(seed), planes_(bits * dim)
    {
        if (bits == 0 || dim == 0) {
            throw std::invalid_argument("hyperplane set needs at least one bit and one dimension");
        }
        Rng rng(seed);
        for (auto& p : planes_) {
            p = rng.normal();
        }
    }

    [[nodiscard]] std::size_t bits() const { return bits_; }
    [[nodiscard]] std::size_t dim() const { return dim_; }
    [[nodiscard]] std::uint64_t seed() const { return seed_; }

    [[nodiscard]] std::span<const double> plane(std::size_t j) const
    {
        return std::span<const double>(planes_).subspan(j * dim_, dim_);
    }

    [[nodiscard]] HashKey hash(std::span<const double> pred) const
    {
        if (pred.size() != dim_) {
            throw std::invalid_argument("prediction length " + std::to_string(pred.size()) + " does not match hyperplane dimension " + std::to_string(dim_));
        }
        if (!all_finite(pred)) {
            throw std::invalid_argument("cannot hash a non-finite prediction vector");
        }
        HashKey key(bits_);
        for (std::size_t j = 0; j < bits_; ++j) {
            const double* row = planes_.data() + j * dim_;
            double q = 0.0;
            for (std::size_t i = 0; i < dim_; ++i) {
                q += row[i] * pred[i];
            }
            if (q > 0.0) {
                key.set(j);
            }
        }
        return key;
    }

private:
    std::size_t bits_;
    std::size_t dim_;
    std::uint64_t seed_;
    std::vector<double> planes_;
};

inline double mean_squared_distance(std::span<const double> a, std::span<const double> b)
{
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        sum += diff * diff;
    }
    return sum / static_cast<double>(a.size());
}

struct QueryResult {
    HashKey key;
    double distance; // +inf when the key has no representative
};

// Hyperplanes plus one representative vector per key (the first one indexed).
class LshIndex {
public:
    LshIndex(std::size_t bits, std::size_t dim, std::uint64_t seed) : planes_(bits, dim, seed) {}

    [[nodiscard]] const HyperplaneSet& planes() const { return planes_; }
    [[nodiscard]] std::size_t bits() const { return planes_.bits(); }
    [[nodiscard]] std::size_t size() const { return representatives_.size(); }

    [[nodiscard]] HashKey hash(std::span<const double> pred) const { return planes_.hash(pred); }

    HashKey index(std::span<const double> pred)
    {
        auto key = hash(pred);
        representatives_.try_emplace(key, pred.begin(), pred.end());
        return key;
    }

    [[nodiscard]] QueryResult query(std::span<const double> pred) const
    {
        auto key = hash(pred);
        const auto it = representatives_.find(key);
        if (it == representatives_.end()) {
            return {std::move(key), std::numeric_limits<double>::infinity()};
        }
        return {std::move(key), mean_squared_distance(pred, it->second)};
    }

    [[nodiscard]] const Vector* representative(const HashKey& key) const
    {
        const auto it = representatives_.find(key);
        return it == representatives_.end() ? nullptr : &it->second;
    }

private:
    HyperplaneSet planes_;
    std::unordered_map<HashKey, Vector, HashKeyHasher> representatives_;
};

// Fraction of agreeing bits between the signatures of x and y under one
// freshly drawn set of `bits` hyperplanes. Converges to 1 - angle(x, y) / pi.
inline double collision_probability_estimate(std::span<const double> x, std::span<const double> y, std::size_t bits, std::uint64_t seed)
{
    if (x.size() != y.size()) {
        throw std::invalid_argument("vectors differ in length");
    }
    const HyperplaneSet planes(bits, x.size(), seed);
    return static_cast<double>(planes.hash(x).matching_bits(planes.hash(y))) / static_cast<double>(bits);
}

} // namespace hashsimp
