#pragma once

#include <bit>
#include <cassert>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace racing_sr {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used to derive independent child seeds from a parent
/// seed so that every stochastic component owns its own stream.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream) noexcept {
    return mix_seed(mix_seed(parent) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

std::uint64_t derive_seed(std::uint64_t parent, const std::string& label) noexcept;

/// Set of input-variable indices, at most 64 variables.
class VarSet {
public:
    static constexpr std::size_t kMaxVars = 64;

    constexpr VarSet() = default;
    constexpr explicit VarSet(std::uint64_t bits) : bits_(bits) {}
    VarSet(std::initializer_list<std::uint32_t> vars) {
        for (auto v : vars) insert(v);
    }

    /// {0, ..., n-1}
    static VarSet all(std::size_t n) {
        assert(n <= kMaxVars);
        return VarSet(n == kMaxVars ? ~0ULL : ((1ULL << n) - 1));
    }

    [[nodiscard]] constexpr bool contains(std::uint32_t v) const { return v < kMaxVars && ((bits_ >> v) & 1U); }
    constexpr void insert(std::uint32_t v) {
        assert(v < kMaxVars);
        bits_ |= (1ULL << v);
    }
    constexpr void erase(std::uint32_t v) { bits_ &= ~(1ULL << v); }
    [[nodiscard]] constexpr std::size_t size() const { return static_cast<std::size_t>(std::popcount(bits_)); }
    [[nodiscard]] constexpr bool empty() const { return bits_ == 0; }
    [[nodiscard]] constexpr std::uint64_t bits() const { return bits_; }
    [[nodiscard]] constexpr bool is_subset_of(VarSet other) const { return (bits_ & ~other.bits_) == 0; }

    [[nodiscard]] VarSet complement(std::size_t n) const { return VarSet(all(n).bits_ & ~bits_); }

    /// Members in ascending order.
    [[nodiscard]] std::vector<std::uint32_t> members() const;

    /// "{x1,x2}" or "{}".
    [[nodiscard]] std::string to_string() const;

    friend constexpr bool operator==(VarSet, VarSet) = default;
    friend constexpr auto operator<=>(VarSet a, VarSet b) { return a.bits_ <=> b.bits_; }

private:
    std::uint64_t bits_ = 0;
};

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    [[nodiscard]] std::size_t rows() const { return rows_; }
    [[nodiscard]] std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    [[nodiscard]] std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    [[nodiscard]] std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    [[nodiscard]] std::span<const double> data() const { return data_; }

    /// Removes column c, shifting later columns left.
    void erase_column(std::size_t c);

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double v);

} // namespace racing_sr
