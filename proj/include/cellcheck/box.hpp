#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace cellcheck {

/// Axis-aligned box [lows, highs]. Also used as an interval vector for
/// network output bounds. Degenerate dimensions (low == high) are allowed.
struct Box {
    std::vector<double> lows;
    std::vector<double> highs;

    Box() = default;
    Box(std::vector<double> lo, std::vector<double> hi);

    std::size_t dim() const noexcept { return lows.size(); }
    double width(std::size_t i) const noexcept { return highs[i] - lows[i]; }
    double volume() const noexcept;
    std::vector<double> center() const;
    /// Closed containment.
    bool contains(std::span<const double> x) const noexcept;
    /// `other` lies inside this box (closed).
    bool encloses(const Box& other) const noexcept;
    std::size_t widest_dim() const noexcept;

    friend bool operator==(const Box&, const Box&) = default;
};

/// Set of action indices, at most 64 actions.
class ActionSet {
public:
    static constexpr std::size_t kMaxActions = 64;

    constexpr ActionSet() = default;
    constexpr explicit ActionSet(std::uint64_t bits) : bits_(bits) {}

    static constexpr ActionSet all(std::size_t n) {
        return ActionSet(n >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << n) - 1));
    }
    static constexpr ActionSet single(std::size_t a) { return ActionSet(std::uint64_t{1} << a); }

    constexpr bool contains(std::size_t a) const { return (bits_ >> a) & 1U; }
    constexpr void insert(std::size_t a) { bits_ |= std::uint64_t{1} << a; }
    constexpr void erase(std::size_t a) { bits_ &= ~(std::uint64_t{1} << a); }
    constexpr bool empty() const { return bits_ == 0; }
    constexpr std::size_t size() const { return static_cast<std::size_t>(std::popcount(bits_)); }
    constexpr std::uint64_t bits() const { return bits_; }
    /// Lowest member. Undefined on an empty set.
    constexpr std::size_t first() const { return static_cast<std::size_t>(std::countr_zero(bits_)); }

    std::vector<std::size_t> members() const;

    constexpr ActionSet operator|(ActionSet o) const { return ActionSet(bits_ | o.bits_); }
    constexpr ActionSet operator&(ActionSet o) const { return ActionSet(bits_ & o.bits_); }
    constexpr ActionSet& operator|=(ActionSet o) {
        bits_ |= o.bits_;
        return *this;
    }
    constexpr bool subset_of(ActionSet o) const { return (bits_ & ~o.bits_) == 0; }
    friend constexpr bool operator==(ActionSet, ActionSet) = default;

private:
    std::uint64_t bits_ = 0;
};

}  // namespace cellcheck
