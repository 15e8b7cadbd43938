#pragma once

#include "cellcheck/box.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace cellcheck {

/// Maps partition coordinates into network input coordinates. Each network
/// input is either a partition dimension or a fixed value (for example the
/// time-to-go layer or a frozen intruder rate).
class InputEmbedding {
public:
    struct Slot {
        static constexpr std::size_t kFixed = static_cast<std::size_t>(-1);
        std::size_t source = kFixed;
        double value = 0.0;
    };

    static InputEmbedding identity(std::size_t dim);
    InputEmbedding(std::size_t partition_dim, std::vector<Slot> slots);

    std::size_t partition_dim() const noexcept { return partition_dim_; }
    std::size_t input_dim() const noexcept { return slots_.size(); }
    bool is_identity() const noexcept;

    Box lift(const Box& cell) const;
    void lift(std::span<const double> point, std::vector<double>& out) const;
    std::vector<double> lift(std::span<const double> point) const;

private:
    std::size_t partition_dim_;
    std::vector<Slot> slots_;
};

}  // namespace cellcheck
