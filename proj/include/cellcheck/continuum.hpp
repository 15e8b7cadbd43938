#pragma once

#include "cellcheck/dynamics.hpp"

namespace cellcheck {

/// Slippery continuum world: the intended move succeeds with probability
/// 0.7, each other direction happens with probability 0.1.
struct ContinuumConfig {
    Box domain{{0.0, 0.0}, {20.0, 20.0}};
    Box pit{{8.0, 8.0}, {12.0, 12.0}};
    Box goal{{19.0, 19.0}, {20.0, 20.0}};
    double step = 1.0;
    double intended_probability = 0.7;
    bool goal_absorbing = true;
    BoundaryPolicy boundary = BoundaryPolicy::Clamp;
};

class ContinuumWorld final : public DynamicsModel {
public:
    enum Action : std::size_t { Up = 0, Down = 1, Left = 2, Right = 3 };

    explicit ContinuumWorld(ContinuumConfig config = {});

    const ContinuumConfig& config() const noexcept { return config_; }

    std::string name() const override { return "continuum"; }
    const Box& domain() const override { return config_.domain; }
    std::vector<std::string> action_labels() const override { return {"up", "down", "left", "right"}; }

    std::vector<TransitionOutcome> outcomes(std::size_t field, std::size_t action) const override;
    BoundaryPolicy boundary(std::size_t) const override { return config_.boundary; }

    bool unsafe(std::size_t field, const Box& cell) const override;
    bool inside_unsafe(std::size_t field, const Box& cell) const override;
    bool absorbing_safe(std::size_t field, const Box& cell) const override;
    bool touches_absorbing(std::size_t field, const Box& cell) const override;
    bool point_unsafe(std::size_t field, std::span<const double> x) const override;
    bool point_absorbing(std::size_t field, std::span<const double> x) const override;

private:
    ContinuumConfig config_;
};

}  // namespace cellcheck
