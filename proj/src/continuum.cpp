#include "cellcheck/continuum.hpp"

#include "cellcheck/error.hpp"

namespace cellcheck {

ContinuumWorld::ContinuumWorld(ContinuumConfig config) : config_(std::move(config)) {
    if (config_.domain.dim() != 2 || config_.pit.dim() != 2 || config_.goal.dim() != 2) {
        throw DimensionError("continuum world is two-dimensional");
    }
    const double p = config_.intended_probability;
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("intended move probability must lie in [0, 1]");
}

std::vector<TransitionOutcome> ContinuumWorld::outcomes(std::size_t, std::size_t action) const {
    if (action > Right) throw ValidationError("unknown continuum-world action " + std::to_string(action));
    static constexpr double kMoves[4][2] = {{0, 1}, {0, -1}, {-1, 0}, {1, 0}};
    const double other = (1.0 - config_.intended_probability) / 3.0;
    std::vector<TransitionOutcome> out;
    out.reserve(4);
    for (std::size_t o = 0; o < 4; ++o) {
        out.push_back({o == action ? config_.intended_probability : other,
                       AffineMap::translation({kMoves[o][0] * config_.step, kMoves[o][1] * config_.step}), 0});
    }
    return out;
}

bool ContinuumWorld::unsafe(std::size_t, const Box& cell) const { return overlaps_with_measure(cell, config_.pit); }

bool ContinuumWorld::inside_unsafe(std::size_t, const Box& cell) const { return config_.pit.encloses(cell); }

bool ContinuumWorld::absorbing_safe(std::size_t, const Box& cell) const {
    return config_.goal_absorbing && config_.goal.encloses(cell) && !unsafe(0, cell);
}

bool ContinuumWorld::touches_absorbing(std::size_t, const Box& cell) const {
    return config_.goal_absorbing && overlaps_with_measure(cell, config_.goal);
}

bool ContinuumWorld::point_unsafe(std::size_t, std::span<const double> x) const {
    return owns_point(config_.pit, config_.domain, x);
}

bool ContinuumWorld::point_absorbing(std::size_t, std::span<const double> x) const {
    return config_.goal_absorbing && config_.goal.contains(x) && !point_unsafe(0, x);
}

}  // namespace cellcheck
