#pragma once

#include "cellcheck/dynamics.hpp"
#include "cellcheck/network.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace cellcheck {

/// Tensor grid of nodes, given by sorted cut points per dimension.
class Grid {
public:
    explicit Grid(std::vector<std::vector<double>> axes);
    /// `counts[i]` nodes per dimension at the centres of equal subintervals of `domain`.
    static Grid cell_centres(const Box& domain, std::span<const std::size_t> counts);

    std::size_t dim() const noexcept { return axes_.size(); }
    std::size_t node_count() const noexcept { return count_; }
    const std::vector<std::vector<double>>& axes() const noexcept { return axes_; }

    std::vector<double> node(std::size_t index) const;
    /// Node nearest to `x`; ties go to the lower node.
    std::size_t nearest(std::span<const double> x) const;
    /// Multilinear interpolation of per-node `values` at `x` (clamped to the grid hull).
    double interpolate(std::span<const double> values, std::span<const double> x) const;

private:
    std::vector<std::vector<double>> axes_;
    std::vector<std::size_t> strides_;
    std::size_t count_ = 1;
};

/// One action per grid node and field.
struct TabularPolicy {
    Grid grid;
    std::vector<std::vector<std::size_t>> actions;  ///< [field][node]
};

/// Tabulates the network policy at every node of `grid`.
TabularPolicy tabulate_policy(std::span<const Network> nets, const DynamicsModel& model, const Grid& grid);

struct ExactResult {
    Grid grid;
    std::vector<std::vector<double>> values;  ///< [field][node]
    std::size_t iterations = 0;
    double final_delta = 0.0;
    bool converged = false;

    double nearest(std::size_t field, std::span<const double> x) const;
    /// Not guaranteed to bound the true probability from above.
    double multilinear(std::size_t field, std::span<const double> x) const;
};

/// Fixed-policy reachability value iteration on the grid. Point successors
/// are snapped to their nearest node.
ExactResult exact_check(const TabularPolicy& policy, const DynamicsModel& model, double eps = 1e-12,
                        std::size_t max_iterations = 1000000);

struct McEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
    std::size_t hits = 0;
};

struct McConfig {
    std::size_t rollouts = 1000;
    std::size_t horizon = 500;
    std::uint64_t seed = 0;
};

/// Simulates the network policy from `start`. A rollout counts as a hit when
/// it enters the unsafe set within the horizon. Rollout `k` draws from an
/// RNG stream derived from (seed, k).
McEstimate monte_carlo(std::span<const Network> nets, const DynamicsModel& model, std::size_t field,
                       std::span<const double> start, const McConfig& config);

/// Reusable simulator that memoises network decisions across rollouts. Steps
/// apply the model's outcome maps followed by its boundary policy.
class Simulator {
public:
    Simulator(std::span<const Network> nets, const DynamicsModel& model);
    ~Simulator();
    Simulator(const Simulator&) = delete;
    Simulator& operator=(const Simulator&) = delete;

    McEstimate run(std::size_t field, std::span<const double> start, const McConfig& config);

private:
    struct Impl;
    Impl* impl_;
};

}  // namespace cellcheck
