#pragma once

#include "cellcheck/adaptive.hpp"
#include "cellcheck/dynamics.hpp"
#include "cellcheck/network.hpp"
#include "cellcheck/partition.hpp"

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cellcheck {

/// Piecewise-constant threshold over the sweep index.
class ThresholdSchedule {
public:
    ThresholdSchedule() : ThresholdSchedule(std::numeric_limits<double>::infinity()) {}
    ThresholdSchedule(double value);  // NOLINT: implicit from a constant
    explicit ThresholdSchedule(std::vector<std::pair<std::size_t, double>> steps);

    /// "0.005" or "0:0.001,40:0.005" (sweep:value pairs).
    static ThresholdSchedule parse(const std::string& text);

    double at(std::size_t sweep) const;
    bool disabled() const;
    const std::vector<std::pair<std::size_t, double>>& steps() const noexcept { return steps_; }

private:
    std::vector<std::pair<std::size_t, double>> steps_;
};

struct CheckConfig {
    std::vector<double> min_size;
    /// Minimum width for the initial adaptive verification; empty means min_size.
    /// A coarser value leaves multi-action cells for the action-range heuristic.
    std::vector<double> verify_min_size;
    /// Infinity disables the heuristic.
    double transition_threshold = std::numeric_limits<double>::infinity();
    ThresholdSchedule action_threshold;
    double convergence_eps = 1e-6;
    std::size_t max_sweeps = 100000;
    SplitStrategy strategy = SplitStrategy::InformedSplit;
    VerifierConfig verifier;
    /// Split cells straddling the unsafe or absorbing boundary down to the minimum size before iterating.
    bool refine_unsafe_boundary = true;
    /// Master switch for the online splitting heuristics.
    bool online_splits = true;
    unsigned threads = 1;
    /// Network whose fields feed the per-layer maximum curve of layered runs.
    std::size_t readout_network = 0;
};

struct CheckStats {
    VerifierStats adaptive;
    std::size_t sweeps = 0;
    double final_delta = 0.0;
    bool converged = false;
    std::size_t transition_splits = 0;
    std::size_t action_splits = 0;
    std::size_t boundary_splits = 0;
    std::size_t reverify_calls = 0;
    std::size_t leaves_initial = 0;
    std::size_t leaves_before_final_sweep = 0;
    std::size_t leaves_final = 0;
    double wall_time = 0.0;
};

/// Converged per-cell upper bounds on the probability of reaching the unsafe set.
struct ProbField {
    std::vector<PartitionTree> fields;
    std::vector<std::string> field_labels;
    std::vector<std::string> action_labels;
    CheckStats stats;
    /// Layered runs: maximum probability over readout-network cells per layer.
    std::vector<double> layer_max;

    std::size_t leaf_count() const;
    const Cell& cell_at(std::size_t field, std::span<const double> x) const;
    double prob_at(std::size_t field, std::span<const double> x) const { return cell_at(field, x).prob; }
    double max_prob(std::size_t field) const;
};

/// max over outcomes of (max - min) probability among cells overlapping the outcome image.
double transition_range(const PartitionTree& tree, std::size_t field, CellId id, std::size_t action,
                        std::span<const PartitionTree> fields, const DynamicsModel& model);

struct BellmanResult {
    std::vector<double> per_action;  ///< indexed by action, NaN outside the cell's action set
    double prob = 0.0;
    double transition_range = 0.0;
};

/// Worst-case cell backup: Pr(c,a) = sum_i p_i max_{c' in C'_i} Pr(c'),
/// Pr(c) = max over the cell's actions. Pinned cells return their pinned value.
BellmanResult bellman_update(const PartitionTree& tree, std::size_t field, CellId id,
                             std::span<const PartitionTree> fields, const DynamicsModel& model);

/// Spread of per-action probabilities; zero for a single possible action.
double action_range(const Cell& cell);

using SweepObserver = std::function<void(std::size_t sweep, const ProbField&)>;

/// Adaptive verification followed by cell-level value iteration with online splitting.
ProbField check(std::span<const Network> nets, const DynamicsModel& model, const CheckConfig& config,
                const SweepObserver& observer = {});

/// Value iteration on prepared partitions (one per model field) whose leaves
/// already carry action sets. `nets` is only needed when cells get split.
ProbField check_partitioned(std::vector<PartitionTree> fields, std::span<const Network> nets,
                            const DynamicsModel& model, const CheckConfig& config,
                            const SweepObserver& observer = {});

/// Backward induction for layered models: layers are solved in increasing
/// order, each until no online split fires.
ProbField check_layered(std::span<const Network> nets, const DynamicsModel& model, const CheckConfig& config);

/// Adaptive verification of every field of the model.
std::vector<PartitionTree> verify_fields(std::span<const Network> nets, const DynamicsModel& model,
                                         const CheckConfig& config, VerifierStats& stats);

}  // namespace cellcheck
