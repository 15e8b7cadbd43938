#pragma once

#include "cellcheck/embedding.hpp"
#include "cellcheck/network.hpp"
#include "cellcheck/partition.hpp"
#include "cellcheck/verifier.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace cellcheck {

enum class SplitStrategy {
    AllSplit,       ///< verify every cell, bisect every splittable dimension
    InformedSplit,  ///< evaluate corners first, split across disagreeing dimensions without verifying
};

std::string to_string(SplitStrategy s);
SplitStrategy parse_split_strategy(const std::string& s);

struct VerifierStats {
    std::size_t verifier_calls = 0;
    std::size_t corner_eval_batches = 0;
    std::size_t leaves_total = 0;
    std::size_t leaves_singleton = 0;
    std::size_t leaves_multi = 0;
    double wall_time = 0.0;

    void merge(const VerifierStats& other);
    void count_leaves(const PartitionTree& tree);
};

struct AdaptiveConfig {
    /// Per-dimension minimum width; a dimension is splittable while its width exceeds it.
    std::vector<double> min_size;
    SplitStrategy strategy = SplitStrategy::InformedSplit;
    VerifierConfig verifier;
};

struct AdaptiveResult {
    PartitionTree tree;
    VerifierStats stats;
};

/// Dimensions k for which some pair of corners differing only in bit k select
/// different actions. Corners are in the order produced by evaluate_corners.
std::vector<std::size_t> strategy_dims(std::span<const std::size_t> corner_actions, std::size_t d);

std::vector<std::size_t> splittable_dims(const Box& cell, std::span<const double> min_size);

/// Builds the overapproximated policy: partitions `domain` until every leaf
/// has a single possible action or cannot be split further.
AdaptiveResult adaptive_verify(const Network& net, const Box& domain, const AdaptiveConfig& config);
AdaptiveResult adaptive_verify(const Network& net, const Box& domain, const AdaptiveConfig& config,
                               const InputEmbedding& embedding);

/// Runs the same procedure on the subtree rooted at leaf `start`, using its
/// current action set as the candidate mask (empty means all actions).
void adaptive_refine(PartitionTree& tree, CellId start, const Network& net, const InputEmbedding& embedding,
                     const AdaptiveConfig& config, VerifierStats& stats);

/// Baseline: uniform partition at the minimum cell size with one verifier call per cell.
AdaptiveResult uniform_verify(const Network& net, const Box& domain, const AdaptiveConfig& config,
                              const InputEmbedding& embedding);
AdaptiveResult uniform_verify(const Network& net, const Box& domain, const AdaptiveConfig& config);

}  // namespace cellcheck
