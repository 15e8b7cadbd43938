#include "cellcheck/adaptive.hpp"

#include "cellcheck/error.hpp"

#include <algorithm>
#include <chrono>

namespace cellcheck {

std::string to_string(SplitStrategy s) { return s == SplitStrategy::AllSplit ? "all" : "informed"; }

SplitStrategy parse_split_strategy(const std::string& s) {
    if (s == "all") return SplitStrategy::AllSplit;
    if (s == "informed") return SplitStrategy::InformedSplit;
    throw ValidationError("unknown split strategy '" + s + "' (expected all or informed)");
}

void VerifierStats::merge(const VerifierStats& o) {
    verifier_calls += o.verifier_calls;
    corner_eval_batches += o.corner_eval_batches;
    leaves_total += o.leaves_total;
    leaves_singleton += o.leaves_singleton;
    leaves_multi += o.leaves_multi;
    wall_time += o.wall_time;
}

void VerifierStats::count_leaves(const PartitionTree& tree) {
    leaves_total = leaves_singleton = leaves_multi = 0;
    for (CellId id : tree.leaves()) {
        ++leaves_total;
        if (tree.cell(id).actions.size() <= 1) {
            ++leaves_singleton;
        } else {
            ++leaves_multi;
        }
    }
}

std::vector<std::size_t> strategy_dims(std::span<const std::size_t> corner_actions, std::size_t d) {
    if (d > kMaxCornerDims || corner_actions.size() != (std::size_t{1} << d)) {
        throw DimensionError("expected 2^" + std::to_string(d) + " corner actions, got " +
                             std::to_string(corner_actions.size()));
    }
    std::vector<std::size_t> dims;
    for (std::size_t k = 0; k < d; ++k) {
        const std::size_t bit = std::size_t{1} << k;
        for (std::size_t c = 0; c < corner_actions.size(); ++c) {
            if ((c & bit) == 0 && corner_actions[c] != corner_actions[c | bit]) {
                dims.push_back(k);
                break;
            }
        }
    }
    return dims;
}

std::vector<std::size_t> splittable_dims(const Box& cell, std::span<const double> min_size) {
    if (min_size.size() != cell.dim()) throw DimensionError("min_size length does not match cell dimension");
    std::vector<std::size_t> dims;
    for (std::size_t i = 0; i < cell.dim(); ++i) {
        if (cell.width(i) > min_size[i]) dims.push_back(i);
    }
    return dims;
}

namespace {

void check_config(const Network& net, const Box& domain, const AdaptiveConfig& config, const InputEmbedding& emb) {
    if (emb.input_dim() != net.input_dim()) throw DimensionError("embedding does not match network input dimension");
    if (emb.partition_dim() != domain.dim()) throw DimensionError("embedding does not match domain dimension");
    if (config.min_size.size() != domain.dim()) {
        throw DimensionError("min_size has " + std::to_string(config.min_size.size()) + " entries, domain has " +
                             std::to_string(domain.dim()) + " dimensions");
    }
    for (double m : config.min_size) {
        if (!(m > 0.0)) throw ValidationError("min_size entries must be strictly positive");
    }
    if (config.strategy == SplitStrategy::InformedSplit && domain.dim() > kMaxCornerDims) {
        throw ValidationError("informed split supports at most 16 dimensions; use the all-split strategy");
    }
}

std::vector<std::size_t> partition_corners(const Network& net, const InputEmbedding& emb, const Box& cell) {
    const std::size_t d = cell.dim();
    const std::size_t n = std::size_t{1} << d;
    std::vector<std::size_t> out(n);
    std::vector<double> point(d), input;
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < d; ++i) point[i] = ((k >> i) & 1U) ? cell.highs[i] : cell.lows[i];
        emb.lift(point, input);
        out[k] = net.best_action(input);
    }
    return out;
}

ActionSet candidates_of(const Cell& c, const Network& net) {
    return c.actions.empty() ? ActionSet::all(net.output_dim()) : c.actions;
}

}  // namespace

void adaptive_refine(PartitionTree& tree, CellId start, const Network& net, const InputEmbedding& emb,
                     const AdaptiveConfig& config, VerifierStats& stats) {
    check_config(net, tree.root_box(), config, emb);
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<CellId> stack{start};
    while (!stack.empty()) {
        const CellId id = stack.back();
        stack.pop_back();
        const Box box = tree.cell(id).box;
        const ActionSet candidates = candidates_of(tree.cell(id), net);
        const auto splittable = splittable_dims(box, config.min_size);

        if (config.strategy == SplitStrategy::InformedSplit && !splittable.empty() && candidates.size() > 1) {
            const auto corners = partition_corners(net, emb, box);
            ++stats.corner_eval_batches;
            std::vector<std::size_t> dims;
            for (std::size_t k : strategy_dims(corners, box.dim())) {
                if (std::find(splittable.begin(), splittable.end(), k) != splittable.end()) dims.push_back(k);
            }
            if (!dims.empty()) {
                // Children keep the parent's candidate mask; the corners prove presence, not absence.
                tree.cell(id).actions = candidates;
                for (CellId child : tree.split(id, dims)) stack.push_back(child);
                continue;
            }
        }

        ActionSet actions = candidates;
        if (candidates.size() > 1) {
            actions = possible_actions(net, emb.lift(box), candidates, config.verifier);
            ++stats.verifier_calls;
        }
        tree.cell(id).actions = actions;
        if (actions.size() > 1 && !splittable.empty()) {
            for (CellId child : tree.split(id, splittable)) stack.push_back(child);
        }
    }
    stats.wall_time += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

AdaptiveResult adaptive_verify(const Network& net, const Box& domain, const AdaptiveConfig& config,
                               const InputEmbedding& embedding) {
    check_config(net, domain, config, embedding);
    AdaptiveResult result{PartitionTree(domain), {}};
    adaptive_refine(result.tree, result.tree.root(), net, embedding, config, result.stats);
    result.stats.count_leaves(result.tree);
    return result;
}

AdaptiveResult adaptive_verify(const Network& net, const Box& domain, const AdaptiveConfig& config) {
    return adaptive_verify(net, domain, config, InputEmbedding::identity(domain.dim()));
}

AdaptiveResult uniform_verify(const Network& net, const Box& domain, const AdaptiveConfig& config,
                              const InputEmbedding& embedding) {
    check_config(net, domain, config, embedding);
    AdaptiveResult result{PartitionTree(domain), {}};
    const auto t0 = std::chrono::steady_clock::now();
    PartitionTree& tree = result.tree;
    std::vector<CellId> stack{tree.root()};
    while (!stack.empty()) {
        const CellId id = stack.back();
        stack.pop_back();
        const auto splittable = splittable_dims(tree.cell(id).box, config.min_size);
        if (!splittable.empty()) {
            for (CellId child : tree.split(id, splittable)) stack.push_back(child);
            continue;
        }
        tree.cell(id).actions = possible_actions(net, embedding.lift(tree.cell(id).box), config.verifier);
        ++result.stats.verifier_calls;
    }
    result.stats.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.stats.count_leaves(tree);
    return result;
}

AdaptiveResult uniform_verify(const Network& net, const Box& domain, const AdaptiveConfig& config) {
    return uniform_verify(net, domain, config, InputEmbedding::identity(domain.dim()));
}

}  // namespace cellcheck
