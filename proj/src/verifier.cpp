#include "cellcheck/verifier.hpp"

#include "cellcheck/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace cellcheck {

IntervalVector propagate_bounds(const Network& net, const Box& input) {
    if (input.dim() != net.input_dim()) {
        throw DimensionError("cell has " + std::to_string(input.dim()) + " dimensions, network expects " +
                             std::to_string(net.input_dim()));
    }
    constexpr double kEps = std::numeric_limits<double>::epsilon();
    const auto& layers = net.layers();

    // Center/radius form: y = W c + b, r_y = |W| r.
    std::vector<double> center(input.dim()), radius(input.dim());
    for (std::size_t i = 0; i < input.dim(); ++i) {
        center[i] = std::midpoint(input.lows[i], input.highs[i]);
        radius[i] = std::max(input.highs[i] - center[i], center[i] - input.lows[i]);
    }
    std::vector<double> lo, hi;
    for (std::size_t k = 0; k < layers.size(); ++k) {
        const Layer& l = layers[k];
        lo.assign(l.outputs, 0.0);
        hi.assign(l.outputs, 0.0);
        for (std::size_t o = 0; o < l.outputs; ++o) {
            const double* row = &l.weights[o * l.inputs];
            double mid = l.bias[o];
            double rad = 0.0;
            double magnitude = std::abs(l.bias[o]);
            for (std::size_t i = 0; i < l.inputs; ++i) {
                mid += row[i] * center[i];
                const double spread = std::abs(row[i]) * radius[i];
                rad += spread;
                magnitude += std::abs(row[i] * center[i]) + spread;
            }
            // Outward padding covering the rounding error of both this
            // computation and a pointwise forward pass.
            const double pad = 4.0 * static_cast<double>(l.inputs + 2) * kEps * magnitude +
                               std::numeric_limits<double>::denorm_min();
            lo[o] = mid - rad - pad;
            hi[o] = mid + rad + pad;
            if (k + 1 < layers.size()) {
                lo[o] = std::max(lo[o], 0.0);
                hi[o] = std::max(hi[o], 0.0);
            }
        }
        if (k + 1 < layers.size()) {
            center.resize(l.outputs);
            radius.resize(l.outputs);
            for (std::size_t o = 0; o < l.outputs; ++o) {
                center[o] = std::midpoint(lo[o], hi[o]);
                radius[o] = std::max(hi[o] - center[o], center[o] - lo[o]);
            }
        }
    }
    IntervalVector out;
    out.lows = std::move(lo);
    out.highs = std::move(hi);
    return out;
}

ActionSet undominated_actions(const IntervalVector& bounds, SelectionRule rule, ActionSet candidates) {
    ActionSet out;
    if (rule == SelectionRule::Argmax) {
        const double best_low = *std::max_element(bounds.lows.begin(), bounds.lows.end());
        for (std::size_t a : candidates.members()) {
            if (!(bounds.highs[a] < best_low)) out.insert(a);
        }
    } else {
        const double best_high = *std::min_element(bounds.highs.begin(), bounds.highs.end());
        for (std::size_t a : candidates.members()) {
            if (!(bounds.lows[a] > best_high)) out.insert(a);
        }
    }
    return out;
}

namespace {

ActionSet refine(const Network& net, const Box& input, ActionSet candidates, int depth) {
    ActionSet live = undominated_actions(propagate_bounds(net, input), net.selection_rule(), candidates);
    if (live.size() <= 1 || depth <= 0) return live;
    const std::size_t dim = input.widest_dim();
    if (!(input.width(dim) > 0.0)) return live;
    const double mid = std::midpoint(input.lows[dim], input.highs[dim]);
    Box lower = input, upper = input;
    lower.highs[dim] = mid;
    upper.lows[dim] = mid;
    ActionSet result = refine(net, lower, live, depth - 1);
    // Once the lower half already needs every live action the upper half cannot shrink the union.
    if (result == live) return result;
    return result | refine(net, upper, live, depth - 1);
}

}  // namespace

ActionSet possible_actions(const Network& net, const Box& input, ActionSet candidates, const VerifierConfig& config) {
    if (input.dim() != net.input_dim()) {
        throw DimensionError("cell has " + std::to_string(input.dim()) + " dimensions, network expects " +
                             std::to_string(net.input_dim()));
    }
    candidates = candidates & ActionSet::all(net.output_dim());
    if (candidates.size() <= 1) return candidates;
    return refine(net, input, candidates, config.refine_depth);
}

ActionSet possible_actions(const Network& net, const Box& input, const VerifierConfig& config) {
    return possible_actions(net, input, ActionSet::all(net.output_dim()), config);
}

}  // namespace cellcheck
