#pragma once

#include "cellcheck/box.hpp"
#include "cellcheck/network.hpp"

#include <cstddef>

namespace cellcheck {

/// Interval bounds on network outputs, one [low, high] pair per output.
using IntervalVector = Box;

struct VerifierConfig {
    /// Recursive bisections of the widest input dimension applied when the
    /// plain bounds leave more than one undominated action.
    int refine_depth = 4;
};

/// Sound output bounds for every input in `input` (which may be degenerate in
/// some dimensions). Bounds are padded outward to absorb rounding error.
IntervalVector propagate_bounds(const Network& net, const Box& input);

/// Actions in `candidates` not strictly dominated under the network's
/// selection rule. Dominating actions may lie outside `candidates`.
ActionSet undominated_actions(const IntervalVector& bounds, SelectionRule rule, ActionSet candidates);

/// Superset of the actions the network selects anywhere in `input`,
/// restricted to `candidates`, which the caller guarantees already contains
/// every such action.
ActionSet possible_actions(const Network& net, const Box& input, ActionSet candidates,
                           const VerifierConfig& config = {});
ActionSet possible_actions(const Network& net, const Box& input, const VerifierConfig& config = {});

}  // namespace cellcheck
