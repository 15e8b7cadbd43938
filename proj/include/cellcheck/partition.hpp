#pragma once

#include "cellcheck/box.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace cellcheck {

using CellId = std::size_t;

/// Leaf payload of the partition: a hyperrectangle plus its verification and
/// model-checking annotations.
struct Cell {
    Box box;
    CellId id = 0;
    ActionSet actions;  // empty until verified
    double prob = 0.0;
    bool in_unsafe = false;
    bool absorbing = false;
    /// Indexed by action; meaningful only for members of `actions`. Empty
    /// until the first Bellman update.
    std::vector<double> per_action_prob;
};

/// Splitting tree over a root box. Leaves tile the root; cells are half-open
/// [low, high) except on the root's upper faces, which are closed.
class PartitionTree {
public:
    explicit PartitionTree(Box root);

    const Box& root_box() const noexcept { return nodes_.front().cell.box; }
    std::size_t dim() const noexcept { return root_box().dim(); }
    CellId root() const noexcept { return 0; }

    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t leaf_count() const noexcept { return leaf_count_; }
    bool is_leaf(CellId id) const;
    /// Leaf ids in ascending order.
    std::vector<CellId> leaves() const;

    const Cell& cell(CellId id) const;
    Cell& cell(CellId id);

    /// Bisects leaf `id` at the midpoint of each dimension in `dims`. Child k
    /// takes the upper half of dims[b] when bit b of k is set. Children
    /// inherit the parent's annotations (actions serve as a candidate mask).
    std::vector<CellId> split(CellId id, std::span<const std::size_t> dims);

    /// Leaf owning `x` under the half-open convention.
    CellId locate(std::span<const double> x) const;

    /// Leaves overlapping `box`: positive-measure overlap in every dimension
    /// where the box has width, closed intersection where it is degenerate.
    /// Dimensions flagged in `closed_high` additionally include leaves whose
    /// low face coincides with the box's high face. Appends to `out`.
    void overlapping(const Box& box, std::vector<CellId>& out, std::uint32_t closed_high = 0) const;
    std::vector<CellId> overlapping(const Box& box, std::uint32_t closed_high = 0) const;

    bool is_descendant(CellId node, CellId ancestor) const;
    CellId parent(CellId id) const;
    std::span<const CellId> children(CellId id) const;
    const std::vector<std::size_t>& split_dims(CellId id) const;

    /// Whether leaf `id` touches the root's closed upper face in dimension i.
    std::uint32_t closed_high_mask(CellId id) const;

private:
    struct Node {
        Cell cell;
        CellId parent = 0;
        std::vector<std::size_t> split_dims;
        std::vector<CellId> children;
    };

    bool matches(const Box& node, const Box& query, std::uint32_t closed_high) const;
    const Node& node(CellId id) const;

    std::vector<Node> nodes_;
    std::size_t leaf_count_ = 1;
};

}  // namespace cellcheck
