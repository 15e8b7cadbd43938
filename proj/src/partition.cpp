#include "cellcheck/partition.hpp"

#include "cellcheck/error.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace cellcheck {

PartitionTree::PartitionTree(Box root) {
    for (std::size_t i = 0; i < root.dim(); ++i) {
        if (!(root.lows[i] < root.highs[i])) {
            throw PartitionError("partition root must have positive width in every dimension");
        }
    }
    Node n;
    n.cell.box = std::move(root);
    n.cell.id = 0;
    nodes_.push_back(std::move(n));
}

const PartitionTree::Node& PartitionTree::node(CellId id) const {
    if (id >= nodes_.size()) throw PartitionError("unknown cell id " + std::to_string(id));
    return nodes_[id];
}

bool PartitionTree::is_leaf(CellId id) const { return node(id).children.empty(); }

std::vector<CellId> PartitionTree::leaves() const {
    std::vector<CellId> out;
    out.reserve(leaf_count_);
    for (CellId id = 0; id < nodes_.size(); ++id) {
        if (nodes_[id].children.empty()) out.push_back(id);
    }
    return out;
}

const Cell& PartitionTree::cell(CellId id) const { return node(id).cell; }
Cell& PartitionTree::cell(CellId id) { return const_cast<Node&>(node(id)).cell; }

CellId PartitionTree::parent(CellId id) const { return node(id).parent; }
std::span<const CellId> PartitionTree::children(CellId id) const { return node(id).children; }
const std::vector<std::size_t>& PartitionTree::split_dims(CellId id) const { return node(id).split_dims; }

bool PartitionTree::is_descendant(CellId n, CellId ancestor) const {
    while (true) {
        if (n == ancestor) return true;
        if (n == 0) return false;
        n = node(n).parent;
    }
}

std::vector<CellId> PartitionTree::split(CellId id, std::span<const std::size_t> dims) {
    if (!is_leaf(id)) throw PartitionError("cell " + std::to_string(id) + " is not a leaf");
    if (dims.empty()) throw PartitionError("split needs at least one dimension");
    const std::set<std::size_t> unique(dims.begin(), dims.end());
    if (unique.size() != dims.size()) throw PartitionError("split dimensions repeat");
    if (dims.size() > 16) throw PartitionError("cannot split more than 16 dimensions at once");

    const Box parent_box = nodes_[id].cell.box;
    std::vector<double> mids(dims.size());
    for (std::size_t b = 0; b < dims.size(); ++b) {
        const std::size_t d = dims[b];
        if (d >= parent_box.dim()) throw PartitionError("split dimension out of range");
        mids[b] = std::midpoint(parent_box.lows[d], parent_box.highs[d]);
        if (!(mids[b] > parent_box.lows[d] && mids[b] < parent_box.highs[d])) {
            throw PartitionError("cell " + std::to_string(id) + " is too narrow to split in dimension " +
                                 std::to_string(d));
        }
    }

    const std::size_t n_children = std::size_t{1} << dims.size();
    std::vector<CellId> ids;
    ids.reserve(n_children);
    const CellId first = nodes_.size();
    for (std::size_t k = 0; k < n_children; ++k) {
        Node child;
        child.parent = id;
        child.cell = nodes_[id].cell;
        child.cell.id = first + k;
        child.cell.per_action_prob.clear();
        for (std::size_t b = 0; b < dims.size(); ++b) {
            if ((k >> b) & 1U) {
                child.cell.box.lows[dims[b]] = mids[b];
            } else {
                child.cell.box.highs[dims[b]] = mids[b];
            }
        }
        nodes_.push_back(std::move(child));
        ids.push_back(first + k);
    }
    Node& p = nodes_[id];
    p.split_dims.assign(dims.begin(), dims.end());
    p.children = ids;
    leaf_count_ += n_children - 1;
    return ids;
}

CellId PartitionTree::locate(std::span<const double> x) const {
    const Box& root = root_box();
    if (x.size() != root.dim()) throw DimensionError("point dimension does not match partition");
    if (!root.contains(x)) throw PartitionError("point lies outside the partition domain");
    CellId cur = 0;
    while (!nodes_[cur].children.empty()) {
        const Node& n = nodes_[cur];
        std::size_t k = 0;
        for (std::size_t b = 0; b < n.split_dims.size(); ++b) {
            const std::size_t d = n.split_dims[b];
            const double mid = nodes_[n.children.back()].cell.box.lows[d];
            if (x[d] >= mid) k |= std::size_t{1} << b;
        }
        cur = n.children[k];
    }
    return cur;
}

bool PartitionTree::matches(const Box& c, const Box& q, std::uint32_t closed_high) const {
    for (std::size_t i = 0; i < c.dim(); ++i) {
        const double l = c.lows[i], h = c.highs[i], a = q.lows[i], b = q.highs[i];
        if (a == b) {
            if (a < l || a > h) return false;
        } else if (!(std::max(l, a) < std::min(h, b))) {
            if (!(((closed_high >> i) & 1U) && l == b)) return false;
        }
    }
    return true;
}

void PartitionTree::overlapping(const Box& box, std::vector<CellId>& out, std::uint32_t closed_high) const {
    if (box.dim() != dim()) throw DimensionError("query box dimension does not match partition");
    if (!matches(root_box(), box, closed_high)) throw PartitionError("query box is disjoint from the domain");
    std::vector<CellId> stack{0};
    while (!stack.empty()) {
        const CellId id = stack.back();
        stack.pop_back();
        const Node& n = nodes_[id];
        if (n.children.empty()) {
            out.push_back(id);
            continue;
        }
        for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) {
            if (matches(nodes_[*it].cell.box, box, closed_high)) stack.push_back(*it);
        }
    }
}

std::vector<CellId> PartitionTree::overlapping(const Box& box, std::uint32_t closed_high) const {
    std::vector<CellId> out;
    overlapping(box, out, closed_high);
    return out;
}

std::uint32_t PartitionTree::closed_high_mask(CellId id) const {
    const Box& b = cell(id).box;
    const Box& r = root_box();
    std::uint32_t mask = 0;
    for (std::size_t i = 0; i < b.dim(); ++i) {
        if (b.highs[i] == r.highs[i]) mask |= std::uint32_t{1} << i;
    }
    return mask;
}

}  // namespace cellcheck
