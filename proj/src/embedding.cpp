#include "cellcheck/embedding.hpp"

#include "cellcheck/error.hpp"

namespace cellcheck {

InputEmbedding InputEmbedding::identity(std::size_t dim) {
    std::vector<Slot> slots(dim);
    for (std::size_t i = 0; i < dim; ++i) slots[i].source = i;
    return InputEmbedding(dim, std::move(slots));
}

InputEmbedding::InputEmbedding(std::size_t partition_dim, std::vector<Slot> slots)
    : partition_dim_(partition_dim), slots_(std::move(slots)) {
    for (const Slot& s : slots_) {
        if (s.source != Slot::kFixed && s.source >= partition_dim_) {
            throw DimensionError("embedding refers to partition dimension " + std::to_string(s.source));
        }
    }
}

bool InputEmbedding::is_identity() const noexcept {
    if (slots_.size() != partition_dim_) return false;
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        if (slots_[i].source != i) return false;
    }
    return true;
}

Box InputEmbedding::lift(const Box& cell) const {
    if (cell.dim() != partition_dim_) throw DimensionError("cell dimension does not match embedding");
    Box out;
    out.lows.resize(slots_.size());
    out.highs.resize(slots_.size());
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        if (slots_[i].source == Slot::kFixed) {
            out.lows[i] = out.highs[i] = slots_[i].value;
        } else {
            out.lows[i] = cell.lows[slots_[i].source];
            out.highs[i] = cell.highs[slots_[i].source];
        }
    }
    return out;
}

void InputEmbedding::lift(std::span<const double> point, std::vector<double>& out) const {
    if (point.size() != partition_dim_) throw DimensionError("point dimension does not match embedding");
    out.resize(slots_.size());
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        out[i] = slots_[i].source == Slot::kFixed ? slots_[i].value : point[slots_[i].source];
    }
}

std::vector<double> InputEmbedding::lift(std::span<const double> point) const {
    std::vector<double> out;
    lift(point, out);
    return out;
}

}  // namespace cellcheck
