#include "cellcheck/dynamics.hpp"

#include "cellcheck/error.hpp"

#include <algorithm>
#include <cmath>

namespace cellcheck {

std::string to_string(BoundaryPolicy p) { return p == BoundaryPolicy::Clamp ? "clamp" : "treat-as-safe"; }

BoundaryPolicy parse_boundary_policy(const std::string& s) {
    if (s == "clamp") return BoundaryPolicy::Clamp;
    if (s == "treat-as-safe" || s == "safe") return BoundaryPolicy::TreatAsSafe;
    throw ValidationError("unknown boundary policy '" + s + "' (expected clamp or treat-as-safe)");
}

AffineMap::AffineMap(std::size_t dim, std::vector<double> matrix, std::vector<double> offset)
    : dim_(dim), matrix_(std::move(matrix)), offset_(std::move(offset)) {
    if (matrix_.size() != dim_ * dim_ || offset_.size() != dim_) throw DimensionError("affine map has wrong shape");
}

AffineMap AffineMap::translation(std::vector<double> offset) {
    const std::size_t d = offset.size();
    std::vector<double> m(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) m[i * d + i] = 1.0;
    return AffineMap(d, std::move(m), std::move(offset));
}

void AffineMap::apply(std::span<const double> x, std::span<double> out) const {
    for (std::size_t r = 0; r < dim_; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < dim_; ++c) acc += matrix_[r * dim_ + c] * x[c];
        out[r] = acc + offset_[r];
    }
}

std::vector<double> AffineMap::apply(std::span<const double> x) const {
    if (x.size() != dim_) throw DimensionError("state dimension does not match affine map");
    std::vector<double> out(dim_);
    apply(x, out);
    return out;
}

AffineMap::Image AffineMap::image(const Box& box, std::uint32_t closed_high) const {
    if (box.dim() != dim_) throw DimensionError("cell dimension does not match affine map");
    Image img;
    img.box.lows.assign(dim_, 0.0);
    img.box.highs.assign(dim_, 0.0);
    for (std::size_t r = 0; r < dim_; ++r) {
        double lo = 0.0, hi = 0.0;
        bool high_attained = true;
        for (std::size_t c = 0; c < dim_; ++c) {
            const double m = matrix_[r * dim_ + c];
            if (m > 0.0) {
                lo += m * box.lows[c];
                hi += m * box.highs[c];
                // The high end needs the source's upper face.
                if (!((closed_high >> c) & 1U)) high_attained = false;
            } else if (m < 0.0) {
                lo += m * box.highs[c];
                hi += m * box.lows[c];
            }
        }
        img.box.lows[r] = lo + offset_[r];
        img.box.highs[r] = hi + offset_[r];
        if (high_attained) img.closed_high |= std::uint32_t{1} << r;
    }
    return img;
}

std::optional<std::size_t> DynamicsModel::parse_field(const std::string& label) const {
    for (std::size_t f = 0; f < field_count(); ++f) {
        if (field_label(f) == label) return f;
    }
    return std::nullopt;
}

ImageOutcome DynamicsModel::apply_boundary(ImageOutcome out) const {
    const Box& dom = domain();
    for (std::size_t i = 0; i < dom.dim(); ++i) {
        double& a = out.image.lows[i];
        double& b = out.image.highs[i];
        const double lo = dom.lows[i], hi = dom.highs[i];
        const std::uint32_t bit = std::uint32_t{1} << i;
        if (boundary(i) == BoundaryPolicy::TreatAsSafe && (a > hi || b < lo)) {
            out.exits = true;
            return out;
        }
        if (b > hi) {
            b = hi;
            out.closed_high |= bit;
        }
        if (a > hi) a = hi;
        if (a < lo) a = lo;
        if (b < lo) b = lo;
    }
    return out;
}

bool DynamicsModel::confine(std::span<double> x) const {
    const Box& dom = domain();
    for (std::size_t i = 0; i < dom.dim(); ++i) {
        if (x[i] >= dom.lows[i] && x[i] <= dom.highs[i]) continue;
        if (boundary(i) == BoundaryPolicy::TreatAsSafe) return false;
        x[i] = std::clamp(x[i], dom.lows[i], dom.highs[i]);
    }
    return true;
}

PointOutcome DynamicsModel::apply_boundary(PointOutcome out) const {
    out.exits = !confine(out.state);
    return out;
}

std::vector<ImageOutcome> DynamicsModel::images(std::size_t field, const Box& cell, std::uint32_t closed_high,
                                                std::size_t action) const {
    std::vector<ImageOutcome> out;
    for (const TransitionOutcome& o : outcomes(field, action)) {
        auto img = o.map.image(cell, closed_high);
        out.push_back(apply_boundary(ImageOutcome{o.probability, o.target_field, std::move(img.box), img.closed_high}));
    }
    return out;
}

std::vector<PointOutcome> DynamicsModel::successors(std::size_t field, std::span<const double> x,
                                                    std::size_t action) const {
    std::vector<PointOutcome> out;
    for (const TransitionOutcome& o : outcomes(field, action)) {
        out.push_back(apply_boundary(PointOutcome{o.probability, o.target_field, o.map.apply(x)}));
    }
    return out;
}

bool owns_point(const Box& box, const Box& domain, std::span<const double> x) {
    for (std::size_t i = 0; i < box.dim(); ++i) {
        if (x[i] < box.lows[i]) return false;
        if (x[i] > box.highs[i]) return false;
        if (x[i] == box.highs[i] && box.highs[i] != domain.highs[i]) return false;
    }
    return true;
}

bool overlaps_with_measure(const Box& a, const Box& b) {
    for (std::size_t i = 0; i < a.dim(); ++i) {
        if (!(std::max(a.lows[i], b.lows[i]) < std::min(a.highs[i], b.highs[i]))) return false;
    }
    return true;
}

}  // namespace cellcheck
