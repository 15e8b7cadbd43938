#include "cellcheck/box.hpp"

#include "cellcheck/error.hpp"

#include <cmath>
#include <numeric>

namespace cellcheck {

Box::Box(std::vector<double> lo, std::vector<double> hi) : lows(std::move(lo)), highs(std::move(hi)) {
    if (lows.size() != highs.size()) {
        throw DimensionError("box bounds have different lengths");
    }
    for (std::size_t i = 0; i < lows.size(); ++i) {
        if (!std::isfinite(lows[i]) || !std::isfinite(highs[i])) {
            throw NonFiniteError("box bound is not finite");
        }
        if (lows[i] > highs[i]) {
            throw ValidationError("box low exceeds high in dimension " + std::to_string(i));
        }
    }
}

double Box::volume() const noexcept {
    double v = 1.0;
    for (std::size_t i = 0; i < dim(); ++i) v *= width(i);
    return v;
}

std::vector<double> Box::center() const {
    std::vector<double> c(dim());
    for (std::size_t i = 0; i < dim(); ++i) c[i] = std::midpoint(lows[i], highs[i]);
    return c;
}

bool Box::contains(std::span<const double> x) const noexcept {
    if (x.size() != dim()) return false;
    for (std::size_t i = 0; i < dim(); ++i) {
        if (x[i] < lows[i] || x[i] > highs[i]) return false;
    }
    return true;
}

bool Box::encloses(const Box& other) const noexcept {
    if (other.dim() != dim()) return false;
    for (std::size_t i = 0; i < dim(); ++i) {
        if (other.lows[i] < lows[i] || other.highs[i] > highs[i]) return false;
    }
    return true;
}

std::size_t Box::widest_dim() const noexcept {
    std::size_t best = 0;
    for (std::size_t i = 1; i < dim(); ++i) {
        if (width(i) > width(best)) best = i;
    }
    return best;
}

std::vector<std::size_t> ActionSet::members() const {
    std::vector<std::size_t> out;
    for (std::uint64_t b = bits_; b != 0; b &= b - 1) {
        out.push_back(static_cast<std::size_t>(std::countr_zero(b)));
    }
    return out;
}

}  // namespace cellcheck
