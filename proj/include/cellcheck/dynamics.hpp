#pragma once

#include "cellcheck/box.hpp"
#include "cellcheck/embedding.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cellcheck {

/// What happens to a successor that leaves the state domain in a dimension.
enum class BoundaryPolicy {
    Clamp,        ///< project back onto the domain face
    TreatAsSafe,  ///< the trajectory leaves the analysed region and never reaches the unsafe set
};

std::string to_string(BoundaryPolicy p);
BoundaryPolicy parse_boundary_policy(const std::string& s);

/// x' = M x + b on the partition coordinates.
class AffineMap {
public:
    AffineMap(std::size_t dim, std::vector<double> matrix, std::vector<double> offset);
    static AffineMap translation(std::vector<double> offset);

    std::size_t dim() const noexcept { return dim_; }
    double coefficient(std::size_t row, std::size_t col) const { return matrix_[row * dim_ + col]; }
    const std::vector<double>& offset() const noexcept { return offset_; }

    void apply(std::span<const double> x, std::span<double> out) const;
    std::vector<double> apply(std::span<const double> x) const;

    struct Image {
        Box box;
        /// Dimensions whose upper face may be attained by a successor.
        std::uint32_t closed_high = 0;
    };
    /// Componentwise interval image of `box`. `closed_high` marks the
    /// dimensions in which the box includes its upper face.
    Image image(const Box& box, std::uint32_t closed_high) const;

private:
    std::size_t dim_;
    std::vector<double> matrix_;
    std::vector<double> offset_;
};

/// One stochastic outcome of an action: probability, state map and the
/// field (discrete mode) the successor lands in.
struct TransitionOutcome {
    double probability = 0.0;
    AffineMap map;
    std::size_t target_field = 0;
};

/// Outcome image of a whole cell after the boundary policy is applied.
struct ImageOutcome {
    double probability = 0.0;
    std::size_t target_field = 0;
    Box image;
    std::uint32_t closed_high = 0;
    bool exits = false;  ///< left the domain under TreatAsSafe; contributes zero
};

struct PointOutcome {
    double probability = 0.0;
    std::size_t target_field = 0;
    std::vector<double> state;
    bool exits = false;
};

/// Stochastic dynamics with finitely many outcomes per action. The state is
/// a discrete field index plus a continuous point in `domain()`; every field
/// shares the same continuous domain and is partitioned separately.
class DynamicsModel {
public:
    virtual ~DynamicsModel() = default;

    virtual std::string name() const = 0;
    virtual const Box& domain() const = 0;
    std::size_t state_dim() const { return domain().dim(); }
    virtual std::vector<std::string> action_labels() const = 0;
    std::size_t action_count() const { return action_labels().size(); }

    virtual std::size_t field_count() const { return 1; }
    virtual std::string field_label(std::size_t field) const { return std::to_string(field); }
    std::optional<std::size_t> parse_field(const std::string& label) const;
    /// Layer index for models whose transitions strictly decrease the layer.
    virtual std::optional<std::size_t> field_layer(std::size_t) const { return std::nullopt; }

    /// Which policy network controls a field, and how its cells map to network inputs.
    virtual std::size_t network_count() const { return 1; }
    virtual std::size_t network_for_field(std::size_t) const { return 0; }
    virtual InputEmbedding embedding(std::size_t) const { return InputEmbedding::identity(state_dim()); }

    virtual std::vector<TransitionOutcome> outcomes(std::size_t field, std::size_t action) const = 0;
    virtual BoundaryPolicy boundary(std::size_t) const { return BoundaryPolicy::Clamp; }

    /// Outcome images of `cell`. The default applies each outcome map and then the boundary policy.
    virtual std::vector<ImageOutcome> images(std::size_t field, const Box& cell, std::uint32_t closed_high,
                                             std::size_t action) const;
    /// Successors of a single state.
    virtual std::vector<PointOutcome> successors(std::size_t field, std::span<const double> x,
                                                 std::size_t action) const;

    /// Applies the boundary policy to a successor state in place; false when it exits the domain.
    bool confine(std::span<double> x) const;

    /// Cell overlaps the unsafe set with positive measure.
    virtual bool unsafe(std::size_t field, const Box& cell) const = 0;
    /// Cell lies entirely inside the unsafe set.
    virtual bool inside_unsafe(std::size_t field, const Box& cell) const = 0;
    /// Every state of the cell is absorbing and safe.
    virtual bool absorbing_safe(std::size_t field, const Box& cell) const = 0;
    /// Cell overlaps the absorbing safe set with positive measure.
    virtual bool touches_absorbing(std::size_t, const Box&) const { return false; }
    virtual bool point_unsafe(std::size_t field, std::span<const double> x) const = 0;
    virtual bool point_absorbing(std::size_t field, std::span<const double> x) const = 0;

protected:
    ImageOutcome apply_boundary(ImageOutcome out) const;
    PointOutcome apply_boundary(PointOutcome out) const;
};

/// Whether `x` belongs to `box` under the half-open convention, where upper
/// faces shared with `domain` are closed.
bool owns_point(const Box& box, const Box& domain, std::span<const double> x);
/// Positive-measure intersection of two boxes.
bool overlaps_with_measure(const Box& a, const Box& b);

}  // namespace cellcheck
