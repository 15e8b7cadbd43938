#pragma once

#include "cellcheck/dynamics.hpp"

#include <array>
#include <optional>
#include <string_view>

namespace cellcheck {

/// Ownship response to a previous advisory: three accelerations (ft/s^2)
/// and their probabilities.
struct AccelerationRow {
    std::array<double, 3> probabilities;
    std::array<double, 3> accelerations;
};

inline constexpr double kStandardGravity = 32.2;  // ft/s^2

/// Known advisory names, in the canonical order of the vertical logic.
const std::vector<std::string>& vcas_advisory_names();
/// Ownship acceleration row for a previous advisory. Throws ValidationError on unknown names.
AccelerationRow ownship_accelerations(std::string_view advisory, double g = kStandardGravity);

struct VcasConfig {
    /// Advisories in network output order; each must be a known name.
    std::vector<std::string> advisories = vcas_advisory_names();
    /// When set, the intruder rate is frozen at this value and dropped from the partition.
    std::optional<double> fixed_intruder_rate;
    int tau_max = 40;
    double g = kStandardGravity;
    double nmac_altitude = 100.0;
    double altitude_limit = 8000.0;
    double rate_limit = 100.0;
    BoundaryPolicy altitude_boundary = BoundaryPolicy::Clamp;
};

/// Vertical encounter model. Partition coordinates are (h, hdot0, hdot1), or
/// (h, hdot0) with a frozen intruder rate. The previous advisory and the
/// integer time-to-go tau form the discrete field; tau drops by one per step,
/// so fields form layers and tau = 0 is terminal.
class VcasModel final : public DynamicsModel {
public:
    enum Dim : std::size_t { H = 0, OwnRate = 1, IntruderRate = 2 };

    explicit VcasModel(VcasConfig config = {});

    const VcasConfig& config() const noexcept { return config_; }
    bool slice() const noexcept { return config_.fixed_intruder_rate.has_value(); }

    std::size_t field_of(std::size_t advisory, int tau) const;
    std::size_t advisory_of(std::size_t field) const;
    int tau_of(std::size_t field) const;
    std::optional<std::size_t> advisory_index(std::string_view name) const;

    std::string name() const override { return "vcas"; }
    const Box& domain() const override { return domain_; }
    std::vector<std::string> action_labels() const override { return config_.advisories; }

    std::size_t field_count() const override;
    std::string field_label(std::size_t field) const override;
    std::optional<std::size_t> field_layer(std::size_t field) const override;

    std::size_t network_count() const override { return config_.advisories.size(); }
    std::size_t network_for_field(std::size_t field) const override { return advisory_of(field); }
    /// Network inputs are (h, hdot0, hdot1, tau).
    InputEmbedding embedding(std::size_t field) const override;

    std::vector<TransitionOutcome> outcomes(std::size_t field, std::size_t action) const override;
    BoundaryPolicy boundary(std::size_t dim) const override;

    bool unsafe(std::size_t field, const Box& cell) const override;
    bool inside_unsafe(std::size_t field, const Box& cell) const override;
    bool absorbing_safe(std::size_t field, const Box& cell) const override;
    bool point_unsafe(std::size_t field, std::span<const double> x) const override;
    bool point_absorbing(std::size_t field, std::span<const double> x) const override;

private:
    VcasConfig config_;
    Box domain_;
    std::vector<AccelerationRow> rows_;
};

}  // namespace cellcheck
