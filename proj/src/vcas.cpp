#include "cellcheck/vcas.hpp"

#include "cellcheck/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace cellcheck {

const std::vector<std::string>& vcas_advisory_names() {
    static const std::vector<std::string> names = {"COC",      "DNC",      "DND",      "DES1500", "CL1500",
                                                   "SDES1500", "SCL1500", "SDES2500", "SCL2500"};
    return names;
}

AccelerationRow ownship_accelerations(std::string_view advisory, double g) {
    const std::array<double, 3> alert{0.5, 0.3, 0.2};
    if (advisory == "COC") return {{0.34, 0.33, 0.33}, {0.0, -g / 3, g / 3}};
    if (advisory == "DNC" || advisory == "DES1500") return {alert, {-g / 3, -g / 2, g / 3}};
    if (advisory == "DND" || advisory == "CL1500") return {alert, {g / 3, g / 2, -g / 3}};
    if (advisory == "SDES1500" || advisory == "SDES2500") return {alert, {-g / 2.5, -g / 2, g / 3}};
    if (advisory == "SCL1500" || advisory == "SCL2500") return {alert, {g / 2.5, g / 2, -g / 3}};
    throw ValidationError("unknown advisory '" + std::string(advisory) + "'");
}

VcasModel::VcasModel(VcasConfig config) : config_(std::move(config)) {
    if (config_.advisories.empty()) throw ValidationError("vcas model needs at least one advisory");
    if (std::set<std::string>(config_.advisories.begin(), config_.advisories.end()).size() !=
        config_.advisories.size()) {
        throw ValidationError("advisory names repeat");
    }
    for (const auto& a : config_.advisories) rows_.push_back(ownship_accelerations(a, config_.g));
    if (config_.tau_max < 1) throw ValidationError("tau_max must be at least 1");
    const double hl = config_.altitude_limit, rl = config_.rate_limit;
    if (slice()) {
        const double r = *config_.fixed_intruder_rate;
        if (!(std::abs(r) <= rl)) throw ValidationError("fixed intruder rate lies outside the rate range");
        domain_ = Box({-hl, -rl}, {hl, rl});
    } else {
        domain_ = Box({-hl, -rl, -rl}, {hl, rl, rl});
    }
}

std::size_t VcasModel::field_count() const {
    return config_.advisories.size() * static_cast<std::size_t>(config_.tau_max + 1);
}

std::size_t VcasModel::field_of(std::size_t advisory, int tau) const {
    if (advisory >= config_.advisories.size() || tau < 0 || tau > config_.tau_max) {
        throw ValidationError("field (advisory " + std::to_string(advisory) + ", tau " + std::to_string(tau) +
                              ") out of range");
    }
    return advisory * static_cast<std::size_t>(config_.tau_max + 1) + static_cast<std::size_t>(tau);
}

std::size_t VcasModel::advisory_of(std::size_t field) const {
    return field / static_cast<std::size_t>(config_.tau_max + 1);
}

int VcasModel::tau_of(std::size_t field) const {
    return static_cast<int>(field % static_cast<std::size_t>(config_.tau_max + 1));
}

std::optional<std::size_t> VcasModel::advisory_index(std::string_view name) const {
    auto it = std::find(config_.advisories.begin(), config_.advisories.end(), name);
    if (it == config_.advisories.end()) return std::nullopt;
    return static_cast<std::size_t>(it - config_.advisories.begin());
}

std::string VcasModel::field_label(std::size_t field) const {
    return config_.advisories[advisory_of(field)] + "@" + std::to_string(tau_of(field));
}

std::optional<std::size_t> VcasModel::field_layer(std::size_t field) const {
    return static_cast<std::size_t>(tau_of(field));
}

InputEmbedding VcasModel::embedding(std::size_t field) const {
    using Slot = InputEmbedding::Slot;
    std::vector<Slot> slots(4);
    slots[0].source = H;
    slots[1].source = OwnRate;
    if (slice()) {
        slots[2].value = *config_.fixed_intruder_rate;
    } else {
        slots[2].source = IntruderRate;
    }
    slots[3].value = static_cast<double>(tau_of(field));
    return InputEmbedding(state_dim(), std::move(slots));
}

BoundaryPolicy VcasModel::boundary(std::size_t dim) const {
    return dim == H ? config_.altitude_boundary : BoundaryPolicy::Clamp;
}

std::vector<TransitionOutcome> VcasModel::outcomes(std::size_t field, std::size_t action) const {
    if (action >= config_.advisories.size()) throw ValidationError("unknown advisory index " + std::to_string(action));
    const int tau = tau_of(field);
    if (tau == 0) return {};
    const AccelerationRow& own = rows_[advisory_of(field)];
    const std::size_t target = field_of(action, tau - 1);
    const double g = config_.g;
    const std::array<double, 3> intruder{-g / 8, 0.0, g / 8};
    const std::size_t d = state_dim();

    std::vector<TransitionOutcome> out;
    out.reserve(9);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            const double own_acc = own.accelerations[i];
            const double int_acc = intruder[j];
            std::vector<double> m(d * d, 0.0), b(d, 0.0);
            // h' = h + hdot1 + 0.5 a1 - hdot0 - 0.5 a0; hdot0' = hdot0 + a0; hdot1' = hdot1 + a1
            m[H * d + H] = 1.0;
            m[H * d + OwnRate] = -1.0;
            m[OwnRate * d + OwnRate] = 1.0;
            b[H] = 0.5 * int_acc - 0.5 * own_acc;
            b[OwnRate] = own_acc;
            if (slice()) {
                b[H] += *config_.fixed_intruder_rate;
            } else {
                m[H * d + IntruderRate] = 1.0;
                m[IntruderRate * d + IntruderRate] = 1.0;
                b[IntruderRate] = int_acc;
            }
            out.push_back({own.probabilities[i] / 3.0, AffineMap(d, std::move(m), std::move(b)), target});
        }
    }
    return out;
}

bool VcasModel::unsafe(std::size_t field, const Box& cell) const {
    if (tau_of(field) != 0) return false;
    const double n = config_.nmac_altitude;
    return std::max(cell.lows[H], -n) < std::min(cell.highs[H], n);
}

bool VcasModel::inside_unsafe(std::size_t field, const Box& cell) const {
    const double n = config_.nmac_altitude;
    return tau_of(field) == 0 && cell.lows[H] >= -n && cell.highs[H] <= n;
}

bool VcasModel::absorbing_safe(std::size_t field, const Box& cell) const {
    return tau_of(field) == 0 && !unsafe(field, cell);
}

bool VcasModel::point_unsafe(std::size_t field, std::span<const double> x) const {
    return tau_of(field) == 0 && std::abs(x[H]) < config_.nmac_altitude;
}

bool VcasModel::point_absorbing(std::size_t field, std::span<const double> x) const {
    return tau_of(field) == 0 && !point_unsafe(field, x);
}

}  // namespace cellcheck
