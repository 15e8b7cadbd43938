#pragma once

#include "cellcheck/box.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cellcheck {

enum class SelectionRule { Argmax, Argmin };

/// Dense affine layer; `weights` is row-major with one row per output unit.
struct Layer {
    std::size_t inputs = 0;
    std::size_t outputs = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    double weight(std::size_t out, std::size_t in) const { return weights[out * inputs + in]; }
};

/// Feed-forward ReLU network. ReLU on every hidden layer, identity on the
/// output layer. Immutable after construction.
class Network {
public:
    Network(std::vector<Layer> layers, std::vector<std::string> action_labels,
            SelectionRule rule = SelectionRule::Argmax);

    std::size_t input_dim() const noexcept { return layers_.front().inputs; }
    std::size_t output_dim() const noexcept { return layers_.back().outputs; }
    std::vector<std::size_t> layer_sizes() const;
    const std::vector<Layer>& layers() const noexcept { return layers_; }
    const std::vector<std::string>& action_labels() const noexcept { return labels_; }
    SelectionRule selection_rule() const noexcept { return rule_; }
    std::optional<std::size_t> action_index(std::string_view label) const;

    /// Raw output scores.
    std::vector<double> evaluate(std::span<const double> x) const;
    /// Selected action; ties go to the lowest index.
    std::size_t best_action(std::span<const double> x) const;

private:
    std::vector<Layer> layers_;
    std::vector<std::string> labels_;
    SelectionRule rule_;
};

std::size_t select_action(std::span<const double> scores, SelectionRule rule);

/// Largest cell dimension accepted by corner evaluation (2^16 corners).
inline constexpr std::size_t kMaxCornerDims = 16;

/// Best action at every corner of `cell`. Corner k takes highs[i] when bit i
/// of k is set and lows[i] otherwise, so dimension 0 varies fastest.
std::vector<std::size_t> evaluate_corners(const Network& net, const Box& cell);

Network load_network(const std::filesystem::path& path);
Network parse_network(std::istream& in, const std::string& source = "<stream>");
void write_network(const Network& net, std::ostream& out);

std::string to_string(SelectionRule rule);

}  // namespace cellcheck
