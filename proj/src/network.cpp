#include "cellcheck/network.hpp"

#include "cellcheck/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

namespace cellcheck {

Network::Network(std::vector<Layer> layers, std::vector<std::string> action_labels, SelectionRule rule)
    : layers_(std::move(layers)), labels_(std::move(action_labels)), rule_(rule) {
    if (layers_.size() < 2) {
        throw ShapeError("network needs at least one hidden layer");
    }
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        const Layer& l = layers_[k];
        const std::string name = "layer " + std::to_string(k + 1);
        if (l.inputs == 0 || l.outputs == 0) throw ShapeError(name + " has an empty dimension");
        if (k > 0 && l.inputs != layers_[k - 1].outputs) {
            throw ShapeError(name + " expects " + std::to_string(l.inputs) + " inputs but previous layer has " +
                             std::to_string(layers_[k - 1].outputs) + " outputs");
        }
        if (l.weights.size() != l.inputs * l.outputs) throw ShapeError(name + " weight matrix has wrong size");
        if (l.bias.size() != l.outputs) throw ShapeError(name + " bias has wrong length");
        auto finite = [](double v) { return std::isfinite(v); };
        if (!std::all_of(l.weights.begin(), l.weights.end(), finite) ||
            !std::all_of(l.bias.begin(), l.bias.end(), finite)) {
            throw NonFiniteError(name + " contains a non-finite parameter");
        }
    }
    if (output_dim() < 2) throw ShapeError("network needs at least two outputs");
    if (output_dim() > ActionSet::kMaxActions) throw ShapeError("network has more than 64 outputs");
    if (labels_.size() != output_dim()) {
        throw ShapeError("expected " + std::to_string(output_dim()) + " action labels, got " +
                         std::to_string(labels_.size()));
    }
    if (std::set<std::string>(labels_.begin(), labels_.end()).size() != labels_.size()) {
        throw ShapeError("action labels are not unique");
    }
}

std::vector<std::size_t> Network::layer_sizes() const {
    std::vector<std::size_t> sizes{input_dim()};
    for (const Layer& l : layers_) sizes.push_back(l.outputs);
    return sizes;
}

std::optional<std::size_t> Network::action_index(std::string_view label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - labels_.begin());
}

std::vector<double> Network::evaluate(std::span<const double> x) const {
    if (x.size() != input_dim()) {
        throw DimensionError("network expects " + std::to_string(input_dim()) + " inputs, got " +
                             std::to_string(x.size()));
    }
    std::vector<double> cur(x.begin(), x.end());
    std::vector<double> next;
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        const Layer& l = layers_[k];
        next.assign(l.outputs, 0.0);
        for (std::size_t o = 0; o < l.outputs; ++o) {
            const double* row = &l.weights[o * l.inputs];
            double acc = l.bias[o];
            for (std::size_t i = 0; i < l.inputs; ++i) acc += row[i] * cur[i];
            next[o] = (k + 1 < layers_.size()) ? std::max(acc, 0.0) : acc;
        }
        cur.swap(next);
    }
    return cur;
}

std::size_t Network::best_action(std::span<const double> x) const { return select_action(evaluate(x), rule_); }

std::size_t select_action(std::span<const double> scores, SelectionRule rule) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        const bool better = rule == SelectionRule::Argmax ? scores[i] > scores[best] : scores[i] < scores[best];
        if (better) best = i;
    }
    return best;
}

std::vector<std::size_t> evaluate_corners(const Network& net, const Box& cell) {
    const std::size_t d = cell.dim();
    if (d != net.input_dim()) throw DimensionError("cell dimension does not match network input");
    if (d > kMaxCornerDims) {
        throw DimensionError("corner evaluation supports at most 16 dimensions, cell has " + std::to_string(d));
    }
    const std::size_t n = std::size_t{1} << d;
    std::vector<std::size_t> out(n);
    std::vector<double> x(d);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < d; ++i) x[i] = ((k >> i) & 1U) ? cell.highs[i] : cell.lows[i];
        out[k] = net.best_action(x);
    }
    return out;
}

std::string to_string(SelectionRule rule) { return rule == SelectionRule::Argmax ? "argmax" : "argmin"; }

namespace {

class LineReader {
public:
    LineReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

    // Next non-comment, non-blank line.
    std::string next(const char* what) {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            auto first = line.find_first_not_of(" \t");
            if (first == std::string::npos || line[first] == '#') continue;
            return line;
        }
        throw ParseError(source_, line_no_, std::string("unexpected end of file, expected ") + what);
    }

    std::vector<std::string> tokens(const char* what) {
        std::istringstream ss(next(what));
        std::vector<std::string> out;
        for (std::string t; ss >> t;) out.push_back(t);
        return out;
    }

    std::vector<double> numbers(const char* what) {
        auto toks = tokens(what);
        std::vector<double> out;
        out.reserve(toks.size());
        for (const std::string& t : toks) out.push_back(to_double(t));
        return out;
    }

    double to_double(const std::string& t) const {
        std::string lower(t);
        std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
        if (lower.find("nan") != std::string::npos || lower.find("inf") != std::string::npos) {
            throw NonFiniteError(source_ + ":" + std::to_string(line_no_) + ": non-finite weight '" + t + "'");
        }
        double v = 0.0;
        const char* end = t.data() + t.size();
        auto [ptr, ec] = std::from_chars(t.data(), end, v);
        if (ec != std::errc() || ptr != end) fail("invalid number '" + t + "'");
        if (!std::isfinite(v)) {
            throw NonFiniteError(source_ + ":" + std::to_string(line_no_) + ": non-finite weight '" + t + "'");
        }
        return v;
    }

    std::size_t to_size(const std::string& t) const {
        std::size_t v = 0;
        const char* end = t.data() + t.size();
        auto [ptr, ec] = std::from_chars(t.data(), end, v);
        if (ec != std::errc() || ptr != end || v == 0) fail("expected a positive integer, got '" + t + "'");
        return v;
    }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(source_, line_no_, msg); }
    std::size_t line() const { return line_no_; }

private:
    std::istream& in_;
    std::string source_;
    std::size_t line_no_ = 0;
};

}  // namespace

Network parse_network(std::istream& in, const std::string& source) {
    LineReader r(in, source);
    auto count = r.tokens("layer count");
    if (count.size() != 1) r.fail("expected a single layer count");
    const std::size_t n_layers = r.to_size(count[0]);

    auto size_toks = r.tokens("layer sizes");
    if (size_toks.size() != n_layers + 1) {
        r.fail("expected " + std::to_string(n_layers + 1) + " layer sizes, got " + std::to_string(size_toks.size()));
    }
    std::vector<std::size_t> sizes;
    for (const auto& t : size_toks) sizes.push_back(r.to_size(t));

    auto labels = r.tokens("action labels");
    auto rule_toks = r.tokens("selection rule");
    if (rule_toks.size() != 1 || (rule_toks[0] != "argmax" && rule_toks[0] != "argmin")) {
        r.fail("selection rule must be 'argmax' or 'argmin'");
    }
    const SelectionRule rule = rule_toks[0] == "argmax" ? SelectionRule::Argmax : SelectionRule::Argmin;

    std::vector<Layer> layers;
    for (std::size_t k = 0; k < n_layers; ++k) {
        Layer l;
        l.inputs = sizes[k];
        l.outputs = sizes[k + 1];
        l.weights.reserve(l.inputs * l.outputs);
        for (std::size_t o = 0; o < l.outputs; ++o) {
            auto row = r.numbers("weight row");
            if (row.size() != l.inputs) {
                throw ShapeError(source + ":" + std::to_string(r.line()) + ": layer " + std::to_string(k + 1) +
                                 " weight row " + std::to_string(o + 1) + " has " + std::to_string(row.size()) +
                                 " entries, expected " + std::to_string(l.inputs));
            }
            l.weights.insert(l.weights.end(), row.begin(), row.end());
        }
        l.bias = r.numbers("bias row");
        if (l.bias.size() != l.outputs) {
            throw ShapeError(source + ":" + std::to_string(r.line()) + ": layer " + std::to_string(k + 1) +
                             " bias has " + std::to_string(l.bias.size()) + " entries, expected " +
                             std::to_string(l.outputs));
        }
        layers.push_back(std::move(l));
    }
    return Network(std::move(layers), std::move(labels), rule);
}

Network load_network(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open network file " + path.string());
    return parse_network(in, path.string());
}

void write_network(const Network& net, std::ostream& out) {
    out << net.layers().size() << '\n';
    auto sizes = net.layer_sizes();
    for (std::size_t i = 0; i < sizes.size(); ++i) out << (i ? " " : "") << sizes[i];
    out << '\n';
    for (std::size_t i = 0; i < net.action_labels().size(); ++i) out << (i ? " " : "") << net.action_labels()[i];
    out << '\n' << to_string(net.selection_rule()) << '\n';
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const Layer& l : net.layers()) {
        for (std::size_t o = 0; o < l.outputs; ++o) {
            for (std::size_t i = 0; i < l.inputs; ++i) out << (i ? " " : "") << l.weight(o, i);
            out << '\n';
        }
        for (std::size_t o = 0; o < l.outputs; ++o) out << (o ? " " : "") << l.bias[o];
        out << '\n';
    }
}

}  // namespace cellcheck
