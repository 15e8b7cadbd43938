#include "cellcheck/baseline.hpp"

#include "cellcheck/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <unordered_map>

namespace cellcheck {

// -------------------------------------------------------------------- grid

Grid::Grid(std::vector<std::vector<double>> axes) : axes_(std::move(axes)) {
    if (axes_.empty()) throw DimensionError("grid needs at least one axis");
    strides_.assign(axes_.size(), 1);
    for (std::size_t i = axes_.size(); i-- > 0;) {
        const auto& ax = axes_[i];
        if (ax.empty()) throw ValidationError("grid axis " + std::to_string(i) + " is empty");
        for (double v : ax) {
            if (!std::isfinite(v)) throw NonFiniteError("grid axis " + std::to_string(i) + " has a non-finite node");
        }
        if (std::adjacent_find(ax.begin(), ax.end(), std::greater_equal<>()) != ax.end()) {
            throw ValidationError("grid axis " + std::to_string(i) + " is not strictly increasing");
        }
        strides_[i] = count_;
        count_ *= ax.size();
    }
}

Grid Grid::cell_centres(const Box& domain, std::span<const std::size_t> counts) {
    if (counts.size() != domain.dim()) throw DimensionError("grid counts do not match the domain dimension");
    std::vector<std::vector<double>> axes(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] == 0) throw ValidationError("grid count must be positive");
        const double w = domain.width(i) / static_cast<double>(counts[i]);
        for (std::size_t k = 0; k < counts[i]; ++k) axes[i].push_back(domain.lows[i] + (static_cast<double>(k) + 0.5) * w);
    }
    return Grid(std::move(axes));
}

std::vector<double> Grid::node(std::size_t index) const {
    if (index >= count_) throw ValidationError("grid node index out of range");
    std::vector<double> x(dim());
    for (std::size_t i = 0; i < dim(); ++i) {
        x[i] = axes_[i][(index / strides_[i]) % axes_[i].size()];
    }
    return x;
}

std::size_t Grid::nearest(std::span<const double> x) const {
    if (x.size() != dim()) throw DimensionError("point dimension does not match the grid");
    std::size_t index = 0;
    for (std::size_t i = 0; i < dim(); ++i) {
        const auto& ax = axes_[i];
        auto it = std::lower_bound(ax.begin(), ax.end(), x[i]);
        std::size_t k;
        if (it == ax.begin()) {
            k = 0;
        } else if (it == ax.end()) {
            k = ax.size() - 1;
        } else {
            k = static_cast<std::size_t>(it - ax.begin());
            if (x[i] - ax[k - 1] <= ax[k] - x[i]) --k;
        }
        index += k * strides_[i];
    }
    return index;
}

double Grid::interpolate(std::span<const double> values, std::span<const double> x) const {
    if (values.size() != count_) throw DimensionError("value count does not match the grid");
    if (x.size() != dim()) throw DimensionError("point dimension does not match the grid");
    const std::size_t d = dim();
    std::vector<std::size_t> base(d);
    std::vector<double> t(d);
    for (std::size_t i = 0; i < d; ++i) {
        const auto& ax = axes_[i];
        if (ax.size() == 1 || x[i] <= ax.front()) {
            base[i] = 0;
            t[i] = 0.0;
        } else if (x[i] >= ax.back()) {
            base[i] = ax.size() - 2;
            t[i] = 1.0;
        } else {
            const std::size_t k = static_cast<std::size_t>(std::upper_bound(ax.begin(), ax.end(), x[i]) - ax.begin()) - 1;
            base[i] = k;
            t[i] = (x[i] - ax[k]) / (ax[k + 1] - ax[k]);
        }
    }
    double acc = 0.0;
    for (std::size_t corner = 0; corner < (std::size_t{1} << d); ++corner) {
        double w = 1.0;
        std::size_t index = 0;
        bool valid = true;
        for (std::size_t i = 0; i < d; ++i) {
            const bool up = (corner >> i) & 1U;
            if (up && axes_[i].size() == 1) {
                valid = false;
                break;
            }
            w *= up ? t[i] : 1.0 - t[i];
            index += (base[i] + (up ? 1 : 0)) * strides_[i];
        }
        if (valid && w != 0.0) acc += w * values[index];
    }
    return acc;
}

// ------------------------------------------------------------------- exact

TabularPolicy tabulate_policy(std::span<const Network> nets, const DynamicsModel& model, const Grid& grid) {
    if (grid.dim() != model.state_dim()) throw DimensionError("grid dimension does not match the model state");
    if (nets.size() != model.network_count()) throw ValidationError("wrong number of networks for the model");
    TabularPolicy policy{grid, {}};
    std::vector<double> input;
    for (std::size_t f = 0; f < model.field_count(); ++f) {
        const Network& net = nets[model.network_for_field(f)];
        const InputEmbedding emb = model.embedding(f);
        auto& table = policy.actions.emplace_back(grid.node_count());
        for (std::size_t n = 0; n < grid.node_count(); ++n) {
            emb.lift(grid.node(n), input);
            table[n] = net.best_action(input);
        }
    }
    return policy;
}

double ExactResult::nearest(std::size_t field, std::span<const double> x) const {
    return values.at(field)[grid.nearest(x)];
}

double ExactResult::multilinear(std::size_t field, std::span<const double> x) const {
    return grid.interpolate(values.at(field), x);
}

ExactResult exact_check(const TabularPolicy& policy, const DynamicsModel& model, double eps,
                        std::size_t max_iterations) {
    const Grid& grid = policy.grid;
    if (grid.dim() != model.state_dim()) throw DimensionError("grid dimension does not match the model state");
    if (policy.actions.size() != model.field_count()) throw ValidationError("policy table has the wrong field count");
    if (!(eps > 0.0)) throw ValidationError("eps must be positive");

    struct Edge {
        double p;
        std::size_t target;  // flat index field * nodes + node
    };
    const std::size_t nodes = grid.node_count();
    const std::size_t total = nodes * model.field_count();
    std::vector<double> value(total, 0.0);
    std::vector<char> fixed(total, 0);
    std::vector<std::size_t> offsets(total + 1, 0);
    std::vector<Edge> edges;

    for (std::size_t f = 0; f < model.field_count(); ++f) {
        if (policy.actions[f].size() != nodes) throw ValidationError("policy table has the wrong node count");
        for (std::size_t n = 0; n < nodes; ++n) {
            const std::size_t s = f * nodes + n;
            const auto x = grid.node(n);
            if (model.point_unsafe(f, x)) {
                value[s] = 1.0;
                fixed[s] = 1;
            } else if (model.point_absorbing(f, x)) {
                fixed[s] = 1;
            } else {
                const std::size_t a = policy.actions[f][n];
                if (a >= model.action_count()) throw ValidationError("policy table has an invalid action");
                for (const PointOutcome& o : model.successors(f, x, a)) {
                    if (o.exits || o.probability == 0.0) continue;
                    edges.push_back({o.probability, o.target_field * nodes + grid.nearest(o.state)});
                }
            }
            offsets[s + 1] = edges.size();
        }
    }

    ExactResult result{grid, {}, 0, 0.0, false};
    std::vector<double> next(total);
    for (std::size_t it = 0; it < max_iterations; ++it) {
        double delta = 0.0;
        for (std::size_t s = 0; s < total; ++s) {
            if (fixed[s]) {
                next[s] = value[s];
                continue;
            }
            double acc = 0.0;
            for (std::size_t e = offsets[s]; e < offsets[s + 1]; ++e) acc += edges[e].p * value[edges[e].target];
            next[s] = std::min(acc, 1.0);
            delta = std::max(delta, std::abs(next[s] - value[s]));
        }
        value.swap(next);
        result.iterations = it + 1;
        result.final_delta = delta;
        if (delta < eps) {
            result.converged = true;
            break;
        }
    }
    for (std::size_t f = 0; f < model.field_count(); ++f) {
        result.values.emplace_back(value.begin() + static_cast<std::ptrdiff_t>(f * nodes),
                                   value.begin() + static_cast<std::ptrdiff_t>((f + 1) * nodes));
    }
    return result;
}

// ------------------------------------------------------------- monte carlo

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

struct StateKey {
    std::vector<double> values;  // field followed by the state
    bool operator==(const StateKey& o) const {
        return values.size() == o.values.size() &&
               std::memcmp(values.data(), o.values.data(), values.size() * sizeof(double)) == 0;
    }
};

struct StateKeyHash {
    std::size_t operator()(const StateKey& k) const {
        std::uint64_t h = 0;
        for (double v : k.values) {
            std::uint64_t bits;
            std::memcpy(&bits, &v, sizeof bits);
            h = splitmix64(h ^ bits);
        }
        return static_cast<std::size_t>(h);
    }
};

constexpr std::size_t kCacheLimit = 1U << 21;

}  // namespace

struct Simulator::Impl {
    std::span<const Network> nets;
    const DynamicsModel& model;
    std::vector<InputEmbedding> embeddings;
    /// Outcome lists per (field, action), built on first use.
    std::vector<std::vector<TransitionOutcome>> outcomes;
    std::vector<char> outcomes_ready;
    std::unordered_map<StateKey, std::size_t, StateKeyHash> decisions;
    StateKey probe;
    std::vector<double> input;

    Impl(std::span<const Network> n, const DynamicsModel& m) : nets(n), model(m) {
        if (nets.size() != model.network_count()) throw ValidationError("wrong number of networks for the model");
        for (std::size_t f = 0; f < model.field_count(); ++f) embeddings.push_back(model.embedding(f));
        outcomes.resize(model.field_count() * model.action_count());
        outcomes_ready.assign(outcomes.size(), 0);
    }

    const std::vector<TransitionOutcome>& outcomes_for(std::size_t f, std::size_t a) {
        const std::size_t k = f * model.action_count() + a;
        if (!outcomes_ready[k]) {
            outcomes[k] = model.outcomes(f, a);
            outcomes_ready[k] = 1;
        }
        return outcomes[k];
    }

    std::size_t decide(std::size_t f, std::span<const double> x) {
        probe.values.clear();
        probe.values.push_back(static_cast<double>(f));
        probe.values.insert(probe.values.end(), x.begin(), x.end());
        if (auto it = decisions.find(probe); it != decisions.end()) return it->second;
        embeddings[f].lift(x, input);
        const std::size_t a = nets[model.network_for_field(f)].best_action(input);
        if (decisions.size() >= kCacheLimit) decisions.clear();
        decisions.emplace(probe, a);
        return a;
    }
};

Simulator::Simulator(std::span<const Network> nets, const DynamicsModel& model) : impl_(new Impl(nets, model)) {}

Simulator::~Simulator() { delete impl_; }

McEstimate Simulator::run(std::size_t field, std::span<const double> start, const McConfig& config) {
    Impl& s = *impl_;
    const DynamicsModel& model = s.model;
    if (config.rollouts == 0) throw ValidationError("rollout count must be positive");
    if (config.horizon == 0) throw ValidationError("horizon must be positive");
    if (field >= model.field_count()) throw ValidationError("field index out of range");
    if (start.size() != model.state_dim()) throw DimensionError("start state has the wrong dimension");
    if (!model.domain().contains(start)) throw ValidationError("start state lies outside the model domain");

    McEstimate est;
    est.n = config.rollouts;
    std::vector<double> x(start.size()), next(start.size());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t k = 0; k < config.rollouts; ++k) {
        std::mt19937_64 rng(splitmix64(splitmix64(config.seed) ^ static_cast<std::uint64_t>(k)));
        std::size_t f = field;
        std::copy(start.begin(), start.end(), x.begin());
        for (std::size_t step = 0; step <= config.horizon; ++step) {
            if (model.point_unsafe(f, x)) {
                ++est.hits;
                break;
            }
            if (step == config.horizon || model.point_absorbing(f, x)) break;
            const auto& outs = s.outcomes_for(f, s.decide(f, x));
            if (outs.empty()) break;
            const double u = unit(rng);
            double cum = 0.0;
            std::size_t pick = outs.size() - 1;
            for (std::size_t i = 0; i < outs.size(); ++i) {
                cum += outs[i].probability;
                if (u < cum) {
                    pick = i;
                    break;
                }
            }
            outs[pick].map.apply(x, next);
            if (!model.confine(next)) break;
            x.swap(next);
            f = outs[pick].target_field;
        }
    }
    est.estimate = static_cast<double>(est.hits) / static_cast<double>(est.n);
    est.std_error = std::sqrt(est.estimate * (1.0 - est.estimate) / static_cast<double>(est.n));
    return est;
}

McEstimate monte_carlo(std::span<const Network> nets, const DynamicsModel& model, std::size_t field,
                       std::span<const double> start, const McConfig& config) {
    Simulator sim(nets, model);
    return sim.run(field, start, config);
}

}  // namespace cellcheck
